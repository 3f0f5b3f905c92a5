//! Invariant checks for a kernel tensor, shared by the test-suite and the
//! `verify-kernel` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{Field, FieldKind};
use crate::grid::Grid;
use crate::kernel::{green_half_plane, KernelTensor, NEAR_BAND};
use crate::real::Real;

/// Direct `O(n^4)` evaluation of `G_s omega` from the tabulated entries.
pub fn brute_force_apply<T: Real>(omega: &Field<T>, tensor: &KernelTensor<T>) -> Field<T> {
    let g = tensor.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let w = omega.values();
    let mut psi = vec![T::zero(); nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let mut acc = T::zero();
            for l in 0..ny {
                for k in 0..nx {
                    acc = acc + tensor.entry(i, j, k, l) * w[l * nx + k];
                }
            }
            psi[j * nx + i] = acc * g.cell_area();
        }
    }
    Field::from_raw(*g, FieldKind::Stream, psi)
}

/// Outcome of [`verify_kernel`].
#[derive(Clone, Debug)]
pub struct KernelReport {
    pub nx: usize,
    pub ny: usize,
    pub s: f64,
    /// Largest `|G(a,b) - G(b,a)|` relative to `|G(a,b)|` over sampled pairs.
    pub symmetry_error: f64,
    /// Smallest sampled entry; must be positive.
    pub min_entry: f64,
    /// Largest relative deviation of far entries from the point Green function.
    pub far_field_error: f64,
    /// Relative max-norm gap between the FFT path and the brute-force sum.
    pub fft_error: f64,
    /// `1/2 <omega, G omega>` for a random nonnegative field; must be positive.
    pub random_energy: f64,
    /// Relative gap between that energy and the brute-force pairing.
    pub energy_error: f64,
}

impl KernelReport {
    pub fn passed(&self) -> bool {
        self.symmetry_error < 1e-12
            && self.min_entry > 0.0
            && self.far_field_error < 1e-10
            && self.fft_error < 1e-10
            && self.random_energy > 0.0
            && self.energy_error < 1e-10
    }
}

/// Runs the invariant suite on an `nx x ny` grid of width `2 L` and height `H`.
///
/// The brute-force comparison is quartic in the grid size; keep `nx * ny`
/// below a few thousand cells.
pub fn verify_kernel(grid: Grid<f64>, s: f64, seed: u64) -> Result<KernelReport> {
    let t = KernelTensor::new(grid, s)?;
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut symmetry_error = 0.0f64;
    let mut min_entry = f64::INFINITY;
    let mut far_field_error = 0.0f64;
    for _ in 0..2000 {
        let (i, j) = (rng.gen_range(0..nx), rng.gen_range(0..ny));
        let (k, l) = (rng.gen_range(0..nx), rng.gen_range(0..ny));
        let ab = t.entry(i, j, k, l);
        let ba = t.entry(k, l, i, j);
        symmetry_error = symmetry_error.max((ab - ba).abs() / ab.abs().max(f64::MIN_POSITIVE));
        min_entry = min_entry.min(ab);
        if i.abs_diff(k) > NEAR_BAND || j.abs_diff(l) > NEAR_BAND {
            let exact = green_half_plane([grid.x1(i), grid.x2(j)], [grid.x1(k), grid.x2(l)], s)?;
            far_field_error = far_field_error.max((ab - exact).abs() / exact.abs());
        }
    }

    let w: Vec<f64> = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
    let omega = Field::from_values(grid, FieldKind::Vorticity, w)?;
    let fast = t.apply(&omega)?;
    let slow = brute_force_apply(&omega, &t);
    let gap = fast.combine(1.0, &slow, -1.0)?.max_abs();
    let fft_error = gap / slow.max_abs();
    let random_energy = t.kinetic_energy(&omega)?;
    let pairing: f64 = omega.values().iter().zip(slow.values()).map(|(a, b)| a * b).sum();
    let reference = 0.5 * pairing * grid.cell_area();
    let energy_error = (random_energy - reference).abs() / reference;

    Ok(KernelReport { nx, ny, s, symmetry_error, min_entry, far_field_error, fft_error, random_energy, energy_error })
}
