//! Riesz kernels on the half-plane and the operator `G_s` mapping a vorticity
//! profile to its stream function.
//!
//! For `0 < s < 1` the free-space kernel is `c_{2,s} |z|^{2s-2}`; the Euler
//! mode `s = 1` uses `-(1/2 pi) ln |z|`. The half-plane Green function subtracts
//! the same kernel evaluated at the source reflected through `x2 = 0`.
//!
//! [`KernelTensor`] tabulates cell-averaged kernel values on a grid and applies
//! the operator as two zero-padded FFT convolutions: the direct term against
//! `omega`, the image term against `omega` flipped in `x2`.

use std::fmt;

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::fft2::Fft2;
use crate::field::{Field, FieldKind};
use crate::grid::Grid;
use crate::real::Real;
use crate::special::gamma;

/// Offsets (in cells, per axis) that get sub-cell quadrature of the direct term.
pub const NEAR_BAND: usize = 2;
/// Sub-samples per axis for the near-band cell averages.
pub const SUB_SAMPLES: usize = 5;

/// Riesz coefficient `c_{N,s} = pi^{-N/2} 2^{-2s} Gamma((N-2s)/2) / Gamma(s)`.
pub fn riesz_coefficient<T: Real>(dim: u32, s: T) -> Result<T> {
    if dim != 2 && dim != 4 {
        return Err(Error::Domain(format!("dimension {dim} not supported (use 2 or 4)")));
    }
    let n = T::lit(dim as f64);
    if !(s > T::zero() && s + s < n) {
        return Err(Error::Domain(format!("order {s} outside (0, {dim}/2)")));
    }
    let two = T::lit(2.0);
    Ok(T::PI().powf(-n / two) * two.powf(-(s + s)) * gamma((n - s - s) / two) / gamma(s))
}

/// Free-space kernel as a function of distance `r > 0`.
#[inline]
fn free_kernel<T: Real>(s: T, coefficient: T, r: T) -> T {
    if s == T::one() {
        -r.ln() / T::TAU()
    } else {
        coefficient * r.powf(s + s - T::lit(2.0))
    }
}

fn coefficient_for<T: Real>(s: T) -> Result<T> {
    if s == T::one() {
        Ok(T::TAU().recip())
    } else {
        riesz_coefficient(2, s)
    }
}

fn check_order<T: Real>(s: T) -> Result<()> {
    if s > T::zero() && s <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("order s = {s} outside (0, 1]")))
    }
}

/// Half-plane Green function `G(x, y)`; zero when either point is on `x2 = 0`.
pub fn green_half_plane<T: Real>(x: [T; 2], y: [T; 2], s: T) -> Result<T> {
    check_order(s)?;
    if x[1] < T::zero() || y[1] < T::zero() {
        return Err(Error::Domain("points must lie in the closed upper half-plane".into()));
    }
    if x == y {
        return Err(Error::Singular);
    }
    let d1 = x[0] - y[0];
    let direct = d1.hypot(x[1] - y[1]);
    let image = d1.hypot(x[1] + y[1]);
    if s == T::one() {
        return Ok((image / direct).ln() / T::TAU());
    }
    let c = riesz_coefficient(2, s)?;
    let p = s + s - T::lit(2.0);
    Ok(c * (direct.powf(p) - image.powf(p)))
}

/// Cell-averaged kernel tables for one grid and order, plus their spectra.
#[derive(Clone)]
pub struct KernelTensor<T: Real> {
    grid: Grid<T>,
    s: T,
    coefficient: T,
    self_cell: T,
    /// direct term by `(|di|, |dj|)`, index `dj * nx + di`
    direct: Vec<T>,
    /// image term by `(|di|, j + j' + 1)`, index `m * nx + di`
    image: Vec<T>,
    fft: Fft2<T>,
    direct_hat: Vec<Complex<T>>,
    image_hat: Vec<Complex<T>>,
}

impl<T: Real> fmt::Debug for KernelTensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelTensor")
            .field("grid", &self.grid)
            .field("s", &self.s)
            .field("self_cell", &self.self_cell)
            .finish_non_exhaustive()
    }
}

impl<T: Real> KernelTensor<T> {
    pub fn new(grid: Grid<T>, s: T) -> Result<Self> {
        check_order(s)?;
        let coefficient = coefficient_for(s)?;
        let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());

        // equal-area disk r = h / sqrt(pi) around the target cell
        let r = h / T::PI().sqrt();
        let self_cell = if s == T::one() {
            -(r.ln() - T::lit(0.5)) / T::TAU()
        } else {
            coefficient * T::TAU() * r.powf(s + s) / ((s + s) * h * h)
        };

        let sub: Vec<T> = (0..SUB_SAMPLES)
            .map(|k| (T::of_usize(k) + T::lit(0.5)) / T::of_usize(SUB_SAMPLES) - T::lit(0.5))
            .collect();
        let n_sub = T::of_usize(SUB_SAMPLES * SUB_SAMPLES);
        let mut direct = vec![T::zero(); nx * ny];
        for dj in 0..ny {
            for di in 0..nx {
                let v = if di == 0 && dj == 0 {
                    self_cell
                } else if di <= NEAR_BAND && dj <= NEAR_BAND {
                    let mut acc = T::zero();
                    for &u in &sub {
                        for &w in &sub {
                            let a = (T::of_usize(di) + u) * h;
                            let b = (T::of_usize(dj) + w) * h;
                            acc = acc + free_kernel(s, coefficient, a.hypot(b));
                        }
                    }
                    acc / n_sub
                } else {
                    free_kernel(s, coefficient, (T::of_usize(di) * h).hypot(T::of_usize(dj) * h))
                };
                direct[dj * nx + di] = v;
            }
        }
        let mut image = vec![T::zero(); nx * 2 * ny];
        for m in 1..2 * ny {
            for di in 0..nx {
                image[m * nx + di] =
                    free_kernel(s, coefficient, (T::of_usize(di) * h).hypot(T::of_usize(m) * h));
            }
        }

        let (rows, cols) = (2 * ny, 2 * nx);
        let fft = Fft2::new(rows, cols);
        let zero = Complex::new(T::zero(), T::zero());
        let mut direct_hat = vec![zero; rows * cols];
        let mut image_hat = vec![zero; rows * cols];
        for rr in 0..rows {
            // signed x2 offset of this padded row, None for the unused middle slot
            let dj = match rr.cmp(&ny) {
                std::cmp::Ordering::Less => Some(rr as isize),
                std::cmp::Ordering::Equal => None,
                std::cmp::Ordering::Greater => Some(rr as isize - rows as isize),
            };
            let Some(dj) = dj else { continue };
            for cc in 0..cols {
                let di = match cc.cmp(&nx) {
                    std::cmp::Ordering::Less => cc,
                    std::cmp::Ordering::Equal => continue,
                    std::cmp::Ordering::Greater => cols - cc,
                };
                let k = rr * cols + cc;
                direct_hat[k].re = direct[dj.unsigned_abs() * nx + di];
                let m = (dj + ny as isize) as usize;
                image_hat[k].re = image[m * nx + di];
            }
        }
        fft.forward(&mut direct_hat);
        fft.forward(&mut image_hat);

        Ok(Self { grid, s, coefficient, self_cell, direct, image, fft, direct_hat, image_hat })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn s(&self) -> T {
        self.s
    }

    /// `c_{2,s}` (or `1/2 pi` in Euler mode).
    pub fn coefficient(&self) -> T {
        self.coefficient
    }

    /// Desingularized self-interaction value of the direct term.
    pub fn self_cell(&self) -> T {
        self.self_cell
    }

    /// Direct-term table entry at absolute cell offsets.
    pub fn direct(&self, di: usize, dj: usize) -> T {
        self.direct[dj * self.grid.nx() + di]
    }

    /// Image-term table entry at `|di|` and `m = j + j' + 1` (`1 <= m < 2 ny`).
    pub fn image(&self, di: usize, m: usize) -> T {
        self.image[m * self.grid.nx() + di]
    }

    /// Discrete Green function between target cell `(i, j)` and source `(k, l)`.
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        let di = i.abs_diff(k);
        self.direct(di, j.abs_diff(l)) - self.image(di, j + l + 1)
    }

    /// Stream function `psi = G_s omega` via the padded FFT convolution.
    pub fn apply(&self, omega: &Field<T>) -> Result<Field<T>> {
        if !self.grid.matches(omega.grid()) {
            return Err(Error::Config("field grid does not match kernel grid".into()));
        }
        Ok(Field::from_raw(self.grid, FieldKind::Stream, self.apply_values(omega.values())))
    }

    pub(crate) fn apply_values(&self, omega: &[T]) -> Vec<T> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (rows, cols) = (2 * ny, 2 * nx);
        let zero = Complex::new(T::zero(), T::zero());
        let mut z = vec![zero; rows * cols];
        for j in 0..ny {
            let flipped = ny - 1 - j;
            for i in 0..nx {
                z[j * cols + i] = Complex::new(omega[j * nx + i], omega[flipped * nx + i]);
            }
        }
        self.fft.forward(&mut z);
        let half = T::lit(0.5);
        let mut out = vec![zero; rows * cols];
        for r in 0..rows {
            let rn = (rows - r) % rows;
            for c in 0..cols {
                let cn = (cols - c) % cols;
                let zk = z[r * cols + c];
                let zm = z[rn * cols + cn].conj();
                let a = (zk + zm) * half;
                // (zk - zm) / 2i
                let d = (zk - zm) * half;
                let b = Complex::new(d.im, -d.re);
                let k = r * cols + c;
                out[k] = a * self.direct_hat[k] - b * self.image_hat[k];
            }
        }
        self.fft.inverse(&mut out);
        let scale = self.grid.cell_area() / T::of_usize(rows * cols);
        let mut psi = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                psi.push(out[j * cols + i].re * scale);
            }
        }
        psi
    }

    /// Kinetic energy `E = 1/2 int omega G_s omega`.
    pub fn kinetic_energy(&self, omega: &Field<T>) -> Result<T> {
        let psi = self.apply(omega)?;
        Ok(half_pairing(omega, &psi))
    }
}

/// `1/2 h^2 sum f g` with the fixed reduction order.
pub(crate) fn half_pairing<T: Real>(f: &Field<T>, g: &Field<T>) -> T {
    let grid = f.grid();
    let mut total = T::zero();
    for j in 0..grid.ny() {
        let mut row = T::zero();
        for (a, b) in f.row(j).iter().zip(g.row(j)) {
            row = row + *a * *b;
        }
        total = total + row;
    }
    T::lit(0.5) * total * grid.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::brute_force_apply;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: Grid<f64>, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
        Field::from_values(grid, FieldKind::Vorticity, v).unwrap()
    }

    #[test]
    fn coefficient_values() {
        let c: f64 = riesz_coefficient(2, 0.5).unwrap();
        assert!((c - 1.0 / std::f64::consts::TAU).abs() < 1e-15);
        // pi^-1 2^-1/2 Gamma(3/4)/Gamma(1/4), 30-digit reference
        let c: f64 = riesz_coefficient(2, 0.25).unwrap();
        assert!((c - 0.076_074_279_862_467_71).abs() < 1e-14);
        assert!((c - 0.07608).abs() < 1e-5);
        for k in 1..10 {
            let s = k as f64 / 10.0;
            let c2: f64 = riesz_coefficient(2, s).unwrap();
            let c4: f64 = riesz_coefficient(4, s).unwrap();
            assert!((c2 - std::f64::consts::PI * c4 / (1.0 - s)).abs() < 1e-12);
        }
        assert!(riesz_coefficient(2, 1.0f64).is_err());
        assert!(riesz_coefficient(2, 0.0f64).is_err());
        assert!(riesz_coefficient(3, 0.5f64).is_err());
    }

    #[test]
    fn green_point_value_and_symmetry() {
        let g = green_half_plane([0.0, 1.0], [0.0, 2.0], 0.5).unwrap();
        assert!((g - 1.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-15);
        let a = [0.3f64, 0.7];
        let b = [-1.1, 0.2];
        for s in [0.2, 0.5, 0.8, 1.0] {
            let ab = green_half_plane(a, b, s).unwrap();
            let ba = green_half_plane(b, a, s).unwrap();
            assert!((ab - ba).abs() < 1e-12 * ab.abs());
            assert!(ab > 0.0);
            assert_eq!(green_half_plane(a, [b[0], 0.0], s).unwrap(), 0.0);
        }
        assert_eq!(green_half_plane(a, a, 0.5), Err(Error::Singular));
        // decays to zero as the source approaches the boundary
        let near = green_half_plane([0.0, 1.0], [0.0, 1e-6], 0.5).unwrap();
        assert!(near < 1e-6);
    }

    #[test]
    fn self_cell_disk_formula() {
        let g = Grid::new(0.8, 0.8, 16, 8).unwrap();
        let t = KernelTensor::new(g, 0.5).unwrap();
        let r = 0.1 / std::f64::consts::PI.sqrt();
        // c * 2 pi r^{2s} / (2s h^2)
        let expect = t.coefficient() * std::f64::consts::TAU * r / 0.01;
        assert!((t.self_cell() - expect).abs() < 1e-13 * expect);
    }

    #[test]
    fn far_entries_match_green_function() {
        let g = Grid::<f64>::new(1.0, 1.0, 32, 16).unwrap();
        for s in [0.3, 0.5, 1.0] {
            let t = KernelTensor::new(g, s).unwrap();
            for &(i, j, k, l) in &[(0, 0, 5, 3), (10, 2, 14, 9), (31, 15, 0, 0), (7, 1, 7, 4)] {
                let exact =
                    green_half_plane([g.x1(i), g.x2(j)], [g.x1(k), g.x2(l)], s).unwrap();
                assert!((t.entry(i, j, k, l) - exact).abs() < 1e-12, "s={s}");
            }
        }
    }

    #[test]
    fn table_structure() {
        let g = Grid::new(1.0, 1.0, 32, 16).unwrap();
        for s in [0.25, 0.5, 0.75, 1.0] {
            let t = KernelTensor::new(g, s).unwrap();
            for dj in 0..g.ny() {
                for di in 1..g.nx() {
                    assert!(t.direct(di, dj) < t.direct(di - 1, dj), "s={s} ({di},{dj})");
                }
            }
            for j in 0..g.ny() {
                for l in 0..g.ny() {
                    for di in 0..g.nx() {
                        assert!(t.image(di, j + l + 1) <= t.direct(di, j.abs_diff(l)));
                        if s < 1.0 {
                            assert!(t.image(di, j + l + 1) >= 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn fft_path_matches_brute_force() {
        let g = Grid::new(1.0, 1.0, 32, 16).unwrap();
        for (s, seed) in [(0.5, 1u64), (0.2, 2), (0.8, 3), (1.0, 4)] {
            let t = KernelTensor::new(g, s).unwrap();
            let w = random_field(g, seed);
            let fast = t.apply(&w).unwrap();
            let slow = brute_force_apply(&w, &t);
            let scale = slow.max_abs();
            let err = fast
                .values()
                .iter()
                .zip(slow.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err / scale < 1e-12, "s={s}: {}", err / scale);
        }
    }

    #[test]
    fn operator_is_symmetric_and_positive() {
        let g = Grid::new(1.0, 1.0, 24, 12).unwrap();
        let t = KernelTensor::new(g, 0.5).unwrap();
        let f = random_field(g, 10);
        let u = random_field(g, 11);
        let fu = half_pairing(&f, &t.apply(&u).unwrap());
        let uf = half_pairing(&u, &t.apply(&f).unwrap());
        assert!((fu - uf).abs() < 1e-12 * fu.abs());
        assert!(t.kinetic_energy(&f).unwrap() > 0.0);
        let zero = Field::zeros(g, FieldKind::Vorticity);
        assert_eq!(t.kinetic_energy(&zero).unwrap(), 0.0);
        assert!(t.apply(&zero).unwrap().values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_cell_source_far_value() {
        // unit-mass source at (0, 1) seen from (0, 2): 1/(3 pi) as h -> 0
        let g = Grid::<f64>::new(4.0, 4.0, 160, 80).unwrap();
        let t = KernelTensor::new(g, 0.5).unwrap();
        let i = g.column_of(0.025).unwrap();
        let j = 19; // x2 = 0.975
        let mut w = Field::zeros(g, FieldKind::Vorticity);
        w.values_mut()[g.index(i, j)] = 1.0 / g.cell_area();
        let psi = t.apply(&w).unwrap();
        let exact = green_half_plane([g.x1(i), g.x2(j + 20)], [g.x1(i), g.x2(j)], 0.5).unwrap();
        assert!((psi.get(i, j + 20) - exact).abs() < 1e-12);
        assert!((psi.get(i, j + 20) - 1.0 / (3.0 * std::f64::consts::PI)).abs() < 2e-3);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let t = KernelTensor::new(Grid::new(1.0, 1.0, 16, 8).unwrap(), 0.5).unwrap();
        let w = Field::zeros(Grid::new(2.0, 2.0, 16, 8).unwrap(), FieldKind::Vorticity);
        assert!(matches!(t.apply(&w), Err(Error::Config(_))));
    }

    #[test]
    fn single_precision_tensor() {
        let g = Grid::<f32>::new(1.0, 1.0, 16, 8).unwrap();
        let t = KernelTensor::new(g, 0.5f32).unwrap();
        let w = Field::from_fn(g, FieldKind::Vorticity, |x1: f32, x2: f32| {
            if x1 * x1 + x2 * x2 < 0.25 { 1.0 } else { 0.0 }
        });
        let e = t.kinetic_energy(&w).unwrap();
        let g64 = Grid::<f64>::new(1.0, 1.0, 16, 8).unwrap();
        let t64 = KernelTensor::new(g64, 0.5).unwrap();
        let w64 = Field::from_fn(g64, FieldKind::Vorticity, |x1: f64, x2: f64| {
            if x1 * x1 + x2 * x2 < 0.25 { 1.0 } else { 0.0 }
        });
        let e64 = t64.kinetic_energy(&w64).unwrap();
        assert!(((e as f64) - e64).abs() < 1e-5 * e64);
    }
}
