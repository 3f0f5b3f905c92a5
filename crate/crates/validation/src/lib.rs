//! Reference checks for `gsqg-core`.
//!
//! Every check returns a [`Verdict`] holding the measured quantities and
//! whether they meet the pinned tolerance. The `acceptance` test target runs
//! them in order and prints one line each.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gsqg_core::evolution::{odd_perturbation, run_stability, BoxConfig, PeriodicState, Spectral, StabilityTrace};
use gsqg_core::functionals::{penalized_energy, rescale};
use gsqg_core::lamb::{lamb_vorticity_field, LambParams};
use gsqg_core::solver::{
    check_margin, radiality_check, solve_dipole, support_circularity, Init, SolverConfig, CAP_SLACK,
};
use gsqg_core::special::first_j1_zero;
use gsqg_core::steiner::{is_steiner, sorted_invariants, steiner_symmetrize};
use gsqg_core::verify::verify_kernel;
use gsqg_core::{
    green_half_plane, riesz_coefficient, Field64, FieldKind, Grid64, KernelTensor64, Params64, Result,
    SolutionRecord64,
};

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  {}", if self.passed { "PASS" } else { "FAIL" }, self.detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `|c_{2,s} - pi c_{4,s} / (1 - s)|` over `s = 0.1, ..., 0.9` and the
/// closed form `c_{2,1/2} = 1 / (2 pi)`.
pub fn coefficient_identities() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for k in 1..=9 {
        let s = k as f64 / 10.0;
        let c2 = riesz_coefficient(2, s)?;
        let c4 = riesz_coefficient(4, s)?;
        worst = worst.max((c2 - PI * c4 / (1.0 - s)).abs());
    }
    let half = (riesz_coefficient(2, 0.5)? - 1.0 / (2.0 * PI)).abs();
    Ok(Verdict::new(
        worst < 1e-12 && half < 1e-12,
        format!("max |c2 - pi c4/(1-s)| = {worst:.1e}, |c2(1/2) - 1/(2 pi)| = {half:.1e}"),
    ))
}

/// Point value at `s = 1/2`, vanishing on `x2 = 0` and symmetry of the
/// half-plane Green function at random points.
pub fn green_function_suite(seed: u64) -> Result<Verdict> {
    let point = (green_half_plane([0.0, 1.0], [0.0, 2.0], 0.5)? - 1.0 / (3.0 * PI)).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut boundary, mut symmetry) = (0.0f64, 0.0f64);
    let mut positive = true;
    for k in 1..=10 {
        let s = k as f64 / 10.0;
        for _ in 0..200 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(0.01..2.0)];
            let y = [rng.gen_range(-2.0..2.0), rng.gen_range(0.01..2.0)];
            let xy = green_half_plane(x, y, s)?;
            let yx = green_half_plane(y, x, s)?;
            symmetry = symmetry.max((xy - yx).abs() / xy.abs().max(1.0));
            positive &= xy > 0.0;
            boundary = boundary.max(green_half_plane(x, [y[0], 0.0], s)?.abs());
            boundary = boundary.max(green_half_plane([x[0], 0.0], y, s)?.abs());
        }
    }
    Ok(Verdict::new(
        point < 1e-12 && boundary < 1e-12 && symmetry < 1e-12 && positive,
        format!(
            "|G((0,1),(0,2)) - 1/(3 pi)| = {point:.1e}, boundary {boundary:.1e}, symmetry {symmetry:.1e}, positive {positive}"
        ),
    ))
}

/// FFT application and kinetic energy against the direct quadrature sum on
/// a 32 x 32 grid.
pub fn operator_oracle(seed: u64) -> Result<Verdict> {
    let grid = Grid64::new(1.0, 2.0, 32, 32)?;
    let (mut apply, mut energy) = (0.0f64, 0.0f64);
    for (k, s) in [0.1, 0.25, 0.5, 0.75, 1.0].into_iter().enumerate() {
        let r = verify_kernel(grid, s, seed + k as u64)?;
        apply = apply.max(r.fft_error);
        energy = energy.max(r.energy_error);
    }
    Ok(Verdict::new(
        apply < 1e-10 && energy < 1e-10,
        format!("relative max-norm gap {apply:.1e}, energy gap {energy:.1e} (s = 0.1 .. 1)"),
    ))
}

fn random_cells(grid: Grid64, rng: &mut ChaCha8Rng) -> Result<Field64> {
    let values = (0..grid.len()).map(|_| if rng.gen_bool(0.4) { 0.0 } else { rng.gen::<f64>() }).collect();
    Field64::from_values(grid, FieldKind::Vorticity, values)
}

/// Sum of random Gaussian blobs, sampled on `grid`.
fn random_blobs(grid: Grid64, rng: &mut ChaCha8Rng) -> Field64 {
    let blobs: Vec<[f64; 4]> = (0..4)
        .map(|_| [rng.gen_range(-1.2..1.2), rng.gen_range(0.3..1.5), rng.gen_range(0.15..0.4), rng.gen_range(0.2..1.0)])
        .collect();
    Field64::from_fn(grid, FieldKind::Vorticity, |x1, x2| {
        blobs.iter().map(|[c1, c2, w, a]| a * (-((x1 - c1).powi(2) + (x2 - c2).powi(2)) / (w * w)).exp()).sum()
    })
}

fn sorted_rows(f: &Field64) -> Vec<Vec<u64>> {
    (0..f.grid().ny())
        .map(|j| {
            let mut r: Vec<u64> = f.row(j).iter().map(|v| v.to_bits()).collect();
            r.sort_unstable();
            r
        })
        .collect()
}

/// Energy slack `max(0, E(w) - E(w*)) / E(w)` over random fields on `grid`:
/// Gaussian blobs when `smooth`, independent cell values otherwise.
fn steiner_slack(grid: Grid64, seed: u64, fields: usize, smooth: bool) -> Result<f64> {
    let tensor = KernelTensor64::new(grid, 0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slack = 0.0f64;
    for _ in 0..fields {
        let w = if smooth { random_blobs(grid, &mut rng) } else { random_cells(grid, &mut rng)? };
        let e = tensor.kinetic_energy(&w)?;
        let es = tensor.kinetic_energy(&steiner_symmetrize(&w))?;
        slack = slack.max((e - es).max(0.0) / e);
    }
    Ok(slack)
}

/// Rearrangement invariants, idempotence and energy non-decrease.
pub fn steiner_suite(seed: u64) -> Result<Verdict> {
    let grid = Grid64::new(2.0, 2.0, 32, 16)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut exact, mut idempotent, mut shaped) = (true, true, true);
    for _ in 0..100 {
        let w = random_cells(grid, &mut rng)?;
        let s = steiner_symmetrize(&w);
        exact &= sorted_rows(&w) == sorted_rows(&s);
        let (a, b) = (sorted_invariants(&w), sorted_invariants(&s));
        exact &= a.0.to_bits() == b.0.to_bits()
            && a.1.to_bits() == b.1.to_bits()
            && a.2.to_bits() == b.2.to_bits()
            && a.3.to_bits() == b.3.to_bits();
        idempotent &= steiner_symmetrize(&s) == s;
        shaped &= is_steiner(&s, 0.0);
    }
    let fine_grid = Grid64::new(2.0, 2.0, 64, 32)?;
    let (mut coarse, mut fine) = (0.0f64, 0.0f64);
    for smooth in [true, false] {
        coarse = coarse.max(steiner_slack(grid, seed, 100, smooth)?);
        fine = fine.max(steiner_slack(fine_grid, seed, 100, smooth)?);
    }
    let shrinking = fine <= coarse || (coarse < 1e-14 && fine < 1e-14);
    Ok(Verdict::new(
        exact && idempotent && shaped && shrinking,
        format!(
            "permutation-exact {exact}, idempotent {idempotent}, symmetric-decreasing {shaped}, energy slack over smooth and rough fields {coarse:.1e} (h) -> {fine:.1e} (h/2)"
        ),
    ))
}

/// `E_1(w~) = lambda^{1 - 1/s} nu^{-2} E_lambda(w)` with `lambda^{1/2s} = 2`.
pub fn scaling_identity() -> Result<Verdict> {
    let grid = Grid64::new(2.0, 2.0, 64, 32)?;
    let nu = 1.5;
    let w = Field64::from_fn(grid, FieldKind::Vorticity, |x1, x2| {
        let q = 1.0 - (x1 * x1 + (x2 - 0.8).powi(2)) / 0.36;
        40.0 * x2 * q.max(0.0).powi(3)
    });
    let mut worst = 0.0f64;
    for s in [0.25, 0.5, 0.75, 1.0] {
        let lambda = 2f64.powf(2.0 * s);
        let lhs_field = rescale(&w, s, lambda, nu)?;
        let lhs = penalized_energy(&lhs_field, &KernelTensor64::new(*lhs_field.grid(), s)?, 1.0)?;
        let e = penalized_energy(&w, &KernelTensor64::new(grid, s)?, lambda)?;
        let rhs = lambda.powf(1.0 - 1.0 / s) / (nu * nu) * e;
        worst = worst.max(rel(lhs, rhs));
    }
    Ok(Verdict::new(worst < 1e-3, format!("max relative gap {worst:.1e} over s = 0.25, 0.5, 0.75, 1")))
}

/// Half-width and height of the solve domain for the `s = 1/2` dipole.
pub const REFERENCE_DOMAIN: f64 = 8.0;

/// The `s = 1/2`, `mu = 0.02`, `lambda = nu = 1` maximizer on a 256 x 128 grid.
pub fn reference_dipole(init: Init<f64>, mu: f64) -> Result<SolutionRecord64> {
    let grid = Grid64::new(REFERENCE_DOMAIN, REFERENCE_DOMAIN, 256, 128)?;
    let p = Params64::new(0.5, mu)?;
    let cfg = SolverConfig { init, seed: 7, ..SolverConfig::default() };
    solve_dipole(&p, grid, &cfg)
}

/// `int w psi - (1/lambda) int w^2` against `W mu + gamma mass`.
pub fn lagrange_identity_gap(r: &SolutionRecord64) -> f64 {
    let area = r.grid.cell_area();
    let pairing: f64 = r.omega.values().iter().zip(r.psi.values()).map(|(a, b)| a * b).sum::<f64>() * area;
    let l2 = r.omega.l2_norm();
    let lhs = pairing - l2 * l2 / r.params.lambda;
    let rhs = r.multipliers.speed * r.params.mu + r.multipliers.gamma * r.mass;
    rel(lhs, rhs)
}

/// Structural properties of the reference dipole.
pub fn solver_structure(r: &SolutionRecord64) -> Result<Verdict> {
    let m = r.multipliers;
    let cap_inactive = r.omega.max() < r.cap * (1.0 - CAP_SLACK);
    let margin = check_margin(&r.omega).is_ok();
    let circ = support_circularity(&r.omega, 0.0);
    let rad = radiality_check(&r.omega, &r.psi);
    let gap = lagrange_identity_gap(r);
    let passed = r.residual < 1e-6
        && m.speed > 0.0
        && m.gamma < 1e-8
        && r.mass < 0.9
        && r.energy > 0.0
        && cap_inactive
        && margin
        && circ >= 0.95
        && rad < 0.02
        && gap < 1e-6;
    Ok(Verdict::new(
        passed,
        format!(
            "residual {:.1e} after {} iterations, W = {:.4e}, gamma = {:.1e}, mass {:.4}, energy {:.4e}, max/cap {:.3}, margin {margin}, circularity {circ:.4}, radiality {rad:.1e}, identity gap {gap:.1e}",
            r.residual,
            r.iterations,
            m.speed,
            m.gamma,
            r.mass,
            r.energy,
            r.omega.max() / r.cap,
        ),
    ))
}

/// Relative L2 distance between two recentred profiles.
pub fn profile_gap(a: &Field64, b: &Field64) -> Result<f64> {
    Ok(a.combine(1.0, b, -1.0)?.l2_norm() / a.l2_norm())
}

/// Half-disk and random-blob starts reach the same profile.
pub fn uniqueness(r: &SolutionRecord64) -> Result<Verdict> {
    let other = reference_dipole(Init::RandomBlob, r.params.mu)?;
    let gap = profile_gap(&r.omega, &other.omega)?;
    Ok(Verdict::new(
        gap < 1e-3,
        format!("relative L2 gap {gap:.1e} (random start: {} iterations, W = {:.4e})", other.iterations, other.multipliers.speed),
    ))
}

/// Energy strictly increases with the impulse.
pub fn monotonicity(r: &SolutionRecord64) -> Result<Verdict> {
    let bigger = reference_dipole(Init::HalfDisk, 2.0 * r.params.mu)?;
    Ok(Verdict::new(
        r.energy < bigger.energy,
        format!(
            "E(mu = {}) = {:.6e} < E(mu = {}) = {:.6e} (ratio {:.4})",
            r.params.mu,
            r.energy,
            bigger.params.mu,
            bigger.energy,
            bigger.energy / r.energy
        ),
    ))
}

/// Radius of the half-disk with the same area as the support.
pub fn equal_area_radius(w: &Field64) -> f64 {
    (2.0 * w.support_size() as f64 * w.grid().cell_area() / PI).sqrt()
}

/// Euler mode against the Lamb dipole.
pub fn lamb_validation() -> Result<Verdict> {
    let (mu, lambda) = (0.02, 50.0);
    let grid = Grid64::new(1.0, 1.0, 256, 128)?;
    let p = Params64::new(1.0, mu)?.with_lambda(lambda)?;
    let r = solve_dipole(&p, grid, &SolverConfig::default())?;
    let lamb = LambParams::from_impulse(mu, lambda)?;
    let radius = rel(equal_area_radius(&r.omega), first_j1_zero::<f64>() / lambda.sqrt());
    let speed = rel(r.multipliers.speed, lamb.speed);
    let exact = lamb_vorticity_field(grid, &lamb);
    let profile = profile_gap(&exact, &r.omega)?;
    Ok(Verdict::new(
        radius < 0.03 && speed < 0.05 && profile < 0.05,
        format!("radius off by {radius:.2e}, W off by {speed:.2e}, profile L2 error {profile:.2e}"),
    ))
}

/// `L_3(r^2 / sigma^2) exp(-r^2 / sigma^2)`: radial, with vanishing moments
/// up to order four, so its periodic images barely interact.
fn radial_profile(r2: f64, sigma: f64) -> f64 {
    let x = r2 / (sigma * sigma);
    (1.0 - 3.0 * x + 1.5 * x * x - x * x * x / 6.0) * (-x).exp()
}

/// Largest relative L2 change over one CFL step of radial data.
pub fn radial_drift(n: usize, s: f64) -> Result<f64> {
    let lb = PI;
    let sigma = lb / 8.0;
    let st = PeriodicState::from_fn(lb, n, s, false, |x1, x2| radial_profile(x1 * x1 + x2 * x2, sigma))?;
    let ops = Spectral::for_state(&st)?;
    let st = ops.project(&st)?;
    let dt = ops.cfl_step(&st)?;
    let next = ops.step(&st, dt)?;
    let diff: f64 = st.values().iter().zip(next.values()).map(|(a, b)| (a - b) * (a - b)).sum();
    let norm: f64 = st.values().iter().map(|a| a * a).sum();
    Ok((diff / norm).sqrt())
}

/// Evolves the reference dipole and checks that it travels rigidly.
pub fn travelling(r: &SolutionRecord64, cfg: &BoxConfig<f64>) -> Result<(Verdict, StabilityTrace<f64>)> {
    let trace = run_stability(r, None, cfg)?;
    let speed = trace.centroid_speed() / r.multipliers.speed;
    let distance = trace.max_distance() / trace.reference_norm;
    let radial = radial_drift(128, 0.5)?.max(radial_drift(128, 1.0)?);
    let verdict = Verdict::new(
        (speed - 1.0).abs() < 0.1 && distance < 0.05 && radial < 1e-10,
        format!(
            "centroid speed / W = {speed:.4}, max orbit distance {distance:.2e} of the norm, radial drift per step {radial:.1e} (n = {}, {} steps, stream mismatch {:.1e})",
            trace.n,
            trace.steps,
            trace.stream_mismatch.unwrap_or(f64::NAN)
        ),
    );
    Ok((verdict, trace))
}

/// Orbit distance under two perturbation sizes, with conservation drifts.
pub fn stability(r: &SolutionRecord64, baseline: &StabilityTrace<f64>, cfg: &BoxConfig<f64>) -> Result<Verdict> {
    let l2 = r.omega.l2_norm();
    let mut sups = Vec::new();
    let mut growth_ok = true;
    let mut worst_drift = baseline.drifts().max_conserved();
    let mut parts = Vec::new();
    for factor in [1e-3, 1e-2] {
        let p = odd_perturbation(&r.omega, factor * l2)?;
        let trace = run_stability(r, Some(&p), cfg)?;
        let d0 = trace.samples[0].distance;
        let sup = trace.max_distance();
        growth_ok &= sup < 10.0 * d0;
        worst_drift = worst_drift.max(trace.drifts().max_conserved());
        parts.push(format!("delta {factor:.0e}: d(0) = {:.2e}, sup d = {:.2e} ({:.1}x)", d0, sup, sup / d0));
        sups.push(sup);
    }
    let monotone = sups.windows(2).all(|w| w[0] <= w[1]);
    let d = baseline.drifts();
    Ok(Verdict::new(
        monotone && growth_ok && worst_drift < 1e-4,
        format!(
            "{}; monotone {monotone}; unperturbed sup d = {:.2e}; worst conservation drift {worst_drift:.1e} (unperturbed: mass {:.1e}, impulse {:.1e}, energy {:.1e}, L2 {:.1e})",
            parts.join(", "),
            baseline.max_distance(),
            d.mass,
            d.impulse,
            d.kinetic,
            d.l2
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_line() {
        assert_eq!(Verdict::new(true, "x = 1").to_string(), "PASS  x = 1");
        assert_eq!(Verdict::new(false, "y").to_string(), "FAIL  y");
    }

    #[test]
    fn radial_profile_has_no_mass() {
        // int L_3(r^2) e^{-r^2} 2 pi r dr = pi int_0^inf L_3(x) e^{-x} dx = 0
        let (mut sum, dx) = (0.0, 1e-3);
        for k in 0..60_000 {
            let x = (k as f64 + 0.5) * dx;
            sum += radial_profile(x, 1.0) * dx;
        }
        // midpoint rule error is about h^2 |f'(0)| / 24 = 1.7e-7
        assert!(sum.abs() < 5e-7, "{sum}");
    }

    #[test]
    fn equal_area_radius_of_a_half_disk() {
        let g = Grid64::new(2.0, 2.0, 256, 128).unwrap();
        let w = Field64::from_fn(g, FieldKind::Vorticity, |x1, x2| if x1.hypot(x2) < 1.0 { 1.0 } else { 0.0 });
        assert!((equal_area_radius(&w) - 1.0).abs() < 5e-3);
    }

    #[test]
    fn green_and_coefficients_pass() {
        assert!(coefficient_identities().unwrap().passed);
        assert!(green_function_suite(1).unwrap().passed);
    }
}
