//! Maximizers of the penalized energy by a damped fixed-point iteration on
//! the Euler-Lagrange relation `omega = min(cap, (psi - W x2 - gamma)_+)`.
//!
//! Every solve runs on the normalized problem (`lambda = nu = 1`, grid
//! stretched by `lambda^{1/2s}`) and maps the result back at the end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Field, FieldKind};
use crate::functionals::{penalized_energy, rescale, unscale};
use crate::grid::Grid;
use crate::kernel::{half_pairing, KernelTensor};
use crate::params::{Multipliers, Params, Regime, SolutionRecord};
use crate::real::Real;
use crate::steiner::steiner_symmetrize;

/// Cells of clearance required between the support and the lateral/top edges.
pub const SUPPORT_MARGIN_CELLS: usize = 10;
/// Smallest damping factor tried by the line search.
pub const MIN_DAMPING: f64 = 1.0 / 64.0;
/// `max omega < cap * (1 - CAP_SLACK)` certifies an inactive cap.
pub const CAP_SLACK: f64 = 1e-3;
const BISECTION_STEPS: usize = 200;

/// How the pointwise bound is chosen while iterating.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CapPolicy<T> {
    /// `10 x` the maximum of the initial iterate when `s <= 1/2`, none otherwise.
    Auto,
    /// Never cap. Rejected for `s <= 1/2`.
    Disabled,
    /// Fixed bound in user units.
    Fixed(T),
}

/// Initial iterate.
#[derive(Clone, Debug, PartialEq)]
pub enum Init<T> {
    /// Half-disk indicator scaled to the target impulse.
    HalfDisk,
    /// A few Gaussian blobs at random offsets, drawn from the config seed.
    RandomBlob,
    /// A user field on the solve grid (user units).
    Provided(Field<T>),
}

/// Iteration controls.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub max_iter: usize,
    /// Stop once the relative Euler-Lagrange residual drops below this...
    pub tol_residual: T,
    /// ...and the relative change of `W` between iterations below this.
    pub tol_multiplier: T,
    /// Initial damping `alpha` in `(0, 1]`.
    pub damping: T,
    pub cap: CapPolicy<T>,
    pub init: Init<T>,
    pub seed: u64,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol_residual: T::lit(1e-9),
            tol_multiplier: T::lit(1e-9),
            damping: T::one(),
            cap: CapPolicy::Auto,
            init: Init::HalfDisk,
            seed: 0,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validated(self) -> Result<Self> {
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        if !(self.tol_residual > T::zero() && self.tol_multiplier > T::zero()) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(Error::Config(format!("damping {} outside (0, 1]", self.damping)));
        }
        if let CapPolicy::Fixed(c) = self.cap {
            if !(c > T::zero()) {
                return Err(Error::Config(format!("cap {c} must be positive")));
            }
        }
        Ok(self)
    }
}

/// `min(cap, (psi - W x2 - gamma)_+)` at one cell.
#[inline]
fn level<T: Real>(psi: T, x2: T, m: Multipliers<T>, cap: T) -> T {
    (psi - m.speed * x2 - m.gamma).max(T::zero()).min(cap)
}

/// Vorticity selected by a multiplier pair.
pub fn level_set_field<T: Real>(psi: &Field<T>, m: Multipliers<T>, cap: T) -> Field<T> {
    let g = *psi.grid();
    let mut out = Vec::with_capacity(g.len());
    for j in 0..g.ny() {
        let x2 = g.x2(j);
        out.extend(psi.row(j).iter().map(|&p| level(p, x2, m, cap)));
    }
    Field::from_raw(g, FieldKind::Vorticity, out)
}

/// `(mass, impulse)` of the level-set field, fixed-order reduction.
fn moments<T: Real>(psi: &Field<T>, m: Multipliers<T>, cap: T) -> (T, T) {
    let g = psi.grid();
    let (mut mass, mut imp) = (T::zero(), T::zero());
    for j in 0..g.ny() {
        let x2 = g.x2(j);
        let mut row = T::zero();
        for &p in psi.row(j) {
            row = row + level(p, x2, m, cap);
        }
        mass = mass + row;
        imp = imp + x2 * row;
    }
    (mass * g.cell_area(), imp * g.cell_area())
}

/// Speed `W >= 0` with impulse `mu` at fixed `gamma`; `None` if even `W = 0`
/// falls short.
fn bisect_speed<T: Real>(psi: &Field<T>, gamma: T, mu: T, cap: T, hi: T) -> Option<T> {
    let at = |w: T| moments(psi, Multipliers { speed: w, gamma }, cap).1;
    if at(T::zero()) < mu {
        return None;
    }
    let (mut lo, mut hi) = (T::zero(), hi);
    for _ in 0..BISECTION_STEPS {
        let mid = T::lit(0.5) * (lo + hi);
        if at(mid) > mu {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::lit(4.0) * T::epsilon() * hi {
            break;
        }
    }
    Some(T::lit(0.5) * (lo + hi))
}

/// Multipliers for which the level set of `psi` has impulse `mu` and mass at
/// most `nu`, with `gamma > 0` only when the mass bound binds.
pub fn solve_multipliers<T: Real>(psi: &Field<T>, mu: T, nu: T, cap: T) -> Result<Multipliers<T>> {
    let g = psi.grid();
    let top = psi.max();
    if !(top > T::zero()) {
        return Err(Error::Infeasible("stream function has no positive values".into()));
    }
    if !(mu > T::zero() && nu > T::zero()) {
        return Err(Error::Domain("mu and nu must be positive".into()));
    }
    let w_hi = top / g.x2(0);
    let Some(speed) = bisect_speed(psi, T::zero(), mu, cap, w_hi) else {
        let (_, reach) = moments(psi, Multipliers::default(), cap);
        return Err(Error::Infeasible(format!(
            "impulse {mu} unattainable: the positive part of psi only reaches {reach}"
        )));
    };
    let free = Multipliers { speed, gamma: T::zero() };
    let (mass, _) = moments(psi, free, cap);
    let slack = T::one() + T::lit(64.0) * T::epsilon();
    if mass <= nu * slack {
        return Ok(free);
    }

    // mass bound binds: raise gamma until the mass drops to nu
    let (mut lo, mut hi) = (T::zero(), top);
    let mut best: Option<Multipliers<T>> = None;
    for _ in 0..BISECTION_STEPS {
        let gamma = T::lit(0.5) * (lo + hi);
        match bisect_speed(psi, gamma, mu, cap, w_hi) {
            None => hi = gamma,
            Some(speed) => {
                let m = Multipliers { speed, gamma };
                if moments(psi, m, cap).0 > nu {
                    lo = gamma;
                } else {
                    hi = gamma;
                    best = Some(m);
                }
            }
        }
        if hi - lo <= T::lit(4.0) * T::epsilon() * hi {
            break;
        }
    }
    let m = best.ok_or_else(|| {
        Error::Infeasible(format!("impulse {mu} needs more mass than nu = {nu} allows"))
    })?;
    let (mass, imp) = moments(psi, m, cap);
    if (imp - mu).abs() > T::lit(1e-8) * mu || mass > nu * (T::one() + T::lit(1e-8)) {
        return Err(Error::Numerical(format!(
            "multiplier bisection stalled at W = {}, gamma = {}: impulse {imp}, mass {mass}",
            m.speed, m.gamma
        )));
    }
    Ok(m)
}

/// `||omega - min(cap, (psi - W x2 - gamma)_+)||_2 / ||omega||_2`.
pub fn residual<T: Real>(omega: &Field<T>, psi: &Field<T>, m: Multipliers<T>, cap: T) -> Result<T> {
    let norm = omega.l2_norm();
    if norm == T::zero() {
        return Err(Error::InvalidField("residual undefined for a zero field".into()));
    }
    let target = level_set_field(psi, m, cap);
    Ok(omega.combine(T::one(), &target, -T::one())?.l2_norm() / norm)
}

/// Integer-cell shift putting the mass centroid within `h/2` of `x1 = 0`.
///
/// Returns the recentred field and the displacement `d` (in cells) applied,
/// i.e. `out(x) = omega(x - d h e1)`.
pub fn recenter<T: Real>(omega: &Field<T>) -> (Field<T>, isize) {
    let Some(c) = omega.centroid_x1() else {
        return (omega.clone(), 0);
    };
    let d = -(c / omega.grid().h()).round().to_isize().unwrap_or(0);
    (omega.shifted_x1(-d), d)
}

/// Area of `{omega > f max}` over the area of the smallest origin-centred
/// half-disk containing those cells. Equals 1 for a perfect half-disk.
pub fn support_circularity<T: Real>(omega: &Field<T>, level_fraction: T) -> T {
    let g = omega.grid();
    let threshold = level_fraction * omega.max();
    let half = g.h() * T::lit(0.5);
    let (mut cells, mut radius) = (0usize, T::zero());
    for j in 0..g.ny() {
        for (i, &v) in omega.row(j).iter().enumerate() {
            if v > threshold {
                cells += 1;
                radius = radius.max((g.x1(i).abs() + half).hypot(g.x2(j) + half));
            }
        }
    }
    if cells == 0 {
        return T::zero();
    }
    T::of_usize(cells) * g.cell_area() / (T::FRAC_PI_2() * radius * radius)
}

/// Largest relative standard deviation of `psi / x2` among support cells at
/// exactly equal distance from the origin.
pub fn radiality_check<T: Real>(omega: &Field<T>, psi: &Field<T>) -> T {
    use std::collections::BTreeMap;
    let g = omega.grid();
    let mut bins: BTreeMap<i64, Vec<T>> = BTreeMap::new();
    for j in 0..g.ny() {
        // doubled cell-centre coordinates are integers
        let b = 2 * j as i64 + 1;
        for i in 0..g.nx() {
            if omega.get(i, j) > T::zero() {
                let a = 2 * i as i64 + 1 - g.nx() as i64;
                bins.entry(a * a + b * b).or_default().push(psi.get(i, j) / g.x2(j));
            }
        }
    }
    let mut worst = T::zero();
    for q in bins.values().filter(|q| q.len() > 1) {
        let n = T::of_usize(q.len());
        let mean = q.iter().copied().sum::<T>() / n;
        let var = q.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        if mean != T::zero() {
            worst = worst.max(var.sqrt() / mean.abs());
        }
    }
    worst
}

/// Outcome of one [`fixed_point_step`].
#[derive(Clone, Debug)]
pub struct StepOutcome<T> {
    pub omega: Field<T>,
    pub psi: Field<T>,
    pub multipliers: Multipliers<T>,
    /// Penalized energy of the accepted iterate minus that of the input.
    pub energy_delta: T,
    /// Residual of the input iterate.
    pub residual: T,
    /// Damping actually used.
    pub damping: T,
}

/// One damped update of the normalized (`lambda = nu = 1`) problem.
///
/// `psi` must be `G omega`. The candidate `min(cap, (psi - W x2 - gamma)_+)`
/// is Steiner-symmetrized and blended in with factor `alpha`, halved while
/// the penalized energy drops by more than `tol_residual` (relative).
pub fn fixed_point_step<T: Real>(
    omega: &Field<T>,
    psi: &Field<T>,
    tensor: &KernelTensor<T>,
    mu: T,
    cap: T,
    cfg: &SolverConfig<T>,
) -> Result<StepOutcome<T>> {
    let m = solve_multipliers(psi, mu, T::one(), cap)?;
    let raw = level_set_field(psi, m, cap);
    let norm = omega.l2_norm();
    let residual = if norm > T::zero() {
        omega.combine(T::one(), &raw, -T::one())?.l2_norm() / norm
    } else {
        T::infinity()
    };
    let candidate = steiner_symmetrize(&raw);
    let cand_psi = tensor.apply(&candidate)?;

    let energy = |w: &Field<T>, p: &Field<T>| {
        let l2 = w.l2_norm();
        half_pairing(w, p) - T::lit(0.5) * l2 * l2
    };
    let e0 = energy(omega, psi);
    let mut alpha = cfg.damping;
    loop {
        let w = omega.combine(T::one() - alpha, &candidate, alpha)?;
        let p = psi.combine(T::one() - alpha, &cand_psi, alpha)?;
        let e = energy(&w, &p);
        let drop = e0 - e;
        if drop <= cfg.tol_residual * e0.abs() || alpha <= T::lit(MIN_DAMPING) {
            let w = w.with_kind(FieldKind::Vorticity).map_err(|_| {
                Error::Numerical("blended iterate lost nonnegativity".into())
            })?;
            return Ok(StepOutcome {
                omega: w,
                psi: p.with_kind(FieldKind::Stream)?,
                multipliers: m,
                energy_delta: e - e0,
                residual,
                damping: alpha,
            });
        }
        alpha = alpha * T::lit(0.5);
    }
}

fn initial_iterate<T: Real>(grid: Grid<T>, mu: T, cfg: &SolverConfig<T>, provided: Option<Field<T>>) -> Result<Field<T>> {
    let (l, hgt) = (grid.half_width(), grid.height());
    let shape = match (&cfg.init, provided) {
        (_, Some(f)) => f,
        (Init::HalfDisk, None) => {
            let r0 = T::lit(0.5) * l.min(hgt);
            Field::from_fn(grid, FieldKind::Vorticity, |x1, x2| {
                if x1.hypot(x2) < r0 { T::one() } else { T::zero() }
            })
        }
        (Init::RandomBlob, None) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let blobs: Vec<(T, T, T, T)> = (0..4)
                .map(|_| {
                    let c1 = T::lit(rng.gen_range(-0.3..0.3)) * l;
                    let c2 = T::lit(rng.gen_range(0.1..0.4)) * hgt;
                    let w = T::lit(rng.gen_range(0.06..0.15)) * hgt;
                    let a = T::lit(rng.gen_range(0.5..1.5));
                    (c1, c2, w, a)
                })
                .collect();
            Field::from_fn(grid, FieldKind::Vorticity, |x1, x2| {
                blobs.iter().fold(T::zero(), |acc, &(c1, c2, w, a)| {
                    let d = ((x1 - c1) * (x1 - c1) + (x2 - c2) * (x2 - c2)) / (w * w);
                    acc + a * (-d).exp()
                })
            })
        }
        (Init::Provided(_), None) => unreachable!("provided field resolved by caller"),
    };
    // an odd part in x1 leaves a sub-cell offset that the iteration removes very slowly
    let shape = shape.combine(T::lit(0.5), &shape.mirrored_x1(), T::lit(0.5))?;
    let imp = shape.impulse();
    if !(imp > T::zero()) {
        return Err(Error::Infeasible("initial iterate has zero impulse".into()));
    }
    let w = shape.scale(mu / imp);
    if w.integrate() > T::one() {
        return Err(Error::Infeasible(format!(
            "initial iterate needs mass {} > nu to reach the impulse; enlarge the grid",
            w.integrate()
        )));
    }
    Ok(w)
}

/// Checks the support keeps [`SUPPORT_MARGIN_CELLS`] clear of the lateral and top edges.
pub fn check_margin<T: Real>(omega: &Field<T>) -> Result<()> {
    let g = omega.grid();
    let Some((e1, e2)) = omega.support_extent() else { return Ok(()) };
    let margin = T::of_usize(SUPPORT_MARGIN_CELLS) * g.h();
    let half = g.h() * T::lit(0.5);
    if e1 + half + margin > g.half_width() || e2 + half + margin > g.height() {
        return Err(Error::Truncation(format!(
            "support reaches ({}, {}) within {} cells of the grid edge ({}, {})",
            e1 + half,
            e2 + half,
            SUPPORT_MARGIN_CELLS,
            g.half_width(),
            g.height()
        )));
    }
    Ok(())
}

/// Computes the maximizer for `p` on `grid`.
pub fn solve_dipole<T: Real>(p: &Params<T>, grid: Grid<T>, cfg: &SolverConfig<T>) -> Result<SolutionRecord<T>> {
    let p = p.validated()?;
    let cfg = cfg.clone().validated()?;
    if p.needs_cap() && cfg.cap == CapPolicy::Disabled && !p.cap.is_finite() {
        return Err(Error::Config(format!("s = {} <= 1/2 requires a finite cap", p.s)));
    }
    let length = p.length_factor();
    let amp = p.lambda.powf(-p.s.recip()) / p.nu;
    let ngrid = grid.scaled(length)?;
    let mu = p.normalized_impulse();
    let tensor = KernelTensor::new(ngrid, p.s)?;

    let provided = match &cfg.init {
        Init::Provided(f) => {
            if !f.grid().matches(&grid) {
                return Err(Error::Config("provided initial field is not on the solve grid".into()));
            }
            Some(rescale(f, p.s, p.lambda, p.nu)?)
        }
        _ => None,
    };
    let mut omega = initial_iterate(ngrid, mu, &cfg, provided)?;

    let cap = if p.cap.is_finite() {
        p.cap * amp
    } else {
        match cfg.cap {
            CapPolicy::Fixed(c) => c * amp,
            CapPolicy::Auto if p.needs_cap() => T::lit(10.0) * omega.max(),
            _ => T::infinity(),
        }
    };
    omega = level_set_field(&omega, Multipliers::default(), cap);
    let imp = omega.impulse();
    omega = omega.scale(mu / imp);

    let mut psi = tensor.apply(&omega)?;
    let mut history = Vec::new();
    let mut last_speed: Option<T> = None;
    let mut converged = None;
    let mut res = T::infinity();
    for it in 0..cfg.max_iter {
        let step = fixed_point_step(&omega, &psi, &tensor, mu, cap, &cfg)?;
        res = step.residual;
        let drift = last_speed
            .map(|w| (step.multipliers.speed - w).abs() / step.multipliers.speed.abs())
            .unwrap_or(T::infinity());
        last_speed = Some(step.multipliers.speed);
        if res < cfg.tol_residual && drift < cfg.tol_multiplier {
            converged = Some((it, step.multipliers));
            break;
        }
        let e0 = {
            let l2 = omega.l2_norm();
            half_pairing(&omega, &psi) - T::lit(0.5) * l2 * l2
        };
        history.push((e0 + step.energy_delta, res));
        omega = step.omega;
        psi = step.psi;
    }
    let Some((iterations, _)) = converged else {
        return Err(Error::NoConvergence { iterations: cfg.max_iter, residual: res.as_f64() });
    };

    let (omega, shift) = recenter(&omega);
    check_margin(&omega)?;
    let psi = tensor.apply(&omega)?;
    let m = solve_multipliers(&psi, mu, T::one(), cap)?;
    let final_res = residual(&omega, &psi, m, cap)?;
    let top = omega.max();
    if cap.is_finite() && top >= cap * (T::one() - T::lit(CAP_SLACK)) {
        return Err(Error::CapActive { max: (top / amp).as_f64(), cap: (cap / amp).as_f64() });
    }
    let kinetic_n = tensor.kinetic_energy(&omega)?;
    let energy_n = penalized_energy(&omega, &tensor, T::one())?;

    // back to user units
    let energy_scale = p.lambda.powf(p.s.recip() - T::one()) * p.nu * p.nu;
    let psi_scale = p.nu * p.lambda.powf(p.s.recip() - T::one());
    let user_omega = unscale(&omega, p.s, p.lambda, p.nu)?;
    let user_omega = Field::from_raw(grid, FieldKind::Vorticity, user_omega.into_values());
    let user_psi = Field::from_raw(grid, FieldKind::Stream, psi.values().iter().map(|&v| v * psi_scale).collect());
    let multipliers = Multipliers {
        speed: m.speed * p.nu * p.lambda.powf(T::lit(1.5) / p.s - T::one()),
        gamma: m.gamma * psi_scale,
    };
    let regime = if m.gamma > T::zero() { Regime::MassBound } else { Regime::MassFree };
    Ok(SolutionRecord {
        mass: user_omega.integrate(),
        impulse: user_omega.impulse(),
        omega: user_omega,
        psi: user_psi,
        multipliers,
        energy: energy_n * energy_scale,
        kinetic: kinetic_n * energy_scale,
        residual: final_res,
        iterations,
        params: p,
        grid,
        regime,
        cap: cap / amp,
        shift,
        history,
    })
}
