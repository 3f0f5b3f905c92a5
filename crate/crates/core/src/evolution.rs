//! Pseudo-spectral gSQG transport on a periodic box `[-Lb, Lb]^2`.
//!
//! `theta_t + u . grad theta = 0`, `u = grad^perp psi`, `psi^ = |k|^{-2s} theta^`
//! with `psi^(0) = 0`. Classical RK4 in Fourier space, 2/3-rule dealiasing of
//! every nonlinear term, and (for odd data) exact antisymmetrization in `x2`
//! after each step.
//!
//! Half-plane profiles enter through [`embed_periodic`], which resamples them
//! conservatively and extends them oddly across `x2 = 0`.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fft2::Fft2;
use crate::field::{Field, FieldKind};
use crate::grid::Grid;
use crate::params::SolutionRecord;
use crate::real::Real;

/// Courant number used to pick and check time steps.
pub const CFL: f64 = 0.5;
/// Steps between CFL re-checks during a run.
pub const CFL_CHECK_INTERVAL: usize = 50;
/// Automatic steps are this fraction of the CFL limit at `t = 0`.
pub const AUTO_STEP_FRACTION: f64 = 0.8;

/// Sampled scalar on the periodic box, `n x n` cell centres,
/// `x = (i + 1/2) hb - Lb`, row-major with index `j * n + i` (`j` along `x2`).
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicState<T> {
    half_width: T,
    n: usize,
    s: T,
    time: T,
    odd: bool,
    theta: Vec<T>,
}

impl<T: Real> PeriodicState<T> {
    /// Wraps samples. With `odd = true` the data must satisfy
    /// `theta(x1, -x2) = -theta(x1, x2)`; it is antisymmetrized on entry.
    pub fn new(half_width: T, n: usize, s: T, theta: Vec<T>, odd: bool) -> Result<Self> {
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::Config(format!("box half-width {half_width} must be positive")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Config(format!("box resolution {n} must be even and >= 8")));
        }
        if !(s > T::zero() && s <= T::one()) {
            return Err(Error::Domain(format!("order s = {s} outside (0, 1]")));
        }
        if theta.len() != n * n {
            return Err(Error::InvalidField(format!("expected {} samples, got {}", n * n, theta.len())));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite sample".into()));
        }
        let mut out = Self { half_width, n, s, time: T::zero(), odd, theta };
        if odd {
            antisymmetrize(&mut out.theta, n);
        }
        Ok(out)
    }

    /// Samples `f(x1, x2)` at the box cell centres.
    pub fn from_fn(half_width: T, n: usize, s: T, odd: bool, f: impl Fn(T, T) -> T) -> Result<Self> {
        let hb = (half_width + half_width) / T::of_usize(n);
        let x = |k: usize| (T::of_usize(k) + T::lit(0.5)) * hb - half_width;
        let theta = (0..n * n).map(|k| f(x(k % n), x(k / n))).collect();
        Self::new(half_width, n, s, theta, odd)
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> T {
        (self.half_width + self.half_width) / T::of_usize(self.n)
    }

    pub fn s(&self) -> T {
        self.s
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn is_odd(&self) -> bool {
        self.odd
    }

    pub fn values(&self) -> &[T] {
        &self.theta
    }

    /// Cell-centre coordinate of index `k` along either axis.
    pub fn coord(&self, k: usize) -> T {
        (T::of_usize(k) + T::lit(0.5)) * self.h() - self.half_width
    }

    /// Half-plane grid `[-Lb, Lb] x [0, Lb]` matching the upper half of the box.
    pub fn half_grid(&self) -> Result<Grid<T>> {
        Grid::new(self.half_width, self.half_width, self.n, self.n / 2)
    }

    /// Restriction to `x2 > 0`; may carry small negative values, so it is
    /// tagged as an increment field.
    pub fn upper_half(&self) -> Result<Field<T>> {
        let g = self.half_grid()?;
        let start = self.n / 2 * self.n;
        Field::from_values(g, FieldKind::Increment, self.theta[start..].to_vec())
    }

    /// `int theta` over the upper half.
    pub fn upper_mass(&self) -> T {
        let n = self.n;
        let mut total = T::zero();
        for j in n / 2..n {
            total = total + self.theta[j * n..(j + 1) * n].iter().copied().sum::<T>();
        }
        total * self.h() * self.h()
    }

    /// `int x2 theta` over the whole box (twice the half-plane impulse for odd data).
    pub fn impulse(&self) -> T {
        let n = self.n;
        let mut total = T::zero();
        for j in 0..n {
            let row: T = self.theta[j * n..(j + 1) * n].iter().copied().sum();
            total = total + self.coord(j) * row;
        }
        total * self.h() * self.h()
    }

    /// `int theta` over the whole box.
    pub fn total_mass(&self) -> T {
        let n = self.n;
        let mut total = T::zero();
        for j in 0..n {
            total = total + self.theta[j * n..(j + 1) * n].iter().copied().sum::<T>();
        }
        total * self.h() * self.h()
    }

    pub fn l2_norm(&self) -> T {
        let n = self.n;
        let mut total = T::zero();
        for j in 0..n {
            total = total + self.theta[j * n..(j + 1) * n].iter().map(|&v| v * v).sum::<T>();
        }
        (total * self.h() * self.h()).sqrt()
    }

    /// `L^p` norm over the box; `p = inf` gives the max norm.
    pub fn lp_norm(&self, p: T) -> T {
        if p.is_infinite() {
            return self.theta.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        }
        let n = self.n;
        let mut total = T::zero();
        for j in 0..n {
            total = total + self.theta[j * n..(j + 1) * n].iter().map(|&v| v.abs().powf(p)).sum::<T>();
        }
        (total * self.h() * self.h()).powf(p.recip())
    }

    /// Mass centroid in `x1` of the upper half; `None` when it has no mass.
    pub fn centroid_x1(&self) -> Option<T> {
        let n = self.n;
        let (mut num, mut den) = (T::zero(), T::zero());
        for j in n / 2..n {
            for i in 0..n {
                let v = self.theta[j * n + i];
                num = num + self.coord(i) * v;
                den = den + v;
            }
        }
        (den != T::zero()).then(|| num / den)
    }
}

/// `theta(i, j) <- (theta(i, j) - theta(i, n-1-j)) / 2`, mirrored rows exact negatives.
fn antisymmetrize<T: Real>(theta: &mut [T], n: usize) {
    let half = T::lit(0.5);
    for j in n / 2..n {
        let m = n - 1 - j;
        for i in 0..n {
            let v = (theta[j * n + i] - theta[m * n + i]) * half;
            theta[j * n + i] = v;
            theta[m * n + i] = -v;
        }
    }
}

/// Overlap weights of destination cells `[d0 + k hd, d0 + (k+1) hd)` with
/// source cells `[s0 + l hs, ...)`, as `(source index, overlap length)` lists.
fn overlaps<T: Real>(s0: T, hs: T, ns: usize, d0: T, hd: T, nd: usize) -> Vec<Vec<(usize, T)>> {
    (0..nd)
        .map(|k| {
            let a = d0 + T::of_usize(k) * hd;
            let b = a + hd;
            let first = ((a - s0) / hs).floor().to_isize().unwrap_or(0).max(0) as usize;
            let mut out = Vec::new();
            let mut l = first;
            while l < ns {
                let lo = s0 + T::of_usize(l) * hs;
                let hi = lo + hs;
                if lo >= b {
                    break;
                }
                let w = hi.min(b) - lo.max(a);
                if w > T::zero() {
                    out.push((l, w));
                }
                l += 1;
            }
            out
        })
        .collect()
}

/// Odd periodic extension of a half-plane field, resampled by exact cell
/// overlap (mass-conserving) onto an `n x n` box of half-width `lb`.
pub fn embed_periodic<T: Real>(omega: &Field<T>, lb: T, n: usize, s: T) -> Result<PeriodicState<T>> {
    let g = omega.grid();
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::Config(format!("box resolution {n} must be even and >= 8")));
    }
    if let Some((e1, e2)) = omega.support_extent() {
        let half = g.h() * T::lit(0.5);
        let limit = lb * T::lit(0.75);
        if e1 + half > limit || e2 + half > limit {
            return Err(Error::Truncation(format!(
                "support ({}, {}) leaves less than Lb/4 = {} of margin in the box",
                e1 + half,
                e2 + half,
                lb * T::lit(0.25)
            )));
        }
    }
    let hb = (lb + lb) / T::of_usize(n);
    let rx = overlaps(-g.half_width(), g.h(), g.nx(), -lb, hb, n);
    let ry = overlaps(T::zero(), g.h(), g.ny(), T::zero(), hb, n / 2);
    let inv_area = (hb * hb).recip();

    // x1 pass per source row, then x2 pass
    let mut tmp = vec![T::zero(); g.ny() * n];
    for l in 0..g.ny() {
        let row = omega.row(l);
        for (k, w) in rx.iter().enumerate() {
            tmp[l * n + k] = w.iter().fold(T::zero(), |acc, &(src, len)| acc + len * row[src]);
        }
    }
    let mut theta = vec![T::zero(); n * n];
    for (jj, w) in ry.iter().enumerate() {
        let j = n / 2 + jj;
        for i in 0..n {
            let v = w.iter().fold(T::zero(), |acc, &(src, len)| acc + len * tmp[src * n + i]);
            theta[j * n + i] = v * inv_area;
            theta[(n - 1 - j) * n + i] = -(v * inv_area);
        }
    }
    PeriodicState::new(lb, n, s, theta, true)
}

/// Plans, wavenumbers and multipliers for one box size, resolution and order.
pub struct Spectral<T: Real> {
    n: usize,
    half_width: T,
    s: T,
    fft: Fft2<T>,
    k: Vec<T>,
    mult: Vec<T>,
    mask: Vec<bool>,
}

impl<T: Real> Spectral<T> {
    pub fn new(half_width: T, n: usize, s: T) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Config(format!("box resolution {n} must be even and >= 8")));
        }
        let dk = T::PI() / half_width;
        let mut k: Vec<T> = (0..n)
            .map(|m| {
                let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                T::lit(signed) * dk
            })
            .collect();
        let kmax = T::of_usize(n / 2) * dk;
        let cut = T::lit(2.0 / 3.0) * kmax;
        let mut mult = vec![T::zero(); n * n];
        let mut mask = vec![false; n * n];
        for r in 0..n {
            for c in 0..n {
                let (k1, k2) = (k[c], k[r]);
                let kk = k1.hypot(k2);
                if kk > T::zero() {
                    mult[r * n + c] = kk.powf(-(s + s));
                }
                mask[r * n + c] = k1.abs() < cut && k2.abs() < cut;
            }
        }
        // the Nyquist mode carries no derivative of a real field
        k[n / 2] = T::zero();
        Ok(Self { n, half_width, s, fft: Fft2::new(n, n), k, mult, mask })
    }

    pub fn for_state(state: &PeriodicState<T>) -> Result<Self> {
        Self::new(state.half_width, state.n, state.s)
    }

    fn check(&self, state: &PeriodicState<T>) -> Result<()> {
        if state.n != self.n || state.half_width != self.half_width || state.s != self.s {
            return Err(Error::Config("state does not match the spectral plan".into()));
        }
        Ok(())
    }

    fn h(&self) -> T {
        (self.half_width + self.half_width) / T::of_usize(self.n)
    }

    fn forward(&self, theta: &[T]) -> Vec<Complex<T>> {
        let mut z: Vec<Complex<T>> = theta.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.fft.forward(&mut z);
        z
    }

    /// Inverse transform, normalized.
    fn inverse(&self, mut z: Vec<Complex<T>>) -> Vec<Complex<T>> {
        self.fft.inverse(&mut z);
        let scale = T::of_usize(self.n * self.n).recip();
        for v in z.iter_mut() {
            *v = *v * scale;
        }
        z
    }

    fn apply_mask(&self, z: &mut [Complex<T>]) {
        for (v, &keep) in z.iter_mut().zip(&self.mask) {
            if !keep {
                *v = Complex::new(T::zero(), T::zero());
            }
        }
    }

    /// `(u1, u2) = (d2 psi, -d1 psi)` from a spectrum, packed into one inverse FFT.
    fn velocity_hat(&self, th: &[Complex<T>]) -> (Vec<T>, Vec<T>) {
        let n = self.n;
        let z = (0..n * n)
            .map(|idx| {
                let (k1, k2) = (self.k[idx % n], self.k[idx / n]);
                let p = th[idx] * self.mult[idx];
                // i k2 psi + i (-i k1 psi)
                Complex::new(-k2 * p.im + k1 * p.re, k2 * p.re + k1 * p.im)
            })
            .collect();
        let out = self.inverse(z);
        (out.iter().map(|v| v.re).collect(), out.iter().map(|v| v.im).collect())
    }

    /// Velocity field of a state.
    pub fn velocity(&self, state: &PeriodicState<T>) -> Result<(Vec<T>, Vec<T>)> {
        self.check(state)?;
        Ok(self.velocity_hat(&self.forward(&state.theta)))
    }

    /// Largest velocity magnitude.
    pub fn max_speed(&self, state: &PeriodicState<T>) -> Result<T> {
        let (u1, u2) = self.velocity(state)?;
        Ok(u1.iter().zip(&u2).fold(T::zero(), |m, (a, b)| m.max(a.hypot(*b))))
    }

    /// Largest stable step `CFL hb / max |u|`.
    pub fn cfl_step(&self, state: &PeriodicState<T>) -> Result<T> {
        let u = self.max_speed(state)?;
        Ok(if u > T::zero() { T::lit(CFL) * self.h() / u } else { T::infinity() })
    }

    /// Dealiased `-u . grad theta`.
    fn rhs(&self, th: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        let (u1, u2) = self.velocity_hat(th);
        let z = (0..n * n)
            .map(|idx| {
                let (k1, k2) = (self.k[idx % n], self.k[idx / n]);
                let t = th[idx];
                // i k1 theta + i (i k2 theta)
                Complex::new(-k1 * t.im - k2 * t.re, k1 * t.re - k2 * t.im)
            })
            .collect();
        let g = self.inverse(z);
        let mut nl: Vec<Complex<T>> = (0..n * n)
            .map(|k| Complex::new(-(u1[k] * g[k].re + u2[k] * g[k].im), T::zero()))
            .collect();
        self.fft.forward(&mut nl);
        self.apply_mask(&mut nl);
        nl
    }

    /// Removes the modes outside the 2/3 band.
    pub fn project(&self, state: &PeriodicState<T>) -> Result<PeriodicState<T>> {
        self.check(state)?;
        let mut z = self.forward(&state.theta);
        self.apply_mask(&mut z);
        Ok(self.finish(state, z, state.time))
    }

    fn finish(&self, state: &PeriodicState<T>, z: Vec<Complex<T>>, time: T) -> PeriodicState<T> {
        let mut theta: Vec<T> = self.inverse(z).into_iter().map(|v| v.re).collect();
        if state.odd {
            antisymmetrize(&mut theta, self.n);
        }
        PeriodicState { theta, time, ..state.clone() }
    }

    fn step_unchecked(&self, state: &PeriodicState<T>, dt: T) -> PeriodicState<T> {
        let mut th = self.forward(&state.theta);
        self.apply_mask(&mut th);
        let axpy = |a: &[Complex<T>], b: &[Complex<T>], f: T| -> Vec<Complex<T>> {
            a.iter().zip(b).map(|(x, y)| *x + *y * f).collect()
        };
        let half = dt * T::lit(0.5);
        let k1 = self.rhs(&th);
        let k2 = self.rhs(&axpy(&th, &k1, half));
        let k3 = self.rhs(&axpy(&th, &k2, half));
        let k4 = self.rhs(&axpy(&th, &k3, dt));
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        for k in 0..th.len() {
            th[k] = th[k] + (k1[k] + k2[k] * two + k3[k] * two + k4[k]) * sixth;
        }
        self.finish(state, th, state.time + dt)
    }

    /// One RK4 step; fails if `dt` exceeds the CFL limit.
    pub fn step(&self, state: &PeriodicState<T>, dt: T) -> Result<PeriodicState<T>> {
        self.check(state)?;
        let limit = self.cfl_step(state)?;
        if !(dt > T::zero()) || dt > limit {
            return Err(Error::TimeStep { dt: dt.as_f64(), limit: limit.as_f64() });
        }
        Ok(self.step_unchecked(state, dt))
    }

    /// Kinetic energy `1/2 int theta psi` over the box (Parseval).
    pub fn kinetic_energy(&self, state: &PeriodicState<T>) -> Result<T> {
        self.check(state)?;
        let z = self.forward(&state.theta);
        let total = z.iter().zip(&self.mult).fold(T::zero(), |acc, (v, &m)| acc + m * v.norm_sqr());
        let h = self.h();
        Ok(T::lit(0.5) * total * h * h / T::of_usize(self.n * self.n))
    }

    /// Stream function on the box.
    pub fn stream(&self, state: &PeriodicState<T>) -> Result<Vec<T>> {
        self.check(state)?;
        let mut z = self.forward(&state.theta);
        for (v, &m) in z.iter_mut().zip(&self.mult) {
            *v = *v * m;
        }
        Ok(self.inverse(z).into_iter().map(|v| v.re).collect())
    }
}

/// Velocity of a state, planning the transforms on the fly.
pub fn velocity<T: Real>(state: &PeriodicState<T>) -> Result<(Vec<T>, Vec<T>)> {
    Spectral::for_state(state)?.velocity(state)
}

/// One RK4 step, planning the transforms on the fly.
pub fn step<T: Real>(state: &PeriodicState<T>, dt: T) -> Result<PeriodicState<T>> {
    Spectral::for_state(state)?.step(state, dt)
}

/// `||a||_2 + ||x2 a||_1` of a half-plane field.
pub fn orbit_norm<T: Real>(f: &Field<T>) -> T {
    f.l2_norm() + f.weighted_l1_norm()
}

fn distance_at<T: Real>(xi: &Field<T>, omega: &Field<T>, c: isize) -> T {
    let shifted = omega.shifted_x1(c);
    let g = xi.grid();
    let a = g.cell_area();
    let (mut l2, mut l1) = (T::zero(), T::zero());
    for j in 0..g.ny() {
        let x2 = g.x2(j);
        let (mut r2, mut r1) = (T::zero(), T::zero());
        for (u, v) in xi.row(j).iter().zip(shifted.row(j)) {
            let d = *u - *v;
            r2 = r2 + d * d;
            r1 = r1 + d.abs();
        }
        l2 = l2 + r2;
        l1 = l1 + x2 * r1;
    }
    (l2 * a).sqrt() + l1 * a
}

/// `inf_c ||xi - omega(. + c e1)||_2 + ||x2 (xi - omega(. + c e1))||_1` over
/// integer-cell shifts (zero fill), refined by a parabola through the best
/// shift and its neighbours. Returns `(distance, shift in cells)`.
pub fn shift_distance<T: Real>(xi: &Field<T>, omega: &Field<T>) -> Result<(T, T)> {
    if !xi.grid().matches(omega.grid()) {
        return Err(Error::Config("fields live on different grids".into()));
    }
    let nx = xi.grid().nx() as isize;
    let vals: Vec<T> = (-(nx - 1)..nx).map(|c| distance_at(xi, omega, c)).collect();
    let (best, f0) = vals
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::infinity()), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    let c0 = T::lit(best as f64 - (nx - 1) as f64);
    if best == 0 || best + 1 == vals.len() || f0 == T::zero() {
        return Ok((f0, c0));
    }
    let (fm, fp) = (vals[best - 1], vals[best + 1]);
    let curv = fp - f0 - f0 + fm;
    if !(curv > T::zero()) {
        return Ok((f0, c0));
    }
    let off = T::lit(0.5) * (fm - fp) / curv;
    let refined = (f0 - (fp - fm) * (fp - fm) / (T::lit(8.0) * curv)).max(T::zero()).min(f0);
    Ok((refined, c0 + off))
}

/// Distance to the translation orbit of a reference, with the reference
/// translated exactly by Fourier interpolation along `x1` (continuous `c`).
pub struct OrbitDistance<T: Real> {
    n: usize,
    h: T,
    grid: Grid<T>,
    reference: Field<T>,
    rows_hat: Vec<Vec<Complex<T>>>,
    k: Vec<T>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> OrbitDistance<T> {
    /// `reference` is a band-limited state; its upper half defines the orbit.
    pub fn new(reference: &PeriodicState<T>) -> Result<Self> {
        let n = reference.n;
        let grid = reference.half_grid()?;
        let field = reference.upper_half()?;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let rows_hat = (0..n / 2)
            .map(|j| {
                let mut r: Vec<Complex<T>> = field.row(j).iter().map(|&v| Complex::new(v, T::zero())).collect();
                fwd.process(&mut r);
                r
            })
            .collect();
        let dk = T::PI() / reference.half_width;
        let k = (0..n)
            .map(|m| T::lit(if m < n / 2 { m as f64 } else if m == n / 2 { 0.0 } else { m as f64 - n as f64 }) * dk)
            .collect();
        Ok(Self { n, h: reference.h(), grid, reference: field, rows_hat, k, inv })
    }

    /// Reference translated so that `out(x) = ref(x - c h e1)`, periodically.
    fn translated(&self, c: T) -> Vec<T> {
        let n = self.n;
        let shift = c * self.h;
        let scale = T::of_usize(n).recip();
        let mut out = Vec::with_capacity(n * n / 2);
        for row in &self.rows_hat {
            let mut r: Vec<Complex<T>> = row
                .iter()
                .zip(&self.k)
                .map(|(v, &k)| *v * Complex::from_polar(T::one(), -k * shift))
                .collect();
            self.inv.process(&mut r);
            out.extend(r.iter().map(|v| v.re * scale));
        }
        out
    }

    fn objective(&self, xi: &Field<T>, shifted: &[T]) -> T {
        let g = &self.grid;
        let a = g.cell_area();
        let n = self.n;
        let (mut l2, mut l1) = (T::zero(), T::zero());
        for j in 0..n / 2 {
            let x2 = g.x2(j);
            let (mut r2, mut r1) = (T::zero(), T::zero());
            for (u, v) in xi.row(j).iter().zip(&shifted[j * n..(j + 1) * n]) {
                let d = *u - *v;
                r2 = r2 + d * d;
                r1 = r1 + d.abs();
            }
            l2 = l2 + r2;
            l1 = l1 + x2 * r1;
        }
        (l2 * a).sqrt() + l1 * a
    }

    fn rolled(&self, c: isize) -> Vec<T> {
        let n = self.n as isize;
        let mut out = vec![T::zero(); self.reference.values().len()];
        for j in 0..self.n / 2 {
            let row = self.reference.row(j);
            for i in 0..n {
                out[j * self.n + i as usize] = row[(i - c).rem_euclid(n) as usize];
            }
        }
        out
    }

    /// Norm `||ref||_2 + ||x2 ref||_1` of the reference.
    pub fn reference_norm(&self) -> T {
        orbit_norm(&self.reference)
    }

    /// `(distance, translation in cells)` of a state's upper half to the orbit.
    pub fn distance(&self, state: &PeriodicState<T>) -> Result<(T, T)> {
        if state.n != self.n {
            return Err(Error::Config("state does not match the reference".into()));
        }
        let xi = state.upper_half()?;
        let n = self.n as isize;
        let (mut best_c, mut best) = (0isize, T::infinity());
        for c in -n / 2..n / 2 {
            let v = self.objective(&xi, &self.rolled(c));
            if v < best {
                best = v;
                best_c = c;
            }
        }
        // golden section on [c - 1, c + 1]
        let ratio = T::lit(0.618_033_988_749_894_8);
        let f = |c: T| self.objective(&xi, &self.translated(c));
        let (mut a, mut b) = (T::lit(best_c as f64 - 1.0), T::lit(best_c as f64 + 1.0));
        let mut c1 = b - ratio * (b - a);
        let mut c2 = a + ratio * (b - a);
        let (mut f1, mut f2) = (f(c1), f(c2));
        for _ in 0..40 {
            if f1 < f2 {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - ratio * (b - a);
                f1 = f(c1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + ratio * (b - a);
                f2 = f(c2);
            }
        }
        let (c, v) = if f1 < f2 { (c1, f1) } else { (c2, f2) };
        Ok(if v < best { (v, c) } else { (best, T::lit(best_c as f64)) })
    }
}

/// One sample of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample<T> {
    pub time: T,
    /// Orbit distance to the reference (zero when no reference is tracked).
    pub distance: T,
    /// `int theta` over the box (zero for odd data).
    pub mass: T,
    /// `int theta` over the upper half.
    pub upper_mass: T,
    /// `int x2 theta` over the box.
    pub impulse: T,
    pub kinetic: T,
    pub l2: T,
    /// `L^{p_s}` norm (max norm for `s <= 1/2` and `s = 1`).
    pub lps: T,
    pub centroid_x1: T,
}

/// Time series of a run plus the setup it was produced with.
#[derive(Clone, Debug)]
pub struct StabilityTrace<T> {
    pub samples: Vec<TraceSample<T>>,
    pub dt: T,
    pub steps: usize,
    pub box_half_width: T,
    pub n: usize,
    /// `||ref||_2 + ||x2 ref||_1` of the reference profile.
    pub reference_norm: T,
    /// Speed used to convert time into turnover units (0 when unknown).
    pub speed: T,
    /// Relative L2 gap between the half-plane stream function and the
    /// periodic one on the support of the initial data.
    pub stream_mismatch: Option<T>,
}

/// Largest relative drift of the conserved quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drifts<T> {
    /// Box mass change over the initial upper-half mass.
    pub mass: T,
    pub impulse: T,
    pub kinetic: T,
    pub l2: T,
    pub lps: T,
}

impl<T: Real> Drifts<T> {
    /// Largest of mass, impulse, kinetic energy and L2 drifts.
    pub fn max_conserved(&self) -> T {
        self.mass.max(self.impulse).max(self.kinetic).max(self.l2)
    }
}

impl<T: Real> StabilityTrace<T> {
    fn drift(&self, f: impl Fn(&TraceSample<T>) -> T) -> T {
        let Some(first) = self.samples.first() else { return T::zero() };
        let base = f(first).abs();
        self.samples.iter().fold(T::zero(), |m, s| {
            let d = (f(s) - f(first)).abs();
            m.max(if base > T::zero() { d / base } else { d })
        })
    }

    pub fn drifts(&self) -> Drifts<T> {
        // the box mass vanishes, so its drift is measured against the upper-half mass
        let scale = self.samples.first().map(|s| s.upper_mass.abs()).unwrap_or(T::zero());
        let mass = self.samples.first().map_or(T::zero(), |first| {
            let d = self.samples.iter().fold(T::zero(), |m, s| m.max((s.mass - first.mass).abs()));
            if scale > T::zero() { d / scale } else { d }
        });
        Drifts {
            mass,
            impulse: self.drift(|s| s.impulse),
            kinetic: self.drift(|s| s.kinetic),
            l2: self.drift(|s| s.l2),
            lps: self.drift(|s| s.lps),
        }
    }

    pub fn max_distance(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, s| m.max(s.distance))
    }

    /// Mean centroid speed between the first and last sample.
    pub fn centroid_speed(&self) -> T {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) if b.time > a.time => (b.centroid_x1 - a.centroid_x1) / (b.time - a.time),
            _ => T::zero(),
        }
    }
}

/// Run controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig<T> {
    /// Final time.
    pub horizon: T,
    /// Number of equally spaced samples after `t = 0`.
    pub samples: usize,
    /// Fixed step; `None` picks a fraction of the CFL step at `t = 0`.
    pub dt: Option<T>,
}

fn sample<T: Real>(
    ops: &Spectral<T>,
    state: &PeriodicState<T>,
    orbit: Option<&OrbitDistance<T>>,
    p: T,
) -> Result<TraceSample<T>> {
    let distance = match orbit {
        Some(o) => o.distance(state)?.0,
        None => T::zero(),
    };
    Ok(TraceSample {
        time: state.time,
        distance,
        mass: state.total_mass(),
        upper_mass: state.upper_mass(),
        impulse: state.impulse(),
        kinetic: ops.kinetic_energy(state)?,
        l2: state.l2_norm(),
        lps: state.lp_norm(p),
        centroid_x1: state.centroid_x1().unwrap_or(T::zero()),
    })
}

fn lps_exponent<T: Real>(s: T) -> T {
    if s <= T::lit(0.5) || s == T::one() {
        T::infinity()
    } else {
        T::lit(2.0)
    }
}

/// Evolves `initial` (dealiased first) and samples diagnostics, measuring the
/// orbit distance to `reference` when given. Returns the trace and final state.
pub fn run_trace<T: Real>(
    initial: &PeriodicState<T>,
    reference: Option<&PeriodicState<T>>,
    cfg: &RunConfig<T>,
) -> Result<(StabilityTrace<T>, PeriodicState<T>)> {
    if !(cfg.horizon > T::zero()) || cfg.samples == 0 {
        return Err(Error::Config("horizon and sample count must be positive".into()));
    }
    let ops = Spectral::for_state(initial)?;
    let mut state = ops.project(initial)?;
    let orbit = match reference {
        Some(r) => Some(OrbitDistance::new(&ops.project(r)?)?),
        None => None,
    };
    let limit = ops.cfl_step(&state)?;
    let dt0 = match cfg.dt {
        Some(dt) if dt > limit => {
            return Err(Error::TimeStep { dt: dt.as_f64(), limit: limit.as_f64() });
        }
        Some(dt) if dt > T::zero() => dt,
        Some(dt) => return Err(Error::Config(format!("time step {dt} must be positive"))),
        None => limit * T::lit(AUTO_STEP_FRACTION),
    };
    let per_sample = (cfg.horizon / T::of_usize(cfg.samples) / dt0).ceil().to_usize().unwrap_or(1).max(1);
    let steps = per_sample * cfg.samples;
    let dt = cfg.horizon / T::of_usize(steps);
    let p = lps_exponent(state.s);
    let mut samples = vec![sample(&ops, &state, orbit.as_ref(), p)?];
    for k in 1..=steps {
        state = ops.step_unchecked(&state, dt);
        if k % CFL_CHECK_INTERVAL == 0 {
            let limit = ops.cfl_step(&state)?;
            if dt > limit {
                return Err(Error::TimeStep { dt: dt.as_f64(), limit: limit.as_f64() });
            }
        }
        if k % per_sample == 0 {
            samples.push(sample(&ops, &state, orbit.as_ref(), p)?);
        }
    }
    let reference_norm = orbit.as_ref().map(|o| o.reference_norm()).unwrap_or(T::zero());
    let trace = StabilityTrace {
        samples,
        dt,
        steps,
        box_half_width: state.half_width,
        n: state.n,
        reference_norm,
        speed: T::zero(),
        stream_mismatch: None,
    };
    Ok((trace, state))
}

/// Box layout for a solution record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxConfig<T> {
    /// Box half-width over the support radius (8 gives a box side of eight
    /// support diameters).
    pub box_factor: T,
    /// Cells per box side.
    pub n: usize,
    /// Horizon in turnover times (support diameter over speed).
    pub turnovers: T,
    pub samples: usize,
    pub dt: Option<T>,
}

impl<T: Real> Default for BoxConfig<T> {
    fn default() -> Self {
        Self { box_factor: T::lit(8.0), n: 512, turnovers: T::lit(2.0), samples: 8, dt: None }
    }
}

/// Radius of the smallest origin-centred half-disk containing the support.
pub fn support_radius<T: Real>(omega: &Field<T>) -> T {
    let g = omega.grid();
    let half = g.h() * T::lit(0.5);
    let mut r = T::zero();
    for j in 0..g.ny() {
        for (i, &v) in omega.row(j).iter().enumerate() {
            if v != T::zero() {
                r = r.max((g.x1(i).abs() + half).hypot(g.x2(j) + half));
            }
        }
    }
    r
}

/// `delta omega sin(pi x1 / 2R) / ||omega sin(pi x1 / 2R)||_2` with `R` the
/// support radius. Odd in `x1`, so it adds no mass or impulse to an even
/// profile, and `omega + p >= 0` while `delta < ||omega sin||_2`.
pub fn odd_perturbation<T: Real>(omega: &Field<T>, delta: T) -> Result<Field<T>> {
    let radius = support_radius(omega);
    if !(radius > T::zero()) {
        return Err(Error::InvalidField("cannot perturb a zero profile".into()));
    }
    let g = *omega.grid();
    let values: Vec<T> = (0..g.len())
        .map(|k| omega.values()[k] * (T::PI() * g.x1(k % g.nx()) / (radius + radius)).sin())
        .collect();
    let bump = Field::from_values(g, FieldKind::Increment, values)?;
    Ok(bump.scale(delta / bump.l2_norm()))
}

/// Trigonometric interpolant of box samples, evaluated on the tensor grid
/// `xs1 x xs2`; output row-major with rows along `xs2`.
fn trig_interpolate<T: Real>(values: &[T], n: usize, lb: T, xs1: &[T], xs2: &[T]) -> Vec<T> {
    let mut z: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
    Fft2::new(n, n).forward(&mut z);
    let dk = T::PI() / lb;
    let origin = T::lit(0.5) * (lb + lb) / T::of_usize(n) - lb;
    let wave = |m: usize| {
        let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        T::lit(signed) * dk
    };
    // phases e^{i k (x - x_0)} for every mode and target coordinate
    let phases = |xs: &[T]| -> Vec<Complex<T>> {
        xs.iter()
            .flat_map(|&x| (0..n).map(move |m| Complex::from_polar(T::one(), wave(m) * (x - origin))))
            .collect()
    };
    let (p1, p2) = (phases(xs1), phases(xs2));
    let mut out = Vec::with_capacity(xs1.len() * xs2.len());
    let mut partial = vec![Complex::new(T::zero(), T::zero()); n];
    for t2 in 0..xs2.len() {
        // sum over k2 first, one column of modes per k1
        partial.iter_mut().for_each(|v| *v = Complex::new(T::zero(), T::zero()));
        for m2 in 0..n {
            let ph = p2[t2 * n + m2];
            for (acc, zz) in partial.iter_mut().zip(&z[m2 * n..(m2 + 1) * n]) {
                *acc = *acc + *zz * ph;
            }
        }
        for t1 in 0..xs1.len() {
            let row = &p1[t1 * n..(t1 + 1) * n];
            let v = partial.iter().zip(row).fold(T::zero(), |acc, (a, b)| acc + (*a * *b).re);
            out.push(v / T::of_usize(n * n));
        }
    }
    out
}

/// Relative L2 gap between `G_s omega` on the half-plane grid and the periodic
/// stream function, measured on the support of `omega`. The periodic stream
/// function is evaluated at the half-plane cell centres by trigonometric
/// interpolation.
fn stream_mismatch<T: Real>(record: &SolutionRecord<T>, state: &PeriodicState<T>, ops: &Spectral<T>) -> Result<T> {
    let psi = ops.stream(state)?;
    let g = record.omega.grid();
    let cols: Vec<usize> = (0..g.nx()).filter(|&i| (0..g.ny()).any(|j| record.omega.get(i, j) > T::zero())).collect();
    let rows: Vec<usize> = (0..g.ny()).filter(|&j| record.omega.row(j).iter().any(|&v| v > T::zero())).collect();
    let xs1: Vec<T> = cols.iter().map(|&i| g.x1(i)).collect();
    let xs2: Vec<T> = rows.iter().map(|&j| g.x2(j)).collect();
    let periodic = trig_interpolate(&psi, state.n, state.half_width, &xs1, &xs2);
    let (mut num, mut den) = (T::zero(), T::zero());
    for (a, &j) in rows.iter().enumerate() {
        for (b, &i) in cols.iter().enumerate() {
            if record.omega.get(i, j) > T::zero() {
                let exact = record.psi.get(i, j);
                let d = periodic[a * cols.len() + b] - exact;
                num = num + d * d;
                den = den + exact * exact;
            }
        }
    }
    Ok(if den > T::zero() { (num / den).sqrt() } else { T::zero() })
}

/// Evolves `record.omega + perturbation` and measures its distance to the
/// translation orbit of the (unperturbed) dipole.
pub fn run_stability<T: Real>(
    record: &SolutionRecord<T>,
    perturbation: Option<&Field<T>>,
    cfg: &BoxConfig<T>,
) -> Result<StabilityTrace<T>> {
    let omega = &record.omega;
    let xi0 = match perturbation {
        Some(p) => omega.combine(T::one(), p, T::one())?.with_kind(FieldKind::Vorticity).map_err(|_| {
            Error::InvalidField("perturbed profile is negative somewhere on the half-plane".into())
        })?,
        None => omega.clone(),
    };
    let speed = record.multipliers.speed;
    if !(speed > T::zero()) {
        return Err(Error::Domain("record has no positive travelling speed".into()));
    }
    let radius = support_radius(omega).max(support_radius(&xi0));
    let lb = cfg.box_factor * radius;
    let s = record.params.s;
    let reference = embed_periodic(omega, lb, cfg.n, s)?;
    let initial = embed_periodic(&xi0, lb, cfg.n, s)?;
    let horizon = cfg.turnovers * (radius + radius) / speed;
    let run = RunConfig { horizon, samples: cfg.samples, dt: cfg.dt };
    let (mut trace, _) = run_trace(&initial, Some(&reference), &run)?;
    let ops = Spectral::for_state(&reference)?;
    trace.speed = speed;
    trace.stream_mismatch = Some(stream_mismatch(record, &ops.project(&reference)?, &ops)?);
    Ok(trace)
}
