//! Penalized energy, admissibility checks and the scaling normalization.
//!
//! The change of variables
//! `w~(x) = (lambda^{-1/s} / nu) w(lambda^{-1/2s} x)` maps the problem with
//! parameters `(lambda, mu, nu)` onto `(1, mu lambda^{1/2s} / nu, 1)`, and
//! `E_1(w~) = lambda^{1 - 1/s} nu^{-2} E_lambda(w)`.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::kernel::KernelTensor;
use crate::params::Params;
use crate::real::Real;

/// `E(w) - (1 / 2 lambda) int w^2`.
pub fn penalized_energy<T: Real>(omega: &Field<T>, tensor: &KernelTensor<T>, lambda: T) -> Result<T> {
    if !(lambda > T::zero()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let kinetic = tensor.kinetic_energy(omega)?;
    let l2 = omega.l2_norm();
    Ok(kinetic - l2 * l2 / (lambda + lambda))
}

/// Constraint values of a vorticity field and whether each one holds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibilityReport<T> {
    pub mass: T,
    pub impulse: T,
    pub sup: T,
    pub mass_ok: bool,
    pub impulse_ok: bool,
    pub cap_ok: bool,
}

impl<T> AdmissibilityReport<T> {
    pub fn admissible(&self) -> bool {
        self.mass_ok && self.impulse_ok && self.cap_ok
    }
}

/// Checks `|I - mu| <= tol mu`, `mass <= nu (1 + tol)` and `max <= cap (1 + tol)`.
pub fn check_admissible<T: Real>(omega: &Field<T>, p: &Params<T>, tol: T) -> AdmissibilityReport<T> {
    let mass = omega.integrate();
    let impulse = omega.impulse();
    let sup = omega.max().max(T::zero());
    let slack = T::one() + tol;
    AdmissibilityReport {
        mass,
        impulse,
        sup,
        mass_ok: mass <= p.nu * slack,
        impulse_ok: (impulse - p.mu).abs() <= tol * p.mu,
        cap_ok: sup <= p.cap * slack,
    }
}

fn scale_factors<T: Real>(s: T, lambda: T, nu: T) -> Result<(T, T)> {
    if !(s > T::zero() && s <= T::one()) {
        return Err(Error::Domain(format!("order s = {s} outside (0, 1]")));
    }
    if !(lambda > T::zero() && nu > T::zero()) || !lambda.is_finite() || !nu.is_finite() {
        return Err(Error::Domain("lambda and nu must be positive and finite".into()));
    }
    let length = lambda.powf((s + s).recip());
    let amplitude = lambda.powf(-s.recip()) / nu;
    Ok((length, amplitude))
}

/// Normalizing change of variables on a grid stretched by `lambda^{1/2s}`.
///
/// Cell counts are kept, so the map is exact sample by sample.
pub fn rescale<T: Real>(omega: &Field<T>, s: T, lambda: T, nu: T) -> Result<Field<T>> {
    let (length, amplitude) = scale_factors(s, lambda, nu)?;
    let grid = omega.grid().scaled(length)?;
    Ok(Field::from_raw(grid, omega.kind(), omega.values().iter().map(|&v| v * amplitude).collect()))
}

/// Inverse of [`rescale`]: `w(x) = lambda^{1/s} nu w~(lambda^{1/2s} x)`.
pub fn unscale<T: Real>(omega: &Field<T>, s: T, lambda: T, nu: T) -> Result<Field<T>> {
    let (length, amplitude) = scale_factors(s, lambda, nu)?;
    let grid = omega.grid().scaled(length.recip())?;
    Ok(Field::from_raw(grid, omega.kind(), omega.values().iter().map(|&v| v / amplitude).collect()))
}

/// Normalizing change of variables resampled bilinearly onto `target`.
///
/// Below the first row the field is continued oddly, so values fall off
/// linearly to zero at `x2 = 0`. Fails if part of the support maps outside
/// `target`.
pub fn rescale_onto<T: Real>(
    omega: &Field<T>,
    s: T,
    lambda: T,
    nu: T,
    target: Grid<T>,
) -> Result<Field<T>> {
    let (length, amplitude) = scale_factors(s, lambda, nu)?;
    if let Some((e1, e2)) = omega.support_extent() {
        let src = omega.grid();
        let half = src.h() * T::lit(0.5);
        if (e1 + half) * length > target.half_width() || (e2 + half) * length > target.height() {
            return Err(Error::Truncation(format!(
                "rescaled support ({}, {}) leaves the target grid ({}, {})",
                (e1 + half) * length,
                (e2 + half) * length,
                target.half_width(),
                target.height()
            )));
        }
    }
    let inv = length.recip();
    let field = Field::from_fn(target, omega.kind(), |x1, x2| {
        amplitude * sample_bilinear(omega, x1 * inv, x2 * inv)
    });
    Ok(field)
}

/// Bilinear interpolation of cell-centred samples at `(x1, x2)`, zero outside
/// the grid laterally and above, odd continuation below the first row.
pub fn sample_bilinear<T: Real>(f: &Field<T>, x1: T, x2: T) -> T {
    let g = f.grid();
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let u = (x1 + g.half_width()) / g.h() - T::lit(0.5);
    let v = x2 / g.h() - T::lit(0.5);
    let (i0, j0) = (u.floor(), v.floor());
    let (fu, fv) = (u - i0, v - j0);
    let (Some(i0), Some(j0)) = (i0.to_isize(), v.floor().to_isize()) else {
        return T::zero();
    };
    let at = |i: isize, j: isize| -> T {
        if i < 0 || i >= nx || j >= ny {
            return T::zero();
        }
        if j < 0 {
            // row -1 mirrors row 0 with opposite sign
            let jj = (-1 - j) as usize;
            return if (jj as isize) < ny { -f.get(i as usize, jj) } else { T::zero() };
        }
        f.get(i as usize, j as usize)
    };
    let one = T::one();
    (one - fu) * (one - fv) * at(i0, j0)
        + fu * (one - fv) * at(i0 + 1, j0)
        + (one - fu) * fv * at(i0, j0 + 1)
        + fu * fv * at(i0 + 1, j0 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldKind;

    fn block(grid: Grid<f64>) -> Field<f64> {
        Field::from_fn(grid, FieldKind::Vorticity, |x1: f64, x2: f64| {
            if x1.abs() < 1.0 && x2 < 1.0 { 1.0 } else { 0.0 }
        })
    }

    fn disk(grid: Grid<f64>, c: (f64, f64), r: f64) -> Field<f64> {
        Field::from_fn(grid, FieldKind::Vorticity, |x1: f64, x2: f64| {
            if (x1 - c.0).hypot(x2 - c.1) < r { 1.0 } else { 0.0 }
        })
    }

    #[test]
    fn admissibility_examples() {
        let g = Grid::new(2.0, 2.0, 32, 16).unwrap();
        let w = block(g);
        let p = Params::new(0.5, 1.0).unwrap().with_nu(2.0).unwrap();
        let r = check_admissible(&w, &p, 1e-10);
        assert!(r.admissible(), "{r:?}");
        assert!((r.mass - 2.0).abs() < 1e-12 && (r.impulse - 1.0).abs() < 1e-12);
        let r = check_admissible(&w, &p.with_nu(1.0).unwrap(), 1e-10);
        assert!(!r.mass_ok && r.impulse_ok);
        let r = check_admissible(&w, &Params::new(0.5, 0.5).unwrap().with_nu(2.0).unwrap(), 1e-10);
        assert!(!r.impulse_ok && r.mass_ok);
        let r = check_admissible(&w, &p.with_cap(0.5).unwrap(), 1e-10);
        assert!(!r.cap_ok);
        assert_eq!(check_admissible(&w, &p, 1e-10), r_again(&w, &p));
    }

    fn r_again(w: &Field<f64>, p: &Params<f64>) -> AdmissibilityReport<f64> {
        check_admissible(w, p, 1e-10)
    }

    #[test]
    fn energy_zero_and_lambda_monotone() {
        let g = Grid::new(2.0, 2.0, 32, 16).unwrap();
        let t = KernelTensor::new(g, 0.5).unwrap();
        assert_eq!(penalized_energy(&Field::zeros(g, FieldKind::Vorticity), &t, 1.0).unwrap(), 0.0);
        let w = disk(g, (0.0, 0.0), 0.7);
        let a = penalized_energy(&w, &t, 2.0).unwrap();
        let b = penalized_energy(&w, &t, 1.0).unwrap();
        assert!(b < a);
        assert!(penalized_energy(&w, &t, 0.0).is_err());
    }

    #[test]
    fn energy_invariant_under_x1_shift() {
        let g = Grid::new(2.0, 2.0, 32, 16).unwrap();
        let t = KernelTensor::new(g, 0.3).unwrap();
        let w = disk(g, (0.0, 0.3), 0.5);
        let e0 = penalized_energy(&w, &t, 1.0).unwrap();
        let e1 = penalized_energy(&w.shifted_x1(5), &t, 1.0).unwrap();
        assert!((e0 - e1).abs() < 1e-13 * e0.abs());
    }

    #[test]
    fn exact_rescale_identities() {
        let g = Grid::new(2.0, 2.0, 32, 16).unwrap();
        let w = disk(g, (0.0, 0.0), 0.8);
        for (s, lambda, nu) in [(0.5, 4.0, 1.0), (0.25, 2.0, 3.0), (1.0, 7.0, 0.5)] {
            let wt = rescale(&w, s, lambda, nu).unwrap();
            let f: f64 = lambda.powf(1.0 / (2.0 * s));
            let expect_mu = w.impulse() / nu * f;
            assert!((wt.impulse() - expect_mu).abs() < 1e-12 * expect_mu);
            let t = KernelTensor::new(g, s).unwrap();
            let tt = KernelTensor::new(*wt.grid(), s).unwrap();
            let lhs = penalized_energy(&wt, &tt, 1.0).unwrap();
            let rhs = lambda.powf(1.0 - 1.0 / s) / (nu * nu) * penalized_energy(&w, &t, lambda).unwrap();
            assert!((lhs - rhs).abs() < 1e-11 * rhs.abs(), "s={s}: {lhs} vs {rhs}");
            let back = unscale(&wt, s, lambda, nu).unwrap();
            assert!(back.grid().matches(&g));
            for (a, b) in back.values().iter().zip(w.values()) {
                assert!((a - b).abs() < 1e-13);
            }
        }
        let same = rescale(&w, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(same.values(), w.values());
    }

    fn clip_nonnegative(f: Field<f64>) -> Field<f64> {
        let grid = *f.grid();
        let values = f.into_values().into_iter().map(|v| v.max(0.0)).collect();
        Field::from_values(grid, FieldKind::Vorticity, values).unwrap()
    }

    #[test]
    fn bilinear_round_trip_is_second_order() {
        let smooth = |x1: f64, x2: f64| {
            let q = 1.0 - (x1 * x1 + (x2 - 0.6) * (x2 - 0.6)) / 0.25;
            x2 * q.max(0.0).powi(3)
        };
        let mut errs = Vec::new();
        for n in [32usize, 64, 128] {
            let g = Grid::new(2.0, 2.0, n, n / 2).unwrap();
            let w = Field::from_fn(g, FieldKind::Vorticity, smooth);
            let up = rescale_onto(&w, 0.5, 1.5, 2.0, g).unwrap();
            let back = clip_nonnegative(
                rescale_onto(&up, 0.5, 1.0 / 1.5, 0.5, g).unwrap(),
            );
            let diff = back.combine(1.0, &w, -1.0).unwrap().l2_norm() / w.l2_norm();
            errs.push(diff);
        }
        assert!(errs[2] < 1e-2, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
    }

    #[test]
    fn rescale_onto_detects_truncation() {
        let g = Grid::new(2.0, 2.0, 32, 16).unwrap();
        let w = disk(g, (0.0, 0.0), 1.5);
        assert!(matches!(rescale_onto(&w, 0.5, 4.0, 1.0, g), Err(Error::Truncation(_))));
        assert!(rescale_onto(&w, 0.5, 1.0, 1.0, g).is_ok());
    }

    #[test]
    fn bilinear_reproduces_samples_and_vanishes_on_axis() {
        let g = Grid::new(2.0, 2.0, 16, 8).unwrap();
        let w = disk(g, (0.0, 0.0), 1.0);
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                assert!((sample_bilinear(&w, g.x1(i), g.x2(j)) - w.get(i, j)).abs() < 1e-14);
            }
        }
        assert!(sample_bilinear(&w, 0.0, 0.0).abs() < 1e-15);
        assert_eq!(sample_bilinear(&w, 5.0, 1.0), 0.0);
    }
}
