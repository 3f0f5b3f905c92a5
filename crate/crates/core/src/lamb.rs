//! The Chaplygin-Lamb dipole, the explicit travelling pair of the Euler
//! equation (`s = 1`), supported on the disk of radius `a = c0 / sqrt(lambda)`.
//!
//! Inside the disk
//! `Psi(x) = W x2 - 2 W J1(sqrt(lambda) r) x2 / (sqrt(lambda) J1'(c0) r)`,
//! outside `Psi(x) = W a^2 x2 / r^2`, and `omega = lambda (Psi - W x2)_+` on
//! the upper half-plane, extended oddly below.

use crate::error::{Error, Result};
use crate::field::{Field, FieldKind};
use crate::grid::Grid;
use crate::real::Real;
use crate::special::{bessel_j1_over_z, bessel_j1_prime, first_j1_zero};

/// Speed `W` and strength `lambda` of a Lamb dipole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambParams<T> {
    pub speed: T,
    pub lambda: T,
}

impl<T: Real> LambParams<T> {
    pub fn new(speed: T, lambda: T) -> Result<Self> {
        if !(speed > T::zero() && lambda > T::zero()) || !speed.is_finite() || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "Lamb dipole needs positive speed and strength (W = {speed}, lambda = {lambda})"
            )));
        }
        Ok(Self { speed, lambda })
    }

    /// Dipole of strength `lambda` carrying half-plane impulse `mu`.
    pub fn from_impulse(mu: T, lambda: T) -> Result<Self> {
        let a = first_j1_zero::<T>() / lambda.sqrt();
        Self::new(mu / (T::PI() * a * a), lambda)
    }

    /// Radius `a = c0 / sqrt(lambda)`.
    pub fn radius(&self) -> T {
        first_j1_zero::<T>() / self.lambda.sqrt()
    }

    /// Half-plane impulse `int_{x2>0} x2 omega = pi W a^2`.
    pub fn impulse(&self) -> T {
        let a = self.radius();
        T::PI() * self.speed * a * a
    }

    /// Maximum of `omega` on the upper half-plane, reached on the `x2` axis at
    /// `sqrt(lambda) r = 1.8412` (the maximum of `J1`).
    pub fn max_vorticity(&self) -> T {
        let zmax = j1_argmax::<T>();
        let c0 = first_j1_zero::<T>();
        T::lit(2.0) * self.speed * self.lambda.sqrt() * crate::special::bessel_j1(zmax)
            / bessel_j1_prime(c0).abs()
    }
}

/// Maximizer of `J1` on `(0, c0)`, the zero of `J1'`, by Newton on `J1'`.
fn j1_argmax<T: Real>() -> T {
    use crate::special::{bessel_j0, bessel_j1};
    let mut z = T::lit(1.8412);
    for _ in 0..50 {
        // f = J1', f' = J1'' = -J1 - J1'/z + J1/z^2
        let j0 = bessel_j0(z);
        let j1 = bessel_j1(z);
        let f = j0 - j1 / z;
        let fp = -j1 - (j0 - j1 / z) / z + j1 / (z * z);
        let step = f / fp;
        z = z - step;
        if step.abs() <= T::lit(4.0) * T::epsilon() * z {
            break;
        }
    }
    z
}

/// Stream function `Psi` in the frame where the fluid at infinity is at rest.
pub fn lamb_stream<T: Real>(x: [T; 2], p: &LambParams<T>) -> T {
    let r = x[0].hypot(x[1]);
    let a = p.radius();
    let w = p.speed;
    if r <= a {
        let k = p.lambda.sqrt();
        let c0 = first_j1_zero::<T>();
        // J1(k r) / r = k J1(k r) / (k r)
        w * x[1] - T::lit(2.0) * w * bessel_j1_over_z(k * r) * x[1] / bessel_j1_prime(c0)
    } else {
        w * a * a * x[1] / (r * r)
    }
}

/// Vorticity `lambda (Psi - W x2)_+` for `x2 > 0`, odd in `x2`.
pub fn lamb_vorticity<T: Real>(x: [T; 2], p: &LambParams<T>) -> T {
    let upper = [x[0], x[1].abs()];
    if upper[0].hypot(upper[1]) >= p.radius() {
        return T::zero();
    }
    let v = (p.lambda * (lamb_stream(upper, p) - p.speed * upper[1])).max(T::zero());
    if x[1] < T::zero() {
        -v
    } else {
        v
    }
}

/// Cell-centre samples of the vorticity on a half-plane grid.
pub fn lamb_vorticity_field<T: Real>(grid: Grid<T>, p: &LambParams<T>) -> Field<T> {
    Field::from_fn(grid, FieldKind::Vorticity, |x1, x2| lamb_vorticity([x1, x2], p))
}

/// Cell-centre samples of the stream function on a half-plane grid.
pub fn lamb_stream_field<T: Real>(grid: Grid<T>, p: &LambParams<T>) -> Field<T> {
    Field::from_fn(grid, FieldKind::Stream, |x1, x2| lamb_stream([x1, x2], p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelTensor;
    use crate::special::bessel_j1;

    fn unit() -> LambParams<f64> {
        LambParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn continuity_on_the_circle() {
        for p in [unit(), LambParams::new(0.3, 50.0).unwrap()] {
            let a = p.radius();
            for k in 0..64 {
                let th = std::f64::consts::PI * (k as f64 + 0.5) / 64.0;
                let (c, s) = (th.cos(), th.sin());
                let inner = lamb_stream([a * c * (1.0 - 1e-12), a * s * (1.0 - 1e-12)], &p);
                let outer = lamb_stream([a * c * (1.0 + 1e-12), a * s * (1.0 + 1e-12)], &p);
                assert!((inner - outer).abs() < 1e-9, "{inner} {outer}");
                assert!((inner - p.speed * a * s).abs() < 1e-9);
                assert!(lamb_vorticity([a * c, a * s], &p).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn oddness_is_exact() {
        let p = LambParams::new(0.7, 3.0).unwrap();
        for &(x1, x2) in &[(0.1, 0.5), (-1.2, 0.3), (2.5, 4.0), (0.0, 0.01)] {
            assert_eq!(lamb_stream([x1, -x2], &p), -lamb_stream([x1, x2], &p));
            assert_eq!(lamb_vorticity([x1, -x2], &p), -lamb_vorticity([x1, x2], &p));
        }
        assert_eq!(lamb_stream([1.0, 0.0], &unit()), 0.0);
        assert_eq!(lamb_vorticity([1.0, 0.0], &unit()), 0.0);
    }

    #[test]
    fn interior_point_value() {
        let p = unit();
        let a = p.radius();
        let z = a / 2.0;
        let expect = a / 2.0 - 2.0 * bessel_j1(z) / (-0.402_759_395_702_553 * z) * (a / 2.0);
        assert!((lamb_stream([0.0, a / 2.0], &p) - expect).abs() < 1e-12);
        assert!(lamb_stream([0.0, 0.0], &p).abs() < 1e-15);
    }

    #[test]
    fn maximum_vorticity() {
        let p = LambParams::<f64>::new(1.3, 4.0).unwrap();
        let m = p.max_vorticity();
        assert!((m / (p.speed * 2.0) - 2.889_394).abs() < 1e-5);
        // brute scan of the half-disk
        let a = p.radius();
        let mut best = 0.0f64;
        for i in 0..400 {
            for j in 0..200 {
                let x = [a * (i as f64 / 200.0 - 1.0), a * j as f64 / 200.0];
                best = best.max(lamb_vorticity(x, &p));
            }
        }
        assert!(best <= m * (1.0 + 1e-12) && best > m * (1.0 - 1e-3));
        assert!((j1_argmax::<f64>() - 1.841_183_781_340_659).abs() < 1e-12);
    }

    #[test]
    fn impulse_closed_form() {
        let p = LambParams::<f64>::from_impulse(0.02, 50.0).unwrap();
        assert!((p.impulse() - 0.02).abs() < 1e-15);
        let g = Grid::new(1.0, 1.0, 512, 256).unwrap();
        let w = lamb_vorticity_field(g, &p);
        assert!((w.impulse() - 0.02).abs() < 1e-3 * 0.02, "{}", w.impulse());
    }

    #[test]
    fn support_is_the_half_disk() {
        let p = LambParams::<f64>::new(1.0, 9.0).unwrap();
        let a = p.radius();
        let g = Grid::new(2.0, 2.0, 128, 64).unwrap();
        let w = lamb_vorticity_field(g, &p);
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let inside = g.x1(i).hypot(g.x2(j)) < a;
                assert_eq!(w.get(i, j) > 0.0, inside);
            }
        }
    }

    #[test]
    fn discrete_stream_matches_analytic() {
        // Gs(omega) reproduces Psi on the support up to O(h)
        let p = LambParams::<f64>::new(1.0, 16.0).unwrap();
        let mut errs = Vec::new();
        for n in [64usize, 128] {
            let g = Grid::new(2.0, 2.0, n, n / 2).unwrap();
            let t = KernelTensor::new(g, 1.0).unwrap();
            let w = lamb_vorticity_field(g, &p);
            let psi = t.apply(&w).unwrap();
            let exact = lamb_stream_field(g, &p);
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for k in 0..g.len() {
                if w.values()[k] > 0.0 {
                    num += (psi.values()[k] - exact.values()[k]).powi(2);
                    den += exact.values()[k].powi(2);
                }
            }
            errs.push((num / den).sqrt());
        }
        assert!(errs[1] < 0.02 && errs[1] < errs[0], "{errs:?}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LambParams::new(0.0, 1.0).is_err());
        assert!(LambParams::new(1.0, -1.0).is_err());
    }
}
