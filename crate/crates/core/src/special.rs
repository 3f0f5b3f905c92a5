//! Gamma function and Bessel functions of the first kind of orders 0 and 1.
//!
//! Thin wrappers over `libm`, evaluated in `f64` and converted back.

use crate::real::Real;

/// Euler gamma function.
pub fn gamma<T: Real>(x: T) -> T {
    T::lit(libm::tgamma(x.as_f64()))
}

/// Bessel function `J0`.
pub fn bessel_j0<T: Real>(z: T) -> T {
    T::lit(libm::j0(z.as_f64()))
}

/// Bessel function `J1`.
pub fn bessel_j1<T: Real>(z: T) -> T {
    T::lit(libm::j1(z.as_f64()))
}

/// `J1'(z) = J0(z) - J1(z) / z`, with `J1'(0) = 1/2`.
pub fn bessel_j1_prime<T: Real>(z: T) -> T {
    if z == T::zero() {
        return T::lit(0.5);
    }
    bessel_j0(z) - bessel_j1(z) / z
}

/// `J1(z) / z`, continuous at 0 with value 1/2.
pub fn bessel_j1_over_z<T: Real>(z: T) -> T {
    if z.abs() < T::lit(1e-8) {
        return T::lit(0.5) - z * z / T::lit(16.0);
    }
    bessel_j1(z) / z
}

/// Refines a zero of `J1` by Newton's method from `guess`.
pub fn bessel_j1_zero<T: Real>(guess: T) -> T {
    let mut z = guess;
    for _ in 0..50 {
        let step = bessel_j1(z) / bessel_j1_prime(z);
        z = z - step;
        if step.abs() <= T::lit(4.0) * T::epsilon() * z.abs() {
            break;
        }
    }
    z
}

/// First positive zero of `J1`, `c0 = 3.8317...`.
pub fn first_j1_zero<T: Real>() -> T {
    bessel_j1_zero(T::lit(3.8317))
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from 30-digit arbitrary precision evaluation
    const J1_REF: [(f64, f64); 8] = [
        (0.5, 0.242_268_457_674_873_9),
        (2.0, 0.576_724_807_756_873_4),
        (5.0, -0.327_579_137_591_465_2),
        (10.0, 0.043_472_746_168_861_44),
        (12.0, -0.223_447_104_490_627_6),
        (15.0, 0.205_104_038_613_522_8),
        (25.0, -0.125_350_249_580_289_9),
        (40.0, 0.126_038_318_037_585),
    ];
    const J0_REF: [(f64, f64); 8] = [
        (0.5, 0.938_469_807_240_812_9),
        (2.0, 0.223_890_779_141_235_7),
        (5.0, -0.177_596_771_314_338_3),
        (10.0, -0.245_935_764_451_348_3),
        (12.0, 0.047_689_310_796_833_54),
        (15.0, -0.014_224_472_826_780_77),
        (25.0, 0.096_266_783_275_958_12),
        (40.0, 0.007_366_890_584_237_29),
    ];

    #[test]
    fn bessel_reference_values() {
        for (z, v) in J1_REF {
            assert!((bessel_j1(z) - v).abs() < 1e-11, "J1({z}) = {}", bessel_j1(z));
        }
        for (z, v) in J0_REF {
            assert!((bessel_j0(z) - v).abs() < 1e-11, "J0({z}) = {}", bessel_j0(z));
        }
        assert_eq!(bessel_j1(0.0), 0.0);
        assert_eq!(bessel_j0(0.0), 1.0);
    }

    #[test]
    fn first_zero_and_maximum() {
        let c0: f64 = first_j1_zero();
        assert!((c0 - 3.831_705_970_207_512).abs() < 1e-12);
        assert!(bessel_j1(c0).abs() < 1e-14);
        assert!(bessel_j1(3.8317f64).abs() < 1e-4);
        assert!((bessel_j1_prime(c0) - (-0.402_759_395_702_553)).abs() < 1e-12);
        assert!((bessel_j1(1.8412f64) - 0.581_865_224_227_643).abs() < 1e-12);
    }

    #[test]
    fn gamma_reference_values() {
        let cases = [
            (0.1, 9.513_507_698_668_73),
            (0.75, 1.225_416_702_465_177_6),
            (4.5, 11.631_728_396_567_45),
            (0.5, std::f64::consts::PI.sqrt()),
            (5.0, 24.0),
        ];
        for (x, v) in cases {
            let g: f64 = gamma(x);
            assert!(((g - v) / v).abs() < 1e-13, "gamma({x}) = {g}");
        }
    }

    #[test]
    fn single_precision_is_usable() {
        let c0: f32 = first_j1_zero();
        assert!((c0 - 3.831_706).abs() < 1e-5);
        assert!((gamma(0.5f32) - std::f32::consts::PI.sqrt()).abs() < 1e-5);
    }
}
