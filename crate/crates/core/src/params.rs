//! Problem parameters, Lagrange multipliers and solver output records.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::real::Real;

/// Parameters of the constrained maximization.
///
/// * `s` in `(0, 1]`: order of the inverse fractional Laplacian; `s = 1` runs
///   the Euler (logarithmic kernel) mode.
/// * `lambda`: penalization strength of `int omega^2`.
/// * `mu`: prescribed half-plane impulse `int x2 omega`.
/// * `nu`: upper bound on the mass `int omega`.
/// * `cap`: pointwise bound on `omega`; infinite when disabled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params<T> {
    pub s: T,
    pub lambda: T,
    pub mu: T,
    pub nu: T,
    pub cap: T,
}

impl<T: Real> Params<T> {
    /// `lambda = nu = 1`, no cap.
    pub fn new(s: T, mu: T) -> Result<Self> {
        Self { s, lambda: T::one(), mu, nu: T::one(), cap: T::infinity() }.validated()
    }

    pub fn with_lambda(mut self, lambda: T) -> Result<Self> {
        self.lambda = lambda;
        self.validated()
    }

    pub fn with_nu(mut self, nu: T) -> Result<Self> {
        self.nu = nu;
        self.validated()
    }

    pub fn with_cap(mut self, cap: T) -> Result<Self> {
        self.cap = cap;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let pos = |v: T| v > T::zero() && !v.is_nan();
        if !(self.s > T::zero() && self.s <= T::one()) {
            return Err(Error::Domain(format!("order s = {} outside (0, 1]", self.s)));
        }
        if !(pos(self.lambda) && self.lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda = {} must be positive", self.lambda)));
        }
        if !(pos(self.mu) && self.mu.is_finite()) {
            return Err(Error::Domain(format!("mu = {} must be positive", self.mu)));
        }
        if !pos(self.nu) {
            return Err(Error::Domain(format!("nu = {} must be positive", self.nu)));
        }
        if !pos(self.cap) {
            return Err(Error::Domain(format!("cap = {} must be positive", self.cap)));
        }
        Ok(self)
    }

    /// True in the Euler (`s = 1`) mode.
    pub fn is_euler(&self) -> bool {
        self.s == T::one()
    }

    /// Whether a finite cap must be active while iterating (`s <= 1/2`).
    pub fn needs_cap(&self) -> bool {
        self.s <= T::lit(0.5)
    }

    /// Integrability exponent of the stability statement: infinite for
    /// `s <= 1/2` (and in Euler mode), 2 otherwise.
    pub fn p_s(&self) -> T {
        if self.s <= T::lit(0.5) || self.is_euler() {
            T::infinity()
        } else {
            T::lit(2.0)
        }
    }

    /// Length factor `lambda^(1/2s)` of the normalizing change of variables.
    pub fn length_factor(&self) -> T {
        self.lambda.powf((self.s + self.s).recip())
    }

    /// Impulse of the normalized (`lambda = nu = 1`) problem.
    pub fn normalized_impulse(&self) -> T {
        self.mu / self.nu * self.length_factor()
    }
}

/// Lagrange pair of the Euler-Lagrange relation
/// `omega = lambda (psi - W x2 - gamma)_+`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Multipliers<T> {
    /// Travelling speed `W`.
    pub speed: T,
    /// Mass multiplier `gamma`, zero when the mass bound is slack.
    pub gamma: T,
}

/// Which side of the complementary slackness a solve landed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Mass bound inactive, `gamma = 0`.
    MassFree,
    /// Mass bound active, `gamma > 0`.
    MassBound,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::MassFree => "mass-free",
            Regime::MassBound => "mass-bound",
        }
    }
}

/// Converged maximizer with its multipliers and diagnostics.
#[derive(Clone, Debug)]
pub struct SolutionRecord<T> {
    pub omega: Field<T>,
    pub psi: Field<T>,
    pub multipliers: Multipliers<T>,
    /// Penalized energy `E - (1/2 lambda) int omega^2`.
    pub energy: T,
    /// Kinetic energy `E = 1/2 int omega psi`.
    pub kinetic: T,
    pub mass: T,
    pub impulse: T,
    /// Relative Euler-Lagrange residual at termination.
    pub residual: T,
    pub iterations: usize,
    pub params: Params<T>,
    pub grid: Grid<T>,
    pub regime: Regime,
    /// Cap used while iterating (infinite when disabled), in user units.
    pub cap: T,
    /// Integer-cell shift applied when recentring.
    pub shift: isize,
    /// Per-iteration `(penalized energy, residual)` history of the normalized solve.
    pub history: Vec<(T, T)>,
}
