//! Run configuration: a flat `[section] key = value` file.
//!
//! ```text
//! [problem]
//! s = 0.5
//! mu = 0.02
//!
//! [grid]
//! nx = 256
//! ny = 128
//! ```
//!
//! Only `problem.s` and `problem.mu` are required. Unknown sections or keys
//! are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gsqg_core::evolution::BoxConfig;
use gsqg_core::solver::{CapPolicy, Init, SolverConfig};
use gsqg_core::{Grid64, Params64};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub s: f64,
    pub mu: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default = "one")]
    pub nu: f64,
    /// Pointwise bound in user units; absent means none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub half_width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { half_width: 8.0, height: 8.0, nx: 256, ny: 128 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapMode {
    Auto,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    HalfDisk,
    RandomBlob,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub max_iter: usize,
    pub tol_residual: f64,
    pub tol_multiplier: f64,
    pub damping: f64,
    /// Used when `problem.cap` is absent.
    pub cap: CapMode,
    pub init: InitKind,
    pub seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::<f64>::default();
        Self {
            max_iter: d.max_iter,
            tol_residual: d.tol_residual,
            tol_multiplier: d.tol_multiplier,
            damping: d.damping,
            cap: CapMode::Auto,
            init: InitKind::HalfDisk,
            seed: d.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionSection {
    pub box_factor: f64,
    pub n: usize,
    pub turnovers: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Final time for `evolve`; `stability` uses `turnovers` instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Size of the odd perturbation relative to `||omega||_2`.
    pub perturbation: f64,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        let d = BoxConfig::<f64>::default();
        Self {
            box_factor: d.box_factor,
            n: d.n,
            turnovers: d.turnovers,
            samples: d.samples,
            dt: d.dt,
            horizon: None,
            perturbation: 0.0,
        }
    }
}

impl RunConfig {
    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Canonical text with every key written out.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`RunConfig::to_text`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params()?;
        self.grid()?;
        self.solver_config(None)?;
        let e = &self.evolution;
        if !(e.box_factor > 1.0 && e.turnovers > 0.0 && e.n >= 8 && e.samples > 0) {
            return Err(CliError::Config(
                "evolution needs box_factor > 1, turnovers > 0, n >= 8 and samples > 0".into(),
            ));
        }
        if e.dt.is_some_and(|dt| !(dt > 0.0)) || e.horizon.is_some_and(|t| !(t > 0.0)) {
            return Err(CliError::Config("evolution dt and horizon must be positive".into()));
        }
        if !(e.perturbation >= 0.0 && e.perturbation.is_finite()) {
            return Err(CliError::Config("evolution perturbation must be a finite nonnegative number".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<Params64, CliError> {
        let p = &self.problem;
        let mut params = Params64::new(p.s, p.mu)?.with_lambda(p.lambda)?.with_nu(p.nu)?;
        if let Some(cap) = p.cap {
            params = params.with_cap(cap)?;
        }
        Ok(params)
    }

    pub fn grid(&self) -> Result<Grid64, CliError> {
        let g = &self.grid;
        Ok(Grid64::new(g.half_width, g.height, g.nx, g.ny)?)
    }

    /// Solver controls; `init` overrides the configured start.
    pub fn solver_config(&self, init: Option<Init<f64>>) -> Result<SolverConfig<f64>, CliError> {
        let s = &self.solver;
        let cfg = SolverConfig {
            max_iter: s.max_iter,
            tol_residual: s.tol_residual,
            tol_multiplier: s.tol_multiplier,
            damping: s.damping,
            cap: match s.cap {
                CapMode::Auto => CapPolicy::Auto,
                CapMode::Off => CapPolicy::Disabled,
            },
            init: init.unwrap_or(match s.init {
                InitKind::HalfDisk => Init::HalfDisk,
                InitKind::RandomBlob => Init::RandomBlob,
            }),
            seed: s.seed,
        };
        Ok(cfg.validated()?)
    }

    pub fn box_config(&self) -> BoxConfig<f64> {
        let e = &self.evolution;
        BoxConfig { box_factor: e.box_factor, n: e.n, turnovers: e.turnovers, samples: e.samples, dt: e.dt }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse("[problem]\ns = 0.5\nmu = 0.02\n").unwrap();
        assert_eq!(c.problem.lambda, 1.0);
        assert_eq!(c.grid, GridSection::default());
        assert_eq!(c.solver.init, InitKind::HalfDisk);
        assert_eq!(c.evolution.n, 512);
        assert!(c.problem.cap.is_none());
    }

    #[test]
    fn round_trip_is_lossless() {
        let text = "[problem]\ns = 0.3\nmu = 0.1\nlambda = 2\ncap = 7.25\n\
                    [solver]\ninit = \"random-blob\"\nseed = 9\ncap = \"off\"\n\
                    [evolution]\ndt = 1e-3\nhorizon = 0.1\nperturbation = 0.01\n";
        let c = RunConfig::parse(text).unwrap();
        let again = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.problem.mu.to_bits(), 0.1f64.to_bits());
    }

    #[test]
    fn missing_and_unknown_keys_fail() {
        for text in [
            "[problem]\ns = 0.5\n",
            "[problem]\nmu = 0.02\n",
            "[problem]\ns = 0.5\nmu = 0.02\nlamda = 1\n",
            "[problem]\ns = 0.5\nmu = 0.02\n[grids]\nnx = 8\n",
            "[problem]\ns = 0.5\nmu = 0.02\n[solver]\ninit = \"disk\"\n",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn domain_errors_surface() {
        assert!(RunConfig::parse("[problem]\ns = 1.5\nmu = 0.02\n").is_err());
        assert!(RunConfig::parse("[problem]\ns = 0.5\nmu = -1\n").is_err());
        assert!(RunConfig::parse("[problem]\ns = 0.5\nmu = 0.02\n[grid]\nnx = 100\n").is_err());
        assert!(RunConfig::parse("[problem]\ns = 0.5\nmu = 0.02\n[evolution]\ndt = 0\n").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::parse("[problem]\ns = 0.5\nmu = 0.02\n").unwrap();
        let b = RunConfig::parse("[problem]\nmu = 0.02\ns = 0.5\n[grid]\nnx = 256\n").unwrap();
        let c = RunConfig::parse("[problem]\ns = 0.5\nmu = 0.03\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
