//! JSON sidecars for solutions and traces.

use std::path::Path;

use serde::{Deserialize, Serialize};

use gsqg_core::evolution::StabilityTrace;
use gsqg_core::{FieldKind, KernelTensor64, Multipliers, Regime, SolutionRecord64};

use crate::config::RunConfig;
use crate::io::{load_field, save_text};
use crate::{with_suffix, CliError, VERSION};

/// Note stored with every evolution output.
pub const EVOLUTION_SUBSTITUTION: &str = "evolved in a periodic box of half-width box_half_width with \
the Fourier multiplier |k|^(-2s) on odd-in-x2 data in place of the half-plane flow; the orbit \
distance is measured along these pseudo-spectral trajectories, and stream_mismatch is the relative \
L2 gap between the half-plane and the periodic stream functions on the initial support";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub half_width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveMetadata {
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub grid: GridMeta,
    pub s: f64,
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
    pub speed: f64,
    pub gamma: f64,
    pub energy: f64,
    pub kinetic: f64,
    pub mass: f64,
    pub impulse: f64,
    pub residual: f64,
    pub iterations: usize,
    pub regime: String,
    /// Cap used while iterating, absent when there was none.
    pub cap: Option<f64>,
    pub shift: isize,
    pub resumed_from: Option<String>,
}

impl SolveMetadata {
    pub fn new(cfg: &RunConfig, r: &SolutionRecord64, resumed_from: Option<&Path>) -> Self {
        let g = r.grid;
        Self {
            version: VERSION.to_string(),
            config_hash: cfg.hash(),
            config: cfg.clone(),
            grid: GridMeta { half_width: g.half_width(), height: g.height(), nx: g.nx(), ny: g.ny(), h: g.h() },
            s: r.params.s,
            mu: r.params.mu,
            lambda: r.params.lambda,
            nu: r.params.nu,
            speed: r.multipliers.speed,
            gamma: r.multipliers.gamma,
            energy: r.energy,
            kinetic: r.kinetic,
            mass: r.mass,
            impulse: r.impulse,
            residual: r.residual,
            iterations: r.iterations,
            regime: r.regime.name().to_string(),
            cap: r.cap.is_finite().then_some(r.cap),
            shift: r.shift,
            resumed_from: resumed_from.map(|p| p.display().to_string()),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
    }
}

/// Writes `PREFIX.csv` and `PREFIX.json`.
pub fn save_solution(cfg: &RunConfig, r: &SolutionRecord64, prefix: &Path, resumed_from: Option<&Path>) -> Result<(), CliError> {
    crate::io::save_field(&r.omega, &with_suffix(prefix, ".csv"))?;
    let meta = SolveMetadata::new(cfg, r, resumed_from);
    save_text(&to_json(&meta), &with_suffix(prefix, ".json"))
}

/// Reads back what [`save_solution`] wrote. The stream function is
/// recomputed from the vorticity; the iteration history is not stored.
pub fn load_solution(prefix: &Path) -> Result<(RunConfig, SolutionRecord64), CliError> {
    let meta = SolveMetadata::read(&with_suffix(prefix, ".json"))?;
    meta.config.validate()?;
    let omega = load_field(&with_suffix(prefix, ".csv"), FieldKind::Vorticity)?;
    let grid = *omega.grid();
    if !grid.matches(&meta.config.grid()?) {
        return Err(CliError::Format(format!(
            "{}: field grid does not match the grid in its metadata",
            prefix.display()
        )));
    }
    let psi = KernelTensor64::new(grid, meta.s)?.apply(&omega)?;
    let record = SolutionRecord64 {
        omega,
        psi,
        multipliers: Multipliers { speed: meta.speed, gamma: meta.gamma },
        energy: meta.energy,
        kinetic: meta.kinetic,
        mass: meta.mass,
        impulse: meta.impulse,
        residual: meta.residual,
        iterations: meta.iterations,
        params: meta.config.params()?,
        grid,
        regime: if meta.regime == Regime::MassBound.name() { Regime::MassBound } else { Regime::MassFree },
        cap: meta.cap.unwrap_or(f64::INFINITY),
        shift: meta.shift,
        history: Vec::new(),
    };
    Ok((meta.config, record))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftMeta {
    pub mass: f64,
    pub impulse: f64,
    pub kinetic: f64,
    pub l2: f64,
    pub lps: f64,
    pub max_conserved: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub s: f64,
    pub n: usize,
    pub box_half_width: f64,
    pub dt: f64,
    pub steps: usize,
    pub horizon: f64,
    /// Absolute L2 size of the initial perturbation.
    pub perturbation: f64,
    pub reference_norm: f64,
    pub speed: f64,
    pub centroid_speed: f64,
    pub max_distance: f64,
    pub drifts: DriftMeta,
    pub stream_mismatch: Option<f64>,
    pub substitution: String,
}

impl TraceMetadata {
    pub fn new(command: &str, cfg: &RunConfig, s: f64, perturbation: f64, t: &StabilityTrace<f64>) -> Self {
        let d = t.drifts();
        Self {
            version: VERSION.to_string(),
            command: command.to_string(),
            config_hash: cfg.hash(),
            config: cfg.clone(),
            s,
            n: t.n,
            box_half_width: t.box_half_width,
            dt: t.dt,
            steps: t.steps,
            horizon: t.samples.last().map_or(0.0, |x| x.time),
            perturbation,
            reference_norm: t.reference_norm,
            speed: t.speed,
            centroid_speed: t.centroid_speed(),
            max_distance: t.max_distance(),
            drifts: DriftMeta {
                mass: d.mass,
                impulse: d.impulse,
                kinetic: d.kinetic,
                l2: d.l2,
                lps: d.lps,
                max_conserved: d.max_conserved(),
            },
            stream_mismatch: t.stream_mismatch,
            substitution: EVOLUTION_SUBSTITUTION.to_string(),
        }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut text = serde_json::to_string_pretty(v).expect("metadata serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use gsqg_core::solver::{solve_dipole, SolverConfig};

    #[test]
    fn solution_round_trip() {
        let cfg = RunConfig::parse(
            "[problem]\ns = 0.5\nmu = 0.02\n[grid]\nnx = 128\nny = 64\n",
        )
        .unwrap();
        let r = solve_dipole(&cfg.params().unwrap(), cfg.grid().unwrap(), &SolverConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let prefix = dir.path().join("sol");
        save_solution(&cfg, &r, &prefix, None).unwrap();
        let (cfg2, back) = load_solution(&prefix).unwrap();
        assert_eq!(cfg, cfg2);
        assert_eq!(back.omega, r.omega);
        assert_eq!(back.multipliers, r.multipliers);
        assert_eq!(back.cap.to_bits(), r.cap.to_bits());
        let gap = back.psi.combine(1.0, &r.psi, -1.0).unwrap().max_abs() / r.psi.max_abs();
        assert!(gap < 1e-12, "{gap}");
        let meta = SolveMetadata::read(&with_suffix(&prefix, ".json")).unwrap();
        assert_eq!(meta.config_hash, cfg.hash());
        assert_eq!(meta.version, VERSION);
    }
}
