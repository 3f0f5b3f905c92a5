//! Subcommand bodies. Each prints a short report to stdout.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gsqg_core::evolution::{
    embed_periodic, odd_perturbation, run_stability, run_trace, shift_distance, support_radius, RunConfig as Horizon,
};
use gsqg_core::functionals::rescale;
use gsqg_core::lamb::{lamb_stream_field, lamb_vorticity_field, LambParams};
use gsqg_core::solver::{solve_dipole, Init};
use gsqg_core::verify::verify_kernel;
use gsqg_core::{green_half_plane, riesz_coefficient, FieldKind, Grid64};

use crate::config::RunConfig;
use crate::io::{load_field, save_field, save_text, save_trace};
use crate::metadata::{load_solution, save_solution, to_json, SolveMetadata, TraceMetadata};
use crate::{with_suffix, CliError};

pub fn solve(config: &Path, prefix: &Path, resume: Option<&Path>) -> Result<(), CliError> {
    let cfg = RunConfig::read(config)?;
    let init = match resume {
        Some(r) => {
            let meta = SolveMetadata::read(&with_suffix(r, ".json"))?;
            let omega = load_field(&with_suffix(r, ".csv"), FieldKind::Vorticity)?;
            println!("resuming from {} (W = {:.10e}, residual {:.3e})", r.display(), meta.speed, meta.residual);
            Some(Init::Provided(omega))
        }
        None => None,
    };
    let r = solve_dipole(&cfg.params()?, cfg.grid()?, &cfg.solver_config(init)?)?;
    save_solution(&cfg, &r, prefix, resume)?;
    println!("converged after {} iterations, residual {:.3e}", r.iterations, r.residual);
    println!("W = {:.10e}  gamma = {:.3e}  ({})", r.multipliers.speed, r.multipliers.gamma, r.regime.name());
    println!("energy = {:.10e}  mass = {:.6e}  impulse = {:.6e}", r.energy, r.mass, r.impulse);
    println!("wrote {} and {}", with_suffix(prefix, ".csv").display(), with_suffix(prefix, ".json").display());
    Ok(())
}

#[derive(serde::Serialize)]
struct LambMeta {
    version: &'static str,
    config_hash: String,
    mu: f64,
    lambda: f64,
    speed: f64,
    radius: f64,
    impulse: f64,
    max_vorticity: f64,
}

pub fn lamb(config: &Path, prefix: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::read(config)?;
    if cfg.problem.s != 1.0 {
        return Err(CliError::Config(format!("the Lamb dipole needs s = 1, config has s = {}", cfg.problem.s)));
    }
    let p = LambParams::from_impulse(cfg.problem.mu, cfg.problem.lambda)?;
    let grid = cfg.grid()?;
    save_field(&lamb_vorticity_field(grid, &p), &with_suffix(prefix, "_omega.csv"))?;
    save_field(&lamb_stream_field(grid, &p), &with_suffix(prefix, "_psi.csv"))?;
    let meta = LambMeta {
        version: crate::VERSION,
        config_hash: cfg.hash(),
        mu: cfg.problem.mu,
        lambda: cfg.problem.lambda,
        speed: p.speed,
        radius: p.radius(),
        impulse: p.impulse(),
        max_vorticity: p.max_vorticity(),
    };
    save_text(&to_json(&meta), &with_suffix(prefix, "_lamb.json"))?;
    println!("Lamb dipole: W = {:.10e}, radius = {:.10e}", p.speed, p.radius());
    Ok(())
}

pub fn evolve(config: &Path, input: &Path, prefix: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::read(config)?;
    let horizon = cfg
        .evolution
        .horizon
        .ok_or_else(|| CliError::Config("evolve needs evolution.horizon".into()))?;
    let omega = load_field(input, FieldKind::Vorticity)?;
    let s = cfg.problem.s;
    let e = &cfg.evolution;
    let lb = e.box_factor * support_radius(&omega);
    let delta = e.perturbation * omega.l2_norm();
    let start = if delta > 0.0 { omega.combine(1.0, &odd_perturbation(&omega, delta)?, 1.0)? } else { omega };
    let state = embed_periodic(&start, lb, e.n, s)?;
    let (trace, last) = run_trace(&state, None, &Horizon { horizon, samples: e.samples, dt: e.dt })?;
    save_trace(&trace, &with_suffix(prefix, "_trace.csv"))?;
    save_field(&last.upper_half()?, &with_suffix(prefix, "_final.csv"))?;
    save_text(&to_json(&TraceMetadata::new("evolve", &cfg, s, delta, &trace)), &with_suffix(prefix, "_trace.json"))?;
    report_trace(&trace);
    Ok(())
}

pub fn stability(config: &Path, input: Option<&Path>, prefix: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::read(config)?;
    let record = match input {
        Some(p) => load_solution(p)?.1,
        None => solve_dipole(&cfg.params()?, cfg.grid()?, &cfg.solver_config(None)?)?,
    };
    let delta = cfg.evolution.perturbation * record.omega.l2_norm();
    let perturbation = if delta > 0.0 { Some(odd_perturbation(&record.omega, delta)?) } else { None };
    let trace = run_stability(&record, perturbation.as_ref(), &cfg.box_config())?;
    save_trace(&trace, &with_suffix(prefix, "_trace.csv"))?;
    let meta = TraceMetadata::new("stability", &cfg, record.params.s, delta, &trace);
    save_text(&to_json(&meta), &with_suffix(prefix, "_trace.json"))?;
    report_trace(&trace);
    println!(
        "max orbit distance {:.4e} ({:.3e} of the reference norm), centroid speed / W = {:.6}",
        trace.max_distance(),
        trace.max_distance() / trace.reference_norm,
        trace.centroid_speed() / record.multipliers.speed
    );
    Ok(())
}

fn report_trace(t: &gsqg_core::evolution::StabilityTrace<f64>) {
    let d = t.drifts();
    println!("{} steps of {:.4e} on a {}^2 box of half-width {:.4}", t.steps, t.dt, t.n, t.box_half_width);
    println!(
        "drifts: mass {:.2e}, impulse {:.2e}, energy {:.2e}, L2 {:.2e}, Lp {:.2e}",
        d.mass, d.impulse, d.kinetic, d.l2, d.lps
    );
}

pub fn distance(a: &Path, b: &Path) -> Result<(), CliError> {
    let fa = load_field(a, FieldKind::Vorticity)?;
    let fb = load_field(b, FieldKind::Vorticity)?;
    let (d, shift) = shift_distance(&fa, &fb)?;
    println!("{d}");
    eprintln!("attained at shift {shift} cells");
    Ok(())
}

struct Row {
    name: String,
    value: f64,
    tol: f64,
}

/// Point value, boundary, symmetry and coefficient checks plus the FFT and
/// energy comparison against direct summation on an `n x n` grid.
pub fn verify_kernel_suite(s: f64, n: usize, seed: u64) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let point = (green_half_plane([0.0, 1.0], [0.0, 2.0], 0.5)? - 1.0 / (3.0 * PI)).abs();
    rows.push(Row { name: "G((0,1),(0,2)) at s = 1/2 vs 1/(3 pi)".into(), value: point, tol: 1e-12 });
    if s < 1.0 {
        let c2 = riesz_coefficient(2, s)?;
        let c4 = riesz_coefficient(4, s)?;
        rows.push(Row { name: "c(2,s) vs pi c(4,s)/(1-s)".into(), value: (c2 - PI * c4 / (1.0 - s)).abs(), tol: 1e-12 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut boundary, mut symmetry) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let x = [rng.gen_range(-2.0..2.0), rng.gen_range(0.01..2.0)];
        let y = [rng.gen_range(-2.0..2.0), rng.gen_range(0.01..2.0)];
        boundary = boundary.max(green_half_plane(x, [y[0], 0.0], s)?.abs());
        let (xy, yx) = (green_half_plane(x, y, s)?, green_half_plane(y, x, s)?);
        symmetry = symmetry.max((xy - yx).abs() / xy.abs().max(1.0));
    }
    rows.push(Row { name: "max |G| with a point on x2 = 0".into(), value: boundary, tol: 1e-12 });
    rows.push(Row { name: "max |G(x,y) - G(y,x)|".into(), value: symmetry, tol: 1e-12 });
    let grid = Grid64::new(1.0, 2.0, n, n).map_err(|e| CliError::Config(format!("--n {n}: {e}")))?;
    let r = verify_kernel(grid, s, seed)?;
    rows.push(Row { name: format!("FFT apply vs direct sum ({n}x{n})"), value: r.fft_error, tol: 1e-10 });
    rows.push(Row { name: "kinetic energy vs direct sum".into(), value: r.energy_error, tol: 1e-10 });

    println!("kernel checks at s = {s}");
    let mut failed = 0;
    for row in &rows {
        let ok = row.value < row.tol;
        failed += usize::from(!ok);
        println!("  {:<42} {:>10.2e}  < {:<7.0e} {}", row.name, row.value, row.tol, if ok { "pass" } else { "FAIL" });
    }
    if failed > 0 {
        return Err(CliError::Check(format!("{failed} kernel check(s) failed")));
    }
    Ok(())
}

pub fn rescale_field(input: &Path, s: f64, lambda: f64, nu: f64, out: &Path) -> Result<(), CliError> {
    let f = load_field(input, FieldKind::Vorticity)?;
    let g = rescale(&f, s, lambda, nu)?;
    save_field(&g, out)?;
    println!("wrote {} on a grid of half-width {}", out.display(), g.grid().half_width());
    Ok(())
}
