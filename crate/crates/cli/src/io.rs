//! CSV persistence for fields and traces.
//!
//! Field files have the header `x1,x2,value` and one row per cell, row-major
//! with `x1` varying fastest, coordinates at cell centres. Numbers are
//! written with 17 significant digits so a save/load cycle is bit-exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use gsqg_core::evolution::StabilityTrace;
use gsqg_core::{Field64, FieldKind, Grid64};

use crate::CliError;

const FIELD_HEADER: [&str; 3] = ["x1", "x2", "value"];

pub const TRACE_HEADER: [&str; 9] =
    ["time", "distance", "mass", "upper_mass", "impulse", "kinetic", "l2", "lps", "centroid_x1"];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn save_field(f: &Field64, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let g = f.grid();
    w.write_record(FIELD_HEADER).map_err(|e| CliError::csv(path, e))?;
    for j in 0..g.ny() {
        for (i, v) in f.row(j).iter().enumerate() {
            w.write_record([num(g.x1(i)), num(g.x2(j)), num(*v)]).map_err(|e| CliError::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn format_error(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Format(format!("{}: {msg}", path.display()))
}

/// Reads a field file, reconstructing the grid from the coordinates.
pub fn load_field(path: &Path, kind: FieldKind) -> Result<Field64, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let header = r.headers().map_err(|e| CliError::csv(path, e))?;
    if header.iter().ne(FIELD_HEADER) {
        return Err(format_error(path, format!("expected header x1,x2,value, found {}", header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let mut cols = [0.0; 3];
        for (c, slot) in cols.iter_mut().enumerate() {
            let text = rec.get(c).ok_or_else(|| format_error(path, format!("row {} is short", k + 2)))?;
            *slot = text
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format_error(path, format!("row {}: `{text}` is not a finite number", k + 2)))?;
        }
        rows.push(cols);
    }
    if rows.len() < 2 {
        return Err(format_error(path, "fewer than two cells"));
    }
    let nx = rows.iter().take_while(|r| r[1] == rows[0][1]).count();
    if nx < 2 || rows.len() % nx != 0 {
        return Err(format_error(path, format!("{} rows do not form whole grid rows of {nx} cells", rows.len())));
    }
    let ny = rows.len() / nx;
    let h = rows[1][0] - rows[0][0];
    if !(h > 0.0) {
        return Err(format_error(path, "x1 is not increasing along a row"));
    }
    let grid = Grid64::new(0.5 * h * nx as f64, h * ny as f64, nx, ny).map_err(|e| format_error(path, e))?;
    let tol = 1e-9 * h;
    for (k, r) in rows.iter().enumerate() {
        let (i, j) = (k % nx, k / nx);
        if (r[0] - grid.x1(i)).abs() > tol || (r[1] - grid.x2(j)).abs() > tol {
            return Err(format_error(
                path,
                format!("row {}: ({}, {}) is not the centre of cell ({i}, {j}) of a uniform grid from x1 = -L, x2 = 0", k + 2, r[0], r[1]),
            ));
        }
    }
    Ok(Field64::from_values(grid, kind, rows.iter().map(|r| r[2]).collect())?)
}

pub fn save_trace(trace: &StabilityTrace<f64>, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(TRACE_HEADER).map_err(|e| CliError::csv(path, e))?;
    for s in &trace.samples {
        let row = [s.time, s.distance, s.mass, s.upper_mass, s.impulse, s.kinetic, s.l2, s.lps, s.centroid_x1];
        w.write_record(row.map(num)).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes `text` to `path`.
pub fn save_text(text: &str, path: &Path) -> Result<(), CliError> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}
