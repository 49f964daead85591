//! Pipeline orchestration behind the `hspec` binary.
//!
//! Each `run_*` function takes a parsed config (and, where needed, the
//! text of a spectrum CSV) and returns the report it would emit together
//! with the process exit code:
//!
//! | code | meaning                         |
//! |------|---------------------------------|
//! | 0    | success                         |
//! | 1    | invalid config or input         |
//! | 2    | eigensolver did not converge    |
//! | 3    | a bound row failed beyond slack |

use serde_json::json;

use crate::bounds::{self, berezin_rhs, riesz_mean, weyl_ratio};
use crate::config::{RunConfig, Spacing};
use crate::eigensolve::{lobpcg_smallest, Spectrum};
use crate::format::fmt_f64;
use crate::geometry::{DistanceField, GeometrySummary};
use crate::hardy::{self, CMode};
use crate::magnetic::assemble_magnetic2d;
use crate::operator::{assemble_heisenberg, Grid3D};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_BOUND_VIOLATION: i32 = 3;

/// Exit code for an error raised by a `run_*` function.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        _ => EXIT_INVALID,
    }
}

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub csv: String,
    pub json: serde_json::Value,
    pub exit_code: i32,
    /// Human-readable remarks for stderr.
    pub notes: Vec<String>,
    /// Matrix Market dump, when requested.
    pub matrix: Option<String>,
}

impl CommandOutput {
    fn new(csv: String, json: serde_json::Value, exit_code: i32) -> Self {
        CommandOutput { csv, json, exit_code, notes: Vec::new(), matrix: None }
    }
}

pub fn geometry_summary(cfg: &RunConfig) -> Result<(GeometrySummary, DistanceField)> {
    let cyl = cfg.cylinder()?;
    let field = DistanceField::new(&cyl.polygon, cyl.h_plane)?;
    let summary = GeometrySummary::compute(&cyl.polygon, &field, cyl.a, cyl.b, cfg.n_beta)?;
    Ok((summary, field))
}

/// `geom`: one `area,inradius,l_omega,height,volume` row.
pub fn run_geom(cfg: &RunConfig) -> Result<CommandOutput> {
    let (s, _) = geometry_summary(cfg)?;
    let csv = format!("{}\n{}\n", GeometrySummary::CSV_HEADER, s.csv_row());
    Ok(CommandOutput::new(csv, serde_json::to_value(s).expect("serializable"), EXIT_OK))
}

/// `hardy`: `h,c_est,residual` per refinement level.
pub fn run_hardy(cfg: &RunConfig) -> Result<CommandOutput> {
    let cyl = cfg.cylinder()?;
    let meshes = cfg.hardy_meshes.clone().unwrap_or_else(|| vec![cyl.h_plane]);
    let mut csv = String::from("h,c_est,residual\n");
    let mut levels = Vec::new();
    for &h in &meshes {
        let est = hardy::estimate_hardy_constant(&DistanceField::new(&cyl.polygon, h)?)?;
        csv.push_str(&format!("{},{},{}\n", fmt_f64(h), fmt_f64(est.c_est), fmt_f64(est.rayleigh_residual)));
        levels.push(est);
    }
    let mut out = CommandOutput::new(csv, serde_json::to_value(&levels).expect("serializable"), EXIT_OK);
    out.notes.push(
        "c_est is a discrete lower estimate of the Hardy constant, not an upper bound".into(),
    );
    Ok(out)
}

/// `spectrum`: the `m` smallest eigenvalues of the discrete Heisenberg
/// Laplacian.
pub fn run_spectrum(cfg: &RunConfig, dump_matrix: bool) -> Result<CommandOutput> {
    let (spec, matrix) = compute_spectrum(cfg, dump_matrix)?;
    let code = if spec.all_converged() { EXIT_OK } else { EXIT_NOT_CONVERGED };
    let mut out = CommandOutput::new(spec.to_csv(), serde_json::to_value(&spec).expect("serializable"), code);
    out.matrix = matrix;
    if code != EXIT_OK {
        let bad = spec.converged.iter().filter(|c| !**c).count();
        out.notes.push(format!("{bad} requested eigenpairs did not converge"));
    }
    Ok(out)
}

/// Builds the operator of the config and solves for its spectrum.
pub fn compute_spectrum(cfg: &RunConfig, dump_matrix: bool) -> Result<(Spectrum, Option<String>)> {
    let cyl = cfg.cylinder()?;
    let m = cfg.num_eigenpairs()?;
    let grid = Grid3D::new(&cyl.polygon, cyl.a, cyl.b, cyl.h_plane, cyl.h_axial)?;
    if 4 * m > grid.len() {
        return Err(Error::InvalidInput(format!(
            "num_eigenpairs = {m} exceeds a quarter of the {} grid nodes",
            grid.len()
        )));
    }
    let (a, _) = assemble_heisenberg(&grid);
    let matrix = if dump_matrix { Some(a.to_matrix_market()?) } else { None };
    let spec = lobpcg_smallest(&a, m, cfg.solver.tol, cfg.solver.max_iter, cfg.solver.seed)?;
    Ok((spec, matrix))
}

fn resolve_lambda_grid(cfg: &RunConfig, spec: &Spectrum) -> Result<Vec<f64>> {
    let first = spec
        .eigenvalues
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidInput("spectrum file has no eigenvalues".into()))?;
    let last = spec.largest().unwrap_or(first);
    let min = cfg.lambda_grid.min.unwrap_or(first);
    let max = cfg.lambda_grid.max.unwrap_or(0.9 * last);
    bounds::lambda_grid(min, max, cfg.lambda_grid.count, cfg.lambda_grid.spacing == Spacing::Geometric)
}

/// The Hardy constant for the bound, with the heuristic flag.
pub fn c_used(cfg: &RunConfig) -> Result<(f64, bool)> {
    let cyl = cfg.cylinder()?;
    let mode = cfg.c_mode_for(&cyl.polygon);
    let estimate = if mode == CMode::Measured {
        let meshes = cfg.hardy_meshes.clone().unwrap_or_else(|| vec![cyl.h_plane]);
        Some(hardy::hardy_refinement(&cyl.polygon, &meshes)?)
    } else {
        None
    };
    Ok((hardy::hardy_bound_used(estimate.as_ref(), mode)?, mode.is_heuristic()))
}

/// `check`: the bound report for a previously computed spectrum.
pub fn run_check(cfg: &RunConfig, spectrum_csv: &str) -> Result<CommandOutput> {
    let spec = Spectrum::from_csv(spectrum_csv)?;
    let (geom, _) = geometry_summary(cfg)?;
    let cyl = cfg.cylinder()?;
    let (c, heuristic) = c_used(cfg)?;
    let grid = resolve_lambda_grid(cfg, &spec)?;
    let convex = cfg.corollary && cyl.polygon.is_convex();
    let mut report = bounds::check_bounds(&spec, &geom, c, &grid, convex, cfg.tol_bound)?;
    report.heuristic_c = heuristic;
    let failures = report.failures();
    let code = if failures > 0 { EXIT_BOUND_VIOLATION } else { EXIT_OK };
    let mut out = CommandOutput::new(report.to_csv(), serde_json::to_value(&report).expect("serializable"), code);
    if heuristic {
        out.notes.push(format!(
            "c_used = {c} comes from a measured lower estimate; the remainder bound is heuristic"
        ));
    }
    if report.rows.iter().any(|r| r.truncated) {
        out.notes.push(format!(
            "rows above the largest computed eigenvalue {} are truncated",
            report.largest_eigenvalue
        ));
    }
    if failures > 0 {
        out.notes.push(format!("{failures} rows exceed a bound beyond the slack {}", cfg.tol_bound));
    }
    Ok(out)
}

/// `landau`: lowest eigenvalues of the realified magnetic Laplacian. Each
/// eigenvalue of the complex operator appears twice, so `2m` values are
/// reported.
pub fn run_landau(cfg: &RunConfig) -> Result<CommandOutput> {
    let l = cfg.landau()?;
    let matrix = assemble_magnetic2d(l.b_field, l.half_width, l.h)?;
    let m = 2 * l.m;
    if 4 * m > matrix.nrows() {
        return Err(Error::InvalidInput(format!(
            "landau.m = {} is too large for a {}-dimensional realified matrix",
            l.m,
            matrix.nrows()
        )));
    }
    let spec = lobpcg_smallest(&matrix, m, cfg.solver.tol, cfg.solver.max_iter, cfg.solver.seed)?;
    let code = if spec.all_converged() { EXIT_OK } else { EXIT_NOT_CONVERGED };
    Ok(CommandOutput::new(spec.to_csv(), serde_json::to_value(&spec).expect("serializable"), code))
}

/// `asymp`: `lambda,weyl_ratio,remainder` with a power-law fit of the
/// remainder `|Ω|λ³/96 − riesz_mean` over the upper half of the grid.
/// The fit is diagnostic only.
pub fn run_asymp(cfg: &RunConfig, spectrum_csv: &str) -> Result<CommandOutput> {
    let spec = Spectrum::from_csv(spectrum_csv)?;
    let (geom, _) = geometry_summary(cfg)?;
    let grid = resolve_lambda_grid(cfg, &spec)?;
    let volume = geom.volume_omega;
    let mut csv = String::from("lambda,weyl_ratio,remainder\n");
    let mut remainders = Vec::with_capacity(grid.len());
    for &l in &grid {
        let rem = berezin_rhs(volume, l) - riesz_mean(&spec, l);
        remainders.push(rem);
        csv.push_str(&format!("{},{},{}\n", fmt_f64(l), fmt_f64(weyl_ratio(&spec, volume, l)), fmt_f64(rem)));
    }
    let half = grid.len() / 2;
    let fit = bounds::fit_power_law(&grid[half..], &remainders[half..]);
    let mut out = CommandOutput::new(csv, json!({ "lambda": grid, "remainder": remainders, "fit": fit }), EXIT_OK);
    match fit {
        Some(f) => out.notes.push(format!(
            "remainder ≈ {:.4}·λ^{:.4} over {} points (diagnostic fit)",
            f.prefactor, f.exponent, f.points
        )),
        None => out.notes.push("not enough positive remainder points for a fit".into()),
    }
    Ok(out)
}
