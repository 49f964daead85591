//! Riesz means of a computed spectrum and the upper bounds they are
//! compared against:
//!
//! * the sharp Berezin-type bound `|Ω| λ³ / 96`;
//! * the improved bound with the negative remainder
//!   `λ^p (1 + 2/c)/96 · l^q · |Ω|^{−r} · (4c + 4)^{−q}`,
//!   `p = (2c+5)/(c+2)`, `q = (2c+2)/(c+2)`, `r = c/(c+2)`;
//! * its convex specialisation (`c = 2`, `l = |Ω|/R`), whose remainder is
//!   `λ^{9/4} |Ω| / (2⁷·3²·√3 · R^{3/2})`.
//!
//! Also the eigenfunction-level checks of the cylinder Hardy inequality
//! and of the boundary-layer mass estimate.

use serde::{Deserialize, Serialize};

use crate::eigensolve::Spectrum;
use crate::format::fmt_f64;
use crate::geometry::{DistanceField, GeometrySummary};
use crate::operator::Grid3D;
use crate::{Error, Result};

/// Relative slack for bound comparisons at `h ≤ 1/24`.
pub const DEFAULT_TOL_BOUND: f64 = 0.05;

/// `Σ_k (λ − λ_k)₊` over the computed eigenvalues.
pub fn riesz_mean(spec: &Spectrum, lambda: f64) -> f64 {
    spec.eigenvalues.iter().map(|&l| (lambda - l).max(0.0)).sum()
}

/// `|Ω| λ³ / 96`.
pub fn berezin_rhs(volume: f64, lambda: f64) -> f64 {
    volume * lambda.powi(3) / 96.0
}

/// Remainder subtracted from the Berezin term for Hardy constant `c`.
pub fn theorem_remainder(volume: f64, l: f64, c: f64, lambda: f64) -> f64 {
    let p = (2.0 * c + 5.0) / (c + 2.0);
    let q = (2.0 * c + 2.0) / (c + 2.0);
    let r = c / (c + 2.0);
    lambda.powf(p) * (1.0 + 2.0 / c) / 96.0 * l.powf(q) * volume.powf(-r) * (4.0 * c + 4.0).powf(-q)
}

/// `max{0, |Ω|λ³/96 − remainder}`; requires `c ≥ 2`.
pub fn theorem_rhs(volume: f64, l: f64, c: f64, lambda: f64) -> Result<f64> {
    if !(c >= 2.0) {
        return Err(Error::InvalidInput(format!(
            "Hardy constant must satisfy c ≥ 2, got {c}"
        )));
    }
    if !(volume > 0.0 && l > 0.0 && lambda >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "need volume > 0, l > 0, λ ≥ 0 (got {volume}, {l}, {lambda})"
        )));
    }
    Ok((berezin_rhs(volume, lambda) - theorem_remainder(volume, l, c, lambda)).max(0.0))
}

/// `2⁷·3²·√3`, the denominator of the convex remainder coefficient.
pub fn corollary_denominator() -> f64 {
    1152.0 * 3f64.sqrt()
}

/// Convex-case bound `max{0, |Ω|λ³/96 − λ^{9/4}|Ω|/(2⁷·3²·√3·R^{3/2})}`.
pub fn corollary_rhs(volume: f64, inradius: f64, lambda: f64) -> f64 {
    let remainder = lambda.powf(2.25) * volume / (corollary_denominator() * inradius.powf(1.5));
    (berezin_rhs(volume, lambda) - remainder).max(0.0)
}

/// `(|Ω|/(2π²)) · Σ_{k≤k_max} (2k−1)⁻² · λ³/6`, the phase-space leading
/// term truncated after `k_max` Landau levels.
pub fn leading_term_oracle(volume: f64, lambda: f64, k_max: usize) -> f64 {
    let odd_sum: f64 = (1..=k_max).map(|k| 1.0 / ((2 * k - 1) as f64).powi(2)).sum();
    volume / (2.0 * std::f64::consts::PI.powi(2)) * odd_sum * lambda.powi(3) / 6.0
}

/// `96·riesz_mean / (|Ω| λ³)`.
pub fn weyl_ratio(spec: &Spectrum, volume: f64, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    96.0 * riesz_mean(spec, lambda) / (volume * lambda.powi(3))
}

/// Least-squares slope and prefactor of `log(remainder)` against
/// `log(λ)`, using only points with positive remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub points: usize,
}

pub fn fit_power_law(lambdas: &[f64], values: &[f64]) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(values)
        .filter(|(l, v)| **l > 0.0 && **v > 0.0)
        .map(|(l, v)| (l.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(PowerFit { exponent: slope, prefactor: (my - slope * mx).exp(), points: pts.len() })
}

fn check_layout(v: &[f64], field: &DistanceField, grid: &Grid3D) -> Result<()> {
    if v.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "vector has {} entries, grid has {} nodes",
            v.len(),
            grid.len()
        )));
    }
    if field.grid().len() != grid.plane().grid().len() || field.spacing() != grid.h_plane() {
        return Err(Error::InvalidInput("distance field does not match the grid's cross-section".into()));
    }
    Ok(())
}

/// Discrete cylinder Hardy inequality `∫|v|²/δ² ≤ c² a[v]` for an
/// eigenpair, with `v` normalized in `L²`. Returns `(lhs, rhs)`.
pub fn check_cylinder_hardy(v: &[f64], lambda_v: f64, field: &DistanceField, grid: &Grid3D, c: f64) -> Result<(f64, f64)> {
    check_layout(v, field, grid)?;
    let mass: f64 = v.iter().map(|x| x * x).sum();
    let weighted: f64 = v
        .iter()
        .enumerate()
        .map(|(n, x)| {
            let d = field.values()[grid.plane_index(n)];
            x * x / (d * d)
        })
        .sum();
    Ok((weighted / mass, c * c * lambda_v))
}

/// Boundary-layer estimate: `L²` mass of the normalized eigenfunction on
/// `{δ < β}` against `c^{2+2/c} β^{2+2/c} λ^{1+1/c}`. Returns `(lhs, rhs)`.
pub fn check_boundary_estimate(
    v: &[f64],
    lambda_v: f64,
    field: &DistanceField,
    grid: &Grid3D,
    c: f64,
    beta: f64,
) -> Result<(f64, f64)> {
    check_layout(v, field, grid)?;
    let r = crate::geometry::inradius(field)?;
    if !(beta > 0.0 && beta <= r) {
        return Err(Error::InvalidInput(format!("beta must lie in (0, R] = (0, {r}], got {beta}")));
    }
    let mass: f64 = v.iter().map(|x| x * x).sum();
    let layer: f64 = v
        .iter()
        .enumerate()
        .filter(|(n, _)| field.values()[grid.plane_index(*n)] < beta)
        .map(|(_, x)| x * x)
        .sum();
    let e = 2.0 + 2.0 / c;
    Ok((layer / mass, c.powf(e) * beta.powf(e) * lambda_v.powf(1.0 + 1.0 / c)))
}

/// The layer width `β` with
/// `β^{1+2/c} = l / (c^{2+2/c} λ^{1+1/c} (4 + 4/c) |Ω|)` chosen in the
/// remainder estimate, and whether it satisfies `β ≤ R`.
pub fn remainder_layer_width(l: f64, c: f64, lambda: f64, volume: f64, inradius: f64) -> (f64, bool) {
    let rhs = l / (c.powf(2.0 + 2.0 / c) * lambda.powf(1.0 + 1.0 / c) * (4.0 + 4.0 / c) * volume);
    let beta = rhs.powf(1.0 / (1.0 + 2.0 / c));
    (beta, beta <= inradius)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs_berezin: f64,
    pub rhs_theorem: f64,
    pub rhs_corollary: Option<f64>,
    pub margin_berezin: f64,
    pub margin_theorem: f64,
    pub c_used: f64,
    pub beta_star: f64,
    pub truncated: bool,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub geometry: GeometrySummary,
    pub largest_eigenvalue: f64,
    pub eigenvalue_count: usize,
    pub tol_bound: f64,
    /// Set when `c_used` comes from the measured (heuristic) mode.
    pub heuristic_c: bool,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str =
        "lambda,lhs,rhs_berezin,rhs_theorem,rhs_corollary,margin_berezin,margin_theorem,c_used,beta_star,truncated";

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.failed).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let cor = r.rhs_corollary.map(fmt_f64).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                fmt_f64(r.lambda),
                fmt_f64(r.lhs),
                fmt_f64(r.rhs_berezin),
                fmt_f64(r.rhs_theorem),
                cor,
                fmt_f64(r.margin_berezin),
                fmt_f64(r.margin_theorem),
                fmt_f64(r.c_used),
                fmt_f64(r.beta_star),
                r.truncated
            ));
        }
        out
    }
}

/// Evaluates every bound on the given `λ` grid.
///
/// A row fails when the Riesz mean exceeds any evaluated right-hand side
/// by more than the relative slack `tol_bound`. Rows beyond the largest
/// computed eigenvalue are flagged `truncated`; they are still checked,
/// since missing eigenvalues can only increase the Riesz mean.
pub fn check_bounds(
    spec: &Spectrum,
    geom: &GeometrySummary,
    c_used: f64,
    lambda_grid: &[f64],
    convex: bool,
    tol_bound: f64,
) -> Result<BoundReport> {
    let largest = spec.largest().unwrap_or(0.0);
    let volume = geom.volume_omega;
    let mut rows = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let lhs = riesz_mean(spec, lambda);
        let rhs_berezin = berezin_rhs(volume, lambda);
        let rhs_theorem = theorem_rhs(volume, geom.l_omega, c_used, lambda)?;
        let rhs_corollary = convex.then(|| corollary_rhs(volume, geom.inradius, lambda));
        let slack = 1.0 + tol_bound;
        let failed = lhs > rhs_berezin * slack
            || lhs > rhs_theorem * slack
            || rhs_corollary.is_some_and(|r| lhs > r * slack);
        rows.push(BoundRow {
            lambda,
            lhs,
            rhs_berezin,
            rhs_theorem,
            rhs_corollary,
            margin_berezin: rhs_berezin - lhs,
            margin_theorem: rhs_theorem - lhs,
            c_used,
            beta_star: geom.beta_star,
            truncated: lambda > largest,
            failed,
        });
    }
    Ok(BoundReport {
        rows,
        geometry: *geom,
        largest_eigenvalue: largest,
        eigenvalue_count: spec.len(),
        tol_bound,
        heuristic_c: false,
    })
}

/// `count` points from `min` to `max`, linear or geometric.
pub fn lambda_grid(min: f64, max: f64, count: usize, geometric: bool) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidInput(format!("λ grid needs at least 2 points, got {count}")));
    }
    if !(min < max) || (geometric && !(min > 0.0)) {
        return Err(Error::InvalidInput(format!("bad λ range [{min}, {max}]")));
    }
    let last = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let t = i as f64 / last;
            if i == count - 1 {
                max
            } else if geometric {
                min * (max / min).powf(t)
            } else {
                min + (max - min) * t
            }
        })
        .collect())
}
