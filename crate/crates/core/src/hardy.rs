//! Variational estimate of the Hardy constant `c` of the cross-section,
//! defined by `c⁻² = inf ∫|∇u|² / ∫(u/δ)²`.
//!
//! On the grid, `∫|∇u|²` becomes the 5-point stiffness form `uᵀKu` and
//! `∫(u/δ)²` the diagonal form `uᵀWu` with `W = diag(1/δ²)` (the common
//! cell-area factor cancels). Here `δ` is measured to the nearest lattice
//! point outside the grid, i.e. to the boundary the 5-point scheme actually
//! imposes. This equals the polygon distance whenever the Dirichlet points lie
//! on `∂ω` (axis-aligned boxes on the lattice) and stays `≥ h` otherwise, so a
//! node sitting just inside a slanted edge cannot inflate the quotient.
//! The discrete constant is `c_h = √ν_max` where
//! `ν_max` is the largest eigenvalue of `K⁻¹W`, found by power iteration
//! with conjugate-gradient solves on `K`. Because the trial space is
//! finite, `c_h` estimates `c` from below; it is never an upper bound.

use serde::{Deserialize, Serialize};

use crate::geometry::{DistanceField, Polygon};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::{Error, Result};

/// Relative change in the Rayleigh quotient at which power iteration stops.
pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyEstimate {
    pub c_est: f64,
    pub mesh: f64,
    /// Bound on `|quot(u) − c_est²|` for the returned vector `u`.
    pub rayleigh_residual: f64,
    pub iterations: usize,
    /// `(h, c_est)` for each mesh in a refinement study, coarse to fine.
    pub refinement_history: Vec<(f64, f64)>,
    #[serde(skip)]
    pub vector: Vec<f64>,
}

/// How the Hardy constant entering the remainder bound is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CMode {
    /// `max(c_est, 2)`. Heuristic: `c_est` underestimates `c`.
    Measured,
    /// `c = 2`, exact for convex cross-sections.
    Convex,
    /// `c = 4`, valid for every simply connected Lipschitz cross-section.
    WorstCase,
}

impl CMode {
    /// True when the resulting bound is not backed by a proven value of `c`.
    pub fn is_heuristic(self) -> bool {
        matches!(self, CMode::Measured)
    }
}

/// The value of `c` to feed into the remainder term.
pub fn hardy_bound_used(estimate: Option<&HardyEstimate>, mode: CMode) -> Result<f64> {
    match mode {
        CMode::Convex => Ok(2.0),
        CMode::WorstCase => Ok(4.0),
        CMode::Measured => estimate
            .map(|e| e.c_est.max(2.0))
            .ok_or_else(|| Error::InvalidInput("measured mode needs a Hardy estimate".into())),
    }
}

/// 5-point Dirichlet stiffness matrix on the field's grid.
pub fn stiffness_matrix(field: &DistanceField) -> CsrMatrix {
    let grid = field.grid();
    let inv_h2 = 1.0 / (field.spacing() * field.spacing());
    let mut b = TripletBuilder::new(grid.len(), grid.len());
    for (p, &(i, j)) in grid.nodes().iter().enumerate() {
        b.push(p, p, 4.0 * inv_h2);
        for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            if let Some(q) = grid.index_of(i + di, j + dj) {
                b.push(p, q, -inv_h2);
            }
        }
    }
    b.build()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients for SPD `k`.
pub fn conjugate_gradient(k: &CsrMatrix, rhs: &[f64], x0: &[f64], rel_tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = rhs.len();
    let inv_diag: Vec<f64> = k.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = x0.to_vec();
    let mut r: Vec<f64> = k.mul_vec(&x).iter().zip(rhs).map(|(kx, b)| b - kx).collect();
    let rhs_norm = dot(rhs, rhs).sqrt();
    if rhs_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut kp = vec![0.0; n];
    for _ in 0..max_iter {
        if dot(&r, &r).sqrt() <= rel_tol * rhs_norm {
            return Ok(x);
        }
        k.mul_vec_into(&p, &mut kp);
        let alpha = rz / dot(&p, &kp);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = dot(&r, &r).sqrt() / rhs_norm;
    if res <= rel_tol {
        Ok(x)
    } else {
        Err(Error::NotConverged { iterations: max_iter, residual: res })
    }
}

/// Distance from each node to the nearest lattice point outside the grid.
///
/// The nearest such point always has a grid neighbour, so only the rim of
/// the 5-point stencil needs to be searched.
pub fn dirichlet_distance(field: &DistanceField) -> Vec<f64> {
    let grid = field.grid();
    let h = field.spacing();
    let mut rim: Vec<(i64, i64)> = Vec::new();
    for &(i, j) in grid.nodes() {
        for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            if grid.index_of(i + di, j + dj).is_none() {
                rim.push((i + di, j + dj));
            }
        }
    }
    rim.sort_unstable();
    rim.dedup();
    grid.nodes()
        .iter()
        .map(|&(i, j)| {
            let d2 = rim
                .iter()
                .map(|&(a, b)| (a - i).pow(2) + (b - j).pow(2))
                .min()
                .expect("a finite grid has a rim");
            (d2 as f64).sqrt() * h
        })
        .collect()
}

/// `uᵀWu / uᵀKu`, the discrete Hardy quotient.
pub fn hardy_quotient(field: &DistanceField, stiffness: &CsrMatrix, u: &[f64]) -> f64 {
    let weighted: f64 = u
        .iter()
        .zip(dirichlet_distance(field))
        .map(|(x, d)| x * x / (d * d))
        .sum();
    weighted / stiffness.quadratic_form(u)
}

/// Power iteration for the largest eigenvalue of `K⁻¹W`.
pub fn estimate_hardy_constant(field: &DistanceField) -> Result<HardyEstimate> {
    let n = field.grid().len();
    if n < 10 {
        return Err(Error::InvalidInput(format!(
            "Hardy estimate needs at least 10 interior nodes, got {n}"
        )));
    }
    let k = stiffness_matrix(field);
    let dist = dirichlet_distance(field);
    let weight: Vec<f64> = dist.iter().map(|d| 1.0 / (d * d)).collect();
    let cg_iter = 20 * n + 100;

    // δ is positive and vanishes on ∂ω, a reasonable start for the ground state
    let mut u = dist;
    let norm = dot(&u, &u).sqrt();
    u.iter_mut().for_each(|x| *x /= norm);
    let mut nu_prev = 0.0;
    let mut last_change = f64::INFINITY;
    for it in 1..=POWER_MAX_ITER {
        let wu: Vec<f64> = u.iter().zip(&weight).map(|(a, b)| a * b).collect();
        let next = conjugate_gradient(&k, &wu, &u, 1e-13, cg_iter)?;
        // with K next = W u: nextᵀ K next = nextᵀ W u
        let wnext: f64 = next.iter().zip(&weight).map(|(a, b)| a * a * b).sum();
        let knext = dot(&next, &wu);
        let nu = wnext / knext;
        let norm = dot(&next, &next).sqrt();
        u = next.into_iter().map(|x| x / norm).collect();
        last_change = (nu - nu_prev).abs();
        if last_change <= POWER_TOL * nu {
            let quot = hardy_quotient(field, &k, &u);
            let c_est = quot.sqrt();
            let residual = pencil_residual(&k, &weight, &u, quot);
            return Ok(HardyEstimate {
                c_est,
                mesh: field.spacing(),
                rayleigh_residual: residual.max(last_change) + 4.0 * f64::EPSILON * quot,
                iterations: it,
                refinement_history: vec![(field.spacing(), c_est)],
                vector: u,
            });
        }
        nu_prev = nu;
    }
    Err(Error::NotConverged { iterations: POWER_MAX_ITER, residual: last_change / nu_prev })
}

/// `‖Wu − νKu‖ / ‖Ku‖`, scaled to the quotient.
fn pencil_residual(k: &CsrMatrix, weight: &[f64], u: &[f64], nu: f64) -> f64 {
    let ku = k.mul_vec(u);
    let r: f64 = u
        .iter()
        .zip(weight)
        .zip(&ku)
        .map(|((x, w), kx)| (w * x - nu * kx).powi(2))
        .sum::<f64>()
        .sqrt();
    r / dot(&ku, &ku).sqrt()
}

/// Runs [`estimate_hardy_constant`] on each mesh (in the order given) and
/// returns the finest estimate carrying the whole history.
pub fn hardy_refinement(poly: &Polygon, meshes: &[f64]) -> Result<HardyEstimate> {
    let mut history = Vec::with_capacity(meshes.len());
    let mut last = None;
    for &h in meshes {
        let est = estimate_hardy_constant(&DistanceField::new(poly, h)?)?;
        history.push((h, est.c_est));
        last = Some(est);
    }
    let mut est = last.ok_or_else(|| Error::InvalidInput("no meshes given".into()))?;
    est.refinement_history = history;
    Ok(est)
}
