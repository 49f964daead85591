//! Finite-difference discretization of the Heisenberg form
//! `a[u] = ∫_Ω |X₁u|² + |X₂u|²` on `Ω = ω × (a, b)`, with
//! `X₁ = ∂₁ + (x₂/2)∂₃` and `X₂ = ∂₂ − (x₁/2)∂₃`.
//!
//! The discrete operator is assembled as `A = GᵀG`, where `G` stacks
//! forward-difference versions of `X₁` and `X₂` evaluated at every lattice
//! point touching the node set, with `u` extended by zero off the nodes.
//! This makes `A` exactly symmetric and positive semi-definite, and makes
//! the form of a sub-domain the restriction of the form of a larger domain
//! (the matrix of the sub-domain is a principal submatrix).

use crate::geometry::{DistanceField, Polygon};
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::{Error, Result};

/// Interior lattice nodes of the cylinder `ω × (a, b)`.
///
/// In-plane coordinates live on `h_plane·ℤ²`, the axial one on
/// `h_axial·ℤ`. Nodes are enumerated with `x₃` outermost, then `x₂`, then
/// `x₁`.
#[derive(Debug, Clone)]
pub struct Grid3D {
    polygon: Polygon,
    a: f64,
    b: f64,
    h_axial: f64,
    plane: DistanceField,
    k_range: (i64, i64),
}

impl Grid3D {
    pub fn new(poly: &Polygon, a: f64, b: f64, h_plane: f64, h_axial: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInput(format!(
                "axial interval must satisfy a < b, got a={a}, b={b}"
            )));
        }
        if !(h_plane > 0.0 && h_axial > 0.0) {
            return Err(Error::InvalidInput(format!(
                "spacings must be positive, got h_plane={h_plane}, h_axial={h_axial}"
            )));
        }
        let eps = 1e-9 * h_axial;
        let mut k0 = (a / h_axial).floor() as i64;
        while (k0 as f64) * h_axial <= a + eps {
            k0 += 1;
        }
        let mut k1 = (b / h_axial).ceil() as i64;
        while (k1 as f64) * h_axial >= b - eps {
            k1 -= 1;
        }
        if k1 < k0 {
            return Err(Error::EmptyGrid(format!(
                "no axial node strictly inside ({a}, {b}) at spacing {h_axial}; use a finer spacing"
            )));
        }
        let plane = DistanceField::new(poly, h_plane).map_err(|e| match e {
            Error::EmptyGrid(msg) => Error::EmptyGrid(format!("cross-section: {msg}")),
            other => other,
        })?;
        Ok(Grid3D {
            polygon: poly.clone(),
            a,
            b,
            h_axial,
            plane,
            k_range: (k0, k1),
        })
    }

    pub fn polygon(&self) -> &Polygon {
        &self.polygon
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn h_plane(&self) -> f64 {
        self.plane.spacing()
    }

    pub fn h_axial(&self) -> f64 {
        self.h_axial
    }

    /// The cross-section grid together with its boundary distances.
    pub fn plane(&self) -> &DistanceField {
        &self.plane
    }

    pub fn axial_count(&self) -> usize {
        (self.k_range.1 - self.k_range.0 + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.plane.grid().len() * self.axial_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.plane.cell_area() * self.h_axial
    }

    /// Node count times cell volume; approximates `|Ω|`.
    pub fn volume_estimate(&self) -> f64 {
        self.len() as f64 * self.cell_volume()
    }

    /// Linear index of lattice point `(i, j, k)` if it is a node.
    pub fn index_of(&self, i: i64, j: i64, k: i64) -> Option<usize> {
        if k < self.k_range.0 || k > self.k_range.1 {
            return None;
        }
        let p = self.plane.grid().index_of(i, j)?;
        Some((k - self.k_range.0) as usize * self.plane.grid().len() + p)
    }

    /// Lattice indices of node `n`.
    pub fn lattice(&self, n: usize) -> (i64, i64, i64) {
        let np = self.plane.grid().len();
        let (i, j) = self.plane.grid().nodes()[n % np];
        (i, j, self.k_range.0 + (n / np) as i64)
    }

    pub fn point(&self, n: usize) -> [f64; 3] {
        let (i, j, k) = self.lattice(n);
        let h = self.h_plane();
        [i as f64 * h, j as f64 * h, k as f64 * self.h_axial]
    }

    /// Cross-section node index of node `n`.
    pub fn plane_index(&self, n: usize) -> usize {
        n % self.plane.grid().len()
    }

    /// `δ(x')` at node `n`.
    pub fn boundary_distance(&self, n: usize) -> f64 {
        self.plane.values()[self.plane_index(n)]
    }
}

/// The stacked discrete Heisenberg gradient `G`: the first `x1_rows` rows
/// discretize `X₁`, the rest `X₂`.
#[derive(Debug, Clone)]
pub struct HeisenbergGradientFactor {
    pub g: CsrMatrix,
    pub x1_rows: usize,
}

impl HeisenbergGradientFactor {
    /// `a_h[u] = |G u|² · cell volume`.
    pub fn form(&self, u: &[f64], cell_volume: f64) -> f64 {
        self.g.mul_vec(u).iter().map(|v| v * v).sum::<f64>() * cell_volume
    }
}

fn gradient_factor(grid: &Grid3D) -> HeisenbergGradientFactor {
    let hp = grid.h_plane();
    let ha = grid.h_axial();
    let ((i0, i1), (j0, j1)) = grid.plane.grid().index_ranges();
    let (k0, k1) = grid.k_range;
    let n = grid.len();

    // rows[d] collects the nonzeros of every base point for direction d
    let mut rows: [Vec<Vec<(usize, f64)>>; 2] = [Vec::new(), Vec::new()];
    for k in (k0 - 1)..=k1 {
        for j in (j0 - 1)..=j1 {
            for i in (i0 - 1)..=i1 {
                let x1 = i as f64 * hp;
                let x2 = j as f64 * hp;
                // X₁: forward step in x₁, mixed coefficient x₂/2
                // X₂: forward step in x₂, mixed coefficient −x₁/2
                for (d, (di, dj), coef) in [(0, (1, 0), 0.5 * x2), (1, (0, 1), -0.5 * x1)] {
                    let mut entries = Vec::with_capacity(3);
                    let mixed = coef / ha;
                    if let Some(c) = grid.index_of(i, j, k) {
                        entries.push((c, -1.0 / hp - mixed));
                    }
                    if let Some(c) = grid.index_of(i + di, j + dj, k) {
                        entries.push((c, 1.0 / hp));
                    }
                    if let Some(c) = grid.index_of(i, j, k + 1) {
                        entries.push((c, mixed));
                    }
                    if !entries.is_empty() {
                        rows[d].push(entries);
                    }
                }
            }
        }
    }
    let x1_rows = rows[0].len();
    let total = x1_rows + rows[1].len();
    let mut b = TripletBuilder::new(total, n);
    for (r, entries) in rows[0].iter().chain(rows[1].iter()).enumerate() {
        for &(c, v) in entries {
            b.push(r, c, v);
        }
    }
    HeisenbergGradientFactor { g: b.build(), x1_rows }
}

/// Assembles `A_h = GᵀG` and returns it together with `G`.
pub fn assemble_heisenberg(grid: &Grid3D) -> (CsrMatrix, HeisenbergGradientFactor) {
    let factor = gradient_factor(grid);
    (factor.g.gram(), factor)
}
