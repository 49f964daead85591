//! Gauge-covariant lattice discretization of the 2D Landau Hamiltonian
//! `(i∇ + B·A(x'))²` on the square `(−L, L)²` with Dirichlet boundary.
//!
//! Every nearest-neighbour link `x → y` carries the phase
//! `θ = B ∫_x^y A·dl`; the hopping amplitude is `−e^{iθ}/h²` and the
//! diagonal `4/h²`. Since `A` is affine, the midpoint rule evaluates each
//! line integral exactly, so a gauge change `A → A + ∇χ` multiplies the
//! matrix by a diagonal unitary and leaves the spectrum unchanged.
//!
//! The complex Hermitian matrix `H = H_r + iH_i` is returned in realified
//! form `[[H_r, −H_i], [H_i, H_r]]`, a real symmetric matrix of twice the
//! dimension in which every eigenvalue of `H` appears twice.

use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::{Error, Result};

/// Choice of vector potential generating the constant unit field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Gauge {
    /// `A(x') = ½(−x₂, x₁)`.
    #[default]
    Symmetric,
    /// `A(x') + ∇χ` with `χ = x₁x₂/2`, i.e. `(0, x₁)`.
    Landau,
}

impl Gauge {
    fn potential(self, p: [f64; 2]) -> [f64; 2] {
        match self {
            Gauge::Symmetric => [-0.5 * p[1], 0.5 * p[0]],
            Gauge::Landau => [0.0, p[0]],
        }
    }

    /// `∫_x^y A·dl` along the straight segment.
    fn line_integral(self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let mid = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
        let a = self.potential(mid);
        a[0] * (y[0] - x[0]) + a[1] * (y[1] - x[1])
    }
}

/// Nodes of the lattice `h·ℤ²` strictly inside `(−L, L)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SquareLattice {
    /// Nodes have indices `−half..=half` along each axis.
    pub half: i64,
}

impl SquareLattice {
    pub fn new(half_width: f64, h: f64) -> Result<Self> {
        if !(half_width > 0.0 && h > 0.0) {
            return Err(Error::InvalidInput(format!(
                "half_width and h must be positive, got {half_width} and {h}"
            )));
        }
        let mut half = (half_width / h).ceil() as i64;
        while half as f64 * h >= half_width * (1.0 - 1e-12) {
            half -= 1;
        }
        if half < 0 {
            return Err(Error::EmptyGrid(format!(
                "no node strictly inside (−{half_width}, {half_width})² at spacing {h}"
            )));
        }
        Ok(SquareLattice { half })
    }

    pub fn side(&self) -> usize {
        (2 * self.half + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn index(&self, i: i64, j: i64) -> Option<usize> {
        let s = self.side() as i64;
        let (a, b) = (i + self.half, j + self.half);
        (0..s).contains(&a).then_some(())?;
        (0..s).contains(&b).then_some(())?;
        Some((b * s + a) as usize)
    }
}

/// Realified magnetic Laplacian in the symmetric gauge.
pub fn assemble_magnetic2d(b_field: f64, half_width: f64, h: f64) -> Result<CsrMatrix> {
    assemble_magnetic2d_gauge(b_field, half_width, h, Gauge::Symmetric)
}

pub fn assemble_magnetic2d_gauge(
    b_field: f64,
    half_width: f64,
    h: f64,
    gauge: Gauge,
) -> Result<CsrMatrix> {
    if !(b_field >= 0.0 && b_field.is_finite()) {
        return Err(Error::InvalidInput(format!("field strength must be ≥ 0, got {b_field}")));
    }
    let flux = b_field * h * h;
    if flux > 0.5 {
        return Err(Error::InvalidInput(format!(
            "flux per plaquette B·h² = {flux} exceeds 0.5; refine the lattice"
        )));
    }
    let lattice = SquareLattice::new(half_width, h)?;
    let n = lattice.len();
    let inv_h2 = 1.0 / (h * h);
    let mut m = TripletBuilder::new(2 * n, 2 * n);
    let half = lattice.half;
    for j in -half..=half {
        for i in -half..=half {
            let p = lattice.index(i, j).expect("node in range");
            m.push(p, p, 4.0 * inv_h2);
            m.push(n + p, n + p, 4.0 * inv_h2);
            for (di, dj) in [(1, 0), (0, 1)] {
                let Some(q) = lattice.index(i + di, j + dj) else { continue };
                let x = [i as f64 * h, j as f64 * h];
                let y = [(i + di) as f64 * h, (j + dj) as f64 * h];
                let theta = b_field * gauge.line_integral(x, y);
                // H_pq = −e^{iθ}/h², H_qp = conj(H_pq)
                let re = -theta.cos() * inv_h2;
                let im = -theta.sin() * inv_h2;
                m.push(p, q, re);
                m.push(q, p, re);
                m.push(n + p, n + q, re);
                m.push(n + q, n + p, re);
                if im == 0.0 {
                    continue;
                }
                // lower-left block H_i, upper-right −H_i
                m.push(n + p, q, im);
                m.push(n + q, p, -im);
                m.push(p, n + q, -im);
                m.push(q, n + p, im);
            }
        }
    }
    Ok(m.build())
}

/// Closed-form ground state of the 5-point Dirichlet Laplacian on the
/// `side × side` node square with spacing `h`.
pub fn dirichlet_square_ground_state(side: usize, h: f64) -> f64 {
    let t = std::f64::consts::PI / (side + 1) as f64;
    2.0 * (2.0 - 2.0 * t.cos()) / (h * h)
}
