//! Smallest eigenpairs of sparse symmetric positive (semi-)definite
//! matrices.
//!
//! [`lobpcg_smallest`] is a block preconditioned conjugate-gradient
//! eigensolver with a Jacobi preconditioner and soft locking.
//! [`dense_jacobi_all`] is an independent full-spectrum oracle based on
//! cyclic Jacobi rotations, for small matrices only.
//!
//! Everything runs single-threaded with a fixed operation order, so equal
//! inputs and seeds give bit-identical output.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::format::{fmt_f64, parse_f64, split_csv};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Largest dimension accepted by [`dense_jacobi_all`].
pub const DENSE_MAX_DIM: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub method: String,
    pub iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

/// Ascending eigenvalues with residual norms `|Av − λv|/|v|` and,
/// optionally, unit eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    #[serde(skip)]
    pub vectors: Option<Vec<Vec<f64>>>,
    pub meta: SolverMeta,
}

impl Spectrum {
    pub const CSV_HEADER: &'static str = "index,eigenvalue,residual";

    /// A spectrum with no vectors, e.g. read back from a report.
    pub fn from_values(eigenvalues: Vec<f64>) -> Self {
        let n = eigenvalues.len();
        Spectrum {
            eigenvalues,
            residuals: vec![0.0; n],
            converged: vec![true; n],
            vectors: None,
            meta: SolverMeta { method: "external".into(), iterations: 0, tolerance: 0.0, seed: 0 },
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn largest(&self) -> Option<f64> {
        self.eigenvalues.last().copied()
    }

    /// Keeps the `m` smallest pairs.
    pub fn truncate(&mut self, m: usize) {
        self.eigenvalues.truncate(m);
        self.residuals.truncate(m);
        self.converged.truncate(m);
        if let Some(v) = self.vectors.as_mut() {
            v.truncate(m);
        }
    }

    /// `index,eigenvalue,residual` with 1-based indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (i, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, fmt_f64(*l), fmt_f64(*r)));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows = split_csv(text, Self::CSV_HEADER)?;
        let mut eigenvalues = Vec::with_capacity(rows.len());
        let mut residuals = Vec::with_capacity(rows.len());
        for (k, row) in rows.iter().enumerate() {
            let idx: usize = row[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad index {:?}", k + 1, row[0])))?;
            if idx != k + 1 {
                return Err(Error::Parse(format!("row {}: index {idx} out of sequence", k + 1)));
            }
            eigenvalues.push(parse_f64(row[1], "eigenvalue")?);
            residuals.push(parse_f64(row[2], "residual")?);
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Parse("eigenvalues must be ascending".into()));
        }
        let mut s = Spectrum::from_values(eigenvalues);
        s.residuals = residuals;
        Ok(s)
    }
}

/// Computes the `m` smallest eigenpairs of the symmetric matrix `a`.
///
/// A pair is converged when `|Av − λv| ≤ tol·|λ|`. Pairs still
/// unconverged after `max_iter` iterations are returned with
/// `converged[i] == false`.
pub fn lobpcg_smallest(a: &CsrMatrix, m: usize, tol: f64, max_iter: usize, seed: u64) -> Result<Spectrum> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    if m == 0 || 4 * m > n {
        return Err(Error::InvalidInput(format!(
            "requested {m} eigenpairs of a {n}-dimensional matrix; need 1 ≤ m ≤ n/4"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let block = (2 * m).min(m + 10).min(n / 3).max(m);

    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = DMatrix::from_fn(n, block, |_, _| rng.gen_range(-1.0..1.0));
    let x = orthonormalize(&init, None);
    if x.ncols() < block {
        return Err(Error::InvalidInput("initial block is rank deficient".into()));
    }
    let ax = a.mul_dense(&x);
    let (mut theta, mut x, mut ax) = rayleigh_ritz(&x, &ax, block);
    let mut p: Option<(DMatrix<f64>, DMatrix<f64>)> = None;

    let mut iterations = 0;
    let mut res_norms = vec![f64::INFINITY; block];
    loop {
        // residuals R = AX − XΘ
        let mut r = ax.clone();
        for j in 0..block {
            let t = theta[j];
            let mut col = r.column_mut(j);
            col.axpy(-t, &x.column(j), 1.0);
            res_norms[j] = col.norm();
        }
        let converged: Vec<bool> = (0..block)
            .map(|j| res_norms[j] <= tol * theta[j].abs().max(f64::MIN_POSITIVE))
            .collect();
        if converged[..m].iter().all(|&c| c) || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let active: Vec<usize> = (0..block).filter(|&j| !converged[j]).collect();
        let mut w = DMatrix::zeros(n, active.len());
        for (c, &j) in active.iter().enumerate() {
            let src = r.column(j);
            let mut dst = w.column_mut(c);
            for i in 0..n {
                dst[i] = inv_diag[i] * src[i];
            }
        }
        let mut search = w;
        if let Some((pm, _)) = &p {
            let cols: Vec<_> = active.iter().map(|&j| pm.column(j).into_owned()).collect();
            let pa = DMatrix::from_columns(&cols);
            search = concat_columns(&search, &pa);
        }
        let q = orthonormalize(&search, Some(&x));
        if q.ncols() == 0 {
            break;
        }
        let aq = a.mul_dense(&q);
        let s = concat_columns(&x, &q);
        let as_ = concat_columns(&ax, &aq);
        let (t, c) = ritz_coefficients(&s, &as_, block);
        // P = Q · C_lower carries the search-direction history
        let c_lower = c.rows(block, q.ncols()).into_owned();
        let p_new = &q * &c_lower;
        let ap_new = &aq * &c_lower;
        x = &s * &c;
        ax = &as_ * &c;
        theta = t;
        p = Some((p_new, ap_new));
    }

    // final residuals recomputed from scratch
    let ax_final = a.mul_dense(&x);
    let mut eigenvalues = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    let mut converged = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    for j in 0..m {
        let v = x.column(j);
        let av = ax_final.column(j);
        let nv = v.norm();
        let lambda = v.dot(&av) / (nv * nv);
        let res = (av - v * lambda).norm() / nv;
        eigenvalues.push(lambda);
        residuals.push(res);
        converged.push(res <= tol * lambda.abs().max(f64::MIN_POSITIVE) * (1.0 + 1e-6));
        vectors.push(v.iter().map(|e| e / nv).collect::<Vec<f64>>());
    }
    Ok(Spectrum {
        eigenvalues,
        residuals,
        converged,
        vectors: Some(vectors),
        meta: SolverMeta { method: "lobpcg".into(), iterations, tolerance: tol, seed },
    })
}

fn concat_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Sorted eigen-decomposition of a small symmetric matrix.
fn sorted_eigen(g: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let k = g.nrows();
    let sym = (&g + g.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let cols: Vec<_> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    (values, DMatrix::from_columns(&cols))
}

/// Ritz values and coefficient vectors of the `k` lowest Ritz pairs in the
/// orthonormal basis `s` (with `as_ = A s`).
fn ritz_coefficients(s: &DMatrix<f64>, as_: &DMatrix<f64>, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let g = s.transpose() * as_;
    let (values, vecs) = sorted_eigen(g);
    (values[..k].to_vec(), vecs.columns(0, k).into_owned())
}

fn rayleigh_ritz(
    x: &DMatrix<f64>,
    ax: &DMatrix<f64>,
    k: usize,
) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (t, c) = ritz_coefficients(x, ax, k);
    (t, x * &c, ax * &c)
}

/// Orthonormal basis of the span of `v` (after projecting out the
/// orthonormal columns of `against`), dropping numerically dependent
/// directions. Two rounds of projection plus SVQB.
fn orthonormalize(v: &DMatrix<f64>, against: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    let mut v = v.clone();
    for _ in 0..2 {
        if let Some(x) = against {
            let coeff = x.transpose() * &v;
            v -= x * coeff;
        }
        v = svqb(&v);
        if v.ncols() == 0 {
            break;
        }
    }
    v
}

fn svqb(v: &DMatrix<f64>) -> DMatrix<f64> {
    let k = v.ncols();
    if k == 0 {
        return v.clone();
    }
    let norms: Vec<f64> = (0..k).map(|j| v.column(j).norm()).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    if max_norm == 0.0 {
        return DMatrix::zeros(v.nrows(), 0);
    }
    let mut scaled = v.clone();
    for j in 0..k {
        let s = if norms[j] > 1e-300 { 1.0 / norms[j] } else { 0.0 };
        scaled.column_mut(j).scale_mut(s);
    }
    let g = scaled.transpose() * &scaled;
    let (values, vecs) = sorted_eigen(g);
    let top = values.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..k).filter(|&i| values[i] > 1e-12 * top).collect();
    let mut basis = DMatrix::zeros(k, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = 1.0 / values[i].sqrt();
        basis.column_mut(c).copy_from(&(vecs.column(i) * s));
    }
    scaled * basis
}

/// Dense symmetric matrix in row-major storage, for the Jacobi oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetric {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}×{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::InvalidInput(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DenseSymmetric { n, data })
    }

    pub fn from_csr(a: &CsrMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidInput("matrix must be square".into()));
        }
        DenseSymmetric::new(a.nrows(), a.to_dense())
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// Full spectrum by cyclic Jacobi rotations, without eigenvectors.
pub fn dense_jacobi_all(a: &DenseSymmetric) -> Result<Spectrum> {
    jacobi(a, false)
}

/// Full spectrum with eigenvectors and residuals.
pub fn dense_jacobi_all_with_vectors(a: &DenseSymmetric) -> Result<Spectrum> {
    jacobi(a, true)
}

fn jacobi(a: &DenseSymmetric, want_vectors: bool) -> Result<Spectrum> {
    let n = a.n;
    if n > DENSE_MAX_DIM {
        return Err(Error::InvalidInput(format!(
            "dense oracle is limited to dimension {DENSE_MAX_DIM}, got {n}"
        )));
    }
    let mut m = a.data.clone();
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        Some(id)
    } else {
        None
    };
    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = 1e-12 * norm;
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let max_sweeps = 100;
    let mut sweeps = 0;
    while off(&m) > target {
        if sweeps == max_sweeps {
            return Err(Error::NotConverged { iterations: sweeps, residual: off(&m) / norm });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                // rotation angle zeroing (p, q)
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // rows p and q are contiguous; columns follow by symmetry
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    let np = c * mpk - s * mqk;
                    let nq = s * mpk + c * mqk;
                    m[p * n + k] = np;
                    m[q * n + k] = nq;
                    m[k * n + p] = np;
                    m[k * n + q] = nq;
                }
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let (residuals, vectors) = match v {
        Some(v) => {
            let vecs: Vec<Vec<f64>> = order
                .iter()
                .map(|&c| (0..n).map(|k| v[k * n + c]).collect())
                .collect();
            let res = vecs
                .iter()
                .zip(&eigenvalues)
                .map(|(vec, &l)| {
                    (0..n)
                        .map(|i| {
                            let av: f64 = (0..n).map(|j| a.data[i * n + j] * vec[j]).sum();
                            (av - l * vec[i]).powi(2)
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            (res, Some(vecs))
        }
        None => (vec![0.0; n], None),
    };
    Ok(Spectrum {
        eigenvalues,
        residuals,
        converged: vec![true; n],
        vectors,
        meta: SolverMeta { method: "jacobi".into(), iterations: sweeps, tolerance: 1e-12, seed: 0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn chain(n: usize, h: f64) -> CsrMatrix {
        let mut b = TripletBuilder::new(n, n);
        let s = 1.0 / (h * h);
        for i in 0..n {
            b.push(i, i, 2.0 * s);
            if i + 1 < n {
                b.push(i, i + 1, -s);
                b.push(i + 1, i, -s);
            }
        }
        b.build()
    }

    fn chain_eigenvalue(k: usize, n: usize, h: f64) -> f64 {
        let t = k as f64 * std::f64::consts::PI / (n + 1) as f64;
        2.0 * (1.0 - t.cos()) / (h * h)
    }

    #[test]
    fn jacobi_small_cases() {
        let a = DenseSymmetric::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let s = dense_jacobi_all(&a).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 3.0).abs() < 1e-14);

        let mut id = vec![0.0; 25];
        for i in 0..5 {
            id[i * 5 + i] = 1.0;
        }
        let s = dense_jacobi_all(&DenseSymmetric::new(5, id).unwrap()).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0; 5]);
    }

    #[test]
    fn jacobi_chain_closed_form() {
        let (n, h) = (10, 1.0 / 11.0);
        let s = dense_jacobi_all_with_vectors(&DenseSymmetric::from_csr(&chain(n, h)).unwrap()).unwrap();
        for k in 1..=n {
            let exact = chain_eigenvalue(k, n, h);
            assert!((s.eigenvalues[k - 1] - exact).abs() < 1e-10 * exact);
            assert!(s.residuals[k - 1] < 1e-9 * exact);
        }
    }

    #[test]
    fn jacobi_rejects_large_or_asymmetric() {
        assert!(DenseSymmetric::new(2, vec![1.0, 2.0, 3.0, 4.0]).is_err());
        let big = CsrMatrix::from_diagonal(&vec![1.0; DENSE_MAX_DIM + 1]);
        assert!(dense_jacobi_all(&DenseSymmetric::from_csr(&big).unwrap()).is_err());
    }

    #[test]
    fn lobpcg_chain_ground_state() {
        let (n, h) = (100, 1.0 / 101.0);
        let s = lobpcg_smallest(&chain(n, h), 3, 1e-8, 5000, 7).unwrap();
        assert!(s.all_converged(), "{:?}", s.residuals);
        for k in 1..=3 {
            let exact = chain_eigenvalue(k, n, h);
            assert!((s.eigenvalues[k - 1] - exact).abs() < 1e-8 * exact);
        }
    }

    #[test]
    fn lobpcg_diagonal() {
        let d: Vec<f64> = (1..=1000).map(|k| k as f64).collect();
        let s = lobpcg_smallest(&CsrMatrix::from_diagonal(&d), 3, 1e-8, 1000, 1).unwrap();
        for (k, l) in s.eigenvalues.iter().enumerate() {
            assert!((l - (k + 1) as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn lobpcg_preconditions() {
        let a = chain(20, 0.1);
        assert!(lobpcg_smallest(&a, 0, 1e-8, 10, 0).is_err());
        assert!(lobpcg_smallest(&a, 6, 1e-8, 10, 0).is_err());
        assert!(lobpcg_smallest(&a, 5, 0.0, 10, 0).is_err());
    }

    #[test]
    fn lobpcg_flags_unconverged() {
        let s = lobpcg_smallest(&chain(400, 1.0 / 401.0), 4, 1e-12, 2, 3).unwrap();
        assert!(!s.all_converged());
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn spectrum_csv_round_trip() {
        let mut s = Spectrum::from_values(vec![1.0, 2.5, 1e-20 + 3.0]);
        s.residuals = vec![1e-9, 0.0, 3.3e-10];
        let text = s.to_csv();
        let t = Spectrum::from_csv(&text).unwrap();
        assert_eq!(t.eigenvalues, s.eigenvalues);
        assert_eq!(t.to_csv(), text);
        assert!(Spectrum::from_csv("index,eigenvalue,residual\n1,2,0\n2,1,0\n").is_err());
        assert!(Spectrum::from_csv("index,eigenvalue,residual\n2,2,0\n").is_err());
    }
}
