//! Compressed sparse row matrices.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::format::{fmt_f64, parse_f64};
use crate::{Error, Result};

/// Real matrix in compressed sparse row layout. Column indices are sorted
/// and unique within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions.
///
/// Duplicates are summed in insertion order, so two builders fed the same
/// products in the same order produce bit-identical entries.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder { nrows, ncols, rows: vec![Vec::new(); nrows] }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows[row].push((col, value));
    }

    pub fn build(self) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in self.rows {
            // stable: duplicates keep insertion order for the summation
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut b = TripletBuilder::new(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            b.push(i, i, d);
        }
        b.build()
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = Aᵀ x`.
    pub fn mul_transpose_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    /// Sparse times dense block, column by column.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.ncols);
        let mut y = DMatrix::zeros(self.nrows, x.ncols());
        for j in 0..x.ncols() {
            self.mul_vec_into(x.column(j).as_slice(), y.column_mut(j).as_mut_slice());
        }
        y
    }

    /// `uᵀ A u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let au = self.mul_vec(u);
        u.iter().zip(&au).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut b = TripletBuilder::new(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                b.push(j, i, v);
            }
        }
        b.build()
    }

    /// `AᵀA`, accumulated row by row of `A` so that entry `(i, j)` and
    /// `(j, i)` receive the same products in the same order and are
    /// therefore bitwise equal.
    pub fn gram(&self) -> CsrMatrix {
        let mut b = TripletBuilder::new(self.ncols, self.ncols);
        for r in 0..self.nrows {
            let entries: Vec<(usize, f64)> = self.row(r).collect();
            for &(i, gi) in &entries {
                for &(j, gj) in &entries {
                    b.push(i, j, gi * gj);
                }
            }
        }
        b.build()
    }

    /// Largest `|A_ij − A_ji|`; zero for exactly symmetric matrices.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let w = if j < self.nrows && i < self.ncols { self.get(j, i) } else { 0.0 };
                worst = worst.max((v - w).abs());
            }
        }
        worst
    }

    /// True if `(i, j)` is stored iff `(j, i)` is.
    pub fn is_structurally_symmetric(&self) -> bool {
        self.nrows == self.ncols
            && (0..self.nrows).all(|i| {
                self.row(i).all(|(j, _)| {
                    let r = self.row_ptr[j]..self.row_ptr[j + 1];
                    self.col_idx[r].binary_search(&i).is_ok()
                })
            })
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[i * self.ncols + j] = v;
            }
        }
        d
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Matrix Market `coordinate real symmetric` text (lower triangle).
    pub fn to_matrix_market(&self) -> Result<String> {
        if self.max_asymmetry() != 0.0 || !self.is_structurally_symmetric() {
            return Err(Error::InvalidInput(
                "matrix market symmetric output requires an exactly symmetric matrix".into(),
            ));
        }
        let lower: Vec<(usize, usize, f64)> = (0..self.nrows)
            .flat_map(|i| self.row(i).filter(move |&(j, _)| j <= i).map(move |(j, v)| (i, j, v)))
            .collect();
        let mut out = String::from("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(out, "{} {} {}", self.nrows, self.ncols, lower.len());
        for (i, j, v) in lower {
            let _ = writeln!(out, "{} {} {}", i + 1, j + 1, fmt_f64(v));
        }
        Ok(out)
    }

    /// Parses the output of [`CsrMatrix::to_matrix_market`].
    pub fn from_matrix_market(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let banner = lines.next().ok_or_else(|| Error::Parse("empty matrix market file".into()))?;
        let banner_lc = banner.to_ascii_lowercase();
        if !banner_lc.starts_with("%%matrixmarket matrix coordinate real") {
            return Err(Error::Parse(format!("unsupported banner {banner:?}")));
        }
        let symmetric = banner_lc.contains("symmetric");
        let mut lines = lines.filter(|l| !l.starts_with('%'));
        let size = lines.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
        let dims: Vec<usize> = size
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad size line {size:?}"))))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(Error::Parse(format!("bad size line {size:?}")));
        }
        let mut b = TripletBuilder::new(dims[0], dims[1]);
        let mut count = 0;
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("bad entry line {line:?}")));
            }
            let parse_idx = |s: &str, n: usize| -> Result<usize> {
                match s.parse::<usize>() {
                    Ok(k) if k >= 1 && k <= n => Ok(k - 1),
                    _ => Err(Error::Parse(format!("index {s:?} out of range in {line:?}"))),
                }
            };
            let i = parse_idx(f[0], dims[0])?;
            let j = parse_idx(f[1], dims[1])?;
            let v = parse_f64(f[2], "matrix entry")?;
            b.push(i, j, v);
            if symmetric && i != j {
                b.push(j, i, v);
            }
            count += 1;
        }
        if count != dims[2] {
            return Err(Error::Parse(format!("expected {} entries, found {count}", dims[2])));
        }
        Ok(b.build())
    }
}
