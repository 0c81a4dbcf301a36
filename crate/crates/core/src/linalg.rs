//! Dense row-major linear algebra used by the solvers.
//!
//! Everything here is deliberately small: the solvers only ever touch one row
//! at a time, plus a full `Ax - b` pass when a residual-weighted rule needs it.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An owned vector whose entries are all finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().all(|v| v.is_finite()) {
            Ok(Vector(entries))
        } else {
            Err(Error::NonFinite("vector"))
        }
    }

    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

/// Dense row-major matrix with cached row 2-norms.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
    row_norms: Vec<f64>,
}

impl RowMatrix {
    /// Builds a matrix from row-major storage.
    pub fn new(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if nrows == 0 || ncols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch(format!(
                "{} values supplied for a {nrows}x{ncols} matrix",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        let row_norms = data.chunks_exact(ncols).map(norm2).collect();
        Ok(RowMatrix {
            nrows,
            ncols,
            data,
            row_norms,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        RowMatrix::new(nrows, ncols, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        RowMatrix::new(n, n, data).expect("identity is well formed")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.ncols)
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row_norms[i]
    }

    pub fn row_norms(&self) -> &[f64] {
        &self.row_norms
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.row_norms.iter().map(|r| r * r).sum()
    }

    /// True when every row has unit 2-norm within `tol`.
    pub fn is_row_normalized(&self, tol: f64) -> bool {
        self.row_norms.iter().all(|r| (r - 1.0).abs() <= tol)
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} columns, vector has {} entries",
                self.ncols,
                x.len()
            )));
        }
        Ok(self.rows().map(|row| dot(row, x)).collect())
    }

    /// `Aᵀ y`.
    pub fn tr_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.nrows {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, vector has {} entries",
                self.nrows,
                y.len()
            )));
        }
        let mut out = vec![0.0; self.ncols];
        for (row, &yi) in self.rows().zip(y) {
            if yi != 0.0 {
                axpy(yi, row, &mut out);
            }
        }
        Ok(out)
    }

    /// Submatrix made of the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<RowMatrix> {
        let mut data = Vec::with_capacity(self.nrows * cols.len());
        for row in self.rows() {
            data.extend(cols.iter().map(|&j| row[j]));
        }
        RowMatrix::new(self.nrows, cols.len(), data)
    }

    pub fn transpose(&self) -> RowMatrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                data[j * self.nrows + i] = self.data[i * self.ncols + j];
            }
        }
        RowMatrix::new(self.ncols, self.nrows, data).expect("transpose of a valid matrix")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Euclidean norm, scaled so that huge or tiny entries do not overflow.
pub fn norm2(v: &[f64]) -> f64 {
    let scale = norm_inf(v);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let ss: f64 = v.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * ss.sqrt()
}

pub fn norm1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `Σ |v_i|^p`. At `p = 0` this is the number of nonzero entries, which keeps
/// the weighted sampling ratio equal to `1/m` there.
pub fn lp_norm_pow(v: &[f64], p: f64) -> f64 {
    assert!(p >= 0.0, "lp_norm_pow needs p >= 0, got {p}");
    if p == 0.0 {
        v.iter().filter(|x| **x != 0.0).count() as f64
    } else if p == 1.0 {
        norm1(v)
    } else if p == 2.0 {
        v.iter().map(|x| x * x).sum()
    } else {
        v.iter().map(|x| x.abs().powf(p)).sum()
    }
}

/// `‖v‖_p` for `p > 0`, computed with max-scaling.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    assert!(p > 0.0, "lp_norm needs p > 0, got {p}");
    let scale = norm_inf(v);
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| (x.abs() / scale).powf(p)).sum();
    scale * s.powf(1.0 / p)
}

/// A row-normalized copy of a linear system.
#[derive(Debug, Clone)]
pub struct NormalizedSystem {
    pub matrix: RowMatrix,
    pub rhs: Vector,
    /// Indices (in the input) of all-zero rows that were removed.
    pub dropped_rows: Vec<usize>,
}

/// Scales every row of `[A | b]` so that `‖a_i‖₂ = 1`.
///
/// Zero rows with a zero right-hand side carry no information and are dropped;
/// a zero row with a nonzero right-hand side makes the system inconsistent.
pub fn normalize_rows(a: &RowMatrix, b: &[f64]) -> Result<NormalizedSystem> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, right-hand side has {} entries",
            a.nrows(),
            b.len()
        )));
    }
    let mut data = Vec::with_capacity(a.as_slice().len());
    let mut rhs = Vec::with_capacity(b.len());
    let mut dropped_rows = Vec::new();
    for (i, row) in a.rows().enumerate() {
        let norm = a.row_norm(i);
        if norm == 0.0 {
            if b[i] != 0.0 {
                return Err(Error::ZeroRowInconsistent { row: i, rhs: b[i] });
            }
            dropped_rows.push(i);
            continue;
        }
        data.extend(row.iter().map(|v| v / norm));
        rhs.push(b[i] / norm);
    }
    let nrows = rhs.len();
    Ok(NormalizedSystem {
        matrix: RowMatrix::new(nrows, a.ncols(), data)?,
        rhs: Vector::new(rhs)?,
        dropped_rows,
    })
}

/// `A x − b`.
pub fn residual(a: &RowMatrix, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, right-hand side has {} entries",
            a.nrows(),
            b.len()
        )));
    }
    let mut r = a.matvec(x)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    Ok(r)
}
