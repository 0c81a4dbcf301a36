//! Test problems: generation, noise injection and consistency checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lp_norm, normalize_rows, norm_inf, residual, sub, RowMatrix, Vector};
use crate::rng::SeededRng;

/// A linear system together with what is known about its solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub a: RowMatrix,
    pub b: Vector,
    /// Ground truth, when known.
    pub x_hat: Option<Vector>,
    pub lambda: f64,
    /// Bound on `‖b − A x̂‖_{p+2}` when `b` carries injected noise.
    pub noise_delta: Option<f64>,
    /// Every row of `a` has unit 2-norm.
    pub normalized: bool,
}

/// Tolerance used to decide whether rows are already unit length.
pub const NORMALIZED_TOL: f64 = 1e-12;

impl Problem {
    pub fn new(a: RowMatrix, b: Vector, x_hat: Option<Vector>, lambda: f64) -> Result<Self> {
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, right-hand side has {} entries",
                a.nrows(),
                b.len()
            )));
        }
        if let Some(x) = &x_hat {
            if x.len() != a.ncols() {
                return Err(Error::DimensionMismatch(format!(
                    "matrix has {} columns, ground truth has {} entries",
                    a.ncols(),
                    x.len()
                )));
            }
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let normalized = a.is_row_normalized(NORMALIZED_TOL);
        Ok(Problem {
            a,
            b,
            x_hat,
            lambda,
            noise_delta: None,
            normalized,
        })
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols()
    }

    /// Row-normalized copy. Rows that are zero in both `A` and `b` are dropped.
    pub fn normalized(&self) -> Result<Problem> {
        if self.normalized {
            return Ok(self.clone());
        }
        let sys = normalize_rows(&self.a, &self.b)?;
        Ok(Problem {
            a: sys.matrix,
            b: sys.rhs,
            x_hat: self.x_hat.clone(),
            lambda: self.lambda,
            noise_delta: self.noise_delta,
            normalized: true,
        })
    }

    /// `‖A x̂ − b‖∞`, if the ground truth is known.
    pub fn consistency_gap(&self) -> Option<f64> {
        let x = self.x_hat.as_ref()?;
        residual(&self.a, x, &self.b).ok().map(|r| norm_inf(&r))
    }
}

/// Gaussian test problem: i.i.d. standard-normal `A`, row-normalized, with an
/// `sparsity`-sparse Gaussian ground truth and exact data `b = A x̂`.
pub fn gen_gaussian_problem(m: usize, n: usize, sparsity: usize, lambda: f64, seed: u64) -> Result<Problem> {
    if sparsity == 0 || sparsity > n {
        return Err(Error::InvalidSparsity { sparsity, n });
    }
    if m == 0 || n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut rng = SeededRng::new(seed);
    let data: Vec<f64> = (0..m * n).map(|_| rng.normal()).collect();
    let raw = RowMatrix::new(m, n, data)?;
    let zeros = vec![0.0; m];
    let a = normalize_rows(&raw, &zeros)?.matrix;
    let x_hat = sparse_gaussian(n, sparsity, &mut rng);
    let b = a.matvec(&x_hat)?;
    Problem::new(a, Vector::new(b)?, Some(Vector::new(x_hat)?), lambda)
}

/// Ground truth for a given matrix: `sparsity` uniformly chosen positions with
/// standard-normal values, and `b = A x̂`.
pub fn problem_from_matrix(a: RowMatrix, sparsity: usize, lambda: f64, seed: u64) -> Result<Problem> {
    let n = a.ncols();
    if sparsity == 0 || sparsity > n {
        return Err(Error::InvalidSparsity { sparsity, n });
    }
    let mut rng = SeededRng::new(seed);
    let x_hat = sparse_gaussian(n, sparsity, &mut rng);
    let b = a.matvec(&x_hat)?;
    Problem::new(a, Vector::new(b)?, Some(Vector::new(x_hat)?), lambda)
}

/// `sparsity` distinct positions by a partial Fisher–Yates shuffle; values are
/// standard normal, redrawn if exactly zero.
fn sparse_gaussian(n: usize, sparsity: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut positions: Vec<usize> = (0..n).collect();
    for i in 0..sparsity {
        let j = i + rng.index(n - i);
        positions.swap(i, j);
    }
    let mut x = vec![0.0; n];
    for &pos in &positions[..sparsity] {
        let mut v = rng.normal();
        while v == 0.0 {
            v = rng.normal();
        }
        x[pos] = v;
    }
    x
}

/// Adds Gaussian noise rescaled so that `‖b^δ − b‖_{p+2} = delta`.
pub fn add_noise(problem: &Problem, delta: f64, p: f64, seed: u64) -> Result<Problem> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidConfig(format!("noise level must be positive, got {delta}")));
    }
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    let mut rng = SeededRng::new(seed);
    let mut r: Vec<f64> = (0..problem.b.len()).map(|_| rng.normal()).collect();
    let norm = lp_norm(&r, p + 2.0);
    if norm == 0.0 {
        return Err(Error::InvalidConfig("degenerate noise draw".into()));
    }
    let scale = delta / norm;
    for ri in &mut r {
        *ri *= scale;
    }
    let b: Vec<f64> = problem.b.iter().zip(&r).map(|(bi, ri)| bi + ri).collect();
    Ok(Problem {
        b: Vector::new(b)?,
        noise_delta: Some(delta),
        ..problem.clone()
    })
}

/// `‖b − A x̂‖_{q}` for `q = p + 2`.
pub fn noise_norm(problem: &Problem, p: f64) -> Option<f64> {
    let x = problem.x_hat.as_ref()?;
    let ax = problem.a.matvec(x).ok()?;
    Some(lp_norm(&sub(&problem.b, &ax), p + 2.0))
}

/// Problem manifest stored next to the data files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemManifest {
    pub m: usize,
    pub n: usize,
    pub sparsity: Option<usize>,
    pub lambda: f64,
    pub seed: Option<u64>,
    pub noise_delta: Option<f64>,
    pub noise_p: Option<f64>,
    pub normalized: bool,
    pub matrix: String,
    pub rhs: String,
    pub x_hat: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_ground_truth_when_sparsity_is_n() {
        let p = gen_gaussian_problem(6, 5, 5, 1.0, 1).unwrap();
        assert!(p.x_hat.as_ref().unwrap().iter().all(|v| *v != 0.0));
    }

    #[test]
    fn generation_is_deterministic_and_consistent() {
        let p1 = gen_gaussian_problem(30, 20, 4, 1.0, 99).unwrap();
        let p2 = gen_gaussian_problem(30, 20, 4, 1.0, 99).unwrap();
        assert_eq!(p1, p2);
        assert!(p1.normalized);
        assert!(p1.consistency_gap().unwrap() <= 1e-10);
        let nnz = p1.x_hat.as_ref().unwrap().iter().filter(|v| **v != 0.0).count();
        assert_eq!(nnz, 4);
        assert_ne!(p1, gen_gaussian_problem(30, 20, 4, 1.0, 100).unwrap());
    }

    #[test]
    fn invalid_sparsity() {
        assert!(matches!(gen_gaussian_problem(3, 3, 0, 1.0, 1), Err(Error::InvalidSparsity { .. })));
        assert!(matches!(gen_gaussian_problem(3, 3, 4, 1.0, 1), Err(Error::InvalidSparsity { .. })));
    }

    #[test]
    fn noise_hits_delta_exactly() {
        let p = gen_gaussian_problem(40, 20, 3, 1.0, 5).unwrap();
        for (delta, q) in [(0.1, 2.0), (0.5, 0.5), (3.0, 10.0)] {
            let noisy = add_noise(&p, delta, q, 8).unwrap();
            let got = noise_norm(&noisy, q).unwrap();
            assert!((got - delta).abs() <= 1e-12 * delta, "{got} vs {delta}");
            assert_eq!(noisy.noise_delta, Some(delta));
            assert_eq!(noisy, add_noise(&p, delta, q, 8).unwrap());
        }
        let tiny = add_noise(&p, 1e-300, 2.0, 1).unwrap();
        for (x, y) in tiny.b.iter().zip(p.b.iter()) {
            assert_eq!(x, y);
        }
    }
}
