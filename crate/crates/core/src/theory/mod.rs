//! Convergence constants and bounds, evaluated numerically.
//!
//! The noiseless rate for the weighted family is
//!
//! ```text
//! q = 1 − ½ σ̃²_min(A) · |x̂|_min / (|x̂|_min + 2λ) · inf_z ‖Az‖_{p+2}^{p+2} / (‖Az‖_p^p ‖Az‖₂²)
//! ```
//!
//! The infimum is not computed; [`contraction_factors`] uses its lower bound
//! `1/m`, which is attained exactly when `|Az|` is constant.

pub mod svd;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bregman::soft_shrink;
use crate::error::{Error, Result};
use crate::linalg::{lp_norm_pow, norm1, norm2, norm_inf, RowMatrix};
use crate::problem::Problem;
use crate::rng::SeededRng;
use crate::solver::StepRule;

/// Exhaustive subset enumeration is refused above this many columns.
pub const MAX_ENUM_COLUMNS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub sigma_tilde_min: f64,
    pub x_hat_min: f64,
    pub q_wrask_lower: f64,
    /// `(p, ratio(Az, p))` at the supplied sample points.
    pub ratio_samples: Vec<(f64, f64)>,
    pub q_rask: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBoundInputs {
    /// Bound on `‖b^δ − b‖_{p+2}`.
    pub delta: f64,
    /// Norm-equivalence constant `c`.
    pub c_equiv: f64,
    /// Stand-in for the mixed norm `‖A‖_{1,p+2}`.
    pub a_norm_mixed: f64,
}

impl NoiseBoundInputs {
    /// `c = m^{2/(p(p+2))}` so that `c^p = m^{2/(p+2)}`, and the largest row
    /// 1-norm for the mixed norm.
    pub fn defaults(a: &RowMatrix, p: f64, delta: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidExponent(p));
        }
        let m = a.nrows() as f64;
        Ok(NoiseBoundInputs {
            delta,
            c_equiv: m.powf(2.0 / (p * (p + 2.0))),
            a_norm_mixed: a.rows().map(norm1).fold(0.0, f64::max),
        })
    }
}

/// `‖g‖_{p+2}^{p+2} / (‖g‖_p^p ‖g‖₂²)`, with `‖g‖_0^0` the nonzero count.
///
/// Always at least `1/len(g)`.
pub fn ratio(g: &[f64], p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    let scale = norm_inf(g);
    if scale == 0.0 {
        return Err(Error::ZeroVector);
    }
    if !scale.is_finite() {
        return Err(Error::NonFinite("ratio argument"));
    }
    // every power of the scale cancels, so work with entries in [0, 1]
    let u: Vec<f64> = g.iter().map(|v| v.abs() / scale).collect();
    let top = lp_norm_pow(&u, p + 2.0);
    let mid = lp_norm_pow(&u, p);
    let sq = lp_norm_pow(&u, 2.0);
    Ok(top / (mid * sq))
}

/// `Σ e^{d_i(x+2)} / Σ e^{d_i x}`, evaluated as a difference of log-sum-exps.
pub fn exp_ratio(d: &[f64], x: f64) -> f64 {
    assert!(!d.is_empty(), "need at least one exponent");
    let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = |scale: f64| -> f64 {
        let s: f64 = d.iter().map(|di| ((di - dmax) * scale).exp()).sum();
        s.ln() + dmax * scale
    };
    (lse(x + 2.0) - lse(x)).exp()
}

/// Smallest nonzero `|x_j|`.
pub fn min_nonzero_magnitude(x: &[f64]) -> Option<f64> {
    x.iter().map(|v| v.abs()).filter(|v| *v > 0.0).reduce(f64::min)
}

fn columns(a: &RowMatrix) -> Vec<Vec<f64>> {
    (0..a.ncols()).map(|j| a.rows().map(|r| r[j]).collect()).collect()
}

fn subset_smallest(cols: &[Vec<f64>], nrows: usize, subset: impl Iterator<Item = usize>) -> Option<f64> {
    let block: Vec<Vec<f64>> = subset.map(|j| cols[j].clone()).collect();
    let k = block.len();
    svd::smallest_nonzero(&svd::singular_values(nrows, k, block))
}

/// `min_J σ_min⁺(A_J)` over all column subsets `J` with `A_J ≠ 0`, where
/// `σ_min⁺` is the smallest nonzero singular value. Refused for `n > 20`.
///
/// Full-column-rank matrices are answered by [`full_rank_sigma_min`] instead
/// of enumerating.
pub fn sigma_tilde_min(a: &RowMatrix) -> Result<f64> {
    if a.frobenius_sq() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    if a.ncols() > MAX_ENUM_COLUMNS {
        return Err(Error::TooManyColumns { n: a.ncols(), limit: MAX_ENUM_COLUMNS });
    }
    match full_rank_sigma_min(a) {
        Some(s) => Ok(s),
        None => sigma_tilde_min_enumerated(a),
    }
}

/// `σ_min(A)` when `A` has full column rank, `None` otherwise.
///
/// For such `A` every column submatrix also has full column rank and, by
/// interlacing, no smaller singular value, so this equals σ̃_min for any `n`.
pub fn full_rank_sigma_min(a: &RowMatrix) -> Option<f64> {
    if a.nrows() < a.ncols() {
        return None;
    }
    let sv = svd::singular_values(a.nrows(), a.ncols(), columns(a));
    let smallest = sv[sv.len() - 1];
    (smallest > svd::ZERO_THRESHOLD * sv[0].max(1.0)).then_some(smallest)
}

/// Exhaustive enumeration, without the full-rank shortcut.
pub fn sigma_tilde_min_enumerated(a: &RowMatrix) -> Result<f64> {
    let n = a.ncols();
    if n > MAX_ENUM_COLUMNS {
        return Err(Error::TooManyColumns { n, limit: MAX_ENUM_COLUMNS });
    }
    let cols = columns(a);
    let m = a.nrows();
    (1u32..1 << n)
        .into_par_iter()
        .filter_map(|mask| subset_smallest(&cols, m, (0..n).filter(move |j| mask >> j & 1 == 1)))
        .reduce_with(f64::min)
        .ok_or(Error::ZeroMatrix)
}

/// Minimum over `samples` random subsets plus the full set and every
/// singleton. This is only an UPPER bound on σ̃_min; use it when `n` is too
/// large to enumerate.
pub fn sigma_tilde_min_sampled(a: &RowMatrix, samples: usize, seed: u64) -> Result<f64> {
    if a.frobenius_sq() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let n = a.ncols();
    let m = a.nrows();
    let cols = columns(a);
    let mut rng = SeededRng::new(seed);
    let mut subsets: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
    subsets.push((0..n).collect());
    for _ in 0..samples {
        let size = 1 + rng.index(n);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..size {
            let j = i + rng.index(n - i);
            perm.swap(i, j);
        }
        perm.truncate(size);
        perm.sort_unstable();
        subsets.push(perm);
    }
    subsets
        .par_iter()
        .filter_map(|s| subset_smallest(&cols, m, s.iter().copied()))
        .reduce_with(f64::min)
        .ok_or(Error::ZeroMatrix)
}

/// `1 − ½ σ² · x_min/(x_min + 2λ) · inf_ratio`.
pub fn contraction_factor(sigma_tilde: f64, x_hat_min: f64, lambda: f64, inf_ratio: f64) -> f64 {
    1.0 - 0.5 * sigma_tilde * sigma_tilde * (x_hat_min / (x_hat_min + 2.0 * lambda)) * inf_ratio
}

/// Rate constants for a row-normalized `A` and ground truth `x̂ ≠ 0`.
///
/// `samples` are points `z` at which `ratio(Az, p)` is reported.
pub fn contraction_factors(
    a: &RowMatrix,
    x_hat: &[f64],
    lambda: f64,
    p: f64,
    samples: &[Vec<f64>],
) -> Result<TheoryReport> {
    check_inputs(a, x_hat)?;
    report_with_sigma(a, sigma_tilde_min(a)?, x_hat, lambda, p, samples)
}

fn check_inputs(a: &RowMatrix, x_hat: &[f64]) -> Result<()> {
    if x_hat.len() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns, ground truth has {} entries",
            a.ncols(),
            x_hat.len()
        )));
    }
    if let Some(row) = a.row_norms().iter().position(|r| (r - 1.0).abs() > 1e-10) {
        return Err(Error::NotNormalized { row, norm: a.row_norm(row) });
    }
    Ok(())
}

/// As [`contraction_factors`], with σ̃_min supplied by the caller.
pub fn report_with_sigma(
    a: &RowMatrix,
    sigma: f64,
    x_hat: &[f64],
    lambda: f64,
    p: f64,
    samples: &[Vec<f64>],
) -> Result<TheoryReport> {
    check_inputs(a, x_hat)?;
    let x_hat_min = min_nonzero_magnitude(x_hat).ok_or(Error::ZeroVector)?;
    let m = a.nrows() as f64;
    let ratio_samples = samples
        .iter()
        .map(|z| Ok((p, ratio(&a.matvec(z)?, p)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TheoryReport {
        sigma_tilde_min: sigma,
        x_hat_min,
        q_wrask_lower: contraction_factor(sigma, x_hat_min, lambda, 1.0 / m),
        ratio_samples,
        q_rask: contraction_factor(sigma, x_hat_min, lambda, 1.0 / a.frobenius_sq()),
    })
}

/// Right-hand side of the noisy-data error bound after `k` iterations:
///
/// ```text
/// Inexact: q^{k/2} √(2λ‖x̂‖₁ + ‖x̂‖²) + δ √(c^p q/(1−q))
/// Exact:   q^{k/2} √(2λ‖x̂‖₁ + ‖x̂‖²) + √((δ² + 4λ‖A‖_{1,p+2} δ) c^p q/(1−q))
/// ```
pub fn noisy_bound(
    problem: &Problem,
    q: f64,
    p: f64,
    k: usize,
    inputs: &NoiseBoundInputs,
    variant: StepRule,
) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DegenerateQ(q));
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    let x_hat = problem.x_hat.as_deref().ok_or(Error::MissingGroundTruth)?;
    let lambda = problem.lambda;
    let NoiseBoundInputs { delta, c_equiv, a_norm_mixed } = *inputs;
    if !(delta.is_finite() && delta >= 0.0 && c_equiv > 0.0 && a_norm_mixed >= 0.0) {
        return Err(Error::InvalidConfig("noise bound inputs must be finite and nonnegative".into()));
    }
    let x2 = norm2(x_hat);
    let head = q.powf(k as f64 / 2.0) * (2.0 * lambda * norm1(x_hat) + x2 * x2).sqrt();
    let spread = c_equiv.powf(p) * q / (1.0 - q);
    let tail = match variant {
        StepRule::Inexact => delta * spread.sqrt(),
        StepRule::Exact => ((delta * delta + 4.0 * lambda * a_norm_mixed * delta) * spread).sqrt(),
    };
    Ok(head + tail)
}

/// Largest eigenvalue of `AᵀA` by power iteration.
pub fn spectral_norm_sq(a: &RowMatrix) -> f64 {
    let n = a.ncols();
    let mut v: Vec<f64> = (0..n).map(|j| 1.0 + j as f64 / n as f64).collect();
    let mut est = 0.0;
    for _ in 0..10_000 {
        let av = a.matvec(&v).expect("length matches");
        let w = a.tr_matvec(&av).expect("length matches");
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let nv = norm2(&v);
        let next = nw / nv;
        v = w.into_iter().map(|x| x / nw).collect();
        if (next - est).abs() <= 1e-15 * next {
            return next;
        }
        est = next;
    }
    est
}

/// Solution of `min λ‖x‖₁ + ½‖x‖² s.t. Ax = b`, by gradient ascent on the dual
/// `g(y) = bᵀy − ½‖S_λ(Aᵀy)‖²` with step `1/‖A‖₂²`, until `‖∇g‖ ≤ 1e-10`.
///
/// Independent of any Kaczmarz path; meant as a reference for small systems.
pub fn solve_oracle(a: &RowMatrix, b: &[f64], lambda: f64) -> Result<Vec<f64>> {
    solve_oracle_with(a, b, lambda, 1e-10, 5_000_000)
}

pub fn solve_oracle_with(a: &RowMatrix, b: &[f64], lambda: f64, tol: f64, max_iters: usize) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch("right-hand side length".into()));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let l = spectral_norm_sq(a);
    if l == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let step = 1.0 / l;
    let mut y = vec![0.0; a.nrows()];
    let mut grad_norm = f64::INFINITY;
    for _ in 0..max_iters {
        let x = soft_shrink(&a.tr_matvec(&y)?, lambda);
        let ax = a.matvec(&x)?;
        let grad: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
        grad_norm = norm2(&grad);
        if grad_norm <= tol {
            return Ok(x);
        }
        for (yi, gi) in y.iter_mut().zip(&grad) {
            *yi += step * gi;
        }
    }
    Err(Error::NotConverged { iterations: max_iters, grad_norm })
}
