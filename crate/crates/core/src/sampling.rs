//! Row-selection rules.
//!
//! * `RowNorm`: `P(i) = ‖a_i‖² / ‖A‖_F²`, uniform on normalized rows.
//! * `Weighted(p)`: `P(i) = |r_i|^p / ‖r‖_p^p` for the current residual `r`.
//! * `Greedy`: the maximal-correction row, i.e. the `p → ∞` limit.
//! * `PartiallyWeighted`: draw rows uniformly without replacement and stop at
//!   the first draw whose residual is smaller than the current candidate's.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, RowMatrix};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p")]
pub enum SamplingRule {
    RowNorm,
    Weighted(f64),
    Greedy,
    PartiallyWeighted,
}

impl SamplingRule {
    pub fn weighted(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(SamplingRule::Weighted(p))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SamplingRule::Weighted(p) => check_exponent(p),
            _ => Ok(()),
        }
    }

    /// Whether the rule reads the full residual vector every iteration.
    pub fn needs_full_residual(&self) -> bool {
        matches!(self, SamplingRule::Weighted(_) | SamplingRule::Greedy)
    }
}

impl fmt::Display for SamplingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplingRule::RowNorm => write!(f, "row-norm"),
            SamplingRule::Weighted(p) => write!(f, "weighted(p={p})"),
            SamplingRule::Greedy => write!(f, "greedy"),
            SamplingRule::PartiallyWeighted => write!(f, "partially-weighted"),
        }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

/// Unnormalized weights `(|r_i| / max|r|)^p`; the largest entry is exactly 1.
fn scaled_powers(residuals: &[f64], p: f64) -> Result<Vec<f64>> {
    check_exponent(p)?;
    let scale = norm_inf(residuals);
    if scale == 0.0 {
        return Err(Error::AllZeroResiduals);
    }
    Ok(residuals
        .iter()
        .map(|r| (r.abs() / scale).powf(p))
        .collect())
}

/// Probability vector `|r_i|^p / Σ_j |r_j|^p`.
pub fn weights(residuals: &[f64], p: f64) -> Result<Vec<f64>> {
    let mut w = scaled_powers(residuals, p)?;
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    Ok(w)
}

/// One inverse-CDF draw from unnormalized nonnegative weights.
fn categorical(weights: &[f64], rng: &mut SeededRng) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if acc > u {
                return i;
            }
        }
    }
    last_positive
}

pub fn sample_weighted(residuals: &[f64], p: f64, rng: &mut SeededRng) -> Result<usize> {
    let w = scaled_powers(residuals, p)?;
    Ok(categorical(&w, rng))
}

/// Lowest index attaining `max |r_i|`.
pub fn sample_greedy(residuals: &[f64]) -> Result<usize> {
    let mut best = 0;
    let mut best_abs = 0.0;
    for (i, r) in residuals.iter().enumerate() {
        if r.abs() > best_abs {
            best = i;
            best_abs = r.abs();
        }
    }
    if best_abs == 0.0 {
        Err(Error::AllZeroResiduals)
    } else {
        Ok(best)
    }
}

/// Precomputed inverse CDF over squared row norms.
#[derive(Debug, Clone)]
pub struct RowNormSampler {
    cdf: Vec<f64>,
}

impl RowNormSampler {
    pub fn new(a: &RowMatrix) -> Self {
        let mut acc = 0.0;
        let cdf = a
            .row_norms()
            .iter()
            .map(|r| {
                acc += r * r;
                acc
            })
            .collect();
        RowNormSampler { cdf }
    }

    pub fn sample(&self, rng: &mut SeededRng) -> usize {
        let total = *self.cdf.last().expect("matrix has at least one row");
        let u = rng.uniform() * total;
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

pub fn sample_row_norm(a: &RowMatrix, rng: &mut SeededRng) -> usize {
    RowNormSampler::new(a).sample(rng)
}

/// Candidate-comparison selection over `m` rows.
///
/// Rows are drawn uniformly without replacement. The current candidate is
/// returned as soon as a newly drawn row has a strictly smaller residual
/// magnitude; otherwise the new row becomes the candidate. If every row has
/// been drawn, the last candidate is returned. Residual magnitudes are read
/// lazily through `abs_residual`, so only the compared rows are evaluated.
#[derive(Debug, Clone)]
pub struct PartialSelector {
    perm: Vec<usize>,
    swaps: Vec<(usize, usize)>,
}

impl PartialSelector {
    pub fn new(m: usize) -> Self {
        assert!(m > 0, "need at least one row");
        PartialSelector {
            perm: (0..m).collect(),
            swaps: Vec::new(),
        }
    }

    pub fn select(
        &mut self,
        mut abs_residual: impl FnMut(usize) -> f64,
        rng: &mut SeededRng,
    ) -> usize {
        let m = self.perm.len();
        let mut drawn = 0;
        let mut draw = |perm: &mut Vec<usize>, swaps: &mut Vec<(usize, usize)>, rng: &mut SeededRng| {
            let j = drawn + rng.index(m - drawn);
            perm.swap(drawn, j);
            swaps.push((drawn, j));
            drawn += 1;
            perm[drawn - 1]
        };
        let mut candidate = draw(&mut self.perm, &mut self.swaps, rng);
        let mut candidate_res = abs_residual(candidate);
        let chosen = loop {
            if self.swaps.len() == m {
                break candidate;
            }
            let next = draw(&mut self.perm, &mut self.swaps, rng);
            let next_res = abs_residual(next);
            if candidate_res > next_res {
                break candidate;
            }
            candidate = next;
            candidate_res = next_res;
        };
        // restore the identity permutation for the next call
        while let Some((i, j)) = self.swaps.pop() {
            self.perm.swap(i, j);
        }
        chosen
    }
}

pub fn sample_partially_weighted(residuals: &[f64], rng: &mut SeededRng) -> usize {
    PartialSelector::new(residuals.len()).select(|i| residuals[i].abs(), rng)
}
