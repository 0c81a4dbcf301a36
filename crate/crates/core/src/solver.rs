//! The Kaczmarz iteration engine.
//!
//! Every variant shares one update. Starting from `x₀ = x*₀ = 0`, each
//! iteration picks a row `i` by the configured [`SamplingRule`], computes a
//! step `t` and sets
//!
//! ```text
//! x*_{k+1} = x*_k − t a_i,    x_{k+1} = S_λ(x*_{k+1})
//! ```
//!
//! With `λ = 0` and the row-norm rule this is the classical randomized
//! Kaczmarz method.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bregman::{bregman_distance, exact_step, shrink_scalar, PrimalDualPair};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, RowMatrix};
use crate::problem::Problem;
use crate::rng::SeededRng;
use crate::sampling::{sample_greedy, sample_weighted, PartialSelector, RowNormSampler, SamplingRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepRule {
    /// `t = (⟨a_i, x_k⟩ − b_i) / ‖a_i‖²`
    Inexact,
    /// Exact Bregman projection onto the selected hyperplane.
    Exact,
}

/// Which iterations end up in the history.
///
/// Every `every`-th iteration is kept up to `dense_until`; past that the
/// stride doubles each time the iteration count doubles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSchedule {
    pub every: usize,
    pub dense_until: usize,
}

impl Default for RecordSchedule {
    fn default() -> Self {
        RecordSchedule {
            every: 1,
            dense_until: usize::MAX,
        }
    }
}

impl RecordSchedule {
    pub fn every(every: usize) -> Self {
        RecordSchedule {
            every: every.max(1),
            dense_until: usize::MAX,
        }
    }

    pub fn records(&self, k: usize) -> bool {
        let every = self.every.max(1);
        if k <= self.dense_until {
            return k % every == 0;
        }
        let ratio = k / self.dense_until.max(1);
        let octave = usize::BITS - ratio.leading_zeros();
        let stride = every.saturating_mul(1usize << octave.min(usize::BITS - 1));
        k % stride == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rule: SamplingRule,
    pub step: StepRule,
    pub lambda: f64,
    pub max_iters: usize,
    /// Stop once `‖x − x̂‖/‖x̂‖ < tol_error`; zero disables. Needs a ground truth.
    pub tol_error: f64,
    /// Stop once `‖Ax − b‖/‖b‖ < tol_residual`; zero disables.
    pub tol_residual: f64,
    pub seed: u64,
    pub record: RecordSchedule,
}

impl SolverConfig {
    pub fn new(rule: SamplingRule, step: StepRule, lambda: f64) -> Self {
        SolverConfig {
            rule,
            step,
            lambda,
            max_iters: 200_000,
            tol_error: 0.0,
            tol_residual: 0.0,
            seed: 0,
            record: RecordSchedule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rule.validate()?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        for (name, tol) in [("tol_error", self.tol_error), ("tol_residual", self.tol_residual)] {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ErrorTol,
    ResidualTol,
    MaxIters,
    ExactlySolved,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StopReason::ErrorTol => "ErrorTol",
            StopReason::ResidualTol => "ResidualTol",
            StopReason::MaxIters => "MaxIters",
            StopReason::ExactlySolved => "ExactlySolved",
        };
        f.write_str(s)
    }
}

/// State after `iter` iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Row used for the update that produced this iterate.
    pub row: Option<usize>,
    pub rel_residual: f64,
    pub rel_error: Option<f64>,
    pub bregman_dist: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub records: Vec<IterRecord>,
    pub stop_reason: StopReason,
}

impl RunHistory {
    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("history always holds the final iterate")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub x_star: Vec<f64>,
    pub history: RunHistory,
    /// Number of updates performed.
    pub iterations_used: usize,
    /// The input rows were rescaled before solving.
    pub auto_normalized: bool,
    pub elapsed_s: f64,
}

/// `⟨a, x⟩ − β`: the step for unit-norm rows.
pub fn inexact_step_size(a: &[f64], x: &[f64], beta: f64) -> f64 {
    dot(a, x) - beta
}

/// `x* ← x* − t a`, `x ← S_λ(x*)`.
pub fn kaczmarz_iterate(state: &mut PrimalDualPair, a: &[f64], t: f64, lambda: f64) {
    for ((xs, xi), &aj) in state.x_star.iter_mut().zip(state.x.iter_mut()).zip(a) {
        *xs -= t * aj;
        *xi = shrink_scalar(*xs, lambda);
    }
}

/// What a single iteration did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub row: usize,
    /// `⟨a_i, x_k⟩ − b_i` before the update.
    pub row_residual: f64,
    pub t: f64,
}

/// Step-by-step driver over a borrowed system.
pub struct Solver<'a> {
    a: &'a RowMatrix,
    b: &'a [f64],
    config: SolverConfig,
    state: PrimalDualPair,
    rng: SeededRng,
    row_sq_norms: Vec<f64>,
    row_sampler: Option<RowNormSampler>,
    selector: Option<PartialSelector>,
    residual: Vec<f64>,
    residual_fresh: bool,
    k: usize,
}

impl<'a> Solver<'a> {
    pub fn new(a: &'a RowMatrix, b: &'a [f64], config: SolverConfig) -> Result<Self> {
        config.validate()?;
        if b.len() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "matrix has {} rows, right-hand side has {} entries",
                a.nrows(),
                b.len()
            )));
        }
        let row_sampler = matches!(config.rule, SamplingRule::RowNorm).then(|| RowNormSampler::new(a));
        let selector =
            matches!(config.rule, SamplingRule::PartiallyWeighted).then(|| PartialSelector::new(a.nrows()));
        Ok(Solver {
            a,
            b,
            config,
            state: PrimalDualPair::zeros(a.ncols()),
            rng: SeededRng::new(config.seed),
            row_sq_norms: a.rows().map(|r| dot(r, r)).collect(),
            row_sampler,
            selector,
            residual: vec![0.0; a.nrows()],
            residual_fresh: false,
            k: 0,
        })
    }

    /// Continues from a given dual iterate instead of zero.
    pub fn with_dual(mut self, x_star: Vec<f64>) -> Result<Self> {
        if x_star.len() != self.a.ncols() {
            return Err(Error::DimensionMismatch("dual iterate length".into()));
        }
        self.state = PrimalDualPair::from_dual(x_star, self.config.lambda);
        self.residual_fresh = false;
        Ok(self)
    }

    pub fn state(&self) -> &PrimalDualPair {
        &self.state
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// `A x_k − b` for the current iterate.
    pub fn residual(&mut self) -> &[f64] {
        if !self.residual_fresh {
            for ((ri, row), bi) in self.residual.iter_mut().zip(self.a.rows()).zip(self.b) {
                *ri = dot(row, &self.state.x) - bi;
            }
            self.residual_fresh = true;
        }
        &self.residual
    }

    fn row_residual(&self, i: usize) -> f64 {
        if self.residual_fresh {
            self.residual[i]
        } else {
            inexact_step_size(self.a.row(i), &self.state.x, self.b[i])
        }
    }

    fn select_row(&mut self) -> Result<usize> {
        match self.config.rule {
            SamplingRule::RowNorm => {
                let sampler = self.row_sampler.as_ref().expect("built for the row-norm rule");
                Ok(sampler.sample(&mut self.rng))
            }
            SamplingRule::Weighted(p) => {
                self.residual();
                sample_weighted(&self.residual, p, &mut self.rng)
            }
            SamplingRule::Greedy => {
                self.residual();
                sample_greedy(&self.residual)
            }
            SamplingRule::PartiallyWeighted => {
                let mut selector = self.selector.take().expect("built for the partial rule");
                let mut rng = self.rng.clone();
                let row = selector.select(|i| self.row_residual(i).abs(), &mut rng);
                self.rng = rng;
                self.selector = Some(selector);
                Ok(row)
            }
        }
    }

    /// Performs one update. Fails with [`Error::AllZeroResiduals`] when a
    /// residual-driven rule finds the system already solved.
    pub fn step(&mut self) -> Result<StepInfo> {
        let row = self.select_row()?;
        let a = self.a.row(row);
        let beta = self.b[row];
        let row_residual = self.row_residual(row);
        let t = match self.config.step {
            StepRule::Inexact => row_residual / self.row_sq_norms[row],
            StepRule::Exact => exact_step(&self.state.x_star, a, beta, self.config.lambda)?,
        };
        if !t.is_finite() {
            return Err(Error::NonFiniteIterate { iteration: self.k });
        }
        kaczmarz_iterate(&mut self.state, a, t, self.config.lambda);
        self.residual_fresh = false;
        self.k += 1;
        Ok(StepInfo { row, row_residual, t })
    }

    pub fn into_state(self) -> PrimalDualPair {
        self.state
    }
}

/// Runs the configured method from `x₀ = x*₀ = 0` until a stopping rule fires.
///
/// Unnormalized problems are row-normalized first; this does not change the
/// solution set but does change the reported relative residuals.
pub fn solve(problem: &Problem, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let owned;
    let (prob, auto_normalized) = if problem.normalized {
        (problem, false)
    } else {
        owned = problem.normalized()?;
        (&owned, true)
    };
    let b_norm = norm2(&prob.b);
    if b_norm == 0.0 {
        return Err(Error::InvalidConfig("right-hand side is zero; the solution is x = 0".into()));
    }
    let x_hat = prob.x_hat.as_deref();
    let x_hat_norm = x_hat.map(norm2).filter(|v| *v > 0.0);
    if config.tol_error > 0.0 && x_hat_norm.is_none() {
        return Err(Error::MissingGroundTruth);
    }

    let mut solver = Solver::new(&prob.a, &prob.b, *config)?;
    let start = Instant::now();
    let mut records = Vec::new();
    let mut last_row = None;
    let lambda = config.lambda;

    let rel_error = |x: &[f64]| -> Option<f64> {
        let xh = x_hat?;
        let d: f64 = x.iter().zip(xh).map(|(a, b)| (a - b) * (a - b)).sum();
        Some(d.sqrt() / x_hat_norm?)
    };

    let stop_reason = loop {
        let k = solver.iteration();
        let err = rel_error(&solver.state().x);
        let mut reason = None;
        if config.tol_error > 0.0 && err.is_some_and(|e| e < config.tol_error) {
            reason = Some(StopReason::ErrorTol);
        }
        let mut rel_res = None;
        if reason.is_none() && config.tol_residual > 0.0 {
            let r = norm2(solver.residual()) / b_norm;
            rel_res = Some(r);
            if r < config.tol_residual {
                reason = Some(StopReason::ResidualTol);
            }
        }
        if reason.is_none() && k >= config.max_iters {
            reason = Some(StopReason::MaxIters);
        }
        if reason.is_some() || config.record.records(k) {
            let rel_res = rel_res.unwrap_or_else(|| norm2(solver.residual()) / b_norm);
            records.push(make_record(&solver, k, last_row, rel_res, err, x_hat, lambda, start));
        }
        if let Some(r) = reason {
            break r;
        }
        match solver.step() {
            Ok(info) => last_row = Some(info.row),
            Err(Error::AllZeroResiduals) => {
                if records.last().map(|r| r.iter) != Some(k) {
                    records.push(make_record(&solver, k, last_row, 0.0, err, x_hat, lambda, start));
                }
                break StopReason::ExactlySolved;
            }
            Err(e) => return Err(e),
        }
    };

    let iterations_used = solver.iteration();
    let elapsed_s = start.elapsed().as_secs_f64();
    let state = solver.into_state();
    if state.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteIterate { iteration: iterations_used });
    }
    Ok(SolveResult {
        x: state.x,
        x_star: state.x_star,
        history: RunHistory { records, stop_reason },
        iterations_used,
        auto_normalized,
        elapsed_s,
    })
}

#[allow(clippy::too_many_arguments)]
fn make_record(
    solver: &Solver<'_>,
    k: usize,
    row: Option<usize>,
    rel_residual: f64,
    rel_error: Option<f64>,
    x_hat: Option<&[f64]>,
    lambda: f64,
    start: Instant,
) -> IterRecord {
    let state = solver.state();
    IterRecord {
        iter: k,
        row,
        rel_residual,
        rel_error,
        bregman_dist: x_hat.and_then(|xh| bregman_distance(&state.x, &state.x_star, xh, lambda).ok()),
        elapsed_s: start.elapsed().as_secs_f64(),
    }
}
