//! Multi-trial benchmarks with median aggregation.
//!
//! Each trial draws a fresh problem and runs every method on it. By default
//! the design is paired: all methods see the same problem and the same
//! sampling stream in a given trial, so identical methods give identical
//! results and differences between methods are not blurred by problem noise.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RowMatrix;
use crate::problem::{gen_gaussian_problem, problem_from_matrix, Problem};
use crate::rng::{derive_seed, label_id};
use crate::sampling::SamplingRule;
use crate::solver::{solve, RecordSchedule, RunHistory, SolverConfig, StepRule, StopReason};

const PROBLEM_STREAM: u64 = 1;
const SOLVER_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    /// Rule, step and λ. Seeds, tolerances, caps and the record schedule are
    /// set per trial from the [`BenchSpec`].
    pub config: SolverConfig,
}

impl MethodSpec {
    pub fn new(label: impl Into<String>, rule: SamplingRule, step: StepRule, lambda: f64) -> Self {
        MethodSpec {
            label: label.into(),
            config: SolverConfig::new(rule, step, lambda),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSource {
    /// Row-normalized Gaussian matrix with a sparse Gaussian ground truth.
    Gaussian { m: usize, n: usize, sparsity: usize },
    /// Fixed matrix with a fresh sparse ground truth per trial.
    Matrix { a: RowMatrix, sparsity: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub source: ProblemSource,
    pub methods: Vec<MethodSpec>,
    pub trials: usize,
    /// Relative-error target; zero disables.
    pub tol_error: f64,
    /// Relative-residual target; zero disables.
    pub tol_residual: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Share each trial's problem and sampling seed across methods.
    pub paired: bool,
    pub record: RecordSchedule,
}

impl BenchSpec {
    pub fn new(source: ProblemSource, methods: Vec<MethodSpec>) -> Self {
        BenchSpec {
            source,
            methods,
            trials: 60,
            tol_error: 1e-3,
            tol_residual: 0.0,
            max_iters: 200_000,
            seed: 0,
            paired: true,
            record: RecordSchedule { every: 1, dense_until: 1000 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no methods to compare".into()));
        }
        let mut seen = HashSet::new();
        for m in &self.methods {
            if !seen.insert(m.label.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate method label `{}`", m.label)));
            }
        }
        for cfg in self.methods.iter().map(|m| self.config_for(m, 0)) {
            cfg.validate()?;
        }
        let (n, sparsity) = match &self.source {
            ProblemSource::Gaussian { n, sparsity, .. } => (*n, *sparsity),
            ProblemSource::Matrix { a, sparsity } => (a.ncols(), *sparsity),
        };
        if sparsity == 0 || sparsity > n {
            return Err(Error::InvalidSparsity { sparsity, n });
        }
        Ok(())
    }

    pub fn problem_seed(&self, method: &MethodSpec, trial: usize) -> u64 {
        let stream = if self.paired { PROBLEM_STREAM } else { label_id(&method.label) };
        derive_seed(self.seed, stream, trial as u64)
    }

    pub fn solver_seed(&self, method: &MethodSpec, trial: usize) -> u64 {
        let stream = if self.paired { SOLVER_STREAM } else { label_id(&method.label).rotate_left(1) ^ SOLVER_STREAM };
        derive_seed(self.seed, stream, trial as u64)
    }

    pub fn config_for(&self, method: &MethodSpec, trial: usize) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            tol_error: self.tol_error,
            tol_residual: self.tol_residual,
            seed: self.solver_seed(method, trial),
            record: self.record,
            ..method.config
        }
    }

    pub fn problem(&self, seed: u64, lambda: f64) -> Result<Problem> {
        match &self.source {
            ProblemSource::Gaussian { m, n, sparsity } => gen_gaussian_problem(*m, *n, *sparsity, lambda, seed),
            ProblemSource::Matrix { a, sparsity } => problem_from_matrix(a.clone(), *sparsity, lambda, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub iterations: usize,
    pub seconds: f64,
    pub stop_reason: StopReason,
    pub history: RunHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub method: String,
    pub trial: usize,
    pub run: std::result::Result<TrialRun, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub median_it: Option<f64>,
    pub median_seconds: Option<f64>,
    pub dnc_count: usize,
    pub failed_count: usize,
    /// `[iter, median relative residual, median relative error]`.
    pub curves: Vec<(usize, f64, Option<f64>)>,
}

/// Per-method summaries keyed by label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BenchReport(pub BTreeMap<String, MethodSummary>);

impl BenchReport {
    pub fn get(&self, label: &str) -> Option<&MethodSummary> {
        self.0.get(label)
    }

    /// Copy with every timing set to zero, for byte-reproducible artifacts.
    pub fn without_timing(&self) -> BenchReport {
        let mut r = self.clone();
        for s in r.0.values_mut() {
            s.median_seconds = s.median_seconds.map(|_| 0.0);
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub report: BenchReport,
    /// In method order, then trial order.
    pub outcomes: Vec<TrialOutcome>,
}

/// Median of the values; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

/// Runs every method on every trial. Failed trials are recorded, not fatal.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchOutput> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.methods.len())
        .flat_map(|mi| (0..spec.trials).map(move |t| (mi, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(mi, trial)| {
            let method = &spec.methods[mi];
            TrialOutcome {
                method: method.label.clone(),
                trial,
                run: run_trial(spec, method, trial).map_err(|e| e.to_string()),
            }
        })
        .collect();
    let report = summarize(&outcomes);
    Ok(BenchOutput { report, outcomes })
}

pub fn run_trial(spec: &BenchSpec, method: &MethodSpec, trial: usize) -> Result<TrialRun> {
    let problem = spec.problem(spec.problem_seed(method, trial), method.config.lambda)?;
    let res = solve(&problem, &spec.config_for(method, trial))?;
    Ok(TrialRun {
        iterations: res.iterations_used,
        seconds: res.elapsed_s,
        stop_reason: res.history.stop_reason,
        history: res.history,
    })
}

/// Aggregates outcomes by method label. The result does not depend on the
/// order of the outcomes.
pub fn summarize(outcomes: &[TrialOutcome]) -> BenchReport {
    let mut by_method: BTreeMap<&str, Vec<&TrialOutcome>> = BTreeMap::new();
    for o in outcomes {
        by_method.entry(&o.method).or_default().push(o);
    }
    BenchReport(
        by_method
            .into_iter()
            .map(|(label, outs)| (label.to_string(), summarize_method(&outs)))
            .collect(),
    )
}

fn summarize_method(outs: &[&TrialOutcome]) -> MethodSummary {
    let runs: Vec<&TrialRun> = outs.iter().filter_map(|o| o.run.as_ref().ok()).collect();
    let its: Vec<f64> = runs.iter().map(|r| r.iterations as f64).collect();
    let secs: Vec<f64> = runs.iter().map(|r| r.seconds).collect();
    MethodSummary {
        median_it: median(&its),
        median_seconds: median(&secs),
        dnc_count: runs.iter().filter(|r| r.stop_reason == StopReason::MaxIters).count(),
        failed_count: outs.len() - runs.len(),
        curves: median_curves(&runs.iter().map(|r| &r.history).collect::<Vec<_>>()),
    }
}

/// Pointwise medians over the union of recorded iterations. A trial that has
/// no record at some iteration contributes its latest earlier record.
pub fn median_curves(histories: &[&RunHistory]) -> Vec<(usize, f64, Option<f64>)> {
    let mut iters: Vec<usize> = histories.iter().flat_map(|h| h.records.iter().map(|r| r.iter)).collect();
    iters.sort_unstable();
    iters.dedup();
    let mut cursor = vec![0usize; histories.len()];
    let mut out = Vec::with_capacity(iters.len());
    for &k in &iters {
        let mut res = Vec::with_capacity(histories.len());
        let mut err = Vec::with_capacity(histories.len());
        for (h, c) in histories.iter().zip(cursor.iter_mut()) {
            while *c + 1 < h.records.len() && h.records[*c + 1].iter <= k {
                *c += 1;
            }
            let rec = &h.records[*c];
            if rec.iter <= k {
                res.push(rec.rel_residual);
                if let Some(e) = rec.rel_error {
                    err.push(e);
                }
            }
        }
        if let Some(r) = median(&res) {
            out.push((k, r, median(&err)));
        }
    }
    out
}

#[derive(Serialize)]
struct CsvRow<'a> {
    method: &'a str,
    trial: usize,
    iter: usize,
    row_index: Option<usize>,
    rel_residual: f64,
    rel_error: Option<f64>,
    bregman_dist: Option<f64>,
    elapsed_s: f64,
}

/// CSV writer for run histories with the header
/// `method,trial,iter,row_index,rel_residual,rel_error,bregman_dist,elapsed_s`.
pub struct HistoryCsv<W: Write> {
    inner: csv::Writer<W>,
    timing: bool,
}

impl<W: Write> HistoryCsv<W> {
    /// With `timing` off the `elapsed_s` column is written as 0.
    pub fn new(w: W, timing: bool) -> Self {
        HistoryCsv {
            inner: csv::Writer::from_writer(w),
            timing,
        }
    }

    pub fn write_history(&mut self, method: &str, trial: usize, history: &RunHistory) -> Result<()> {
        for r in &history.records {
            self.inner.serialize(CsvRow {
                method,
                trial,
                iter: r.iter,
                row_index: r.row,
                rel_residual: r.rel_residual,
                rel_error: r.rel_error,
                bregman_dist: r.bregman_dist,
                elapsed_s: if self.timing { r.elapsed_s } else { 0.0 },
            })?;
        }
        Ok(())
    }

    pub fn write_outcomes(&mut self, outcomes: &[TrialOutcome]) -> Result<()> {
        for o in outcomes {
            if let Ok(run) = &o.run {
                self.write_history(&o.method, o.trial, &run.history)?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// `p = m/40`, the default weight exponent.
pub fn default_p(m: usize) -> f64 {
    m as f64 / 40.0
}

/// Five-way comparison of the weight exponent at `m = 400`, `n = 200`,
/// sparsity 25, `λ = 1`.
pub fn fig1_spec(trials: usize, seed: u64) -> BenchSpec {
    let (m, n, lambda) = (400, 200, 1.0);
    let mf = m as f64;
    let methods = vec![
        MethodSpec::new("rask", SamplingRule::RowNorm, StepRule::Inexact, lambda),
        MethodSpec::new("p=1", SamplingRule::Weighted(1.0), StepRule::Inexact, lambda),
        MethodSpec::new("p=m/80", SamplingRule::Weighted(mf / 80.0), StepRule::Inexact, lambda),
        MethodSpec::new("p=m/40", SamplingRule::Weighted(mf / 40.0), StepRule::Inexact, lambda),
        MethodSpec::new("greedy", SamplingRule::Greedy, StepRule::Inexact, lambda),
    ];
    BenchSpec {
        trials,
        seed,
        tol_error: 1e-4,
        ..BenchSpec::new(ProblemSource::Gaussian { m, n, sparsity: 25 }, methods)
    }
}

/// Iteration counts to relative error `1e-3` on `400 × 100` Gaussian systems
/// with sparsity 20, `λ = 1` and `p = m/40`.
pub fn table2_small_spec(trials: usize, seed: u64) -> BenchSpec {
    let (m, n) = (400, 100);
    let p = default_p(m);
    let methods = vec![
        MethodSpec::new("erask", SamplingRule::RowNorm, StepRule::Exact, 1.0),
        MethodSpec::new("wrk", SamplingRule::Weighted(p), StepRule::Inexact, 0.0),
        MethodSpec::new("ewrask", SamplingRule::Weighted(p), StepRule::Exact, 1.0),
    ];
    BenchSpec {
        trials,
        seed,
        ..BenchSpec::new(ProblemSource::Gaussian { m, n, sparsity: 20 }, methods)
    }
}
