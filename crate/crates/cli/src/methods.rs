use std::fmt;
use std::str::FromStr;

use clap::ValueEnum;
use wrask::sampling::SamplingRule;
use wrask::solver::{SolverConfig, StepRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Rk,
    Rask,
    Erask,
    Wrask,
    Ewrask,
    Pwrask,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepArg {
    Inexact,
    Exact,
}

impl From<StepArg> for StepRule {
    fn from(s: StepArg) -> Self {
        match s {
            StepArg::Inexact => StepRule::Inexact,
            StepArg::Exact => StepRule::Exact,
        }
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk => "rk",
            Method::Rask => "rask",
            Method::Erask => "erask",
            Method::Wrask => "wrask",
            Method::Ewrask => "ewrask",
            Method::Pwrask => "pwrask",
            Method::Greedy => "greedy",
        }
    }

    /// Solver configuration for weight exponent `p` and shrinkage `lambda`.
    pub fn config(self, p: f64, lambda: f64, step: Option<StepArg>) -> Result<SolverConfig, String> {
        if step.is_some() && !matches!(self, Method::Pwrask | Method::Greedy) {
            return Err(format!("--step only applies to pwrask and greedy, not {}", self.name()));
        }
        let step = step.map(StepRule::from);
        let (rule, step, lambda) = match self {
            Method::Rk => {
                if lambda != 0.0 {
                    return Err("rk is the unshrunk method; use rask for lambda > 0".into());
                }
                (SamplingRule::RowNorm, StepRule::Inexact, 0.0)
            }
            Method::Rask => (SamplingRule::RowNorm, StepRule::Inexact, lambda),
            Method::Erask => (SamplingRule::RowNorm, StepRule::Exact, lambda),
            Method::Wrask => (SamplingRule::Weighted(p), StepRule::Inexact, lambda),
            Method::Ewrask => (SamplingRule::Weighted(p), StepRule::Exact, lambda),
            Method::Pwrask => (SamplingRule::PartiallyWeighted, step.unwrap_or(StepRule::Inexact), lambda),
            Method::Greedy => (SamplingRule::Greedy, step.unwrap_or(StepRule::Inexact), lambda),
        };
        let cfg = SolverConfig::new(rule, step, lambda);
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Method as ValueEnum>::from_str(s.trim(), true)
            .map_err(|_| format!("unknown method `{s}` (expected one of rk, rask, erask, wrask, ewrask, pwrask, greedy)"))
    }
}

/// Name written to output files. The row-norm rule with the inexact step and
/// λ = 0 is classical Kaczmarz whichever name selected it.
pub fn output_label(cfg: &SolverConfig, method: Method) -> &'static str {
    if cfg.rule == SamplingRule::RowNorm && cfg.step == StepRule::Inexact && cfg.lambda == 0.0 {
        "rk"
    } else {
        method.name()
    }
}
