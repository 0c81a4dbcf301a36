//! `wrask`: generate test problems, run the Kaczmarz solvers, benchmark them
//! and evaluate the convergence bounds.
//!
//! Exit codes: 0 on success (including runs that hit the iteration cap),
//! 1 when a computation fails, 2 for invalid flags.

mod methods;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use methods::{output_label, Method, StepArg};
use wrask::bench::{self, BenchSpec, HistoryCsv, MethodSpec, ProblemSource};
use wrask::io::{load_problem_dir, load_problem_files, read_matrix_market, save_problem};
use wrask::problem::{add_noise, gen_gaussian_problem, Problem, ProblemManifest};
use wrask::sampling::SamplingRule;
use wrask::solver::{solve, RecordSchedule, Solver, SolverConfig, StepRule};
use wrask::theory::{self, NoiseBoundInputs};

const OUT_ENV: &str = "WRASK_OUT_DIR";

#[derive(Parser)]
#[command(name = "wrask", version, about = "Weighted randomized sparse Kaczmarz solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Gaussian test problem.
    Gen(GenArgs),
    /// Solve one problem and write its iteration history.
    Solve(SolveArgs),
    /// Compare methods over many seeded trials.
    Bench(BenchArgs),
    /// Evaluate the convergence constants of a problem.
    Bound(BoundArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    sparsity: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add Gaussian noise with ‖noise‖_{p+2} equal to this value.
    #[arg(long)]
    noise_delta: Option<f64>,
    /// Exponent p of the noise norm [default: m/40].
    #[arg(long, requires = "noise_delta")]
    p: Option<f64>,
    #[arg(long, env = OUT_ENV)]
    out: PathBuf,
}

#[derive(Args)]
struct ProblemArgs {
    /// A directory written by `gen`, or a Matrix Market file, a right-hand
    /// side and optionally the ground truth.
    #[arg(long, num_args = 1..=3, required = true)]
    problem: Vec<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum)]
    method: Method,
    /// Weight exponent [default: m/40].
    #[arg(long)]
    p: Option<f64>,
    /// Shrinkage parameter [default: the problem's, else 1].
    #[arg(long)]
    lambda: Option<f64>,
    /// Step rule for pwrask and greedy.
    #[arg(long, value_enum)]
    step: Option<StepArg>,
    #[arg(long, default_value_t = 200_000)]
    max_iters: usize,
    /// Relative error target [default: 1e-3 when the ground truth is known].
    #[arg(long)]
    tol_error: Option<f64>,
    /// Relative residual target; 0 disables.
    #[arg(long, default_value_t = 0.0)]
    tol_res: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record every k-th iteration.
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    /// Write measured times instead of zeros.
    #[arg(long)]
    timing: bool,
    #[arg(long, env = OUT_ENV)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Fig1,
    #[value(name = "table2-small")]
    Table2Small,
    Custom,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sparsity: Option<usize>,
    /// Use this matrix instead of Gaussian ones (custom preset).
    #[arg(long, conflicts_with_all = ["m", "n"])]
    matrix: Option<PathBuf>,
    /// Comma-separated methods (custom preset).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 60)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol_error: Option<f64>,
    /// Give every method its own problems and sampling streams.
    #[arg(long)]
    unpaired: bool,
    /// Write measured times instead of zeros.
    #[arg(long)]
    timing: bool,
    #[arg(long, env = OUT_ENV)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Weight exponent [default: m/40].
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Noise level for the noisy-data bounds.
    #[arg(long)]
    delta: Option<f64>,
    /// Norm-equivalence constant [default: m^(2/(p(p+2)))].
    #[arg(long, requires = "delta")]
    c: Option<f64>,
    /// Mixed matrix norm for the exact-step bound [default: largest row 1-norm].
    #[arg(long, requires = "delta")]
    a_mixed: Option<f64>,
    /// Accept A with full column rank and any number of columns, using σ_min(A).
    #[arg(long)]
    full_rank: bool,
    /// Number of iterates at which the norm ratio is sampled.
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = OUT_ENV)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<wrask::Error> for Failure {
    fn from(e: wrask::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Bound(a) => cmd_bound(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn check_positive(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Failure::Usage(format!("--{name} must be positive, got {v}")))
    }
}

fn check_lambda(v: f64) -> CliResult<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Failure::Usage(format!("--lambda must be nonnegative, got {v}")))
    }
}

fn cmd_gen(a: GenArgs) -> CliResult<()> {
    check_lambda(a.lambda)?;
    if a.m == 0 || a.n == 0 {
        return Err(Failure::Usage("--m and --n must be positive".into()));
    }
    if a.sparsity == 0 || a.sparsity > a.n {
        return Err(Failure::Usage(format!("--sparsity must lie in 1..={}", a.n)));
    }
    let mut problem = gen_gaussian_problem(a.m, a.n, a.sparsity, a.lambda, a.seed)?;
    let mut noise_p = None;
    if let Some(delta) = a.noise_delta {
        check_positive("noise-delta", delta)?;
        let p = a.p.unwrap_or(bench::default_p(a.m));
        if !(p.is_finite() && p >= 0.0) {
            return Err(Failure::Usage(format!("--p must be nonnegative, got {p}")));
        }
        // a separate stream so adding noise leaves A and x̂ unchanged
        problem = add_noise(&problem, delta, p, wrask::rng::derive_seed(a.seed, 3, 0))?;
        noise_p = Some(p);
    }
    let manifest = ProblemManifest {
        m: a.m,
        n: a.n,
        sparsity: Some(a.sparsity),
        lambda: a.lambda,
        seed: Some(a.seed),
        noise_delta: a.noise_delta,
        noise_p,
        normalized: true,
        matrix: String::new(),
        rhs: String::new(),
        x_hat: None,
    };
    save_problem(&problem, &a.out, manifest)?;
    Ok(())
}

fn load_problem(args: &ProblemArgs, lambda: Option<f64>) -> CliResult<Problem> {
    if let Some(l) = lambda {
        check_lambda(l)?;
    }
    let paths = &args.problem;
    let mut problem = if paths.len() == 1 && paths[0].is_dir() {
        load_problem_dir(&paths[0])?.0
    } else if paths.len() >= 2 {
        load_problem_files(&paths[0], &paths[1], paths.get(2).cloned(), 1.0)?
    } else {
        return Err(Failure::Usage(
            "--problem needs a problem directory or MATRIX RHS [X_HAT] paths".into(),
        ));
    };
    if let Some(l) = lambda {
        problem.lambda = l;
    }
    Ok(problem)
}

fn cmd_solve(a: SolveArgs) -> CliResult<()> {
    let problem = load_problem(&a.problem, a.lambda)?;
    let p = a.p.unwrap_or(bench::default_p(problem.nrows()));
    let lambda = if a.method == Method::Rk && a.lambda.is_none() { 0.0 } else { problem.lambda };
    let mut cfg = a.method.config(p, lambda, a.step).map_err(Failure::Usage)?;
    if a.max_iters == 0 {
        return Err(Failure::Usage("--max-iters must be positive".into()));
    }
    cfg.max_iters = a.max_iters;
    cfg.tol_error = match a.tol_error {
        Some(t) => t,
        None if problem.x_hat.is_some() => 1e-3,
        None => 0.0,
    };
    cfg.tol_residual = a.tol_res;
    cfg.seed = a.seed;
    cfg.record = RecordSchedule::every(a.record_every);
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if cfg.tol_error > 0.0 && problem.x_hat.is_none() {
        return Err(Failure::Usage("--tol-error needs a ground truth in the problem".into()));
    }

    let res = solve(&problem, &cfg)?;
    fs::create_dir_all(&a.out)?;
    let mut csv = HistoryCsv::new(BufWriter::new(fs::File::create(a.out.join("history.csv"))?), a.timing);
    csv.write_history(output_label(&cfg, a.method), 0, &res.history)?;
    csv.finish()?;
    let mut w = BufWriter::new(fs::File::create(a.out.join("x.txt"))?);
    wrask::io::write_vector(&res.x, &mut w)?;
    w.flush()?;
    let last = res.history.last();
    write_json(
        &a.out.join("result.json"),
        &json!({
            "it": res.iterations_used,
            "stop_reason": res.history.stop_reason.to_string(),
            "final_residual": last.rel_residual,
            "final_error": last.rel_error,
        }),
    )?;
    if res.auto_normalized {
        eprintln!("note: rows were rescaled to unit norm before solving");
    }
    println!(
        "{}: {} iterations, stop reason {}, relative residual {:.3e}{}",
        a.method,
        res.iterations_used,
        res.history.stop_reason,
        last.rel_residual,
        last.rel_error.map(|e| format!(", relative error {e:.3e}")).unwrap_or_default()
    );
    Ok(())
}

fn bench_spec(a: &BenchArgs) -> CliResult<BenchSpec> {
    let generator_given = a.m.is_some() || a.n.is_some() || a.sparsity.is_some() || a.matrix.is_some();
    let mut spec = match a.preset {
        Preset::Fig1 | Preset::Table2Small => {
            if generator_given || a.methods.is_some() || a.lambda.is_some() || a.p.is_some() {
                return Err(Failure::Usage(
                    "generator, method, --lambda and --p flags only apply to --preset custom".into(),
                ));
            }
            if a.preset == Preset::Fig1 {
                bench::fig1_spec(a.trials, a.seed)
            } else {
                bench::table2_small_spec(a.trials, a.seed)
            }
        }
        Preset::Custom => {
            let sparsity = a
                .sparsity
                .ok_or_else(|| Failure::Usage("--preset custom needs --sparsity and either --m/--n or --matrix".into()))?;
            let source = match (&a.matrix, a.m, a.n) {
                (Some(path), None, None) => ProblemSource::Matrix { a: read_matrix_market(path)?, sparsity },
                (None, Some(m), Some(n)) => ProblemSource::Gaussian { m, n, sparsity },
                _ => {
                    return Err(Failure::Usage(
                        "--preset custom needs --sparsity and either --m/--n or --matrix".into(),
                    ))
                }
            };
            let m = match &source {
                ProblemSource::Gaussian { m, .. } => *m,
                ProblemSource::Matrix { a, .. } => a.nrows(),
            };
            let lambda = check_lambda(a.lambda.unwrap_or(1.0))?;
            let p = a.p.unwrap_or(bench::default_p(m));
            let list = a.methods.clone().unwrap_or_else(|| vec![Method::Rask, Method::Wrask, Method::Ewrask]);
            let mut methods = Vec::new();
            for method in list {
                let method_lambda = if method == Method::Rk { 0.0 } else { lambda };
                let cfg = method.config(p, method_lambda, None).map_err(Failure::Usage)?;
                methods.push(MethodSpec { label: method.name().into(), config: cfg });
            }
            BenchSpec { trials: a.trials, seed: a.seed, ..BenchSpec::new(source, methods) }
        }
    };
    if let Some(k) = a.max_iters {
        spec.max_iters = k;
    }
    if let Some(t) = a.tol_error {
        spec.tol_error = t;
    }
    spec.paired = !a.unpaired;
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(spec)
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    let spec = bench_spec(&a)?;
    let out = bench::run_bench(&spec)?;
    fs::create_dir_all(&a.out)?;
    let report = if a.timing { out.report.clone() } else { out.report.without_timing() };
    write_json(&a.out.join("report.json"), &report)?;
    let mut csv = HistoryCsv::new(BufWriter::new(fs::File::create(a.out.join("curves.csv"))?), a.timing);
    csv.write_outcomes(&out.outcomes)?;
    csv.finish()?;

    let stdout = io::stdout();
    let mut t = stdout.lock();
    writeln!(t, "{:<12} {:>12} {:>12} {:>6} {:>7}", "method", "IT", "CPU", "DNC", "failed")?;
    for m in &spec.methods {
        let s = &out.report.0[&m.label];
        let dnc = s.dnc_count * 2 > spec.trials;
        let fmt = |v: Option<f64>, prec: usize| match v {
            Some(v) if !dnc => format!("{v:.prec$}"),
            _ => "-".to_string(),
        };
        writeln!(
            t,
            "{:<12} {:>12} {:>12} {:>6} {:>7}",
            m.label,
            fmt(s.median_it, 1),
            fmt(s.median_seconds, 4),
            s.dnc_count,
            s.failed_count
        )?;
    }
    for o in &out.outcomes {
        if let Err(e) = &o.run {
            eprintln!("trial {} of {} failed: {e}", o.trial, o.method);
        }
    }
    Ok(())
}

/// `x_k − x̂` at evenly spaced iterates of the weighted method.
fn iterate_samples(problem: &Problem, p: f64, count: usize, seed: u64) -> CliResult<Vec<Vec<f64>>> {
    let x_hat = problem.x_hat.as_deref().ok_or(wrask::Error::MissingGroundTruth)?;
    let mut cfg = SolverConfig::new(SamplingRule::Weighted(p), StepRule::Inexact, problem.lambda);
    cfg.seed = seed;
    let mut solver = Solver::new(&problem.a, &problem.b, cfg)?;
    let stride = problem.nrows().max(1);
    let mut out = Vec::new();
    'outer: while out.len() < count {
        let z: Vec<f64> = solver.state().x.iter().zip(x_hat).map(|(x, h)| x - h).collect();
        if z.iter().all(|v| *v == 0.0) {
            break;
        }
        out.push(z);
        for _ in 0..stride {
            match solver.step() {
                Ok(_) => {}
                Err(wrask::Error::AllZeroResiduals) => break 'outer,
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(out)
}

fn cmd_bound(a: BoundArgs) -> CliResult<()> {
    let problem = load_problem(&a.problem, a.lambda)?.normalized()?;
    let x_hat = problem
        .x_hat
        .clone()
        .ok_or_else(|| Failure::Usage("bound needs the ground truth x̂ in the problem".into()))?;
    let p = check_positive("p", a.p.unwrap_or(bench::default_p(problem.nrows())))?;
    let n = problem.ncols();
    let sigma = if a.full_rank {
        theory::full_rank_sigma_min(&problem.a)
            .ok_or_else(|| Failure::Runtime("--full-rank: A does not have full column rank".into()))?
    } else {
        match theory::sigma_tilde_min(&problem.a) {
            Ok(s) => s,
            Err(e @ wrask::Error::TooManyColumns { .. }) => {
                return Err(Failure::Runtime(format!(
                    "{e}. σ̃_min is a minimum over all {n}-column subsets; use a problem with at most {} \
                     columns, or pass --full-rank if A has full column rank",
                    theory::MAX_ENUM_COLUMNS
                )))
            }
            Err(e) => return Err(e.into()),
        }
    };
    let samples = iterate_samples(&problem, p, a.samples, a.seed)?;
    let report = theory::report_with_sigma(&problem.a, sigma, &x_hat, problem.lambda, p, &samples)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    eprintln!(
        "note: q_rask and q_wrask_lower agree because the rows have unit norm and the infimum \
         in the weighted factor is replaced by its lower bound 1/m"
    );

    let mut noise = None;
    if let Some(delta) = a.delta {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Failure::Usage(format!("--delta must be nonnegative, got {delta}")));
        }
        let mut inputs = NoiseBoundInputs::defaults(&problem.a, p, delta)?;
        if let Some(c) = a.c {
            inputs.c_equiv = check_positive("c", c)?;
        }
        if let Some(am) = a.a_mixed {
            inputs.a_norm_mixed = check_positive("a-mixed", am)?;
        }
        let q = report.q_wrask_lower;
        let ks = [0usize, 10, 100, 1000, 10_000, 100_000];
        let mut rows = Vec::new();
        for k in ks {
            rows.push(json!({
                "k": k,
                "inexact": theory::noisy_bound(&problem, q, p, k, &inputs, StepRule::Inexact)?,
                "exact": theory::noisy_bound(&problem, q, p, k, &inputs, StepRule::Exact)?,
            }));
        }
        if a.a_mixed.is_none() {
            eprintln!(
                "note: the exact-step bound uses the largest row 1-norm ({}) as the mixed matrix norm",
                inputs.a_norm_mixed
            );
        }
        for r in &rows {
            eprintln!("noisy bound at k = {}: inexact {}, exact {}", r["k"], r["inexact"], r["exact"]);
        }
        noise = Some(json!({
            "inputs": inputs,
            "q": q,
            "p": p,
            "a_norm_mixed_is_default": a.a_mixed.is_none(),
            "bounds": rows,
        }));
    }

    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("theory.json"), &report)?;
        if let Some(n) = &noise {
            write_json(&dir.join("noise_bound.json"), n)?;
        }
    }
    Ok(())
}
