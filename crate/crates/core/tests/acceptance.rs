//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use wrask::bench::{fig1_spec, run_bench, table2_small_spec, BenchSpec, MethodSpec, ProblemSource};
use wrask::bregman::{bregman_distance, exact_step, shrink_scalar};
use wrask::linalg::{lp_norm, normalize_rows, RowMatrix};
use wrask::problem::{add_noise, gen_gaussian_problem, Problem};
use wrask::rng::SeededRng;
use wrask::sampling::{sample_partially_weighted, sample_weighted, RowNormSampler, SamplingRule};
use wrask::solver::{inexact_step_size, solve, Solver, SolverConfig, StepRule};
use wrask::theory::{
    contraction_factor, exp_ratio, min_nonzero_magnitude, noisy_bound, ratio, report_with_sigma,
    sigma_tilde_min, solve_oracle, NoiseBoundInputs,
};

type Outcome = Result<String, String>;

const MASTER_SEED: u64 = 20240607;

const RULES: [SamplingRule; 4] = [
    SamplingRule::RowNorm,
    SamplingRule::Weighted(3.0),
    SamplingRule::Greedy,
    SamplingRule::PartiallyWeighted,
];

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// 1. Every iteration of every variant decreases the Bregman distance to the
///    ground truth by at least half the squared row residual.
fn contraction() -> Outcome {
    let mut rng = SeededRng::new(MASTER_SEED);
    let mut checked = 0usize;
    let mut worst = f64::INFINITY;
    for inst in 0..50 {
        let m = 5 + rng.index(96);
        let n = 5 + rng.index(96);
        let sparsity = 1 + rng.index(n.min(10));
        let lambda = [0.0, 0.5, 1.0, 2.0][inst % 4];
        let prob = gen_gaussian_problem(m, n, sparsity, lambda, rng.index(1 << 30) as u64).map_err(|e| e.to_string())?;
        let x_hat = prob.x_hat.as_deref().unwrap();
        for rule in RULES {
            for step in [StepRule::Inexact, StepRule::Exact] {
                let mut cfg = SolverConfig::new(rule, step, lambda);
                cfg.seed = inst as u64;
                let mut s = Solver::new(&prob.a, &prob.b, cfg).map_err(|e| e.to_string())?;
                let mut d = bregman_distance(&s.state().x, &s.state().x_star, x_hat, lambda).map_err(|e| e.to_string())?;
                for k in 0..400 {
                    let info = match s.step() {
                        Ok(info) => info,
                        Err(wrask::Error::AllZeroResiduals) => break,
                        Err(e) => return Err(e.to_string()),
                    };
                    let st = s.state();
                    let next = bregman_distance(&st.x, &st.x_star, x_hat, lambda).map_err(|e| e.to_string())?;
                    let slack = d - 0.5 * info.row_residual * info.row_residual - next;
                    worst = worst.min(slack);
                    check(slack >= -1e-9, || format!("instance {inst} {rule} {step:?} iter {k}: slack {slack:e}"))?;
                    d = next;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} iterations, minimum slack {worst:e}"))
}

/// 2. `ratio(g, p) ≥ 1/m`, with equality for constant magnitudes.
fn ratio_lower_bound() -> Outcome {
    let mut rng = SeededRng::new(MASTER_SEED + 2);
    let ps = [0.5, 1.0, 2.0, 4.0, 10.0];
    let mut min_gap = f64::INFINITY;
    for i in 0..10_000 {
        let m = 2 + rng.index(49);
        let g: Vec<f64> = (0..m)
            .map(|_| if i % 2 == 0 { rng.normal() } else { rng.normal() / rng.normal() })
            .collect();
        for p in ps {
            let r = ratio(&g, p).map_err(|e| e.to_string())?;
            let gap = r - 1.0 / m as f64;
            min_gap = min_gap.min(gap);
            check(gap >= -1e-12, || format!("g of length {m}, p = {p}: ratio {r} below 1/m"))?;
        }
        let mag = rng.uniform() * 10.0 + 1e-3;
        let flat: Vec<f64> = (0..m).map(|_| if rng.uniform() < 0.5 { mag } else { -mag }).collect();
        for p in ps {
            let r = ratio(&flat, p).map_err(|e| e.to_string())?;
            check((r - 1.0 / m as f64).abs() <= 1e-10, || format!("constant magnitude, m = {m}, p = {p}: {r}"))?;
        }
    }
    Ok(format!("minimum ratio − 1/m = {min_gap:e}"))
}

/// 3. Monotonicity of the exponential ratio in `x` and of `ratio` in `p`.
fn monotonicity() -> Outcome {
    let mut rng = SeededRng::new(MASTER_SEED + 3);
    let grid: Vec<f64> = (1..=200).map(|k| k as f64 * 0.1).collect();
    for _ in 0..1000 {
        let len = 1 + rng.index(30);
        let d: Vec<f64> = (0..len).map(|_| rng.uniform() * 5.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| exp_ratio(&d, x)).collect();
        for w in vals.windows(2) {
            check(w[1] >= w[0] * (1.0 - 1e-12), || format!("exponential ratio decreased: {} -> {}", w[0], w[1]))?;
        }
        let g: Vec<f64> = (0..2 + rng.index(49)).map(|_| rng.normal()).collect();
        let rs: Vec<f64> = grid.iter().map(|&p| ratio(&g, p).unwrap()).collect();
        for w in rs.windows(2) {
            check(w[1] >= w[0] * (1.0 - 1e-12), || format!("ratio decreased in p: {} -> {}", w[0], w[1]))?;
        }
    }
    Ok("1000 exponent vectors and 1000 ratio vectors on a 200-point grid".into())
}

/// Root of `⟨a, S_λ(x* − t a)⟩ = β` by plain bisection.
fn bisection_root(x_star: &[f64], a: &[f64], beta: f64, lambda: f64) -> f64 {
    let g = |t: f64| -> f64 { x_star.iter().zip(a).map(|(&x, &aj)| aj * shrink_scalar(x - t * aj, lambda)).sum() };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while g(lo) < beta {
        lo *= 2.0;
    }
    while g(hi) > beta {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// 4. Breakpoint line search against bisection.
fn exact_step_correct() -> Outcome {
    let mut rng = SeededRng::new(MASTER_SEED + 4);
    let mut worst_t = 0.0f64;
    let mut worst_h = 0.0f64;
    for i in 0..1000 {
        let n = 1 + rng.index(32);
        let lambda = [0.0, 0.5, 1.0, 5.0][i % 4];
        let a: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let x_star: Vec<f64> = (0..n).map(|_| 3.0 * rng.normal()).collect();
        let beta = 2.0 * rng.normal();
        let t = exact_step(&x_star, &a, beta, lambda).map_err(|e| e.to_string())?;
        let t_ref = bisection_root(&x_star, &a, beta, lambda);
        worst_t = worst_t.max((t - t_ref).abs());
        check((t - t_ref).abs() <= 1e-10, || format!("case {i}: t = {t}, bisection {t_ref}"))?;
        let x_new: Vec<f64> = x_star.iter().zip(&a).map(|(&x, &aj)| shrink_scalar(x - t * aj, lambda)).collect();
        let h = (a.iter().zip(&x_new).map(|(u, v)| u * v).sum::<f64>() - beta).abs();
        worst_h = worst_h.max(h);
        check(h <= 1e-9, || format!("case {i}: hyperplane miss {h:e}"))?;
        if lambda == 0.0 {
            let nn: f64 = a.iter().map(|v| v * v).sum();
            let t_in = inexact_step_size(&a, &x_star, beta) / nn;
            check(t == t_in, || format!("case {i}: λ = 0 exact step {t} differs from {t_in}"))?;
        }
    }
    Ok(format!("max |Δt| = {worst_t:e}, max hyperplane miss = {worst_h:e}"))
}

/// Textbook randomized Kaczmarz driven by the shared row sampler.
fn classical_rk(a: &RowMatrix, b: &[f64], seed: u64, iters: usize) -> Vec<f64> {
    let sampler = RowNormSampler::new(a);
    let mut rng = SeededRng::new(seed);
    let mut x = vec![0.0; a.ncols()];
    for _ in 0..iters {
        let i = sampler.sample(&mut rng);
        let row = a.row(i);
        let (mut ax, mut nn) = (0.0, 0.0);
        for j in 0..row.len() {
            ax += row[j] * x[j];
            nn += row[j] * row[j];
        }
        let t = (ax - b[i]) / nn;
        for j in 0..row.len() {
            x[j] -= t * row[j];
        }
    }
    x
}

/// 5. λ = 0 row-norm sampling is classical Kaczmarz; weighted and row-norm
///    sampling coincide on equal residuals.
fn reductions() -> Outcome {
    let mut rng = SeededRng::new(MASTER_SEED + 5);
    for trial in 0..10u64 {
        let (m, n) = (20 + rng.index(60), 5 + rng.index(40));
        let a = RowMatrix::new(m, n, (0..m * n).map(|k| rng.normal() * (1.0 + (k / n % 3) as f64)).collect())
            .map_err(|e| e.to_string())?;
        let b: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
        let expected = classical_rk(&a, &b, trial, 2000);
        let mut s = Solver::new(&a, &b, SolverConfig { seed: trial, ..SolverConfig::new(SamplingRule::RowNorm, StepRule::Inexact, 0.0) })
            .map_err(|e| e.to_string())?;
        for _ in 0..2000 {
            s.step().map_err(|e| e.to_string())?;
        }
        check(s.state().x == expected, || format!("trial {trial}: iterates differ from classical Kaczmarz"))?;
    }
    // equal residual magnitudes: weighted draws are the row-norm draws
    for seed in 0..200u64 {
        let m = 1 + rng.index(50);
        let mag = 0.01 + rng.uniform();
        let r: Vec<f64> = (0..m).map(|i| if i % 3 == 0 { -mag } else { mag }).collect();
        let sampler = RowNormSampler::new(&RowMatrix::identity(m));
        let (mut r1, mut r2) = (SeededRng::new(seed), SeededRng::new(seed));
        for _ in 0..50 {
            let p = 0.5 + 10.0 * (seed as f64 / 200.0);
            let i = sample_weighted(&r, p, &mut r1).map_err(|e| e.to_string())?;
            check(i == sampler.sample(&mut r2), || format!("seed {seed}: draws differ"))?;
        }
    }
    // and the full exact-step methods take the same first step
    for seed in 0..200u64 {
        let m = 30;
        let raw = RowMatrix::new(m, 20, (0..m * 20).map(|_| rng.normal()).collect()).unwrap();
        let a = normalize_rows(&raw, &vec![0.0; m]).unwrap().matrix;
        let b: Vec<f64> = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let run = |rule| {
            let cfg = SolverConfig { seed, ..SolverConfig::new(rule, StepRule::Exact, 1.0) };
            let mut s = Solver::new(&a, &b, cfg).unwrap();
            let info = s.step().unwrap();
            (info.row, s.into_state())
        };
        check(run(SamplingRule::RowNorm) == run(SamplingRule::Weighted(7.0)), || format!("seed {seed}: first exact steps differ"))?;
    }
    Ok("10 classical-Kaczmarz replays bit-identical, 10000 equal-residual draws and 200 first steps identical".into())
}

/// 6. The exact-step weighted method reaches the reference solution.
fn convergence_to_oracle() -> Outcome {
    let mut worst_it = 0;
    let mut misses = Vec::new();
    for (m, n, sparsity) in [(20, 40, 3), (60, 20, 3)] {
        for inst in 0..20u64 {
            let mut prob = gen_gaussian_problem(m, n, sparsity, 1.0, MASTER_SEED + 600 + inst).map_err(|e| e.to_string())?;
            let oracle = solve_oracle(&prob.a, &prob.b, 1.0).map_err(|e| e.to_string())?;
            prob.x_hat = Some(wrask::linalg::Vector::new(oracle.clone()).unwrap());
            let mut cfg = SolverConfig::new(SamplingRule::Weighted(m as f64 / 40.0), StepRule::Exact, 1.0);
            cfg.seed = inst;
            cfg.tol_error = 1e-4;
            cfg.max_iters = 200_000;
            let r = solve(&prob, &cfg).map_err(|e| e.to_string())?;
            let e = dist(&r.x, &oracle) / norm(&oracle);
            if e > 1e-4 {
                let x_min = min_nonzero_magnitude(&oracle).unwrap_or(0.0);
                misses.push(format!("{m}x{n} instance {inst}: error {e:.3e} (smallest solution entry {x_min:.1e})"));
            } else {
                worst_it = worst_it.max(r.iterations_used);
            }
        }
    }
    if misses.is_empty() {
        Ok(format!("40 instances, at most {worst_it} iterations"))
    } else {
        Err(format!("{} of 40 missed 1e-4 within 200000 iterations: {}", misses.len(), misses.join("; ")))
    }
}

/// Median curve value at iteration `k` (last recorded point at or before it).
fn curve_at(curve: &[(usize, f64, Option<f64>)], k: usize) -> f64 {
    let idx = curve.partition_point(|c| c.0 <= k);
    curve[idx.saturating_sub(1)].2.expect("ground truth known")
}

/// 7. Error curves ordered by the weight exponent at the fixed budget.
fn curve_ordering() -> Outcome {
    let out = run_bench(&fig1_spec(60, MASTER_SEED + 7)).map_err(|e| e.to_string())?;
    let curve = |label: &str| out.report.get(label).map(|s| s.curves.clone()).ok_or(format!("missing {label}"));
    let (rask, p1, p40, greedy) = (curve("rask")?, curve("p=1")?, curve("p=m/40")?, curve("greedy")?);
    let budget = p40
        .iter()
        .find(|c| c.2.is_some_and(|e| e <= 1e-3))
        .map(|c| c.0)
        .ok_or("p=m/40 never reaches 1e-3")?;
    let grid: Vec<usize> = (1..=10).map(|j| (budget * j).div_ceil(10)).collect();
    let mut v_fast = 0;
    let mut v_mid = 0;
    for &k in &grid {
        if curve_at(&p40, k) > curve_at(&p1, k) {
            v_fast += 1;
        }
        if curve_at(&p1, k) > curve_at(&rask, k) {
            v_mid += 1;
        }
    }
    let greedy_bad: Vec<usize> = grid
        .iter()
        .copied()
        .filter(|&k| curve_at(&greedy, k) > 1.1 * curve_at(&p40, k))
        .collect();
    let at = |c: &[(usize, f64, Option<f64>)]| curve_at(c, budget);
    let summary = format!(
        "budget {budget}: rask {:.3e}, p=1 {:.3e}, p=m/40 {:.3e}, greedy {:.3e}; violations {v_fast}/{v_mid}, greedy above at {greedy_bad:?}",
        at(&rask),
        at(&p1),
        at(&p40),
        at(&greedy)
    );
    if v_fast <= 1 && v_mid <= 1 && greedy_bad.is_empty() {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// 8. Exact-step weighted sampling needs at most half the iterations of
///    exact-step row-norm sampling.
fn weighted_exact_iterations() -> Outcome {
    let out = run_bench(&table2_small_spec(60, MASTER_SEED + 8)).map_err(|e| e.to_string())?;
    let it = |label: &str| out.report.get(label).and_then(|s| s.median_it).ok_or(format!("{label} did not converge"));
    let (erask, ewrask) = (it("erask")?, it("ewrask")?);
    let summary = format!("median IT erask {erask}, ewrask {ewrask}");
    if ewrask <= 0.5 * erask {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// 9. Median error under noisy data stays below the error bound.
fn noisy_bound_holds() -> Outcome {
    let (m, n, p, lambda) = (40, 20, 2.0, 1.0);
    let exact = gen_gaussian_problem(m, n, 4, lambda, MASTER_SEED + 9).map_err(|e| e.to_string())?;
    let x_hat = solve_oracle(&exact.a, &exact.b, lambda).map_err(|e| e.to_string())?;
    let delta = 0.1 * lp_norm(&exact.b, p + 2.0);
    let noisy = add_noise(&exact, delta, p, MASTER_SEED + 90).map_err(|e| e.to_string())?;
    let bound_problem = Problem { x_hat: Some(wrask::linalg::Vector::new(x_hat.clone()).unwrap()), ..exact.clone() };
    let sigma = sigma_tilde_min(&exact.a).map_err(|e| e.to_string())?;
    let report = report_with_sigma(&exact.a, sigma, &x_hat, lambda, p, &[]).map_err(|e| e.to_string())?;
    let q = report.q_wrask_lower;
    let inputs = NoiseBoundInputs::defaults(&exact.a, p, delta).map_err(|e| e.to_string())?;

    let ks: Vec<usize> = (0..=4000).step_by(20).collect();
    let mut errors = vec![Vec::with_capacity(60); ks.len()];
    for trial in 0..60u64 {
        let cfg = SolverConfig { seed: trial, ..SolverConfig::new(SamplingRule::Weighted(p), StepRule::Inexact, lambda) };
        let mut s = Solver::new(&noisy.a, &noisy.b, cfg).map_err(|e| e.to_string())?;
        for (slot, &k) in ks.iter().enumerate() {
            while s.iteration() < k {
                s.step().map_err(|e| e.to_string())?;
            }
            errors[slot].push(dist(&s.state().x, &x_hat));
        }
    }
    let mut tightest = f64::INFINITY;
    for (slot, &k) in ks.iter().enumerate() {
        let med = wrask::bench::median(&errors[slot]).unwrap();
        let bound = noisy_bound(&bound_problem, q, p, k, &inputs, StepRule::Inexact).map_err(|e| e.to_string())?;
        tightest = tightest.min(bound / med);
        check(med <= bound, || format!("k = {k}: median error {med:e} exceeds bound {bound:e}"))?;
    }
    Ok(format!("q = {q:.6}, {} recorded iterations, smallest bound/error ratio {tightest:.2}", ks.len()))
}

/// All orderings of `0..m`.
fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

fn pw_oracle(r: &[f64]) -> Vec<f64> {
    let perms = permutations(r.len());
    let mut counts = vec![0usize; r.len()];
    for order in &perms {
        let mut cand = order[0];
        let mut chosen = None;
        for &next in &order[1..] {
            if r[cand].abs() > r[next].abs() {
                chosen = Some(cand);
                break;
            }
            cand = next;
        }
        counts[chosen.unwrap_or(cand)] += 1;
    }
    counts.iter().map(|&c| c as f64 / perms.len() as f64).collect()
}

/// 10. Candidate-comparison selection follows its exact law and beats
///     row-norm sampling in iterations.
fn partially_weighted() -> Outcome {
    let critical = [f64::NAN, 10.828, 13.816, 16.266, 18.467];
    let cases = [vec![5.0, 1.0, 1.0], vec![0.5, 2.0, -1.5, 0.1, 1.0], vec![1.0, 1.0, 1.0, 1.0], vec![3.0, 0.0, -2.0, 2.0]];
    let draws = 1_000_000;
    let mut stats = Vec::new();
    for (ci, r) in cases.iter().enumerate() {
        let probs = pw_oracle(r);
        let mut rng = SeededRng::new(MASTER_SEED + 100 + ci as u64);
        let mut counts = vec![0usize; r.len()];
        for _ in 0..draws {
            counts[sample_partially_weighted(r, &mut rng)] += 1;
        }
        let mut chi = 0.0;
        let mut cats = 0;
        for (&o, &p) in counts.iter().zip(&probs) {
            if p == 0.0 {
                check(o == 0, || format!("case {ci}: impossible row drawn"))?;
                continue;
            }
            let e = p * draws as f64;
            chi += (o as f64 - e).powi(2) / e;
            cats += 1;
        }
        // a single possible row leaves nothing to test beyond the zero counts
        if cats == 1 {
            stats.push("deterministic".into());
            continue;
        }
        check(chi < critical[cats - 1], || format!("case {ci}: chi-square {chi:.2} with {} df", cats - 1))?;
        stats.push(format!("{chi:.2}"));
    }
    let spec = BenchSpec {
        trials: 60,
        seed: MASTER_SEED + 10,
        tol_error: 1e-3,
        ..BenchSpec::new(
            ProblemSource::Gaussian { m: 400, n: 200, sparsity: 25 },
            vec![
                MethodSpec::new("rask", SamplingRule::RowNorm, StepRule::Inexact, 1.0),
                MethodSpec::new("pwrask", SamplingRule::PartiallyWeighted, StepRule::Inexact, 1.0),
            ],
        )
    };
    let out = run_bench(&spec).map_err(|e| e.to_string())?;
    let summary = |l: &str| out.report.get(l).cloned().ok_or(format!("missing {l}"));
    let (rask, pw) = (summary("rask")?, summary("pwrask")?);
    check(pw.dnc_count == 0, || format!("pwrask did not converge in {} trials", pw.dnc_count))?;
    let (Some(it_r), Some(it_pw)) = (rask.median_it, pw.median_it) else {
        return Err("no converged trials".into());
    };
    let line = format!("chi-square {}; median IT rask {it_r}, pwrask {it_pw}", stats.join(", "));
    if it_pw < it_r {
        Ok(line)
    } else {
        Err(line)
    }
}

/// Smallest nonzero singular value over all nonzero column blocks, through
/// nalgebra's SVD.
fn sigma_tilde_reference(a: &RowMatrix) -> f64 {
    let dm = DMatrix::from_row_slice(a.nrows(), a.ncols(), a.as_slice());
    let n = a.ncols();
    let mut best = f64::INFINITY;
    for mask in 1u32..1 << n {
        let cols: Vec<usize> = (0..n).filter(|j| mask >> j & 1 == 1).collect();
        let sv = dm.select_columns(&cols).singular_values();
        let thr = 1e-10 * sv.max().max(1.0);
        if let Some(s) = sv.iter().copied().filter(|&s| s > thr).reduce(f64::min) {
            best = best.min(s);
        }
    }
    best
}

/// 11. σ̃_min against brute force; assembled contraction factors in (0, 1).
fn sigma_brute_force() -> Outcome {
    let mut rng = SeededRng::new(MASTER_SEED + 11);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let n = 1 + rng.index(8);
        let m = 1 + rng.index(12);
        let mut rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.normal()).collect()).collect();
        if n >= 2 && k % 5 == 1 {
            rows.iter_mut().for_each(|r| r[n - 1] = -r[0]);
        }
        let raw = RowMatrix::from_rows(&rows).unwrap();
        let a = normalize_rows(&raw, &vec![0.0; m]).map_err(|e| e.to_string())?.matrix;
        let ours = sigma_tilde_min(&a).map_err(|e| e.to_string())?;
        let reference = sigma_tilde_reference(&a);
        let rel = (ours - reference).abs() / reference;
        worst = worst.max(rel);
        check(rel <= 1e-10, || format!("matrix {k} ({m}x{n}): {ours} vs {reference}"))?;
        let x_hat: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { rng.normal() } else { 0.0 }).collect();
        let x_min = min_nonzero_magnitude(&x_hat).unwrap();
        for lambda in [0.0, 1.0, 10.0] {
            let q1 = contraction_factor(ours, x_min, lambda, 1.0 / m as f64);
            let q2 = contraction_factor(ours, x_min, lambda, 1.0 / a.frobenius_sq());
            check(q1 > 0.0 && q1 < 1.0 && q2 > 0.0 && q2 < 1.0, || format!("matrix {k}: q = {q1}, {q2}"))?;
        }
    }
    Ok(format!("50 matrices, worst relative deviation {worst:e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("per-iteration contraction", contraction),
        ("ratio lower bound", ratio_lower_bound),
        ("monotonicity in p", monotonicity),
        ("exact step correctness", exact_step_correct),
        ("reduction identities", reductions),
        ("convergence to reference solution", convergence_to_oracle),
        ("error curves ordered by p", curve_ordering),
        ("weighted exact-step iteration count", weighted_exact_iterations),
        ("noisy error bound", noisy_bound_holds),
        ("partially weighted sampling", partially_weighted),
        ("sigma_tilde brute force", sigma_brute_force),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
