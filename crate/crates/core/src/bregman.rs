//! The augmented ℓ1 function `f(x) = λ‖x‖₁ + ½‖x‖₂²` and the Bregman machinery
//! built on it.
//!
//! The conjugate is `f*(v) = ½‖S_λ(v)‖₂²` with gradient `S_λ`, so a Bregman
//! projection onto a hyperplane `{x : ⟨a, x⟩ = β}` reduces to minimizing the
//! convex piecewise quadratic `φ(t) = f*(x* − t a) + t β` over the real line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm1};

/// Tolerance on `‖x − S_λ(x*)‖∞` when checking that a dual iterate belongs to
/// its primal iterate.
pub const ADMISSIBILITY_TOL: f64 = 1e-8;

/// `f(x) = λ‖x‖₁ + ½‖x‖₂²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugL1 {
    lambda: f64,
}

impl AugL1 {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda >= 0.0 {
            Ok(AugL1 { lambda })
        } else {
            Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {lambda}")))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.lambda * norm1(x) + 0.5 * dot(x, x)
    }

    pub fn conjugate(&self, v: &[f64]) -> f64 {
        conjugate_value(v, self.lambda)
    }
}

/// A primal iterate together with the dual iterate that generates it.
///
/// `x = S_λ(x_star)` holds after every update.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPair {
    pub x: Vec<f64>,
    pub x_star: Vec<f64>,
}

impl PrimalDualPair {
    pub fn zeros(n: usize) -> Self {
        PrimalDualPair {
            x: vec![0.0; n],
            x_star: vec![0.0; n],
        }
    }

    pub fn from_dual(x_star: Vec<f64>, lambda: f64) -> Self {
        PrimalDualPair {
            x: soft_shrink(&x_star, lambda),
            x_star,
        }
    }
}

#[inline]
pub fn shrink_scalar(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

/// Soft shrinkage `S_λ(v)_i = sign(v_i) · max(|v_i| − λ, 0)`.
pub fn soft_shrink(v: &[f64], lambda: f64) -> Vec<f64> {
    v.iter().map(|&vi| shrink_scalar(vi, lambda)).collect()
}

pub fn soft_shrink_into(v: &[f64], lambda: f64, out: &mut [f64]) {
    for (o, &vi) in out.iter_mut().zip(v) {
        *o = shrink_scalar(vi, lambda);
    }
}

/// `f*(v) = ½‖S_λ(v)‖₂²`.
pub fn conjugate_value(v: &[f64], lambda: f64) -> f64 {
    0.5 * v
        .iter()
        .map(|&vi| {
            let s = shrink_scalar(vi, lambda);
            s * s
        })
        .sum::<f64>()
}

/// The subgradient `x + λ s` with `s_i = sign(x_i)` and `s_i = 0` where `x_i = 0`.
pub fn subgradient(x: &[f64], lambda: f64) -> Vec<f64> {
    x.iter()
        .map(|&xi| {
            if xi > 0.0 {
                xi + lambda
            } else if xi < 0.0 {
                xi - lambda
            } else {
                0.0
            }
        })
        .collect()
}

/// Bregman distance `D_f^{x*}(x, y) = ½‖y − x‖₂² + λ(‖y‖₁ − ⟨s, y⟩)` where
/// `x* = x + λ s`.
///
/// Fails when `x_star` is not an admissible subgradient carrier for `x`.
pub fn bregman_distance(x: &[f64], x_star: &[f64], y: &[f64], lambda: f64) -> Result<f64> {
    if x.len() != x_star.len() || x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "bregman_distance got lengths {}, {}, {}",
            x.len(),
            x_star.len(),
            y.len()
        )));
    }
    let mut quad = 0.0;
    let mut lin = 0.0;
    for ((&xi, &xsi), &yi) in x.iter().zip(x_star).zip(y) {
        let gap = (xi - shrink_scalar(xsi, lambda)).abs();
        if gap > ADMISSIBILITY_TOL {
            return Err(Error::InadmissibleDual(format!(
                "|x - S(x*)| = {gap:e} exceeds {ADMISSIBILITY_TOL:e}"
            )));
        }
        // λ s_i = x*_i − x_i must satisfy |s_i| ≤ 1.
        let ls = xsi - xi;
        let slack = 1e-10 * lambda + 4.0 * f64::EPSILON * xsi.abs();
        if ls.abs() > lambda + slack {
            return Err(Error::InadmissibleDual(format!(
                "subgradient component {} exceeds lambda {lambda}",
                ls.abs()
            )));
        }
        let d = yi - xi;
        quad += d * d;
        lin += lambda * yi.abs() - ls * yi;
    }
    Ok(0.5 * quad + lin)
}

/// `g(t) = ⟨a, S_λ(x* − t a)⟩`; nonincreasing in `t`.
fn hyperplane_value(x_star: &[f64], a: &[f64], t: f64, lambda: f64) -> f64 {
    x_star
        .iter()
        .zip(a)
        .map(|(&xs, &aj)| aj * shrink_scalar(xs - t * aj, lambda))
        .sum()
}

/// Exact Bregman projection step: the minimizer of
/// `φ(t) = ½‖S_λ(x* − t a)‖₂² + t β`.
///
/// `φ'(t) = β − ⟨a, S_λ(x* − t a)⟩` is piecewise linear with kinks at
/// `t = (x*_j ± λ)/a_j`. The kinks are sorted and the root of `φ'` is located
/// by binary search over them, then solved in closed form on its segment.
/// When `φ'` vanishes on a whole interval the midpoint is returned.
pub fn exact_step(x_star: &[f64], a: &[f64], beta: f64, lambda: f64) -> Result<f64> {
    if x_star.len() != a.len() {
        return Err(Error::DimensionMismatch(format!(
            "x_star has {} entries, direction has {}",
            x_star.len(),
            a.len()
        )));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroDirection);
    }
    if lambda == 0.0 {
        return Ok(solve_on_segment(x_star, a, beta, lambda, |_| Some(1.0)).unwrap_or(0.0));
    }

    // Component j contributes nothing to g exactly on [lo_j, hi_j].
    let mut lo_max = f64::NEG_INFINITY;
    let mut hi_min = f64::INFINITY;
    let mut kinks = Vec::with_capacity(2 * a.len());
    for (&xs, &aj) in x_star.iter().zip(a) {
        if aj == 0.0 {
            continue;
        }
        let s = aj.signum();
        let lo = (xs - s * lambda) / aj;
        let hi = (xs + s * lambda) / aj;
        lo_max = lo_max.max(lo);
        hi_min = hi_min.min(hi);
        kinks.push(lo);
        kinks.push(hi);
    }
    if beta == 0.0 && lo_max < hi_min {
        return Ok(0.5 * (lo_max + hi_min));
    }
    kinks.sort_unstable_by(f64::total_cmp);
    kinks.dedup();

    let k = kinks.partition_point(|&t| hyperplane_value(x_star, a, t, lambda) > beta);
    let left = if k == 0 { f64::NEG_INFINITY } else { kinks[k - 1] };
    let right = kinks.get(k).copied().unwrap_or(f64::INFINITY);
    let probe = match (left.is_finite(), right.is_finite()) {
        (true, true) => 0.5 * (left + right),
        (false, true) => right - right.abs().max(1.0),
        (true, false) => left + left.abs().max(1.0),
        (false, false) => unreachable!("at least one kink exists"),
    };
    let t = solve_on_segment(x_star, a, beta, lambda, |j| {
        let u = x_star[j] - probe * a[j];
        (u.abs() > lambda).then(|| u.signum())
    })
    .unwrap_or(probe);
    Ok(t.clamp(left, right))
}

/// Solves `Σ_{j active} a_j (x*_j − t a_j − s_j λ) = β`, where `side(j)` gives
/// `Some(s_j)` for components outside the dead zone on the current segment.
/// Returns `None` if no component is active.
fn solve_on_segment(
    x_star: &[f64],
    a: &[f64],
    beta: f64,
    lambda: f64,
    side: impl Fn(usize) -> Option<f64>,
) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, (&xs, &aj)) in x_star.iter().zip(a).enumerate() {
        if aj == 0.0 {
            continue;
        }
        if let Some(s) = side(j) {
            num += aj * (xs - s * lambda);
            den += aj * aj;
        }
    }
    (den != 0.0).then(|| (num - beta) / den)
}
