//! Singular values by one-sided Jacobi rotations.

/// Singular values of the `nrows × ncols` matrix given column by column,
/// in descending order. Absolute accuracy is about `ε·σ_max`, which keeps
/// exact zeros distinguishable from small nonzero values.
pub fn singular_values(nrows: usize, ncols: usize, mut cols: Vec<Vec<f64>>) -> Vec<f64> {
    debug_assert_eq!(cols.len(), ncols);
    debug_assert!(cols.iter().all(|c| c.len() == nrows));
    if nrows < ncols {
        cols = transpose_cols(nrows, ncols, &cols);
    }
    let k = cols.len();
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (lo, hi) = cols.split_at_mut(q);
                let (up, uq) = (&mut lo[p], &mut hi[0]);
                let alpha: f64 = up.iter().map(|v| v * v).sum();
                let beta: f64 = uq.iter().map(|v| v * v).sum();
                let gamma: f64 = up.iter().zip(uq.iter()).map(|(a, b)| a * b).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (a, b) in up.iter_mut().zip(uq.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

fn transpose_cols(nrows: usize, ncols: usize, cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..nrows).map(|i| (0..ncols).map(|j| cols[j][i]).collect()).collect()
}

/// Smallest singular value above `1e-10 · max(1, σ_max)`, or `None` for a
/// numerically zero matrix.
pub fn smallest_nonzero(sv: &[f64]) -> Option<f64> {
    let top = sv.first().copied().unwrap_or(0.0);
    let threshold = ZERO_THRESHOLD * top.max(1.0);
    sv.iter().copied().filter(|s| *s > threshold).reduce(f64::min)
}

pub const ZERO_THRESHOLD: f64 = 1e-10;
