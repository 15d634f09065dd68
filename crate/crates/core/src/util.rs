//! Small numerical helpers shared across the crate.
//!
//! Summations that feed ensemble statistics use pairwise reduction so the
//! result does not depend on how work was scheduled across threads: callers
//! collect per-item values in index order and reduce here.

use crate::error::{Error, Result};

/// Pairwise (cascade) summation. Deterministic for a given slice order and
/// accurate to O(log n) rounding growth.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        n if n <= 16 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Central moments of a sample, population convention (divide by n).
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Population variance (divide by n).
    pub variance: f64,
    pub skewness: f64,
    /// Excess kurtosis (0 for a Gaussian).
    pub excess_kurtosis: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len();
    let m = mean(xs);
    let d2: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    let d3: Vec<f64> = xs.iter().map(|x| (x - m).powi(3)).collect();
    let d4: Vec<f64> = xs.iter().map(|x| (x - m).powi(4)).collect();
    let var = mean(&d2);
    let sd = var.sqrt();
    let skew = if sd > 0.0 { mean(&d3) / sd.powi(3) } else { 0.0 };
    let kurt = if sd > 0.0 {
        mean(&d4) / (var * var) - 3.0
    } else {
        0.0
    };
    Moments {
        n,
        mean: m,
        variance: var,
        skewness: skew,
        excess_kurtosis: kurt,
    }
}

/// Ordinary least-squares line fit y = slope * x + intercept.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(
            "linear fit needs equal-length x and y".into(),
        ));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "linear fit needs at least two points".into(),
        ));
    }
    let xm = mean(x);
    let ym = mean(y);
    let sxx = pairwise_sum(&x.iter().map(|v| (v - xm).powi(2)).collect::<Vec<_>>());
    if sxx <= 0.0 {
        return Err(Error::InvalidParameter(
            "linear fit needs at least two distinct x values".into(),
        ));
    }
    let sxy = pairwise_sum(
        &x.iter()
            .zip(y)
            .map(|(a, b)| (a - xm) * (b - ym))
            .collect::<Vec<_>>(),
    );
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr = pairwise_sum(
        &x.iter()
            .zip(y)
            .map(|(a, b)| (b - (slope * a + intercept)).powi(2))
            .collect::<Vec<_>>(),
    );
    let sst = pairwise_sum(&y.iter().map(|v| (v - ym).powi(2)).collect::<Vec<_>>());
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    let (slope_stderr, intercept_stderr) = if n > 2 {
        let s2 = ssr / (n - 2) as f64;
        (
            (s2 / sxx).sqrt(),
            (s2 * (1.0 / n as f64 + xm * xm / sxx)).sqrt(),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
        r_squared,
    })
}

/// Percentile with linear interpolation; `sorted` must be ascending.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let p = p.clamp(0.0, 100.0);
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Solve A x = b by Gauss-Jordan elimination with partial pivoting.
/// Returns None when the system is singular to working precision.
pub fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|row| row.len() != n) {
        return None;
    }
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                if f != 0.0 {
                    for k in col..=n {
                        let upd = m[col][k] * f;
                        m[row][k] -= upd;
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n]).collect())
}

/// Invert a small square matrix; None when singular.
pub fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(solve_linear(a, &e)?);
    }
    // cols[j] is the j-th column of the inverse.
    let mut inv = vec![vec![0.0; n]; n];
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            inv[i][j] = v;
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let xs = [1.0, 2.0, 3.0, 4.5];
        assert_eq!(pairwise_sum(&xs), 10.5);
    }

    #[test]
    fn pairwise_sum_is_accurate_on_large_constant_array() {
        let xs = vec![0.1; 1_000_000];
        let s = pairwise_sum(&xs);
        assert!((s - 100_000.0).abs() < 1e-6, "sum {s}");
    }

    #[test]
    fn moments_of_symmetric_two_point_sample() {
        let m = moments(&[0.5, 1.5]);
        assert!((m.mean - 1.0).abs() < 1e-15);
        assert!((m.variance - 0.25).abs() < 1e-15);
        assert!(m.skewness.abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept + 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_rejects_degenerate_input() {
        assert!(linear_fit(&[1.0], &[2.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&xs, 0.0), 1.0);
        assert_eq!(percentile(&xs, 100.0), 4.0);
        assert!((percentile(&xs, 50.0) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn solve_and_invert_roundtrip() {
        let a = vec![vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]];
        let b = vec![1.0, 2.0, 3.0];
        let x = solve_linear(&a, &b).unwrap();
        for i in 0..3 {
            let lhs: f64 = (0..3).map(|j| a[i][j] * x[j]).sum();
            assert!((lhs - b[i]).abs() < 1e-12);
        }
        let inv = invert(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let prod: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_linear(&a, &[1.0, 2.0]).is_none());
    }
}
