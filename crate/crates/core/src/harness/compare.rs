//! Scalar comparisons between two sampled series.

use crate::error::{DynamoError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    MaxAbs,
    Rms,
    /// Largest |a − b| / |b| over the given sample indices.
    RelAtMarks(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub value: f64,
    /// Index where the largest pointwise deviation occurs.
    pub worst_index: usize,
    pub n: usize,
}

/// Samples where either side is NaN are skipped.
pub fn compare(a: &[f64], b: &[f64], metric: &Metric) -> Result<CompareReport> {
    if a.len() != b.len() {
        return Err(DynamoError::Argument(format!("series lengths differ: {} vs {}", a.len(), b.len())));
    }
    let idx: Vec<usize> = match metric {
        Metric::RelAtMarks(marks) => {
            if let Some(&bad) = marks.iter().find(|&&i| i >= a.len()) {
                return Err(DynamoError::Argument(format!("mark {bad} outside series of length {}", a.len())));
            }
            marks.clone()
        }
        _ => (0..a.len()).collect(),
    };
    let idx: Vec<usize> = idx.into_iter().filter(|&i| !a[i].is_nan() && !b[i].is_nan()).collect();
    if idx.is_empty() {
        return Err(DynamoError::Argument("no comparable samples".into()));
    }
    let dev = |i: usize| match metric {
        Metric::RelAtMarks(_) => {
            let d = (a[i] - b[i]).abs();
            if d == 0.0 {
                0.0
            } else {
                d / b[i].abs()
            }
        }
        _ => (a[i] - b[i]).abs(),
    };
    let (mut worst, mut worst_index) = (-1.0, idx[0]);
    let mut sq = 0.0;
    for &i in &idx {
        let d = dev(i);
        sq += d * d;
        if d > worst {
            worst = d;
            worst_index = i;
        }
    }
    let value = match metric {
        Metric::Rms => (sq / idx.len() as f64).sqrt(),
        _ => worst,
    };
    Ok(CompareReport { value, worst_index, n: idx.len() })
}

/// Linear interpolation of samples `y` on a uniform grid from `t0` with step `dt`.
pub fn interpolate(y: &[f64], t0: f64, dt: f64, t: f64) -> f64 {
    let x = ((t - t0) / dt).clamp(0.0, (y.len() - 1) as f64);
    let i = (x.floor() as usize).min(y.len().saturating_sub(2));
    let u = x - i as f64;
    if y.len() == 1 {
        return y[0];
    }
    (1.0 - u) * y[i] + u * y[i + 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_give_zero() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64 * 0.1).sin()).collect();
        for m in [Metric::MaxAbs, Metric::Rms, Metric::RelAtMarks(vec![3, 10, 49])] {
            assert_eq!(compare(&a, &a, &m).unwrap().value, 0.0);
        }
    }

    #[test]
    fn shifted_series_deviate_by_slope_times_step() {
        let dt = 1e-3;
        let a: Vec<f64> = (0..2000).map(|i| (i as f64 * dt).sin()).collect();
        let b: Vec<f64> = (0..2000).map(|i| ((i as f64 + 1.0) * dt).sin()).collect();
        let r = compare(&a, &b, &Metric::MaxAbs).unwrap();
        assert!((r.value - dt).abs() < 1e-6, "{}", r.value);
        assert_eq!(r.worst_index, 0);
    }

    #[test]
    fn rejects_mismatched_input() {
        assert!(compare(&[1.0], &[1.0, 2.0], &Metric::MaxAbs).is_err());
        assert!(compare(&[1.0], &[1.0], &Metric::RelAtMarks(vec![1])).is_err());
        assert!(compare(&[f64::NAN], &[1.0], &Metric::Rms).is_err());
    }

    #[test]
    fn interpolation_is_exact_for_lines() {
        let y: Vec<f64> = (0..11).map(|i| 2.0 * i as f64 * 0.5 + 1.0).collect();
        assert!((interpolate(&y, 0.0, 0.5, 1.75) - 4.5).abs() < 1e-14);
        assert_eq!(interpolate(&y, 0.0, 0.5, 99.0), y[10]);
    }
}
