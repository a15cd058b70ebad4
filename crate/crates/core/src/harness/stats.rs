//! Sample statistics used by the experiment harness.

use serde::{Deserialize, Serialize};

/// Two-sided 90% normal quantile.
pub const Z90: f64 = 1.6449;

/// Mean, standard error and 90% normal-approximation interval of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`; 0 for a single value.
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let count = values.len();
        if count == 0 {
            return Summary { mean: f64::NAN, stderr: f64::NAN, ci_lo: f64::NAN, ci_hi: f64::NAN, count };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let stderr = if count > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, stderr, ci_lo: mean - Z90 * stderr, ci_hi: mean + Z90 * stderr, count }
    }

    /// Half width of the 90% interval.
    pub fn half_width(&self) -> f64 {
        Z90 * self.stderr
    }

    /// True when `[ci_lo, ci_hi]` intersects `[center - half, center + half]`.
    pub fn overlaps(&self, center: f64, half: f64) -> bool {
        self.ci_lo <= center + half && self.ci_hi >= center - half
    }
}

/// Ranks with ties replaced by their average rank (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation; NaN for fewer than two points or constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    if x.len() < 2 {
        return f64::NAN;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_arithmetic() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.stderr - sd / 2.0).abs() < 1e-15);
        assert!(((s.ci_hi - s.ci_lo) - 2.0 * Z90 * s.stderr).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).stderr, 0.0);
        assert!(Summary::of(&[]).mean.is_nan());
        assert!(s.overlaps(5.0, 2.0));
        assert!(!s.overlaps(10.0, 1.0));
    }

    #[test]
    fn ranks_and_spearman() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 0.0]) + 1.0).abs() < 1e-15);
        // textbook example with no ties: d^2 sum = 2 over 5 points
        let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 3.0, 4.0, 5.0]);
        assert!((r - (1.0 - 6.0 * 2.0 / (5.0 * 24.0))).abs() < 1e-12);
        assert!(spearman(&[1.0], &[1.0]).is_nan());
    }
}
