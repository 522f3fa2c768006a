//! Summary statistics over replications.

/// Normal quantile used for the 95% confidence half-width.
pub const Z95: f64 = 1.96;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); 0 for fewer than two
/// values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// `1.96 * sample_std / sqrt(n)`.
pub fn ci_half_width(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    Z95 * sample_std(xs) / (xs.len() as f64).sqrt()
}

/// Nearest-rank percentile: the smallest value with at least `p` percent of
/// the sample at or below it. `p` in `(0, 100]`.
pub fn percentile_nearest_rank(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Mean, half-width and tail percentiles of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub half_width: f64,
    pub p05: f64,
    pub p90: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: mean(xs),
            half_width: ci_half_width(xs),
            p05: percentile_nearest_rank(xs, 5.0),
            p90: percentile_nearest_rank(xs, 90.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_has_zero_width() {
        let s = Summary::of(&[3.5]);
        assert_eq!(s.mean, 3.5);
        assert_eq!(s.half_width, 0.0);
        assert_eq!(s.p05, 3.5);
        assert_eq!(s.p90, 3.5);
    }

    #[test]
    fn nearest_rank_examples() {
        let xs: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&xs, 5.0), 1.0);
        assert_eq!(percentile_nearest_rank(&xs, 90.0), 18.0);
        assert_eq!(percentile_nearest_rank(&xs, 100.0), 20.0);
        assert_eq!(percentile_nearest_rank(&[15.0, 20.0, 35.0, 40.0, 50.0], 30.0), 20.0);
    }

    #[test]
    fn half_width_example() {
        // std of 2, 4, 4, 4, 5, 5, 7, 9 with n - 1 is sqrt(32 / 7)
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        let expected = 1.96 * (32.0f64 / 7.0).sqrt() / 8f64.sqrt();
        assert!((ci_half_width(&xs) - expected).abs() < 1e-15);
    }
}
