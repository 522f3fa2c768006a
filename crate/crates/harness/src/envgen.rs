//! Arm-mean generators for the experiment grids.

use mpmab_core::Stream;
use rand::Rng;

use crate::error::{Error, Result};

fn check_probability(key: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::config(key, format!("{value} is not in [0, 1]")))
    }
}

/// `k` linearly spaced means from `mu_high` down to `mu_low`.
///
/// `k = 1` gives `[mu_high]`.
pub fn gen_linspace_mu(mu_high: f64, mu_low: f64, k: usize) -> Result<Vec<f64>> {
    check_probability("mu_high", mu_high)?;
    check_probability("mu_low", mu_low)?;
    if k == 0 {
        return Err(Error::config("arms", "need at least one arm"));
    }
    if k == 1 {
        return Ok(vec![mu_high]);
    }
    let last = (k - 1) as f64;
    Ok((0..k)
        .map(|j| match j {
            0 => mu_high,
            _ if j == k - 1 => mu_low,
            _ => {
                let j = j as f64;
                mu_high * (last - j) / last + mu_low * j / last
            }
        })
        .collect())
}

/// `k` i.i.d. uniform means on `[center - width/2, center + width/2]`.
pub fn gen_perturbed_mu(center: f64, width: f64, k: usize, rng: &mut Stream) -> Result<Vec<f64>> {
    if !(width >= 0.0 && width.is_finite()) {
        return Err(Error::config("width", format!("{width} must be nonnegative")));
    }
    let (lo, hi) = (center - width / 2.0, center + width / 2.0);
    if !(lo >= 0.0 && hi <= 1.0) {
        return Err(Error::config(
            "width",
            format!("[{lo}, {hi}] is not inside [0, 1]"),
        ));
    }
    if k == 0 {
        return Err(Error::config("arms", "need at least one arm"));
    }
    if width == 0.0 {
        return Ok(vec![center; k]);
    }
    Ok((0..k).map(|_| rng.random_range(lo..=hi)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use mpmab_core::stream_from_seed;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15)
    }

    #[test]
    fn linspace_examples() {
        assert!(close(&gen_linspace_mu(0.2, 0.1, 3).unwrap(), &[0.2, 0.15, 0.1]));
        assert_eq!(gen_linspace_mu(0.9, 0.9, 5).unwrap(), vec![0.9; 5]);
        assert_eq!(gen_linspace_mu(0.99, 0.01, 2).unwrap(), vec![0.99, 0.01]);
        assert_eq!(gen_linspace_mu(0.7, 0.1, 1).unwrap(), vec![0.7]);
        assert!(gen_linspace_mu(1.1, 0.1, 3).is_err());
        assert!(gen_linspace_mu(0.5, -0.1, 3).is_err());
    }

    #[test]
    fn linspace_is_descending_with_exact_endpoints() {
        let mu = gen_linspace_mu(0.9, 0.1, 10).unwrap();
        assert_eq!(mu[0], 0.9);
        assert_eq!(mu[9], 0.1);
        assert!(mu.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn perturbed_examples() {
        let mut rng = stream_from_seed(5);
        let mu = gen_perturbed_mu(0.5, 0.02, 1000, &mut rng).unwrap();
        assert!(mu.iter().all(|&m| (0.49..=0.51).contains(&m)));
        assert_eq!(gen_perturbed_mu(0.5, 0.0, 4, &mut rng).unwrap(), vec![0.5; 4]);
        assert!(gen_perturbed_mu(0.99, 0.1, 4, &mut rng).is_err());

        let a = gen_perturbed_mu(0.5, 0.02, 10, &mut stream_from_seed(1)).unwrap();
        let b = gen_perturbed_mu(0.5, 0.02, 10, &mut stream_from_seed(1)).unwrap();
        assert_eq!(a, b);
    }
}
