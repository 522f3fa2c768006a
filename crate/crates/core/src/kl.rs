//! Bernoulli Kullback-Leibler divergence and the KL-UCB upper confidence
//! index.
//!
//! The index of an arm with empirical mean `mu_hat` after `n` pulls is the
//! largest mean `q` still compatible with the observations at exploration
//! level `f`:
//!
//! ```text
//! b = max { q in [0, 1] : n * d(mu_hat, q) <= f }
//! ```
//!
//! `q -> d(mu_hat, q)` is continuous and strictly increasing on
//! `[mu_hat, 1)` and blows up at `q = 1`, so the maximum is found by
//! bisection on `[mu_hat, 1]`.

use crate::error::{check_probability, Error, Result};
use crate::math;

/// Numerics of the index bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlSolverConfig {
    tolerance: f64,
    max_iterations: u32,
}

impl KlSolverConfig {
    pub const DEFAULT_TOLERANCE: f64 = 1e-9;
    pub const DEFAULT_MAX_ITERATIONS: u32 = 100;

    /// `tolerance` is an absolute width on `q`.
    pub fn new(tolerance: f64, max_iterations: u32) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::config("kl solver tolerance must be a positive finite number"));
        }
        if max_iterations == 0 {
            return Err(Error::config("kl solver needs at least one iteration"));
        }
        Ok(Self {
            tolerance,
            max_iterations,
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn max_iterations(&self) -> u32 {
        self.max_iterations
    }
}

impl Default for KlSolverConfig {
    fn default() -> Self {
        Self {
            tolerance: Self::DEFAULT_TOLERANCE,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Bernoulli KL divergence `d(mu, lambda)`.
///
/// Uses `0 log 0 = 0`. Returns `f64::INFINITY` when `lambda` is 0 or 1 and
/// differs from `mu`.
pub fn bernoulli_kl(mu: f64, lambda: f64) -> Result<f64> {
    check_probability("mu", mu)?;
    check_probability("lambda", lambda)?;
    Ok(kl_unchecked(mu, lambda))
}

#[inline]
pub(crate) fn kl_unchecked(mu: f64, lambda: f64) -> f64 {
    if mu == lambda {
        return 0.0;
    }
    if lambda <= 0.0 || lambda >= 1.0 {
        return f64::INFINITY;
    }
    let mut d = 0.0;
    if mu > 0.0 {
        d += mu * math::ln(mu / lambda);
    }
    if mu < 1.0 {
        d += (1.0 - mu) * math::ln((1.0 - mu) / (1.0 - lambda));
    }
    // rounding can push d just below zero when mu and lambda are close
    d.max(0.0)
}

/// Exploration level `f(t) = log t + c log log t`, clamped at 0.
///
/// `log log t` is only taken when `c > 0` and `t > 1`, so `t = 1` gives 0
/// for every `c`.
pub fn exploration_rate(t: f64, c: f64) -> Result<f64> {
    if t.is_nan() || t < 1.0 {
        return Err(Error::Domain {
            name: "t",
            value: t,
            reason: "time step must be at least 1",
        });
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Domain {
            name: "c",
            value: c,
            reason: "exploration constant must be nonnegative",
        });
    }
    Ok(exploration_rate_unchecked(t, c))
}

#[inline]
pub(crate) fn exploration_rate_unchecked(t: f64, c: f64) -> f64 {
    let log_t = math::ln(t);
    let rate = if c > 0.0 && log_t > 0.0 {
        log_t + c * math::ln(log_t)
    } else {
        log_t
    };
    rate.max(0.0)
}

/// KL-UCB index `max { q in [0, 1] : n * d(mu_hat, q) <= f_t }`.
///
/// An unvisited arm (`n = 0`) and an arm with `mu_hat = 1` both get
/// exactly one. Otherwise the result lies in `[mu_hat, 1)` and is within
/// `cfg.tolerance()` of the exact maximizer, approached from the feasible
/// side.
pub fn klucb_index(mu_hat: f64, n: u64, f_t: f64, cfg: &KlSolverConfig) -> Result<f64> {
    check_probability("mu_hat", mu_hat)?;
    if f_t.is_nan() || f_t < 0.0 {
        return Err(Error::Domain {
            name: "f_t",
            value: f_t,
            reason: "exploration level must be nonnegative",
        });
    }
    Ok(klucb_index_unchecked(mu_hat, n, f_t, cfg))
}

#[inline]
pub(crate) fn klucb_index_unchecked(mu_hat: f64, n: u64, f_t: f64, cfg: &KlSolverConfig) -> f64 {
    if n == 0 || mu_hat >= 1.0 {
        return 1.0;
    }
    if f_t == 0.0 {
        // d(mu_hat, q) = 0 only at q = mu_hat
        return mu_hat;
    }
    let budget = f_t / n as f64;
    // d(mu_hat, q) = h - mu_hat ln q - (1 - mu_hat) ln(1 - q), where h is
    // the mu_hat-only part; saves two divisions per iteration
    let h = xlogx(mu_hat) + xlogx(1.0 - mu_hat);
    let mut lo = mu_hat;
    let mut hi = 1.0;
    for _ in 0..cfg.max_iterations {
        if hi - lo <= cfg.tolerance {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let d = h - mu_hat * math::ln(mid) - (1.0 - mu_hat) * math::ln(1.0 - mid);
        if d <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * math::ln(x)
    } else {
        0.0
    }
}
