//! Coupon-collector round counts: how long random index selection takes to
//! touch every index, versus the deterministic cyclic schedule.
//!
//! With `I` indices and one uniform draw per round, the expected number of
//! rounds until every index has been drawn at least once is `I * H_I`
//! (harmonic sum), and at least `m` times it is
//!
//! ```text
//! I * integral_0^inf (1 - (1 - S_m(t) e^{-t})^I) dt,
//! S_m(y) = sum_{l=0}^{m-1} y^l / l!
//! ```
//!
//! A round-robin walk needs exactly `m * I` rounds for the same coverage,
//! which is strictly smaller for every `I >= 2`. Closed form, quadrature, and
//! Monte Carlo estimates are all provided so they can cross-check each other.

use rand::Rng;

use crate::error::{Error, Result};
use crate::quad;
use crate::rng::{stream, tag};

/// Quadrature accuracy for the expectation integrals.
const QUAD_TOL: f64 = 1e-9;
/// The integrand decays exponentially; past this value the remaining tail
/// contributes provably less than the tolerance.
const TAIL_CUT: f64 = 1e-12;

/// Expected rounds to draw each of `I` indices at least once: `I * H_I`.
pub fn expected_rounds_once(indices: u64) -> Result<f64> {
    if indices < 1 {
        return Err(Error::field("indices", "must be >= 1"));
    }
    let harmonic: f64 = (1..=indices).map(|i| 1.0 / i as f64).sum();
    Ok(indices as f64 * harmonic)
}

/// Same expectation via the integral identity
/// `I * integral_0^inf (1 - (1 - e^{-t})^I) dt`; independent evaluation path
/// used to cross-check the harmonic sum.
pub fn expected_rounds_once_integral(indices: u64) -> Result<f64> {
    if indices < 1 {
        return Err(Error::field("indices", "must be >= 1"));
    }
    let i = indices as f64;
    let integrand = move |t: f64| 1.0 - (1.0 - (-t).exp()).powf(i);
    Ok(i * quad::integrate_to_infinity(&integrand, QUAD_TOL, TAIL_CUT)?)
}

/// Truncated Poisson-style sum `S_m(t) e^{-t}`, evaluated stably by running
/// the term recurrence in the scaled domain.
fn poisson_cdf_terms(t: f64, m: u32) -> f64 {
    let mut term = (-t).exp();
    let mut sum = term;
    for l in 1..m {
        term *= t / l as f64;
        sum += term;
    }
    sum
}

/// Expected rounds to draw each of `I` indices at least `m` times, by
/// adaptive quadrature of the expectation integral.
pub fn expected_rounds_m(indices: u64, m: u32) -> Result<f64> {
    if indices < 1 {
        return Err(Error::field("indices", "must be >= 1"));
    }
    if m < 1 {
        return Err(Error::field("m", "must be >= 1"));
    }
    let i = indices as f64;
    let integrand = move |t: f64| 1.0 - (1.0 - poisson_cdf_terms(t, m)).powf(i);
    Ok(i * quad::integrate_to_infinity(&integrand, QUAD_TOL, TAIL_CUT)?)
}

/// Simulate uniform draws until every index has been drawn `m` times;
/// returns the sample mean and its standard error. Deterministic per seed.
pub fn monte_carlo_rounds(indices: u64, m: u32, trials: u64, seed: u64) -> Result<(f64, f64)> {
    if indices < 1 || m < 1 {
        return Err(Error::Invalid("indices and m must be >= 1".into()));
    }
    if trials < 1 {
        return Err(Error::field("trials", "must be >= 1"));
    }
    let mut rng = stream(seed, &[tag::MONTE_CARLO, indices, m as u64]);
    let n = indices as usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut counts = vec![0u32; n];
    for _ in 0..trials {
        counts.fill(0);
        let mut satisfied = 0usize;
        let mut rounds = 0u64;
        while satisfied < n {
            let pick = rng.gen_range(0..n);
            rounds += 1;
            counts[pick] += 1;
            if counts[pick] == m {
                satisfied += 1;
            }
        }
        let r = rounds as f64;
        sum += r;
        sum_sq += r * r;
    }
    let t = trials as f64;
    let mean = sum / t;
    let std_err = if trials > 1 {
        let var = (sum_sq - sum * sum / t) / (t - 1.0);
        (var.max(0.0) / t).sqrt()
    } else {
        0.0
    };
    Ok((mean, std_err))
}

/// Rounds a stride-1 cyclic schedule needs to select each of `I` window
/// positions `m` times: exactly `m * I`.
pub fn rolling_rounds_to_cover(indices: u64, m: u64) -> u64 {
    indices * m
}
