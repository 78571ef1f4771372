//! One-species birth-death chains.

use crate::error::{Error, Result};
use crate::models::statespace::StateSpaceMap;
use crate::sparse::RateMatrix;
use crate::twofold::Dd;

fn check_rates(named: &[(&str, f64)]) -> Result<()> {
    for (name, v) in named {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(Error::invalid(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    Ok(())
}

fn birth_death(n: u32, up: impl Fn(f64) -> f64, down: impl Fn(f64) -> f64) -> Result<RateMatrix> {
    let mut rates = Vec::with_capacity(2 * n as usize);
    for x in 0..=n {
        let k = x as usize;
        let xf = x as f64;
        if x < n {
            rates.push((k, k + 1, up(xf)));
        }
        if x > 0 {
            rates.push((k, k - 1, down(xf)));
        }
    }
    RateMatrix::from_rates(n as usize + 1, rates)
}

/// Immigration-death: `X → X−1` at `μX`, `X → X+1` at `γ(n−X)`.
pub fn build_imm_death(n: u32, mu: f64, gamma: f64) -> Result<(RateMatrix, StateSpaceMap)> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    check_rates(&[("mu", mu), ("gamma", gamma)])?;
    let nf = n as f64;
    let q = birth_death(n, |x| gamma * (nf - x), |x| mu * x)?;
    Ok((q, StateSpaceMap::imm_death(n)))
}

/// Probability that a slot occupied at time 0 is occupied at time `t`, and
/// its complement, each computed without cancellation.
pub fn imm_death_occupancy(mu: f64, gamma: f64, t: f64) -> (f64, f64) {
    let k = gamma + mu;
    if k == 0.0 {
        return (1.0, 0.0);
    }
    let p = (gamma + mu * (-k * t).exp()) / k;
    let q = -mu * f64::exp_m1(-k * t) / k;
    (p, q)
}

/// Exact distribution at time `t` from `X(0) = n`: Binomial(n, p(t)).
pub fn imm_death_exact(n: u32, mu: f64, gamma: f64, t: f64) -> Result<Vec<f64>> {
    check_rates(&[("mu", mu), ("gamma", gamma), ("t", t)])?;
    let (p, q) = imm_death_occupancy(mu, gamma, t);
    Ok(binomial_pmf(n, p, q))
}

/// Binomial(n, p) point masses with `q = 1 − p` given separately.
///
/// Weights are built outward from the mode by the ratio recurrence in
/// double-double arithmetic and normalized by their own total.
pub fn binomial_pmf(n: u32, p: f64, q: f64) -> Vec<f64> {
    let len = n as usize + 1;
    let mut out = vec![0.0; len];
    if q <= 0.0 {
        out[n as usize] = 1.0;
        return out;
    }
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    let nf = n as f64;
    let mode = (((nf + 1.0) * p).floor() as usize).min(n as usize);
    let mut w = vec![Dd::ZERO; len];
    w[mode] = Dd::new(1.0);
    // w[k+1]/w[k] = (n−k)p / ((k+1)q)
    for k in mode..n as usize {
        let next = w[k].mul_f((nf - k as f64) * p).div_f((k as f64 + 1.0) * q);
        if next.to_f64() == 0.0 {
            break;
        }
        w[k + 1] = next;
    }
    for k in (1..=mode).rev() {
        let prev = w[k].mul_f(k as f64 * q).div_f((nf - k as f64 + 1.0) * p);
        if prev.to_f64() == 0.0 {
            break;
        }
        w[k - 1] = prev;
    }
    let total = w.iter().fold(Dd::ZERO, |acc, x| acc.add(*x));
    let total = total.to_f64();
    for (o, x) in out.iter_mut().zip(&w) {
        *o = x.to_f64() / total;
    }
    out
}

/// Moran model with mutation. With `f = X/n_pop`, `X → X+1` at
/// `(1−f)[αf(1−u) + β(1−f)v]` and `X → X−1` at `f[β(1−f)(1−v) + αfu]`.
pub fn build_moran(
    n_pop: u32,
    alpha: f64,
    beta: f64,
    u: f64,
    v: f64,
) -> Result<(RateMatrix, StateSpaceMap)> {
    if n_pop == 0 {
        return Err(Error::invalid("n_pop must be at least 1"));
    }
    check_rates(&[("alpha", alpha), ("beta", beta), ("u", u), ("v", v)])?;
    if u > 1.0 || v > 1.0 {
        return Err(Error::invalid("mutation probabilities must lie in [0, 1]"));
    }
    let n = n_pop as f64;
    let up = |x: f64| {
        let f = x / n;
        (1.0 - f) * (alpha * f * (1.0 - u) + beta * (1.0 - f) * v)
    };
    let down = |x: f64| {
        let f = x / n;
        f * (beta * (1.0 - f) * (1.0 - v) + alpha * f * u)
    };
    Ok((birth_death(n_pop, up, down)?, StateSpaceMap::moran(n_pop)))
}
