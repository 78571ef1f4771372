//! Truncation points for the positive series.
//!
//! Truncating `Σ_j e^{-ρ} ρ^j/j! νᵀP^j` after `m` terms loses exactly the
//! Poisson(ρ) mass above `m`, so the truncation point is a Poisson quantile.
//! It is found by bisection on the incomplete-gamma form of the tail,
//! bracketed by closed-form Chernoff and normal-approximation bounds.

mod gamma;

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use gamma::poisson_pmf;

/// `h(x) = 1 − x + x ln x` for `x ≥ 1`.
pub fn h(x: f64) -> Result<f64> {
    if x.is_nan() || x < 1.0 {
        return Err(Error::invalid(format!("h(x) requires x >= 1, got {x}")));
    }
    Ok(h_unchecked(x))
}

fn h_unchecked(x: f64) -> f64 {
    let y = x - 1.0;
    if y.abs() < 1e-3 {
        // Σ_{k≥2} (−y)^k / (k(k−1))
        let mut term = y * y;
        let mut sum = 0.0;
        for k in 2..12 {
            sum += term / (k * (k - 1)) as f64;
            term *= -y;
        }
        sum
    } else {
        x * x.ln() - y
    }
}

/// `Prob{Poisson(rho) > m}`.
pub fn poisson_tail(m: u64, rho: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    gamma::gamma_p_int(m + 1, rho)
}

/// Closed-form bounds on the truncation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSet {
    /// Chernoff upper bound; always valid.
    pub m_plus: f64,
    /// Lower bound, meaningful when `minus_applicable`.
    pub m_minus: f64,
    /// Sharp upper bound, meaningful when `plus_plus_applicable`.
    pub m_plus_plus: f64,
    pub a: f64,
    pub b: f64,
    pub minus_applicable: bool,
    pub plus_plus_applicable: bool,
}

impl BoundSet {
    /// Smallest applicable upper bound, rounded up.
    pub fn upper(&self) -> u64 {
        let plus = self.m_plus.ceil().max(0.0);
        if self.plus_plus_applicable {
            plus.min(self.m_plus_plus.ceil().max(0.0)) as u64
        } else {
            plus as u64
        }
    }

    /// Applicable lower bound, rounded down (zero when none applies).
    pub fn lower(&self) -> u64 {
        if self.minus_applicable {
            self.m_minus.floor().max(0.0) as u64
        } else {
            0
        }
    }
}

/// Bounds on `m_eps(rho)` for `rho > 0` and `eps ∈ (0, 1)`.
pub fn bound_set(rho: f64, eps: f64) -> BoundSet {
    let log_eps = eps.ln();
    let m_plus = rho - log_eps / 3.0 * (1.0 + (1.0 - 18.0 * rho / log_eps).sqrt()) - 1.0;

    let a = 2.0 * rho * h_unchecked((m_plus + 1.0) / rho);
    let inner = -(eps * (2.0 * PI).sqrt()).ln() - 1.5 * a.ln() + (a - 1.0).ln();
    let m_minus = rho + (2.0 * rho).sqrt() * inner.sqrt();
    let minus_applicable = eps < 0.04 && a > 1.0 && inner.is_finite() && inner >= 0.0;

    let (b, m_plus_plus, plus_plus_applicable) = if minus_applicable && m_minus > rho {
        let b = -0.5 * (4.0 * PI * rho * h_unchecked(m_minus / rho)).ln();
        let k = b - log_eps;
        let m_pp = rho + k / 3.0 * (1.0 + (1.0 + 18.0 * rho / k).sqrt());
        let ok = -f64::exp_m1(-rho) > eps && b > log_eps && m_pp.is_finite();
        (b, m_pp, ok)
    } else {
        (f64::NAN, f64::NAN, false)
    };

    BoundSet {
        m_plus,
        m_minus,
        m_plus_plus,
        a,
        b,
        minus_applicable,
        plus_plus_applicable,
    }
}

/// Smallest `m` with `Prob{Poisson(rho) > m} ≤ eps`.
///
/// `lower_hint`, when given, must be a value known not to exceed the answer
/// (for instance the result for a smaller `rho`); a wrong hint costs time,
/// not correctness.
pub fn m_eps(rho: f64, eps: f64, lower_hint: Option<u64>) -> u64 {
    debug_assert!(rho >= 0.0 && eps > 0.0 && eps < 1.0);
    if rho <= 0.0 || -f64::exp_m1(-rho) <= eps {
        return 0;
    }
    let ok = |m: u64| poisson_tail(m, rho) <= eps;

    let bounds = bound_set(rho, eps);
    let mut hi = bounds.upper();
    if rho <= eps.sqrt() {
        hi = hi.min(1);
    }
    let mut lo = bounds.lower().max(lower_hint.unwrap_or(0)).min(hi);

    // Bracket invariants: ok(hi) and, when lo > 0, !ok(lo - 1).
    let mut step = 1u64;
    while !ok(hi) {
        lo = hi + 1;
        hi += step;
        step *= 2;
    }
    step = 1;
    while lo > 0 && ok(lo - 1) {
        hi = lo - 1;
        lo = lo.saturating_sub(step);
        step *= 2;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    hi
}

/// Series truncation indices and the tolerance they certify.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWindow {
    pub m_lo: u64,
    pub m_hi: u64,
    pub eps: f64,
    pub rho_t: f64,
}

impl TruncationWindow {
    /// Whether term `j` is accumulated.
    pub fn contains(&self, j: u64) -> bool {
        self.m_lo <= j && j <= self.m_hi
    }
}

/// Upper-tail-only window: `m_lo = 0`, `m_hi = m_eps(rho_t, eps)`.
pub fn single_tailed_window(rho_t: f64, eps: f64, lower_hint: Option<u64>) -> TruncationWindow {
    TruncationWindow {
        m_lo: 0,
        m_hi: m_eps(rho_t, eps, lower_hint),
        eps,
        rho_t,
    }
}

/// Two-tailed window: the upper tail gets `eps/2` and the lower index is
/// reflected about the mode, which discards no more than the upper tail.
pub fn two_tailed_window(rho_t: f64, eps: f64, lower_hint: Option<u64>) -> TruncationWindow {
    let m_hi = m_eps(rho_t, eps / 2.0, lower_hint);
    TruncationWindow {
        m_lo: lower_index(rho_t, m_hi),
        m_hi,
        eps,
        rho_t,
    }
}

/// `max(0, 2⌊rho_t − ½⌋ − m_hi)`.
pub fn lower_index(rho_t: f64, m_hi: u64) -> u64 {
    let c = (rho_t - 0.5).floor();
    let lo = 2.0 * c - m_hi as f64;
    if lo > 0.0 {
        lo as u64
    } else {
        0
    }
}
