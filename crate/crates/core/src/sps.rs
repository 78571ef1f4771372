//! Single Positive Series evaluation of `νᵀ e^{Qt}`.
//!
//! With `ρ = max_i |Q_ii|` and `P = Q + ρI ≥ 0`,
//! `νᵀe^{Qt} = e^{-ρt} Σ_j (ρt)^j/j! νᵀ(P/ρ)^j`, a series whose terms are all
//! nonnegative. Truncating it after `m` terms loses exactly the Poisson(ρt)
//! mass above `m`. Running products are kept below [`Guards::big`] by folding
//! their magnitude into a log offset.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::poisson::{single_tailed_window, two_tailed_window, TruncationWindow};
use crate::sparse::{check_distribution, RateMatrix, ValidationMode, DEFAULT_ROW_SUM_TOL};
use crate::sum::compensated_sum;

/// Rescaling thresholds for running products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Guards {
    pub big: f64,
    pub small: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            big: 1e100,
            small: 1e-100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpsOptions {
    /// Rescale the result to the input mass ("r").
    pub renormalize: bool,
    /// Skip negligible low-order terms ("2").
    pub two_tailed: bool,
    /// Missing-mass budget.
    pub eps: f64,
}

impl Default for SpsOptions {
    fn default() -> Self {
        SpsOptions {
            renormalize: false,
            two_tailed: false,
            eps: 1e-16,
        }
    }
}

impl SpsOptions {
    /// Both options on: the usual choice.
    pub fn sps2r(eps: f64) -> Self {
        SpsOptions {
            renormalize: true,
            two_tailed: true,
            eps,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_two_tailed(mut self) -> Self {
        self.two_tailed = true;
        self
    }

    pub fn with_renormalize(mut self) -> Self {
        self.renormalize = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        Ok(())
    }

    /// Variant suffix: "", "r", "2" or "2r".
    pub fn suffix(&self) -> &'static str {
        match (self.two_tailed, self.renormalize) {
            (false, false) => "",
            (false, true) => "r",
            (true, false) => "2",
            (true, true) => "2r",
        }
    }

    /// All four variants at one tolerance.
    pub fn all(eps: f64) -> [SpsOptions; 4] {
        let base = SpsOptions::default().with_eps(eps);
        [
            base,
            SpsOptions {
                renormalize: true,
                ..base
            },
            SpsOptions {
                two_tailed: true,
                ..base
            },
            SpsOptions::sps2r(eps),
        ]
    }
}

impl fmt::Display for SpsOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SPS{}", self.suffix())
    }
}

/// Parses "SPS", "SPS2r", "2r", "r", … (eps left at its default).
impl FromStr for SpsOptions {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let tail = lower.strip_prefix("sps").unwrap_or(&lower);
        let (two_tailed, renormalize) = match tail {
            "" | "1" => (false, false),
            "r" => (false, true),
            "2" => (true, false),
            "2r" | "r2" => (true, true),
            _ => return Err(Error::invalid(format!("unknown variant {s:?}"))),
        };
        Ok(SpsOptions {
            renormalize,
            two_tailed,
            ..SpsOptions::default()
        })
    }
}

/// Output of a series evaluation at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpsResult {
    /// The approximation to `νᵀe^{Qt}`.
    pub dist: Vec<f64>,
    /// Upper truncation index.
    pub m_used: u64,
    /// First accumulated term.
    pub m_lo_used: u64,
    /// Sparse vector-matrix products performed.
    pub n_sparse: u64,
    /// Times the overflow/underflow guard rescaled the running vectors.
    pub renorm_events: u64,
    pub rho_t: f64,
    /// Set when the input vector was identically zero.
    pub degenerate: bool,
    /// Unscaled accumulator; `dist = raw · exp(log_scale)`.
    raw: Vec<f64>,
    log_scale: f64,
}

impl SpsResult {
    pub(crate) fn new(
        raw: Vec<f64>,
        log_scale: f64,
        window: Option<TruncationWindow>,
        n_sparse: u64,
        renorm_events: u64,
        rho_t: f64,
    ) -> Self {
        let scale = log_scale.exp();
        let dist = raw.iter().map(|x| x * scale).collect();
        SpsResult {
            dist,
            m_used: window.map_or(0, |w| w.m_hi),
            m_lo_used: window.map_or(0, |w| w.m_lo),
            n_sparse,
            renorm_events,
            rho_t,
            degenerate: false,
            raw,
            log_scale,
        }
    }

    pub(crate) fn renormalized(
        raw: Vec<f64>,
        target_mass: f64,
        window: Option<TruncationWindow>,
        n_sparse: u64,
        renorm_events: u64,
        rho_t: f64,
    ) -> Self {
        let mass = compensated_sum(&raw);
        let log_scale = if mass > 0.0 {
            target_mass.ln() - mass.ln()
        } else {
            0.0
        };
        Self::new(raw, log_scale, window, n_sparse, renorm_events, rho_t)
    }

    pub(crate) fn unchanged(nu: &[f64], rho_t: f64) -> Self {
        Self::new(nu.to_vec(), 0.0, None, 0, 0, rho_t)
    }

    pub(crate) fn zero(dim: usize, rho_t: f64) -> Self {
        let mut r = Self::new(vec![0.0; dim], 0.0, None, 0, 0, rho_t);
        r.degenerate = true;
        r
    }

    /// Compensated sum of `dist`.
    pub fn mass(&self) -> f64 {
        compensated_sum(&self.dist)
    }

    /// Natural log of `dist[index]`, computed from the unscaled accumulator so
    /// that entries too small for `dist` to represent stay finite. An entry
    /// that is exactly zero gives `-inf`.
    pub fn log_entry(&self, index: usize) -> Result<f64> {
        let raw = *self.raw.get(index).ok_or_else(|| {
            Error::invalid(format!("entry {index} out of range 0..{}", self.raw.len()))
        })?;
        if raw == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(raw.ln() + self.log_scale)
    }
}

pub(crate) fn check_inputs(nu: &[f64], q: &RateMatrix) -> Result<()> {
    q.ensure_valid(ValidationMode::Substochastic, DEFAULT_ROW_SUM_TOL)?;
    check_distribution(nu, q.dim())
}

pub(crate) fn scale_in_place(v: &mut [f64], by: f64) {
    for x in v {
        *x /= by;
    }
}

#[inline]
pub(crate) fn debug_assert_nonnegative(v: &[f64]) {
    debug_assert!(
        v.iter().all(|&x| x >= 0.0),
        "negative entry in a positive-series iterate"
    );
}

/// `νᵀe^{Qt}` by the Single Positive Series.
pub fn sps_expmv(nu: &[f64], q: &RateMatrix, t: f64, opts: SpsOptions) -> Result<SpsResult> {
    sps_expmv_guarded(nu, q, t, opts, Guards::default())
}

/// [`sps_expmv`] with explicit rescaling thresholds.
pub fn sps_expmv_guarded(
    nu: &[f64],
    q: &RateMatrix,
    t: f64,
    opts: SpsOptions,
    guards: Guards,
) -> Result<SpsResult> {
    check_inputs(nu, q)?;
    opts.validate()?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }

    let kernel = q.shift_scaled(t);
    let rho = kernel.rho();
    let mass_in = compensated_sum(nu);
    if mass_in == 0.0 {
        return Ok(SpsResult::zero(nu.len(), rho));
    }
    if rho == 0.0 {
        return Ok(SpsResult::unchanged(nu, rho));
    }

    let window = if opts.two_tailed {
        two_tailed_window(rho, opts.eps, None)
    } else {
        single_tailed_window(rho, opts.eps, None)
    };

    let mut b = nu.iter().sum::<f64>();
    let mut c = 0.0;
    let mut events = 0;
    let mut v_pro = nu.to_vec();
    if b > guards.big {
        scale_in_place(&mut v_pro, b);
        c += b.ln();
        b = 1.0;
        events += 1;
    }
    let mut v_sum = if window.m_lo == 0 {
        v_pro.clone()
    } else {
        vec![0.0; nu.len()]
    };
    let mut next = vec![0.0; nu.len()];

    let mut f = 1.0;
    for j in 1..=window.m_hi {
        kernel.left_multiply_into(&v_pro, &mut next);
        std::mem::swap(&mut v_pro, &mut next);
        scale_in_place(&mut v_pro, f);
        b = b * rho / f;
        if j >= window.m_lo {
            for (s, p) in v_sum.iter_mut().zip(&v_pro) {
                *s += p;
            }
        }
        debug_assert_nonnegative(&v_pro);
        if b > guards.big {
            scale_in_place(&mut v_pro, b);
            scale_in_place(&mut v_sum, b);
            c += b.ln();
            b = 1.0;
            events += 1;
        }
        f += 1.0;
    }
    debug_assert_nonnegative(&v_sum);

    let n_sparse = window.m_hi;
    Ok(if opts.renormalize {
        SpsResult::renormalized(v_sum, mass_in, Some(window), n_sparse, events, rho)
    } else {
        SpsResult::new(v_sum, c - rho, Some(window), n_sparse, events, rho)
    })
}
