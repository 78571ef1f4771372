//! SIR transition probabilities between exact observations on the reduced
//! space of cumulative infection and recovery counts.
//!
//! Between observations `(S0, I0)` and `(S1, I1)` exactly `n_I = S0 − S1`
//! infections and `n_R = n_I + I0 − I1` recoveries occur, so the chain only
//! needs states `(a, r)` with `a ≤ n_I`, `r ≤ n_R`. Events that would leave
//! this box go to an absorbing coffin state, which keeps the generator
//! conservative. The probability of the observed transition is the mass on
//! `(n_I, n_R)` after the elapsed time.

use crate::error::{Error, Result};
use crate::models::statespace::StateSpaceMap;
use crate::sparse::RateMatrix;
use crate::sps::{sps_expmv, SpsOptions};

/// A pair of exact SIR observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SirObservation {
    pub s0: u32,
    pub i0: u32,
    pub s1: u32,
    pub i1: u32,
}

impl SirObservation {
    pub fn new(s0: u32, i0: u32, s1: u32, i1: u32) -> Result<Self> {
        if s1 > s0 || s1 + i1 > s0 + i0 {
            return Err(Error::invalid(format!(
                "inconsistent observations ({s0}, {i0}) -> ({s1}, {i1})"
            )));
        }
        Ok(SirObservation { s0, i0, s1, i1 })
    }

    pub fn infections(&self) -> u32 {
        self.s0 - self.s1
    }

    pub fn recoveries(&self) -> u32 {
        self.infections() + self.i0 - self.i1
    }

    /// `(S, I)` for the box state `(a, r)`, with `I` possibly negative.
    pub fn sir_state(&self, a: u32, r: u32) -> (u32, i64) {
        (self.s0 - a, self.i0 as i64 + a as i64 - r as i64)
    }
}

/// Generator on the full birth space of `obs`. Box states with `r > I0 + a`
/// would have negative `I`; they are unreachable and get no outgoing rates.
pub fn build_sir_birth(
    obs: SirObservation,
    beta: f64,
    gamma: f64,
) -> Result<(RateMatrix, StateSpaceMap)> {
    if !(beta.is_finite() && beta >= 0.0 && gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::invalid("rates must be finite and >= 0"));
    }
    let (n_i, n_r) = (obs.infections(), obs.recoveries());
    let map = StateSpaceMap::sir_birth(n_i, n_r);
    let coffin = map.coffin().expect("birth space has a coffin");
    let mut rates = Vec::with_capacity(2 * map.dim());
    for (k, st) in map.states() {
        let (a, r) = (st[0], st[1]);
        let (s, i) = obs.sir_state(a, r);
        if i <= 0 {
            continue;
        }
        let (sf, f_i) = (s as f64, i as f64);
        let infect = if a < n_i {
            k + n_r as usize + 1
        } else {
            coffin
        };
        rates.push((k, infect, beta * sf * f_i));
        let recover = if r < n_r { k + 1 } else { coffin };
        rates.push((k, recover, gamma * f_i));
    }
    Ok((RateMatrix::from_rates(map.dim(), rates)?, map))
}

/// Number of box states satisfying `r ≤ I0 + a` (plus the coffin).
pub fn pruned_dim(obs: SirObservation) -> usize {
    let (n_i, n_r) = (obs.infections(), obs.recoveries());
    let kept: u64 = (0..=n_i)
        .map(|a| (obs.i0 as u64 + a as u64).min(n_r as u64) + 1)
        .sum();
    kept as usize + 1
}

/// Epidemic data: times and `(S, I)` counts at each time.
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicObservations {
    pub times: Vec<f64>,
    pub counts: Vec<(u32, u32)>,
}

impl EpidemicObservations {
    pub fn new(times: Vec<f64>, counts: Vec<(u32, u32)>) -> Result<Self> {
        if times.len() != counts.len() || times.len() < 2 {
            return Err(Error::invalid(
                "need at least two observations, one per time",
            ));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("times not ascending"));
        }
        for w in counts.windows(2) {
            let ((s0, i0), (s1, i1)) = (w[0], w[1]);
            SirObservation::new(s0, i0, s1, i1)?;
        }
        Ok(EpidemicObservations { times, counts })
    }

    /// The Eyam plague, 1666, in units of 31 days.
    pub fn eyam() -> Self {
        EpidemicObservations {
            times: vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
            counts: vec![
                (254, 7),
                (235, 14),
                (201, 22),
                (153, 29),
                (121, 20),
                (110, 8),
                (97, 8),
                (83, 0),
            ],
        }
    }

    /// Consecutive pairs, or just first-to-last when `jump_only`.
    pub fn transitions(&self, jump_only: bool) -> Vec<(f64, f64, SirObservation)> {
        let pair = |a: usize, b: usize| {
            let ((s0, i0), (s1, i1)) = (self.counts[a], self.counts[b]);
            let obs = SirObservation { s0, i0, s1, i1 };
            (self.times[a], self.times[b], obs)
        };
        if jump_only {
            vec![pair(0, self.times.len() - 1)]
        } else {
            (1..self.times.len()).map(|k| pair(k - 1, k)).collect()
        }
    }
}

/// Maximum-likelihood SIR rates for the Eyam data.
pub const EYAM_MLE: (f64, f64) = (0.0196, 3.204);

/// One factor of the likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodFactor {
    pub t0: f64,
    pub t1: f64,
    pub dim: usize,
    /// `ρ·(t1 − t0)`.
    pub rho_t: f64,
    pub m_lo: u64,
    pub m_hi: u64,
    pub loglik: f64,
}

/// Log-likelihood of SIR observations, one series evaluation per factor.
pub fn sir_loglik(
    data: &EpidemicObservations,
    beta: f64,
    gamma: f64,
    opts: SpsOptions,
    jump_only: bool,
) -> Result<Vec<LikelihoodFactor>> {
    data.transitions(jump_only)
        .into_iter()
        .map(|(t0, t1, obs)| {
            sir_factor(obs, t1 - t0, beta, gamma, opts).map(|mut f| {
                f.t0 = t0;
                f.t1 = t1;
                f
            })
        })
        .collect()
}

/// Log-probability of one observed transition after `dt`.
pub fn sir_factor(
    obs: SirObservation,
    dt: f64,
    beta: f64,
    gamma: f64,
    opts: SpsOptions,
) -> Result<LikelihoodFactor> {
    let (q, map) = build_sir_birth(obs, beta, gamma)?;
    let mut nu = vec![0.0; map.dim()];
    nu[0] = 1.0;
    let res = sps_expmv(&nu, &q, dt, opts)?;
    let target = map
        .index_of(&[obs.infections(), obs.recoveries()])
        .expect("target lies in the box");
    Ok(LikelihoodFactor {
        t0: 0.0,
        t1: dt,
        dim: map.dim(),
        rho_t: res.rho_t,
        m_lo: res.m_lo_used,
        m_hi: res.m_used,
        loglik: res.log_entry(target)?,
    })
}

/// The Eyam log-likelihood at `(β, γ)` with its per-transition diagnostics.
pub fn eyam_loglik(
    beta: f64,
    gamma: f64,
    opts: SpsOptions,
    jump_only: bool,
) -> Result<(f64, Vec<LikelihoodFactor>)> {
    let factors = sir_loglik(&EpidemicObservations::eyam(), beta, gamma, opts, jump_only)?;
    Ok((factors.iter().map(|f| f.loglik).sum(), factors))
}
