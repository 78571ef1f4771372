//! Closed-population SIR and SEIRS models on their full state spaces.

use crate::error::{Error, Result};
use crate::models::statespace::StateSpaceMap;
use crate::sparse::RateMatrix;
use crate::sps::SpsResult;

/// `S + I → 2I` at `βSI`, `I → R` at `γI`.
pub fn build_sir(n_pop: u32, beta: f64, gamma: f64) -> Result<(RateMatrix, StateSpaceMap)> {
    check_nonnegative(&[beta, gamma])?;
    let map = StateSpaceMap::sir(n_pop);
    let mut rates = Vec::with_capacity(2 * map.dim());
    for (k, st) in map.states() {
        let (s, i) = (st[0], st[1]);
        let (sf, f_i) = (s as f64, i as f64);
        if s > 0 && i > 0 {
            rates.push((k, idx(&map, &[s - 1, i + 1]), beta * sf * f_i));
        }
        if i > 0 {
            rates.push((k, idx(&map, &[s, i - 1]), gamma * f_i));
        }
    }
    Ok((RateMatrix::from_rates(map.dim(), rates)?, map))
}

/// Rate of the waning-immunity reaction `R → S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Waning {
    /// `ηR`, the usual SEIRS form.
    #[default]
    PerRecovered,
    /// `ηI`, the rate as printed in some statements of the model.
    PerInfectious,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeirsParams {
    pub beta: f64,
    pub delta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub waning: Waning,
}

impl SeirsParams {
    pub fn new(beta: f64, delta: f64, gamma: f64, eta: f64) -> Self {
        SeirsParams {
            beta,
            delta,
            gamma,
            eta,
            waning: Waning::default(),
        }
    }

    /// `1.5 × (1/n_pop, 1, 0.25, 0.05)`.
    pub fn benchmark(n_pop: u32) -> Self {
        Self::new(1.5 / n_pop as f64, 1.5, 0.375, 0.075)
    }
}

/// `S + I → E + I` at `βSI`, `E → I` at `δE`, `I → R` at `γI`, `R → S` at
/// `ηR` (or `ηI`, see [`Waning`]), with `R = n_pop − S − E − I`.
pub fn build_seirs(n_pop: u32, params: SeirsParams) -> Result<(RateMatrix, StateSpaceMap)> {
    let SeirsParams {
        beta,
        delta,
        gamma,
        eta,
        waning,
    } = params;
    check_nonnegative(&[beta, delta, gamma, eta])?;
    let map = StateSpaceMap::seirs(n_pop);
    let mut rates = Vec::with_capacity(4 * map.dim());
    for (k, st) in map.states() {
        let (s, e, i) = (st[0], st[1], st[2]);
        let r = n_pop - s - e - i;
        let (sf, ef, f_i, rf) = (s as f64, e as f64, i as f64, r as f64);
        if s > 0 && i > 0 {
            rates.push((k, idx(&map, &[s - 1, e + 1, i]), beta * sf * f_i));
        }
        if e > 0 {
            rates.push((k, idx(&map, &[s, e - 1, i + 1]), delta * ef));
        }
        if i > 0 {
            rates.push((k, idx(&map, &[s, e, i - 1]), gamma * f_i));
        }
        if r > 0 {
            let w = match waning {
                Waning::PerRecovered => rf,
                Waning::PerInfectious => f_i,
            };
            rates.push((k, idx(&map, &[s + 1, e, i]), eta * w));
        }
    }
    Ok((RateMatrix::from_rates(map.dim(), rates)?, map))
}

fn idx(map: &StateSpaceMap, state: &[u32]) -> usize {
    map.index_of(state)
        .expect("neighbour state lies in the space")
}

fn check_nonnegative(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite() && *v >= 0.0) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "rates must be finite and >= 0, got {values:?}"
        )))
    }
}

/// Extinction probability and expected infection load given survival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeirsSummary {
    /// Mass on states with `E + I = 0`.
    pub extinction_prob: f64,
    /// `E[E + I | E + I > 0]`; zero when `undefined` is set.
    pub conditional_load: f64,
    /// No mass survives, so the conditional load is undefined.
    pub undefined: bool,
}

pub fn seirs_summary(dist: &[f64], map: &StateSpaceMap) -> SeirsSummary {
    let mut extinct = 0.0;
    let mut alive = 0.0;
    let mut load = 0.0;
    for (k, st) in map.states() {
        let p = dist[k];
        let infected = st[1] + st[2];
        if infected == 0 {
            extinct += p;
        } else {
            alive += p;
            load += infected as f64 * p;
        }
    }
    let total = extinct + alive;
    if alive <= 0.0 {
        return SeirsSummary {
            extinction_prob: extinct / total,
            conditional_load: 0.0,
            undefined: true,
        };
    }
    SeirsSummary {
        extinction_prob: extinct / total,
        conditional_load: load / alive,
        undefined: false,
    }
}

pub fn seirs_summaries(results: &[SpsResult], map: &StateSpaceMap) -> Vec<SeirsSummary> {
    results
        .iter()
        .map(|r| seirs_summary(&r.dist, map))
        .collect()
}

/// Deterministic SEIRS trajectory by classical RK4 with steps of at most
/// `0.01`, sampled at each requested time. Returns `(S, E, I)` per time.
pub fn seirs_ode(
    n_pop: f64,
    params: SeirsParams,
    init: [f64; 3],
    times: &[f64],
) -> Result<Vec<[f64; 3]>> {
    const MAX_STEP: f64 = 0.01;
    if init.iter().any(|x| *x < 0.0) || init.iter().sum::<f64>() > n_pop {
        return Err(Error::invalid(
            "initial state must be nonnegative and sum to at most n_pop",
        ));
    }
    if times.windows(2).any(|w| w[0] > w[1]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::invalid("times not ascending"));
    }
    let SeirsParams {
        beta,
        delta,
        gamma,
        eta,
        ..
    } = params;
    let rhs = |y: [f64; 3]| {
        let [s, e, i] = y;
        let r = n_pop - s - e - i;
        [
            -beta * s * i + eta * r,
            beta * s * i - delta * e,
            delta * e - gamma * i,
        ]
    };
    let axpy =
        |y: [f64; 3], h: f64, k: [f64; 3]| [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]];

    let mut out = Vec::with_capacity(times.len());
    let mut y = init;
    let mut t = 0.0;
    for &target in times {
        let span = target - t;
        let steps = (span / MAX_STEP).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                let k1 = rhs(y);
                let k2 = rhs(axpy(y, h / 2.0, k1));
                let k3 = rhs(axpy(y, h / 2.0, k2));
                let k4 = rhs(axpy(y, h, k3));
                for c in 0..3 {
                    y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
                }
            }
        }
        t = target;
        out.push(y);
    }
    Ok(out)
}
