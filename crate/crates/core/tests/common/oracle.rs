//! Brute-force Poisson oracle: pmf weights by ratio recurrence from the mode,
//! summed in double-double and normalised by their own total, so neither
//! `e^{-ρ}` nor any special function is evaluated.

use super::dd::Dd;

pub struct PoissonTable {
    /// First index held in `weights`.
    pub start: u64,
    /// Unnormalised weights `w_k ∝ ρ^k / k!`.
    pub weights: Vec<Dd>,
    pub total: Dd,
    /// `suffix[i] = Σ_{k ≥ start + i} w_k`.
    suffix: Vec<Dd>,
}

const CUTOFF: f64 = 1e-45;

impl PoissonTable {
    pub fn new(rho: f64) -> Self {
        assert!(rho > 0.0);
        let mode = rho.floor() as u64;
        let rho_dd = Dd::new(rho);
        let mut up = vec![Dd::new(1.0)];
        let mut k = mode;
        loop {
            let next = up.last().unwrap().mul(rho_dd.div_f((k + 1) as f64));
            if next.hi < CUTOFF {
                break;
            }
            up.push(next);
            k += 1;
        }
        let mut down = Vec::new();
        let mut w = Dd::new(1.0);
        let mut k = mode;
        while k > 0 {
            w = w.mul(Dd::new(k as f64).div(rho_dd));
            if w.hi < CUTOFF {
                break;
            }
            down.push(w);
            k -= 1;
        }
        let start = mode - down.len() as u64;
        down.reverse();
        let mut weights = down;
        weights.extend(up);
        let mut suffix = vec![Dd::ZERO; weights.len() + 1];
        for i in (0..weights.len()).rev() {
            suffix[i] = suffix[i + 1].add(weights[i]);
        }
        let total = suffix[0];
        PoissonTable {
            start,
            weights,
            total,
            suffix,
        }
    }

    /// Unnormalised `Σ_{k > m} w_k`.
    pub fn tail_weight(&self, m: u64) -> Dd {
        let first = m + 1;
        if first <= self.start {
            self.total
        } else {
            let i = (first - self.start) as usize;
            self.suffix.get(i).copied().unwrap_or(Dd::ZERO)
        }
    }

    /// Unnormalised `Σ_{k < m} w_k`.
    pub fn head_weight(&self, m: u64) -> Dd {
        if m == 0 {
            Dd::ZERO
        } else {
            self.total.sub(self.tail_weight(m - 1))
        }
    }

    pub fn tail(&self, m: u64) -> f64 {
        self.tail_weight(m).div(self.total).to_f64()
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if k < self.start {
            return 0.0;
        }
        self.weights
            .get((k - self.start) as usize)
            .map_or(0.0, |w| w.div(self.total).to_f64())
    }

    /// Smallest `m` whose exact tail is at most `eps`.
    pub fn quantile(&self, eps: f64) -> u64 {
        let limit = self.total.mul_f(eps);
        // Below the table the tail is the whole mass, so scanning upward
        // from just under it finds the first acceptable index.
        let mut m = self.start.saturating_sub(1);
        while self.tail_weight(m) > limit {
            m += 1;
        }
        m
    }
}

/// Exact `m_eps(rho)`; zero when `rho == 0`.
pub fn exact_m_eps(rho: f64, eps: f64) -> u64 {
    if rho == 0.0 {
        return 0;
    }
    PoissonTable::new(rho).quantile(eps)
}
