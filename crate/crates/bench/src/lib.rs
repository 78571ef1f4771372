//! Fixtures shared by the benchmarks.

use uniexp_core::models::{build_imm_death, build_seirs, SeirsParams};
use uniexp_core::RateMatrix;

/// Generator and start vector of a benchmark model.
pub struct Fixture {
    pub q: RateMatrix,
    pub nu: Vec<f64>,
}

/// Immigration-death with `μ = 0.05`, `γ = 0.01`, started full.
pub fn imm_death(n: u32) -> Fixture {
    let (q, _) = build_imm_death(n, 0.05, 0.01).expect("valid parameters");
    let mut nu = vec![0.0; q.dim()];
    nu[n as usize] = 1.0;
    Fixture { q, nu }
}

/// SEIRS with the benchmark rates, started from one exposed individual.
pub fn seirs(n: u32) -> Fixture {
    let (q, map) = build_seirs(n, SeirsParams::benchmark(n)).expect("valid parameters");
    let mut nu = vec![0.0; q.dim()];
    nu[map.index_of(&[n - 1, 1, 0]).expect("start state exists")] = 1.0;
    Fixture { q, nu }
}
