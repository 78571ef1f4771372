//! Direct stochastic simulation of the SIR model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// State `(S, I)` at time `t_end` for each of `paths` simulations started
/// from `(s0, i0)`, tallied into a histogram keyed by `(S, I)`.
pub fn sir_histogram(
    s0: u32,
    i0: u32,
    beta: f64,
    gamma: f64,
    t_end: f64,
    paths: usize,
    seed: u64,
) -> std::collections::HashMap<(u32, u32), u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = std::collections::HashMap::new();
    for _ in 0..paths {
        let (mut s, mut i) = (s0, i0);
        let mut t = 0.0;
        loop {
            let infect = beta * s as f64 * i as f64;
            let recover = gamma * i as f64;
            let total = infect + recover;
            if total == 0.0 {
                break;
            }
            let u: f64 = rng.random();
            t += -(1.0 - u).ln() / total;
            if t > t_end {
                break;
            }
            if rng.random::<f64>() * total < infect {
                s -= 1;
                i += 1;
            } else {
                i -= 1;
            }
        }
        *counts.entry((s, i)).or_insert(0) += 1;
    }
    counts
}
