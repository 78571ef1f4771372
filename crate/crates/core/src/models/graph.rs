//! Weighted graphs, preferential-attachment generation and diffusion
//! discrepancies between graphs.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::musps::{musps_expmv, TimeGrid};
use crate::sparse::RateMatrix;
use crate::sum::l1_distance;

/// Undirected graph with positive integer edge weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    n_nodes: usize,
    /// `(u, v, w)` with `u < v`, sorted.
    edges: Vec<(usize, usize, u64)>,
    seed: Option<u64>,
    last_added: usize,
}

impl WeightedGraph {
    /// Builds a graph, merging repeated pairs by adding their weights.
    pub fn from_edges(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (u, v, w) in edges {
            if u == v {
                return Err(Error::invalid(format!("self-loop at node {u}")));
            }
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) outside 0..{n_nodes}"
                )));
            }
            if w == 0 {
                continue;
            }
            *merged.entry((u.min(v), u.max(v))).or_default() += w;
        }
        Ok(WeightedGraph {
            n_nodes,
            edges: merged.into_iter().map(|((u, v), w)| (u, v, w)).collect(),
            seed: None,
            last_added: n_nodes.saturating_sub(1),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize, u64)] {
        &self.edges
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Total incident weight of every node.
    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0; self.n_nodes];
        for &(u, v, w) in &self.edges {
            deg[u] += w;
            deg[v] += w;
        }
        deg
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    /// Node of largest degree, the lowest index on ties.
    pub fn highest_degree_node(&self) -> usize {
        let deg = self.degrees();
        let mut best = 0;
        for (k, &d) in deg.iter().enumerate() {
            if d > deg[best] {
                best = k;
            }
        }
        best
    }

    /// The node added last during generation (the highest index otherwise).
    pub fn last_added_node(&self) -> usize {
        self.last_added
    }

    /// Negative Laplacian `A − D`, a conservative generator.
    pub fn laplacian(&self) -> Result<RateMatrix> {
        RateMatrix::from_rates(
            self.n_nodes,
            self.edges
                .iter()
                .flat_map(|&(u, v, w)| [(u, v, w as f64), (v, u, w as f64)]),
        )
    }

    /// Edge list: a seed comment when known, then `u v weight` lines with
    /// 1-based node numbers.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        match self.seed {
            Some(seed) => {
                let _ = writeln!(out, "# seed {seed}");
            }
            None => out.push_str("# seed none\n"),
        }
        let _ = writeln!(out, "# nodes {}", self.n_nodes);
        for &(u, v, w) in &self.edges {
            let _ = writeln!(out, "{} {} {w}", u + 1, v + 1);
        }
        out
    }
}

/// `−L` for `g`.
pub fn graph_laplacian(g: &WeightedGraph) -> Result<RateMatrix> {
    g.laplacian()
}

/// Preferential-attachment graph on `n` nodes.
///
/// Starts from two nodes joined by `2m` edges. Each new node then draws `m`
/// partners one after another from the existing nodes, each with probability
/// proportional to its current degree, so degrees change between draws.
/// Repeated edges are merged into one edge whose weight is their count.
pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> Result<WeightedGraph> {
    if n < 2 || m < 1 {
        return Err(Error::invalid(format!(
            "need n >= 2 and m >= 1, got n={n}, m={m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Each node appears once per unit of degree.
    let mut ends: Vec<usize> = Vec::with_capacity(2 * m * n);
    let mut edges: Vec<(usize, usize, u64)> = Vec::with_capacity(m * n);
    ends.extend(std::iter::repeat_n([0, 1], 2 * m).flatten());
    edges.push((0, 1, 2 * m as u64));
    for new in 2..n {
        for _ in 0..m {
            let target = ends[rng.random_range(0..ends.len())];
            ends.push(target);
            edges.push((target, new, 1));
        }
        ends.extend(std::iter::repeat_n(new, m));
    }
    let mut g = WeightedGraph::from_edges(n, edges)?;
    g.seed = Some(seed);
    g.last_added = n - 1;
    Ok(g)
}

/// Which endpoint of each graph carries the bridge: highest-degree (`h`)
/// or last-added (`l`) node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinMode {
    Hh,
    Hl,
    Lh,
    Ll,
}

impl JoinMode {
    pub const ALL: [JoinMode; 4] = [JoinMode::Hh, JoinMode::Hl, JoinMode::Lh, JoinMode::Ll];
}

impl fmt::Display for JoinMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinMode::Hh => "hh",
            JoinMode::Hl => "hl",
            JoinMode::Lh => "lh",
            JoinMode::Ll => "ll",
        })
    }
}

impl FromStr for JoinMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hh" => Ok(JoinMode::Hh),
            "hl" => Ok(JoinMode::Hl),
            "lh" => Ok(JoinMode::Lh),
            "ll" => Ok(JoinMode::Ll),
            _ => Err(Error::invalid(format!("unknown join mode {s:?}"))),
        }
    }
}

/// Disjoint union of `a` and `b` (nodes of `b` shifted by `a.n_nodes()`)
/// plus one bridging edge of weight `weight`.
pub fn join_graphs(
    a: &WeightedGraph,
    b: &WeightedGraph,
    mode: JoinMode,
    weight: u64,
) -> Result<WeightedGraph> {
    let pick = |g: &WeightedGraph, high: bool| {
        if high {
            g.highest_degree_node()
        } else {
            g.last_added_node()
        }
    };
    let (ha, hb) = match mode {
        JoinMode::Hh => (true, true),
        JoinMode::Hl => (true, false),
        JoinMode::Lh => (false, true),
        JoinMode::Ll => (false, false),
    };
    let off = a.n_nodes;
    let bridge = (pick(a, ha), off + pick(b, hb), weight);
    let edges = a
        .edges
        .iter()
        .copied()
        .chain(b.edges.iter().map(|&(u, v, w)| (u + off, v + off, w)))
        .chain(std::iter::once(bridge));
    let mut g = WeightedGraph::from_edges(off + b.n_nodes, edges)?;
    g.last_added = off + b.last_added;
    Ok(g)
}

/// `‖ν e^{−L₁t} − ν e^{−L₂t}‖₁` at every grid time.
pub fn diffusion_discrepancy(
    nu: &[f64],
    g1: &WeightedGraph,
    g2: &WeightedGraph,
    grid: &TimeGrid,
    eps: f64,
) -> Result<Vec<f64>> {
    if g1.n_nodes != g2.n_nodes {
        return Err(Error::DimensionMismatch {
            expected: g1.n_nodes,
            got: g2.n_nodes,
        });
    }
    let r1 = musps_expmv(nu, &g1.laplacian()?, grid, eps)?;
    let r2 = if g1 == g2 {
        r1.clone()
    } else {
        musps_expmv(nu, &g2.laplacian()?, grid, eps)?
    };
    Ok(r1
        .iter()
        .zip(&r2)
        .map(|(a, b)| l1_distance(&a.dist, &b.dist))
        .collect())
}
