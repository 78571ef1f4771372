//! Generators for the example models and the helpers built on them.

mod birth;
mod chains;
mod epidemic;
mod graph;
mod statespace;

pub use birth::{
    build_sir_birth, eyam_loglik, pruned_dim, sir_factor, sir_loglik, EpidemicObservations,
    LikelihoodFactor, SirObservation, EYAM_MLE,
};
pub use chains::{
    binomial_pmf, build_imm_death, build_moran, imm_death_exact, imm_death_occupancy,
};
pub use epidemic::{
    build_seirs, build_sir, seirs_ode, seirs_summaries, seirs_summary, SeirsParams, SeirsSummary,
    Waning,
};
pub use graph::{
    barabasi_albert, diffusion_discrepancy, graph_laplacian, join_graphs, JoinMode, WeightedGraph,
};
pub use statespace::{ModelKind, StateSpaceMap};
