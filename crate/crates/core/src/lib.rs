//! Transient distributions of sparse continuous-time Markov chains by the
//! Single Positive Series (uniformization), at one or many times.

pub mod error;
pub mod models;
pub mod mtx;
pub mod musps;
pub mod poisson;
pub mod sparse;
pub mod sps;
pub mod sum;
mod twofold;

pub use error::{Error, Result};
pub use musps::{musps_expmv, sequential_sps, TimeGrid};
pub use poisson::{m_eps, TruncationWindow};
pub use sparse::{RateMatrix, ShiftedKernel, SparseMatrix, ValidationMode};
pub use sps::{sps_expmv, Guards, SpsOptions, SpsResult};
