//! Synthetic social-network generation: R-MAT topology, Louvain community
//! labels constrained to ten communities, and seed-profile attribute
//! propagation with the statistics used to benchmark it.

pub mod error;
pub mod exec;
pub mod graph;
pub mod louvain;
pub mod output;
pub mod pipeline;
pub mod profiles;
pub mod propagator;
pub mod rmat;
pub mod seeder;
pub mod stats;

pub use error::{Error, Result};
pub use exec::Exec;
pub use graph::Graph;
