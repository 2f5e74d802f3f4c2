//! Acyclic directed mixed graphs: projections, fixing, nested Markov checks,
//! minimal reductions and exact couplings of densely connected pairs.

pub mod construction;
pub mod continuous;
pub mod error;
pub mod fixing;
pub mod fixtures;
pub mod format;
pub mod generate;
pub mod graph;
pub mod kernel;
pub mod minimality;
pub mod oracle;
pub mod projection;
pub mod vertex;

pub use error::{Error, Result};
pub use format::{parse_graph, write_graph, GraphDocument};
pub use graph::{Admg, Cadmg, Relation};
pub use vertex::{Label, VertexSet};
pub use construction::{build_coupling, CouplingSem, Dataset};
pub use continuous::{continuous_sample, ContinuousSpec, Marginal};
pub use kernel::{DiscreteKernel, Variable};
pub use minimality::{minimal_set, prune, tree_reduce, MinimalReduction};
pub use oracle::{exact_joint, verify_pair, verify_theorem, IndependenceReport, TheoremOutcome};
pub use projection::{closure, latent_project, marg_project, pair_subgraph, DenseCase, Preference};
