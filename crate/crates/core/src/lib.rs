//! Belief diffusion on social networks.
//!
//! * [`graph`]: simple undirected graphs, clustering coefficients, edge lists, snowball sampling.
//! * [`synthesis`]: BA and clustering-weighted (GMG) growth generators.
//! * [`dynamics`]: exact belief updates, converged beliefs and control power.
//! * [`estimators`]: O(N) closed-form BA/GMG estimators.
//! * [`control`]: optimal control-set selection and a brute-force oracle.
//! * [`alpha`]: learning the clustering weight α.
//! * [`harness`]: seeded experiment pipelines and reports.

pub mod alpha;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod harness;
pub mod seed;
pub mod synthesis;

pub use control::{brute_force_control_set, check_gmg_condition, optimal_control_set, Objective, OptimizationResult};
pub use dynamics::{
    control_power_exact, converge_exact, converge_iterative, step, BeliefState, ControlStrategy,
    PrivateBeliefDistribution,
};
pub use error::{Error, Result};
pub use estimators::{beta, edge_prob_ba, edge_prob_gmg, eta, model_control_power, Model, ModelEstimate, ModelParams};
pub use graph::{adjusted_adjacency, clustering_coefficients, parse_edge_list, snowball_sample, Graph};
pub use synthesis::{synthesize_ba, synthesize_gmg, SynthesisConfig};
