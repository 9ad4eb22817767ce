//! Static output-feedback synthesis on the weighted discrete plant: the
//! slack-variable stability LMI, a barrier solver for it, and a genetic
//! search over the slack matrix.

mod ga;
mod gain;
mod lmi;
mod plant;

pub use ga::{
    certify_finalists, evolve, evolve_from, ga_search, performance_index, radius_fitness, search_problem,
    slack_from_gain, Certified, GaConfig, Individual, Synthesis,
};
pub use gain::{closed_loop_modes, published_gain, SofGain};
pub use lmi::{
    lmi_block, lmi_residual, solve_sof, solve_sof_from, LmiCertificate, SofProblem, SofSolution, SolveReport,
    SolverOptions, CERT_MARGIN,
};
pub use plant::{build_generalized_plant, feedback_map, GeneralizedPlant, Weights, FEEDBACK_FROM_OUTPUT, SOF_OUTPUTS};
