//! Fifteen-state integrated guidance and control model: the coupled airframe,
//! the miss-distance chain and the two control-surface servos, with its
//! zero-order-hold discretization and pole classification.

mod model;
mod modes;

pub use model::{
    accel_jacobian, augment, discretize, output_map, DiscreteModel, IgcLinearModel, IGC_DIM, IGC_INPUTS, IGC_OUTPUTS,
    IGC_STATES, OUTPUT_INDEX,
};
pub use modes::{classify_modes, closed_loop_poles, open_loop_modes, Mode, ModeKind, ModeTable};
