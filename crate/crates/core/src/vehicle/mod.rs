//! Nonlinear six-degree-of-freedom model of the micro air vehicle: aerodynamics,
//! equations of motion, servo actuators, trim and numerical linearization.

mod aero;
mod config;
mod dynamics;
mod linear;
mod servo;
mod state;
mod trim;

pub use aero::{forces_and_moments, side_force};
pub use config::{ActuatorLimits, AeroConfig, CouplingCoeffs, LateralCoeffs, LongitudinalCoeffs, ServoParams};
pub use dynamics::{clamp_controls, derivative, heading_rate, sixdof_derivative, THETA_GUARD};
pub use linear::{
    coupling_spectrum_check, linear_state, linearize, linearize_with_step, CouplingReport, LinearModel, LINEAR_INPUTS,
    LINEAR_STATES, LONGITUDINAL_DIM,
};
pub use servo::{propagate, servo_step};
pub use state::{ActuatorState, Controls, RigidBodyState, ServoState, StateVector, STATE_DIM};
pub use trim::{trim_solve, TrimOptions, TrimPoint, TrimTargets};
