// Negated comparisons like `!(x > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod design;
pub mod error;
pub mod guidance;
pub mod igc;
pub mod io;
pub mod linalg;
pub mod navigator;
pub mod sim;
pub mod sof;
pub mod vehicle;

pub use error::{IgcError, Result};

pub use config::Config;
pub use design::{synthesize, Design, DesignSpec};
pub use guidance::PpnParams;
pub use igc::{DiscreteModel, IgcLinearModel, ModeTable};
pub use io::NamedMatrix;
pub use sim::{run_scenario, Controller, ScenarioOutcome, ScenarioSpec, TelemetryRecord, Termination};
pub use sof::{published_gain, LmiCertificate, SofGain};
pub use vehicle::{AeroConfig, Controls, LinearModel, RigidBodyState, TrimPoint, TrimTargets};
