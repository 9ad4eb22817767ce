use nalgebra::Matrix3;

use crate::error::{IgcError, Result};

/// Lift, drag and pitching-moment coefficients. Derivatives are per radian;
/// rate derivatives are with respect to the non-dimensional rate `q·c/(2Va)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalCoeffs {
    pub cl0: f64,
    pub cl_alpha: f64,
    pub cl_q: f64,
    pub cl_de: f64,
    pub cd0: f64,
    /// Induced-drag factor in `CD = cd0 + k·CL²`.
    pub cd_k: f64,
    pub cm0: f64,
    pub cm_alpha: f64,
    pub cm_q: f64,
    pub cm_de: f64,
}

/// Side-force, rolling and yawing-moment coefficients. Rate derivatives are
/// with respect to `p·b/(2Va)` and `r·b/(2Va)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LateralCoeffs {
    pub cy_beta: f64,
    pub cy_p: f64,
    pub cy_r: f64,
    pub cy_dr: f64,
    pub croll_beta: f64,
    pub croll_p: f64,
    pub croll_r: f64,
    pub croll_dr: f64,
    pub cyaw_beta: f64,
    pub cyaw_p: f64,
    pub cyaw_r: f64,
    pub cyaw_dr: f64,
}

/// Sources of longitudinal/lateral cross coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCoeffs {
    /// Motor/propeller reaction torque about body x per newton of thrust (m).
    pub counter_torque: f64,
    /// Asymmetric slipstream yawing moment per newton of thrust (m).
    pub wake_yaw: f64,
    /// Asymmetric slipstream rolling-moment coefficient per radian of alpha.
    pub wake_roll_alpha: f64,
    /// Propeller angular momentum along body x (N·m·s); gyroscopic coupling.
    pub prop_momentum: f64,
}

impl CouplingCoeffs {
    pub fn none() -> Self {
        Self {
            counter_torque: 0.0,
            wake_yaw: 0.0,
            wake_roll_alpha: 0.0,
            prop_momentum: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::none()
    }
}

/// Second-order servo model `ω²/(s² + 2ζωs + ω²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoParams {
    pub natural_freq: f64,
    pub damping: f64,
}

impl Default for ServoParams {
    fn default() -> Self {
        Self {
            natural_freq: 48.7,
            damping: 0.742,
        }
    }
}

/// Hard actuator ranges (radians and newtons).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorLimits {
    pub elevator: (f64, f64),
    pub rudder: (f64, f64),
    pub thrust: (f64, f64),
}

impl Default for ActuatorLimits {
    fn default() -> Self {
        Self {
            elevator: (-35f64.to_radians(), 15f64.to_radians()),
            rudder: (-25f64.to_radians(), 25f64.to_radians()),
            thrust: (0.0, 0.45),
        }
    }
}

/// Mass properties, geometry, aerodynamic model and actuator description of
/// the vehicle. Everything the equations of motion need is data here.
#[derive(Debug, Clone, PartialEq)]
pub struct AeroConfig {
    pub mass: f64,
    pub inertia: Matrix3<f64>,
    pub wing_area: f64,
    pub span: f64,
    pub chord: f64,
    pub air_density: f64,
    pub gravity: f64,
    pub longitudinal: LongitudinalCoeffs,
    pub lateral: LateralCoeffs,
    pub coupling: CouplingCoeffs,
    pub limits: ActuatorLimits,
    pub elevator_servo: ServoParams,
    pub rudder_servo: ServoParams,
}

impl Default for AeroConfig {
    /// 150 mm rectangular flat-plate MAV, 53 g take-off weight.
    fn default() -> Self {
        let (ixx, iyy, izz, ixz) = (8.0e-5, 6.0e-5, 1.3e-4, 4.0e-6);
        Self {
            mass: 0.053,
            inertia: Matrix3::new(ixx, 0.0, -ixz, 0.0, iyy, 0.0, -ixz, 0.0, izz),
            wing_area: 0.0165,
            span: 0.15,
            chord: 0.11,
            air_density: 1.225,
            gravity: 9.81,
            longitudinal: LongitudinalCoeffs {
                cl0: 0.3,
                cl_alpha: 2.5,
                cl_q: 3.0,
                cl_de: 0.3,
                cd0: 0.08,
                cd_k: 0.4,
                cm0: 0.05,
                cm_alpha: -0.35,
                cm_q: -4.0,
                cm_de: -0.3,
            },
            lateral: LateralCoeffs {
                cy_beta: -0.5,
                cy_p: 0.0,
                cy_r: 0.3,
                cy_dr: 0.25,
                croll_beta: -0.03,
                croll_p: -0.35,
                croll_r: 0.15,
                croll_dr: 0.03,
                cyaw_beta: 0.12,
                cyaw_p: -0.05,
                cyaw_r: -0.1,
                cyaw_dr: -0.08,
            },
            coupling: CouplingCoeffs {
                counter_torque: 0.002,
                wake_yaw: 0.002,
                wake_roll_alpha: 0.01,
                prop_momentum: 2.0e-5,
            },
            limits: ActuatorLimits::default(),
            elevator_servo: ServoParams::default(),
            rudder_servo: ServoParams::default(),
        }
    }
}

impl AeroConfig {
    /// Same vehicle with every cross-coupling source removed.
    pub fn decoupled(&self) -> Self {
        Self {
            coupling: CouplingCoeffs::none(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(IgcError::Config(what.to_string()));
        if !(self.mass > 0.0) {
            return bad("mass must be positive");
        }
        if !(self.wing_area > 0.0 && self.span > 0.0 && self.chord > 0.0) {
            return bad("wing area, span and chord must be positive");
        }
        if !(self.air_density > 0.0) {
            return bad("air density must be positive");
        }
        if (self.inertia - self.inertia.transpose()).amax() > 1e-15 * self.inertia.amax() {
            return bad("inertia tensor must be symmetric");
        }
        if self.inertia.cholesky().is_none() {
            return bad("inertia tensor must be positive definite");
        }
        for (name, (lo, hi)) in [
            ("elevator", self.limits.elevator),
            ("rudder", self.limits.rudder),
            ("thrust", self.limits.thrust),
        ] {
            if !(lo < hi) {
                return Err(IgcError::Config(format!("{name} limits must satisfy min < max")));
            }
        }
        for servo in [self.elevator_servo, self.rudder_servo] {
            if !(servo.natural_freq > 0.0 && servo.damping > 0.0) {
                return bad("servo natural frequency and damping must be positive");
            }
        }
        Ok(())
    }

    pub fn dynamic_pressure(&self, airspeed: f64) -> f64 {
        0.5 * self.air_density * airspeed * airspeed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_coupled() {
        let cfg = AeroConfig::default();
        cfg.validate().unwrap();
        assert!(!cfg.coupling.is_zero());
        assert!(cfg.decoupled().coupling.is_zero());
        // Airframe geometry: 150 mm span, 110 mm chord, 53 g.
        assert_eq!(cfg.span, 0.15);
        assert_eq!(cfg.chord, 0.11);
        assert_eq!(cfg.mass, 0.053);
    }

    #[test]
    fn rejects_indefinite_inertia() {
        let mut cfg = AeroConfig::default();
        cfg.inertia[(2, 2)] = -1.0e-4;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dynamic_pressure_at_cruise() {
        let cfg = AeroConfig::default();
        assert!((cfg.dynamic_pressure(8.0) - 39.2).abs() < 1e-12);
    }
}
