//! The shared configuration file.
//!
//! TOML with one table per concern. Every key is optional and falls back
//! to the built-in default; unknown keys are rejected. Lengths in metres,
//! speeds in m/s, thrust in newtons, angles in degrees (angular rates in
//! rad/s).
//!
//! ```toml
//! [trim]
//! airspeed = 8.0
//! turn_rate = 0.8
//!
//! [scenario]
//! name = "rectangle"
//!
//! [ga]
//! seed = 11
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::design::{training_courses, BaselineGains, DesignSpec};
use crate::error::{IgcError, Result};
use crate::guidance::{min_turn_radius, PpnParams};
use crate::io::read_waypoints;
use crate::sim::{ControllerSettings, RollHoldGains, ScenarioSpec, SimSettings};
use crate::sof::{GaConfig, Weights};
use crate::vehicle::{
    ActuatorLimits, AeroConfig, CouplingCoeffs, LateralCoeffs, LongitudinalCoeffs, ServoParams, TrimOptions,
    TrimTargets,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSection {
    pub mass: f64,
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    pub ixz: f64,
    pub wing_area: f64,
    pub span: f64,
    pub chord: f64,
    pub air_density: f64,
    pub gravity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeroSection {
    pub cl0: f64,
    pub cl_alpha: f64,
    pub cl_q: f64,
    pub cl_de: f64,
    pub cd0: f64,
    pub cd_k: f64,
    pub cm0: f64,
    pub cm_alpha: f64,
    pub cm_q: f64,
    pub cm_de: f64,
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingSection {
    pub counter_torque: f64,
    pub wake_yaw: f64,
    pub wake_roll_alpha: f64,
    pub prop_momentum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorSection {
    pub elevator_min_deg: f64,
    pub elevator_max_deg: f64,
    pub rudder_min_deg: f64,
    pub rudder_max_deg: f64,
    pub thrust_min: f64,
    pub thrust_max: f64,
    pub elevator_servo_freq: f64,
    pub elevator_servo_damping: f64,
    pub rudder_servo_freq: f64,
    pub rudder_servo_damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrimSection {
    /// Design trim used for linearization and synthesis.
    pub airspeed: f64,
    pub turn_rate: f64,
    pub climb_rate: f64,
    /// Level-flight airspeed the controller operates about.
    pub operating_airspeed: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceSection {
    pub nav_constant: f64,
    pub arrival_radius: f64,
    pub rho_max_deg: f64,
    pub phi_roll_deg: f64,
    pub phi_max_deg: f64,
    /// Minimum turn radius; derived from `phi_max_deg` at the operating
    /// airspeed when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsSection {
    pub w1_gain: f64,
    pub w1_corner: f64,
    pub w2_gain: f64,
    pub w2_corner: f64,
    pub w3_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaSection {
    pub population: usize,
    pub generations: usize,
    pub mutation_scale: f64,
    pub mutation_decay: f64,
    pub seed: u64,
    pub damping_target: f64,
    pub damping_weight: f64,
    pub spiral_target: f64,
    pub spiral_weight: f64,
    pub decay_target: f64,
    pub decay_weight: f64,
    pub gain_weight: f64,
    pub finalists: usize,
    /// Score trial gains on the nonlinear training flights.
    pub training_flights: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub altitude_to_elevator: f64,
    pub pitch_to_elevator: f64,
    pub pitch_rate_to_elevator: f64,
    pub altitude_to_thrust: f64,
    pub pitch_to_thrust: f64,
    pub miss_to_bank: f64,
    pub bank_to_rudder: f64,
    pub roll_rate_to_rudder: f64,
    pub yaw_rate_to_rudder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub miss_limit: f64,
    /// Range at which the miss distance is fed back; 0 feeds it raw.
    pub reference_range: f64,
    pub roll_k_phi: f64,
    pub roll_k_p: f64,
    pub roll_k_i: f64,
    pub roll_error_limit_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// `line`, `rectangle` or `custom`.
    pub name: String,
    /// Waypoints for `custom`, as `[[x, y], ...]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waypoints: Option<Vec<[f64; 2]>>,
    /// CSV waypoint file for `custom`, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub waypoints_file: Option<PathBuf>,
    pub altitude: f64,
    /// Overrides the scenario's own duration when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    pub dwell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub inner_dt: f64,
    pub control_dt: f64,
    pub gps_period: f64,
    pub divergence_factor: f64,
}

/// The whole file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub vehicle: VehicleSection,
    pub aero: AeroSection,
    pub coupling: CouplingSection,
    pub actuators: ActuatorSection,
    pub trim: TrimSection,
    pub guidance: GuidanceSection,
    pub weights: WeightsSection,
    pub ga: GaSection,
    pub baseline: BaselineSection,
    pub controller: ControllerSection,
    pub scenario: ScenarioSection,
    pub sim: SimSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for VehicleSection {
    fn default() -> Self {
        let a = AeroConfig::default();
        Self {
            mass: a.mass,
            ixx: a.inertia[(0, 0)],
            iyy: a.inertia[(1, 1)],
            izz: a.inertia[(2, 2)],
            ixz: -a.inertia[(0, 2)],
            wing_area: a.wing_area,
            span: a.span,
            chord: a.chord,
            air_density: a.air_density,
            gravity: a.gravity,
        }
    }
}

impl Default for AeroSection {
    fn default() -> Self {
        let a = AeroConfig::default();
        let (l, t) = (a.longitudinal, a.lateral);
        Self {
            cl0: l.cl0,
            cl_alpha: l.cl_alpha,
            cl_q: l.cl_q,
            cl_de: l.cl_de,
            cd0: l.cd0,
            cd_k: l.cd_k,
            cm0: l.cm0,
            cm_alpha: l.cm_alpha,
            cm_q: l.cm_q,
            cm_de: l.cm_de,
            cy_beta: t.cy_beta,
            cy_p: t.cy_p,
            cy_r: t.cy_r,
            cy_dr: t.cy_dr,
            croll_beta: t.croll_beta,
            croll_p: t.croll_p,
            croll_r: t.croll_r,
            croll_dr: t.croll_dr,
            cyaw_beta: t.cyaw_beta,
            cyaw_p: t.cyaw_p,
            cyaw_r: t.cyaw_r,
            cyaw_dr: t.cyaw_dr,
        }
    }
}

impl Default for CouplingSection {
    fn default() -> Self {
        let c = AeroConfig::default().coupling;
        Self {
            counter_torque: c.counter_torque,
            wake_yaw: c.wake_yaw,
            wake_roll_alpha: c.wake_roll_alpha,
            prop_momentum: c.prop_momentum,
        }
    }
}

impl Default for ActuatorSection {
    fn default() -> Self {
        let a = AeroConfig::default();
        let l = a.limits;
        Self {
            elevator_min_deg: l.elevator.0.to_degrees(),
            elevator_max_deg: l.elevator.1.to_degrees(),
            rudder_min_deg: l.rudder.0.to_degrees(),
            rudder_max_deg: l.rudder.1.to_degrees(),
            thrust_min: l.thrust.0,
            thrust_max: l.thrust.1,
            elevator_servo_freq: a.elevator_servo.natural_freq,
            elevator_servo_damping: a.elevator_servo.damping,
            rudder_servo_freq: a.rudder_servo.natural_freq,
            rudder_servo_damping: a.rudder_servo.damping,
        }
    }
}

impl Default for TrimSection {
    fn default() -> Self {
        let t = TrimTargets::default();
        let o = TrimOptions::default();
        Self {
            airspeed: t.airspeed,
            turn_rate: t.turn_rate,
            climb_rate: t.climb_rate,
            operating_airspeed: 8.0,
            tolerance: o.tolerance,
            max_iterations: o.max_iterations,
        }
    }
}

impl Default for GuidanceSection {
    fn default() -> Self {
        let p = PpnParams::for_airspeed(8.0, AeroConfig::default().gravity);
        Self {
            nav_constant: p.nav_constant,
            arrival_radius: p.arrival_radius,
            rho_max_deg: p.rho_max.to_degrees(),
            phi_roll_deg: p.phi_roll.to_degrees(),
            phi_max_deg: p.phi_max.to_degrees(),
            r_min: None,
        }
    }
}

impl Default for WeightsSection {
    fn default() -> Self {
        let w = Weights::default();
        Self {
            w1_gain: w.w1_gain,
            w1_corner: w.w1_corner,
            w2_gain: w.w2_gain,
            w2_corner: w.w2_corner,
            w3_gain: w.w3_gain,
        }
    }
}

impl Default for GaSection {
    fn default() -> Self {
        let g = GaConfig::default();
        Self {
            population: g.population,
            generations: g.generations,
            mutation_scale: g.mutation_scale,
            mutation_decay: g.mutation_decay,
            seed: g.seed,
            damping_target: g.damping_target,
            damping_weight: g.damping_weight,
            spiral_target: g.spiral_target,
            spiral_weight: g.spiral_weight,
            decay_target: g.decay_target,
            decay_weight: g.decay_weight,
            gain_weight: g.gain_weight,
            finalists: g.finalists,
            training_flights: true,
        }
    }
}

impl Default for BaselineSection {
    fn default() -> Self {
        let b = BaselineGains::default();
        Self {
            altitude_to_elevator: b.altitude_to_elevator,
            pitch_to_elevator: b.pitch_to_elevator,
            pitch_rate_to_elevator: b.pitch_rate_to_elevator,
            altitude_to_thrust: b.altitude_to_thrust,
            pitch_to_thrust: b.pitch_to_thrust,
            miss_to_bank: b.miss_to_bank,
            bank_to_rudder: b.bank_to_rudder,
            roll_rate_to_rudder: b.roll_rate_to_rudder,
            yaw_rate_to_rudder: b.yaw_rate_to_rudder,
        }
    }
}

impl Default for ControllerSection {
    fn default() -> Self {
        let c = ControllerSettings::default();
        Self {
            miss_limit: c.miss_limit,
            reference_range: c.reference_range.unwrap_or(0.0),
            roll_k_phi: c.roll_hold.k_phi,
            roll_k_p: c.roll_hold.k_p,
            roll_k_i: c.roll_hold.k_i,
            roll_error_limit_deg: c.roll_hold.error_limit.to_degrees(),
        }
    }
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            name: "line".into(),
            waypoints: None,
            waypoints_file: None,
            altitude: 20.0,
            duration: None,
            dwell: 3,
        }
    }
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimSettings::default();
        Self {
            inner_dt: s.inner_dt,
            control_dt: s.control_dt,
            gps_period: s.gps_period,
            divergence_factor: s.divergence_factor,
        }
    }
}

/// Scenarios that need no waypoint list in the config.
pub const BUILTIN_SCENARIOS: [&str; 2] = ["line", "rectangle"];

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| IgcError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read and validate a config file; relative paths inside it resolve
    /// against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| IgcError::io(path, e))?;
        let mut cfg: Config = toml::from_str(&text).map_err(|e| IgcError::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Check everything that can be checked without touching other files.
    pub fn validate(&self) -> Result<()> {
        self.aero()?;
        self.ppn_params()?;
        self.design_spec_with(Vec::new())?;
        self.sim_settings().validate()?;
        let s = &self.scenario;
        match s.name.as_str() {
            "line" | "rectangle" => {}
            "custom" => {
                if s.waypoints.is_some() == s.waypoints_file.is_some() {
                    return Err(IgcError::Config(
                        "scenario 'custom' needs exactly one of waypoints or waypoints_file".into(),
                    ));
                }
            }
            other => {
                return Err(IgcError::Config(format!(
                    "unknown scenario '{other}' (expected line, rectangle or custom)"
                )))
            }
        }
        if s.duration.is_some_and(|d| !(d > 0.0 && d.is_finite())) {
            return Err(IgcError::Config("scenario duration must be positive".into()));
        }
        Ok(())
    }

    pub fn aero(&self) -> Result<AeroConfig> {
        let (v, a, c, act) = (&self.vehicle, &self.aero, &self.coupling, &self.actuators);
        let cfg = AeroConfig {
            mass: v.mass,
            inertia: Matrix3::new(v.ixx, 0.0, -v.ixz, 0.0, v.iyy, 0.0, -v.ixz, 0.0, v.izz),
            wing_area: v.wing_area,
            span: v.span,
            chord: v.chord,
            air_density: v.air_density,
            gravity: v.gravity,
            longitudinal: LongitudinalCoeffs {
                cl0: a.cl0,
                cl_alpha: a.cl_alpha,
                cl_q: a.cl_q,
                cl_de: a.cl_de,
                cd0: a.cd0,
                cd_k: a.cd_k,
                cm0: a.cm0,
                cm_alpha: a.cm_alpha,
                cm_q: a.cm_q,
                cm_de: a.cm_de,
            },
            lateral: LateralCoeffs {
                cy_beta: a.cy_beta,
                cy_p: a.cy_p,
                cy_r: a.cy_r,
                cy_dr: a.cy_dr,
                croll_beta: a.croll_beta,
                croll_p: a.croll_p,
                croll_r: a.croll_r,
                croll_dr: a.croll_dr,
                cyaw_beta: a.cyaw_beta,
                cyaw_p: a.cyaw_p,
                cyaw_r: a.cyaw_r,
                cyaw_dr: a.cyaw_dr,
            },
            coupling: CouplingCoeffs {
                counter_torque: c.counter_torque,
                wake_yaw: c.wake_yaw,
                wake_roll_alpha: c.wake_roll_alpha,
                prop_momentum: c.prop_momentum,
            },
            limits: ActuatorLimits {
                elevator: (act.elevator_min_deg.to_radians(), act.elevator_max_deg.to_radians()),
                rudder: (act.rudder_min_deg.to_radians(), act.rudder_max_deg.to_radians()),
                thrust: (act.thrust_min, act.thrust_max),
            },
            elevator_servo: ServoParams {
                natural_freq: act.elevator_servo_freq,
                damping: act.elevator_servo_damping,
            },
            rudder_servo: ServoParams {
                natural_freq: act.rudder_servo_freq,
                damping: act.rudder_servo_damping,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn trim_targets(&self) -> TrimTargets {
        TrimTargets {
            airspeed: self.trim.airspeed,
            turn_rate: self.trim.turn_rate,
            climb_rate: self.trim.climb_rate,
        }
    }

    pub fn trim_options(&self) -> TrimOptions {
        TrimOptions {
            tolerance: self.trim.tolerance,
            max_iterations: self.trim.max_iterations,
            altitude: self.scenario.altitude,
        }
    }

    pub fn ppn_params(&self) -> Result<PpnParams> {
        let g = &self.guidance;
        let phi_max = g.phi_max_deg.to_radians();
        let p = PpnParams {
            nav_constant: g.nav_constant,
            r_min: g
                .r_min
                .unwrap_or_else(|| min_turn_radius(self.trim.operating_airspeed, phi_max, self.vehicle.gravity)),
            arrival_radius: g.arrival_radius,
            rho_max: g.rho_max_deg.to_radians(),
            phi_roll: g.phi_roll_deg.to_radians(),
            phi_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn ga_config(&self) -> GaConfig {
        let g = &self.ga;
        GaConfig {
            population: g.population,
            generations: g.generations,
            mutation_scale: g.mutation_scale,
            mutation_decay: g.mutation_decay,
            seed: g.seed,
            damping_target: g.damping_target,
            damping_weight: g.damping_weight,
            spiral_target: g.spiral_target,
            spiral_weight: g.spiral_weight,
            decay_target: g.decay_target,
            decay_weight: g.decay_weight,
            gain_weight: g.gain_weight,
            finalists: g.finalists,
        }
    }

    pub fn weights(&self) -> Weights {
        let w = &self.weights;
        Weights {
            w1_gain: w.w1_gain,
            w1_corner: w.w1_corner,
            w2_gain: w.w2_gain,
            w2_corner: w.w2_corner,
            w3_gain: w.w3_gain,
        }
    }

    pub fn controller_settings(&self) -> ControllerSettings {
        let c = &self.controller;
        ControllerSettings {
            roll_hold: RollHoldGains {
                k_phi: c.roll_k_phi,
                k_p: c.roll_k_p,
                k_i: c.roll_k_i,
                error_limit: c.roll_error_limit_deg.to_radians(),
            },
            miss_limit: c.miss_limit,
            reference_range: (c.reference_range != 0.0).then_some(c.reference_range),
        }
    }

    pub fn sim_settings(&self) -> SimSettings {
        let s = &self.sim;
        SimSettings {
            inner_dt: s.inner_dt,
            control_dt: s.control_dt,
            gps_period: s.gps_period,
            divergence_factor: s.divergence_factor,
        }
    }

    fn baseline(&self) -> BaselineGains {
        let b = &self.baseline;
        BaselineGains {
            altitude_to_elevator: b.altitude_to_elevator,
            pitch_to_elevator: b.pitch_to_elevator,
            pitch_rate_to_elevator: b.pitch_rate_to_elevator,
            altitude_to_thrust: b.altitude_to_thrust,
            pitch_to_thrust: b.pitch_to_thrust,
            miss_to_bank: b.miss_to_bank,
            bank_to_rudder: b.bank_to_rudder,
            roll_rate_to_rudder: b.roll_rate_to_rudder,
            yaw_rate_to_rudder: b.yaw_rate_to_rudder,
        }
    }

    fn design_spec_with(&self, courses: Vec<ScenarioSpec>) -> Result<DesignSpec> {
        let spec = DesignSpec {
            design_trim: self.trim_targets(),
            operating_airspeed: self.trim.operating_airspeed,
            trim_options: self.trim_options(),
            params: self.ppn_params()?,
            ts: self.sim.control_dt,
            weights: self.weights(),
            ga: self.ga_config(),
            baseline: self.baseline(),
            controller: self.controller_settings(),
            courses,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Design-search inputs, including the training flights unless they
    /// are switched off.
    pub fn design_spec(&self) -> Result<DesignSpec> {
        let params = self.ppn_params()?;
        let courses = if self.ga.training_flights {
            training_courses(params)
                .into_iter()
                .map(|mut c| {
                    c.altitude = self.scenario.altitude;
                    c.dwell = self.scenario.dwell;
                    c.settings = self.sim_settings();
                    c
                })
                .collect()
        } else {
            Vec::new()
        };
        self.design_spec_with(courses)
    }

    /// The configured scenario, or the one named by `name` when given.
    pub fn scenario_spec(&self, name: Option<&str>) -> Result<ScenarioSpec> {
        let params = self.ppn_params()?;
        let s = &self.scenario;
        let name = name.unwrap_or(&s.name);
        let mut spec = match name {
            "line" => ScenarioSpec::line(params),
            "rectangle" => ScenarioSpec::rectangle(params),
            "custom" => {
                let waypoints = match (&s.waypoints, &s.waypoints_file) {
                    (Some(w), None) => w.iter().map(|p| (p[0], p[1])).collect(),
                    (None, Some(file)) => read_waypoints(&self.base_dir.join(file))?,
                    _ => {
                        return Err(IgcError::Config(
                            "scenario 'custom' needs exactly one of waypoints or waypoints_file".into(),
                        ))
                    }
                };
                let mut spec = ScenarioSpec::line(params);
                spec.name = "custom".into();
                spec.waypoints = waypoints;
                spec
            }
            other => {
                return Err(IgcError::Config(format!(
                    "unknown scenario '{other}' (expected line, rectangle or custom)"
                )))
            }
        };
        spec.altitude = s.altitude;
        spec.dwell = s.dwell;
        spec.settings = self.sim_settings();
        if let Some(d) = s.duration {
            spec.duration = d;
        }
        spec.validate()?;
        Ok(spec)
    }
}
