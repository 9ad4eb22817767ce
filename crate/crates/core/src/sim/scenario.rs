use crate::error::{IgcError, Result};
use crate::guidance::PpnParams;
use crate::vehicle::{Controls, RigidBodyState};

/// Integration and sampling schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub inner_dt: f64,
    pub control_dt: f64,
    pub gps_period: f64,
    /// Abort when speed or body rate exceeds this multiple of its
    /// operating-point scale.
    pub divergence_factor: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            inner_dt: 0.002,
            control_dt: 0.02,
            gps_period: 1.0,
            divergence_factor: 10.0,
        }
    }
}

fn whole_ratio(num: f64, den: f64) -> Option<usize> {
    let k = (num / den).round();
    (k >= 1.0 && (k * den - num).abs() <= 1e-9 * num.abs().max(1.0)).then_some(k as usize)
}

impl SimSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_dt > 0.0 && self.control_dt > 0.0 && self.gps_period > 0.0) {
            return Err(IgcError::Config("sim step sizes must be positive".into()));
        }
        if whole_ratio(self.control_dt, self.inner_dt).is_none() {
            return Err(IgcError::Config(
                "control step must be a whole multiple of the inner step".into(),
            ));
        }
        if whole_ratio(self.gps_period, self.control_dt).is_none() {
            return Err(IgcError::Config(
                "GPS period must be a whole multiple of the control step".into(),
            ));
        }
        if !(self.divergence_factor > 1.0) {
            return Err(IgcError::Config("divergence factor must exceed 1".into()));
        }
        Ok(())
    }

    pub fn inner_steps(&self) -> usize {
        whole_ratio(self.control_dt, self.inner_dt).expect("validated")
    }

    pub fn gps_steps(&self) -> usize {
        whole_ratio(self.gps_period, self.control_dt).expect("validated")
    }
}

/// The published initial condition: u = 7.78, v = −0.43, w = 1.81 m/s,
/// φ = −0.0361, θ = 0.2304, ψ = 0 rad at the origin, 20 m up, with
/// δe = −0.2592 rad, δr = 0.1255 rad, δt = 0.231 N.
pub fn published_initial() -> (RigidBodyState, Controls) {
    let s = RigidBodyState {
        u: 7.78,
        v: -0.43,
        w: 1.81,
        phi: -0.0361,
        theta: 0.2304,
        psi: 0.0,
        h: 20.0,
        ..RigidBodyState::default()
    };
    (s, Controls::new(-0.2592, 0.1255, 0.231))
}

/// Straight-line fixture, reconstructed: five waypoints on the line
/// y = 30 m heading north, so the first one sits about 31° off the nose.
pub fn line_waypoints() -> Vec<(f64, f64)> {
    (1..=5).map(|k| (50.0 * k as f64, 30.0)).collect()
}

/// 100 m × 200 m rectangle entered at (80, 0), flown clockwise and closed
/// back at its first corner.
pub fn rectangle_waypoints() -> Vec<(f64, f64)> {
    vec![(80.0, 0.0), (80.0, 100.0), (-120.0, 100.0), (-120.0, 0.0), (80.0, 0.0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub waypoints: Vec<(f64, f64)>,
    /// Mission altitude, the altitude reference (m).
    pub altitude: f64,
    pub initial_state: RigidBodyState,
    pub initial_controls: Controls,
    pub duration: f64,
    pub params: PpnParams,
    /// Samples the angle gate must persist before a mode switch.
    pub dwell: usize,
    pub settings: SimSettings,
}

impl ScenarioSpec {
    fn with(name: &str, waypoints: Vec<(f64, f64)>, duration: f64, params: PpnParams) -> Self {
        let (initial_state, initial_controls) = published_initial();
        Self {
            name: name.to_string(),
            waypoints,
            altitude: 20.0,
            initial_state,
            initial_controls,
            duration,
            params,
            dwell: 3,
            settings: SimSettings::default(),
        }
    }

    pub fn line(params: PpnParams) -> Self {
        Self::with("line", line_waypoints(), 90.0, params)
    }

    pub fn rectangle(params: PpnParams) -> Self {
        Self::with("rectangle", rectangle_waypoints(), 200.0, params)
    }

    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        self.params.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(IgcError::Config("scenario duration must be positive".into()));
        }
        if !self.altitude.is_finite() {
            return Err(IgcError::Config("mission altitude must be finite".into()));
        }
        if self.dwell == 0 {
            return Err(IgcError::Config("dwell must be at least one sample".into()));
        }
        let s = &self.initial_state;
        if !(s.airspeed() > 0.0) {
            return Err(IgcError::Config("initial airspeed must be positive".into()));
        }
        if !(s.phi.abs() < std::f64::consts::FRAC_PI_2 && s.theta.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(IgcError::Config(
                "initial |phi| and |theta| must be below 90 deg".into(),
            ));
        }
        if s.to_vector().iter().any(|v| !v.is_finite()) {
            return Err(IgcError::Config("initial state must be finite".into()));
        }
        Ok(())
    }
}
