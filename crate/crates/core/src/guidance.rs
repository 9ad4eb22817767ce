//! Planar miss-distance guidance: line-of-sight geometry, the proportional
//! navigation form of the law, the turn-radius feasibility test and the
//! bridge from vehicle dynamics to lateral acceleration.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{IgcError, Result};
use crate::vehicle::{heading_rate, side_force, AeroConfig, RigidBodyState};

/// Wrap an angle to (−π, π].
pub fn wrap_pi(a: f64) -> f64 {
    let mut x = (a + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

/// Line-of-sight geometry between the vehicle and the active waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceGeometry {
    /// Bearing of the line of sight, `atan2(xf − x, yf − y)`.
    pub sigma: f64,
    /// Angle from the line of sight to the velocity vector; positive when the
    /// waypoint lies to the right of the flight path.
    pub rho: f64,
    pub r_a: f64,
    /// Signed miss distance `r_a·sin ρ`.
    pub d: f64,
    pub chi: f64,
}

/// Miss distance and its rate, the two guidance states.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GuidanceState {
    pub x1: f64,
    pub x2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpnParams {
    pub nav_constant: f64,
    pub r_min: f64,
    pub arrival_radius: f64,
    pub rho_max: f64,
    pub phi_roll: f64,
    pub phi_max: f64,
}

impl PpnParams {
    /// N = 3, 20° gate, 5 m arrival radius, 10° roll-hold bank and a minimum
    /// turn radius from a 30° bank at `airspeed`.
    pub fn for_airspeed(airspeed: f64, gravity: f64) -> Self {
        let phi_max = 30f64.to_radians();
        Self {
            nav_constant: 3.0,
            r_min: min_turn_radius(airspeed, phi_max, gravity),
            arrival_radius: 5.0,
            rho_max: 20f64.to_radians(),
            phi_roll: 10f64.to_radians(),
            phi_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nav_constant >= 2.0) {
            return Err(IgcError::Config(format!(
                "navigation constant must be at least 2, got {}",
                self.nav_constant
            )));
        }
        if !(self.r_min > 0.0 && self.arrival_radius > 0.0) {
            return Err(IgcError::Config(
                "minimum turn radius and arrival radius must be positive".into(),
            ));
        }
        if !(self.rho_max > 0.0 && self.rho_max < FRAC_PI_2) {
            return Err(IgcError::Config("angle gate must lie in (0°, 90°)".into()));
        }
        if !(self.phi_roll.abs() < self.phi_max && self.phi_max < FRAC_PI_2) {
            return Err(IgcError::Config(
                "roll-hold bank must be below the maximum bank angle".into(),
            ));
        }
        Ok(())
    }
}

/// `Va²/(g·tan φ_max)`.
pub fn min_turn_radius(airspeed: f64, phi_max: f64, gravity: f64) -> f64 {
    airspeed * airspeed / (gravity * phi_max.tan())
}

/// Geometry from position (x north, y east), waypoint and course χ. `None`
/// when the vehicle sits exactly on the waypoint.
pub fn geometry(x: f64, y: f64, xf: f64, yf: f64, chi: f64) -> Option<GuidanceGeometry> {
    let (dx, dy) = (xf - x, yf - y);
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    let sigma = dx.atan2(dy);
    let rho = wrap_pi(FRAC_PI_2 - (chi + sigma));
    let r_a = dx.hypot(dy);
    Some(GuidanceGeometry {
        sigma,
        rho,
        r_a,
        d: r_a * rho.sin(),
        chi,
    })
}

/// Proportional gain `k1 = N·Va²/r_a²`; `None` at zero range.
pub fn ppn_gain(nav_constant: f64, airspeed: f64, r_a: f64) -> Option<f64> {
    (r_a > 0.0).then(|| nav_constant * airspeed * airspeed / (r_a * r_a))
}

/// Commanded lateral acceleration `k1·d`, perpendicular to the velocity.
/// `None` once inside the arrival radius.
pub fn ppn_accel(geom: &GuidanceGeometry, params: &PpnParams, airspeed: f64) -> Option<f64> {
    if geom.r_a <= params.arrival_radius {
        return None;
    }
    ppn_gain(params.nav_constant, airspeed, geom.r_a).map(|k1| k1 * geom.d)
}

/// `r_a > 2·R_min·sin|ρ|`: the waypoint lies outside both minimum-radius
/// turn circles tangent to the velocity.
pub fn turn_feasible(r_a: f64, rho: f64, r_min: f64) -> bool {
    r_a > 2.0 * r_min * rho.abs().sin()
}

/// Lateral acceleration realised by the airframe, `Va·(ψ̇ + β̇)` with
/// `Va·β̇ = pw − ru + g·cosθ·sinφ + Y/m`.
pub fn accel_from_dynamics(state: &RigidBodyState, cfg: &AeroConfig, delta_r: f64) -> Result<f64> {
    let va = state.airspeed();
    if !(va > 0.0) {
        return Err(IgcError::Domain("lateral acceleration needs positive airspeed".into()));
    }
    let psi_dot = heading_rate(state)?;
    let y = side_force(state.beta(), state.p, state.r, delta_r, va, cfg)?;
    let s = state;
    let beta_term = s.p * s.w - s.r * s.u + cfg.gravity * s.theta.cos() * s.phi.sin() + y / cfg.mass;
    Ok(va * psi_dot + beta_term)
}

/// `(ẋ1, ẋ2) = (x2, (N − 1)·a_c)`.
pub fn guidance_derivative(gs: GuidanceState, a_c: f64, nav_constant: f64) -> (f64, f64) {
    (gs.x2, (nav_constant - 1.0) * a_c)
}

/// Constant-speed point mass in the horizontal plane, steered by an
/// acceleration normal to its velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    pub x: f64,
    pub y: f64,
    pub chi: f64,
    pub speed: f64,
}

impl PointMass {
    pub fn velocity(&self) -> (f64, f64) {
        (self.speed * self.chi.cos(), self.speed * self.chi.sin())
    }

    /// One RK4 step with a state-dependent lateral acceleration.
    pub fn step(&self, dt: f64, accel: impl Fn(&PointMass) -> f64) -> PointMass {
        let f = |s: &PointMass| {
            let (vx, vy) = s.velocity();
            (vx, vy, accel(s) / s.speed)
        };
        let add = |s: &PointMass, k: (f64, f64, f64), h: f64| PointMass {
            x: s.x + h * k.0,
            y: s.y + h * k.1,
            chi: s.chi + h * k.2,
            speed: s.speed,
        };
        let k1 = f(self);
        let k2 = f(&add(self, k1, 0.5 * dt));
        let k3 = f(&add(self, k2, 0.5 * dt));
        let k4 = f(&add(self, k3, dt));
        PointMass {
            x: self.x + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            y: self.y + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            chi: self.chi + dt / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
            speed: self.speed,
        }
    }
}

/// One sample of a kinematic PPN run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicSample {
    pub t: f64,
    pub body: PointMass,
    pub geom: GuidanceGeometry,
    pub a_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicRun {
    pub samples: Vec<KinematicSample>,
    pub arrived: bool,
}

/// Fly the point mass at waypoint `(xf, yf)` under the PPN command until it
/// enters the arrival radius or `t_max` elapses.
pub fn simulate_point_mass(
    start: PointMass,
    xf: f64,
    yf: f64,
    params: &PpnParams,
    dt: f64,
    t_max: f64,
) -> KinematicRun {
    let command = |s: &PointMass| {
        geometry(s.x, s.y, xf, yf, s.chi)
            .and_then(|g| ppn_gain(params.nav_constant, s.speed, g.r_a).map(|k| k * g.d))
            .unwrap_or(0.0)
    };
    let mut body = start;
    let mut samples = Vec::new();
    let steps = (t_max / dt).ceil() as usize;
    for k in 0..=steps {
        let Some(geom) = geometry(body.x, body.y, xf, yf, body.chi) else {
            return KinematicRun { samples, arrived: true };
        };
        let Some(a_c) = ppn_accel(&geom, params, body.speed) else {
            return KinematicRun { samples, arrived: true };
        };
        samples.push(KinematicSample {
            t: k as f64 * dt,
            body,
            geom,
            a_c,
        });
        body = body.step(dt, command);
    }
    KinematicRun {
        samples,
        arrived: false,
    }
}
