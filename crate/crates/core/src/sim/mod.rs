//! Closed-loop nonlinear scenario runner: 6DOF airframe and servos at the
//! inner step, navigator and output-feedback law at the control step,
//! position fixes at the GPS period.

mod metrics;
mod output;
mod scenario;

pub use metrics::{compute_metrics, Arrival, Metrics, AIRSPEED_BAND};
pub use output::{
    read_telemetry, telemetry_csv, write_outputs, write_plot_scripts, OutputFiles, PLOT_SCRIPTS, TELEMETRY_COLUMNS,
    TELEMETRY_VERSION,
};
pub use scenario::{line_waypoints, published_initial, rectangle_waypoints, ScenarioSpec, SimSettings};

use serde::{Deserialize, Serialize};

use crate::error::{IgcError, Result};
use crate::guidance::accel_from_dynamics;
use crate::navigator::{NavCommand, NavEvent, NavMode, Navigator, WaypointPlan};
use crate::sof::SofGain;
use crate::vehicle::{clamp_controls, propagate, ActuatorState, AeroConfig, Controls, RigidBodyState, TrimPoint};

/// Rudder law used while the navigator holds a bank angle:
/// `δr = δr₀ + k_phi·e + k_i·∫e − k_p·p` with `e = φ_ref − φ` clipped to
/// `±error_limit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollHoldGains {
    pub k_phi: f64,
    pub k_p: f64,
    pub k_i: f64,
    /// rad
    pub error_limit: f64,
}

impl Default for RollHoldGains {
    fn default() -> Self {
        Self {
            k_phi: 1.0,
            k_p: 0.1,
            k_i: 1.0,
            error_limit: 4f64.to_radians(),
        }
    }
}

impl RollHoldGains {
    pub fn validate(&self) -> Result<()> {
        if [self.k_phi, self.k_p, self.k_i]
            .iter()
            .any(|k| !(k.is_finite() && *k >= 0.0))
        {
            return Err(IgcError::Config(
                "roll hold gains must be finite and non-negative".into(),
            ));
        }
        if !(self.error_limit > 0.0 && self.error_limit.is_finite()) {
            return Err(IgcError::Config("roll hold error limit must be positive".into()));
        }
        Ok(())
    }

    fn error(&self, phi_ref: f64, phi: f64) -> f64 {
        (phi_ref - phi).clamp(-self.error_limit, self.error_limit)
    }
}

/// Default bound on the miss distance seen by the controller (m).
pub const DEFAULT_MISS_LIMIT: f64 = 10.0;

/// Default range (m) at which the fed-back miss distance is taken.
pub const DEFAULT_REFERENCE_RANGE: f64 = 30.0;

/// How navigation signals are conditioned before they reach the gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerSettings {
    pub roll_hold: RollHoldGains,
    /// Bound (m) on the miss distance fed back, so that entering the
    /// tracking mode far off the line of sight cannot saturate the rudder.
    pub miss_limit: f64,
    /// When set, the miss distance is rescaled to this range (m) before it
    /// is fed back, `d·r_ref/r_a = r_ref·sin ρ`. The loop gain through `d`
    /// otherwise grows with the distance to the waypoint.
    pub reference_range: Option<f64>,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        Self {
            roll_hold: RollHoldGains::default(),
            miss_limit: DEFAULT_MISS_LIMIT,
            reference_range: Some(DEFAULT_REFERENCE_RANGE),
        }
    }
}

impl ControllerSettings {
    pub fn validate(&self) -> Result<()> {
        self.roll_hold.validate()?;
        if !(self.miss_limit > 0.0) {
            return Err(IgcError::Config("miss-distance limit must be positive".into()));
        }
        if let Some(r) = self.reference_range {
            if !(r > 0.0 && r.is_finite()) {
                return Err(IgcError::Config("reference range must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Output-feedback law `U = U₀ + F·Y_d` about an operating point, plus the
/// roll hold that replaces the rudder row outside the tracking mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub gain: SofGain,
    pub state: RigidBodyState,
    pub controls: Controls,
    pub settings: ControllerSettings,
}

impl Controller {
    pub fn new(gain: SofGain, operating_point: &TrimPoint) -> Self {
        Self {
            gain,
            state: operating_point.state,
            controls: operating_point.controls,
            settings: ControllerSettings::default(),
        }
    }

    pub fn with_settings(mut self, settings: ControllerSettings) -> Self {
        self.settings = settings;
        self
    }

    /// Miss distance as fed back, before the limit.
    pub fn miss_signal(&self, d: f64, r_a: f64) -> f64 {
        match self.settings.reference_range {
            Some(r0) if r_a > 0.0 => d * r0 / r_a,
            _ => d,
        }
    }

    /// Rudder command of the roll hold given the accumulated roll error.
    pub fn roll_hold_rudder(&self, s: &RigidBodyState, phi_ref: f64, integral: f64) -> f64 {
        let g = &self.settings.roll_hold;
        self.controls.rudder + g.k_phi * g.error(phi_ref, s.phi) + g.k_i * integral - g.k_p * s.p
    }

    /// Feedback signals `[e_h, e_x1, q̃, θ̃, p̃, r̃, φ̃]`. The guidance state fed
    /// back is `x̃₁ = −d`: a positive lateral acceleration shrinks a positive
    /// miss distance, the opposite of the sign the linear model carries.
    /// In roll hold the guidance channel is zeroed and the roll error is
    /// taken about the roll reference.
    pub fn feedback(&self, s: &RigidBodyState, h_ref: f64, d: f64, nav: &NavCommand) -> [f64; 7] {
        let op = &self.state;
        let (x1, phi_err) = match nav.mode {
            NavMode::IgcTrack => (
                -d.clamp(-self.settings.miss_limit, self.settings.miss_limit),
                s.phi - op.phi,
            ),
            NavMode::RollHold => (0.0, s.phi - nav.phi_ref),
        };
        [
            h_ref - s.h,
            -x1,
            s.q - op.q,
            s.theta - op.theta,
            s.p - op.p,
            s.r - op.r,
            phi_err,
        ]
    }

    /// Actuator command before saturation.
    pub fn command(&self, y: &[f64; 7]) -> Controls {
        let f = &self.gain.f;
        let mut u = self.controls.to_array();
        for (i, ui) in u.iter_mut().enumerate() {
            *ui += (0..7).map(|j| f[(i, j)] * y[j]).sum::<f64>();
        }
        Controls::from_array(u)
    }
}

/// One control-step sample. Angles in radians, rates in rad/s, lengths in
/// metres, thrust in newtons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub h: f64,
    pub h_ref: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub va: f64,
    pub alpha: f64,
    pub beta: f64,
    pub elevator: f64,
    pub rudder: f64,
    pub thrust: f64,
    pub elevator_cmd: f64,
    pub rudder_cmd: f64,
    pub thrust_cmd: f64,
    pub a_c: f64,
    pub gps_x: f64,
    pub gps_y: f64,
    pub sigma: f64,
    pub rho: f64,
    pub r_a: f64,
    pub d: f64,
    pub phi_ref: f64,
    /// `roll_hold`, `igc_track` or `complete`.
    pub mode: String,
    /// Active waypoint after this sample's navigation step, −1 when done.
    pub waypoint: i64,
    /// Navigation events of this sample, `;`-separated (`reached:i`,
    /// `infeasible:i`, `complete`), empty when none.
    pub event: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    PlanComplete,
    Duration,
    Diverged { t: f64, reason: String },
    Singularity { t: f64, theta_deg: f64 },
}

impl Termination {
    pub fn is_nominal(&self) -> bool {
        matches!(self, Termination::PlanComplete | Termination::Duration)
    }

    /// The matching error for an abnormal end, `None` otherwise.
    pub fn to_error(&self) -> Option<IgcError> {
        match self {
            Termination::Diverged { t, reason } => Some(IgcError::Divergence {
                t: *t,
                reason: reason.clone(),
            }),
            Termination::Singularity { t, theta_deg } => Some(IgcError::Divergence {
                t: *t,
                reason: format!("pitch singularity guard tripped at |theta| = {theta_deg:.1} deg"),
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub telemetry: Vec<TelemetryRecord>,
    pub metrics: Metrics,
    pub termination: Termination,
    /// Final waypoint statuses.
    pub plan: WaypointPlan,
}

fn event_text(events: &[NavEvent]) -> String {
    events
        .iter()
        .map(|e| match e {
            NavEvent::Reached(i) => format!("reached:{i}"),
            NavEvent::Infeasible { index, .. } => format!("infeasible:{index}"),
            NavEvent::PlanComplete => "complete".to_string(),
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// Reasons to abort: non-finite state, ground contact, or velocity or body
/// rate beyond `factor` times its operating-point scale.
fn divergence(s: &RigidBodyState, op: &RigidBodyState, factor: f64) -> Option<String> {
    let vals = s.to_vector();
    if vals.iter().any(|v| !v.is_finite()) {
        return Some("non-finite state".into());
    }
    if s.h < 0.0 {
        return Some(format!("ground contact (h = {:.2} m)", s.h));
    }
    let speed = s.airspeed();
    let speed_bound = factor * op.airspeed();
    if speed > speed_bound {
        return Some(format!("airspeed {speed:.1} m/s exceeds {speed_bound:.1} m/s"));
    }
    let rate = (s.p * s.p + s.q * s.q + s.r * s.r).sqrt();
    let op_rate = (op.p * op.p + op.q * op.q + op.r * op.r).sqrt();
    let rate_bound = factor * op_rate.max(1.0);
    if rate > rate_bound {
        return Some(format!("body rate {rate:.1} rad/s exceeds {rate_bound:.1} rad/s"));
    }
    if s.phi.abs() >= std::f64::consts::FRAC_PI_2 {
        return Some(format!("bank angle {:.1} deg reached 90 deg", s.phi.to_degrees()));
    }
    None
}

/// Fly `spec` under `controller`. Abnormal ends (divergence, pitch guard)
/// are reported in the outcome together with the telemetry up to that
/// point; invalid specifications are errors.
pub fn run_scenario(spec: &ScenarioSpec, cfg: &AeroConfig, controller: &Controller) -> Result<ScenarioOutcome> {
    spec.validate()?;
    cfg.validate()?;
    if !controller.gain.is_finite() {
        return Err(IgcError::Config("gain has non-finite entries".into()));
    }
    controller.settings.validate()?;
    let st = &spec.settings;
    let inner = st.inner_steps();
    let gps_every = st.gps_steps();
    let steps = (spec.duration / st.control_dt).round() as usize;

    let plan = WaypointPlan::new(spec.waypoints.clone(), spec.params.arrival_radius)?;
    let mut nav = Navigator::new(plan, spec.params, spec.dwell);
    let mut body = spec.initial_state;
    let mut act = ActuatorState::at_rest(clamp_controls(&spec.initial_controls, cfg));
    let mut gps = (body.x, body.y);
    let mut telemetry = Vec::with_capacity(steps + 1);
    let mut termination = Termination::Duration;
    // Roll-hold integrator, reset whenever a new bank reference engages and
    // bounded so its contribution cannot exceed the rudder range.
    let mut held: Option<f64> = None;
    let mut roll_integral = 0.0;
    let integral_limit = if controller.settings.roll_hold.k_i > 0.0 {
        (cfg.limits.rudder.1 - cfg.limits.rudder.0) / controller.settings.roll_hold.k_i
    } else {
        0.0
    };

    for k in 0..=steps {
        let t = k as f64 * st.control_dt;
        if k % gps_every == 0 {
            gps = (body.x, body.y);
        }
        let chi = body.course();
        let out = nav.step(gps.0, gps.1, chi);
        let complete = out.command.is_none();
        let (cmd, mode, phi_ref) = match out.command {
            Some(c) => {
                let d = out.geometry.map_or(0.0, |g| controller.miss_signal(g.d, g.r_a));
                let y = controller.feedback(&body, spec.altitude, d, &c);
                let mut u = controller.command(&y);
                if c.mode == NavMode::RollHold {
                    if held != Some(c.phi_ref) {
                        roll_integral = 0.0;
                    }
                    u.rudder = controller.roll_hold_rudder(&body, c.phi_ref, roll_integral);
                    let e = controller.settings.roll_hold.error(c.phi_ref, body.phi);
                    roll_integral = (roll_integral + e * st.control_dt).clamp(-integral_limit, integral_limit);
                    held = Some(c.phi_ref);
                } else {
                    held = None;
                }
                (u, c.mode.name(), c.phi_ref)
            }
            None => {
                let op = NavCommand {
                    mode: NavMode::RollHold,
                    phi_ref: 0.0,
                };
                let y = controller.feedback(&body, spec.altitude, 0.0, &op);
                (controller.command(&y), "complete", 0.0)
            }
        };
        let cmd = clamp_controls(&cmd, cfg);
        let seen = act.outputs();
        let a_c = accel_from_dynamics(&body, cfg, seen.rudder).unwrap_or(f64::NAN);
        let g = out.geometry;
        telemetry.push(TelemetryRecord {
            t,
            x: body.x,
            y: body.y,
            h: body.h,
            h_ref: spec.altitude,
            u: body.u,
            v: body.v,
            w: body.w,
            p: body.p,
            q: body.q,
            r: body.r,
            phi: body.phi,
            theta: body.theta,
            psi: body.psi,
            va: body.airspeed(),
            alpha: body.alpha(),
            beta: body.beta(),
            elevator: seen.elevator,
            rudder: seen.rudder,
            thrust: seen.thrust,
            elevator_cmd: cmd.elevator,
            rudder_cmd: cmd.rudder,
            thrust_cmd: cmd.thrust,
            a_c,
            gps_x: gps.0,
            gps_y: gps.1,
            sigma: g.map_or(0.0, |g| g.sigma),
            rho: g.map_or(0.0, |g| g.rho),
            r_a: g.map_or(0.0, |g| g.r_a),
            d: g.map_or(0.0, |g| g.d),
            phi_ref,
            mode: mode.to_string(),
            waypoint: nav.plan().active().map_or(-1, |i| i as i64),
            event: event_text(&out.events),
        });
        if complete {
            termination = Termination::PlanComplete;
            break;
        }
        if k == steps {
            break;
        }
        let mut aborted = None;
        for _ in 0..inner {
            match propagate(&body, &act, &cmd, cfg, st.inner_dt) {
                Ok((b, a)) => {
                    body = b;
                    act = a;
                }
                Err(IgcError::Singularity { theta_deg }) => {
                    aborted = Some(Termination::Singularity { t, theta_deg });
                    break;
                }
                Err(e) => {
                    aborted = Some(Termination::Diverged {
                        t,
                        reason: e.to_string(),
                    });
                    break;
                }
            }
            if let Some(reason) = divergence(&body, &controller.state, st.divergence_factor) {
                aborted = Some(Termination::Diverged { t, reason });
                break;
            }
        }
        if let Some(end) = aborted {
            termination = end;
            break;
        }
    }
    let metrics = compute_metrics(&telemetry)?;
    Ok(ScenarioOutcome {
        telemetry,
        metrics,
        termination,
        plan: nav.plan().clone(),
    })
}
