//! Waypoint sequencing: roll-angle hold while the line of sight is far off
//! the nose, IGC tracking inside the angle gate, feasibility and arrival
//! checks, and a dwell filter against mode chatter at the gate.

use std::fmt;

use crate::error::{IgcError, Result};
use crate::guidance::{turn_feasible, GuidanceGeometry, PpnParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaypointStatus {
    Pending,
    Active,
    Reached,
    Infeasible,
}

impl WaypointStatus {
    pub fn name(&self) -> &'static str {
        match self {
            WaypointStatus::Pending => "pending",
            WaypointStatus::Active => "active",
            WaypointStatus::Reached => "reached",
            WaypointStatus::Infeasible => "infeasible",
        }
    }
}

/// Ordered waypoints (x north, y east, metres) with their statuses.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPlan {
    waypoints: Vec<(f64, f64)>,
    status: Vec<WaypointStatus>,
    pub arrival_radius: f64,
}

impl WaypointPlan {
    pub fn new(waypoints: Vec<(f64, f64)>, arrival_radius: f64) -> Result<Self> {
        if !(arrival_radius > 0.0) {
            return Err(IgcError::Config("arrival radius must be positive".into()));
        }
        if waypoints.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
            return Err(IgcError::Config("waypoint coordinates must be finite".into()));
        }
        let mut status = vec![WaypointStatus::Pending; waypoints.len()];
        if let Some(first) = status.first_mut() {
            *first = WaypointStatus::Active;
        }
        Ok(Self {
            waypoints,
            status,
            arrival_radius,
        })
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn waypoints(&self) -> &[(f64, f64)] {
        &self.waypoints
    }

    pub fn status(&self) -> &[WaypointStatus] {
        &self.status
    }

    pub fn active(&self) -> Option<usize> {
        self.status.iter().position(|s| *s == WaypointStatus::Active)
    }

    pub fn active_waypoint(&self) -> Option<(f64, f64)> {
        self.active().map(|i| self.waypoints[i])
    }

    pub fn is_complete(&self) -> bool {
        self.active().is_none()
    }

    /// Close the active waypoint with `outcome` and activate the next one.
    fn advance(&mut self, outcome: WaypointStatus) -> Option<usize> {
        let i = self.active()?;
        self.status[i] = outcome;
        if let Some(next) = self.status.get_mut(i + 1) {
            *next = WaypointStatus::Active;
        }
        Some(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NavMode {
    RollHold,
    IgcTrack,
}

impl NavMode {
    pub fn name(&self) -> &'static str {
        match self {
            NavMode::RollHold => "roll_hold",
            NavMode::IgcTrack => "igc_track",
        }
    }
}

impl fmt::Display for NavMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What the controller should do this sample. The miss-distance reference
/// is always zero, so only the roll reference is carried.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavCommand {
    pub mode: NavMode,
    /// Roll reference (rad); zero in IGC tracking.
    pub phi_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavEvent {
    Reached(usize),
    Infeasible { index: usize, r_a: f64, rho: f64 },
    PlanComplete,
}

/// Decision of one pass through the navigation algorithm for the active
/// waypoint, before any dwell filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawDecision {
    Arrived,
    RollHold(f64),
    Infeasible,
    Track,
}

/// The algorithm in priority order: arrival, angle gate, feasibility, IGC.
pub fn nav_decision(geom: &GuidanceGeometry, params: &PpnParams) -> RawDecision {
    if geom.r_a < params.arrival_radius {
        RawDecision::Arrived
    } else if geom.rho.abs() > params.rho_max {
        RawDecision::RollHold(geom.rho.signum() * params.phi_roll)
    } else if !turn_feasible(geom.r_a, geom.rho, params.r_min) {
        RawDecision::Infeasible
    } else {
        RawDecision::Track
    }
}

/// Switches mode only after the raw mode has differed from the current one
/// for `dwell` consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisGate {
    dwell: usize,
    current: Option<NavMode>,
    streak: usize,
}

impl HysteresisGate {
    pub fn new(dwell: usize) -> Self {
        Self {
            dwell: dwell.max(1),
            current: None,
            streak: 0,
        }
    }

    pub fn mode(&self) -> Option<NavMode> {
        self.current
    }

    /// Forget the current mode; the next sample is taken as is.
    pub fn reset(&mut self) {
        self.current = None;
        self.streak = 0;
    }

    pub fn update(&mut self, raw: NavMode) -> NavMode {
        match self.current {
            None => {
                self.current = Some(raw);
                self.streak = 0;
            }
            Some(m) if m == raw => self.streak = 0,
            Some(_) => {
                self.streak += 1;
                if self.streak >= self.dwell {
                    self.current = Some(raw);
                    self.streak = 0;
                }
            }
        }
        self.current.expect("set above")
    }
}

/// Gate a sequence of ρ samples (rad) and return the mode after each one.
pub fn hysteresis_gate(rho_history: &[f64], rho_max: f64, dwell: usize) -> Vec<NavMode> {
    let mut gate = HysteresisGate::new(dwell);
    rho_history
        .iter()
        .map(|rho| {
            let raw = if rho.abs() > rho_max {
                NavMode::RollHold
            } else {
                NavMode::IgcTrack
            };
            gate.update(raw)
        })
        .collect()
}

/// Output of one navigator step.
#[derive(Debug, Clone, PartialEq)]
pub struct NavOutput {
    /// `None` once the plan is complete.
    pub command: Option<NavCommand>,
    /// Geometry to the waypoint that is active after the step.
    pub geometry: Option<GuidanceGeometry>,
    pub events: Vec<NavEvent>,
}

/// Stateful navigator for one vehicle.
#[derive(Debug, Clone)]
pub struct Navigator {
    plan: WaypointPlan,
    params: PpnParams,
    gate: HysteresisGate,
}

impl Navigator {
    pub fn new(plan: WaypointPlan, params: PpnParams, dwell: usize) -> Self {
        Self {
            plan,
            params,
            gate: HysteresisGate::new(dwell),
        }
    }

    pub fn plan(&self) -> &WaypointPlan {
        &self.plan
    }

    pub fn params(&self) -> &PpnParams {
        &self.params
    }

    /// Run the algorithm for the vehicle at `(x, y)` with course `chi`.
    /// Reached and infeasible waypoints are closed and the next one is
    /// examined within the same step.
    pub fn step(&mut self, x: f64, y: f64, chi: f64) -> NavOutput {
        let mut events = Vec::new();
        loop {
            let Some(index) = self.plan.active() else {
                events.push(NavEvent::PlanComplete);
                return NavOutput {
                    command: None,
                    geometry: None,
                    events,
                };
            };
            let (xf, yf) = self.plan.waypoints[index];
            let geom = crate::guidance::geometry(x, y, xf, yf, chi);
            let raw = match geom {
                None => RawDecision::Arrived,
                Some(g) => nav_decision(&g, &self.params),
            };
            let g = match (raw, geom) {
                (RawDecision::Arrived, _) | (_, None) => {
                    self.plan.advance(WaypointStatus::Reached);
                    self.gate.reset();
                    events.push(NavEvent::Reached(index));
                    continue;
                }
                (_, Some(g)) => g,
            };
            let raw_mode = match raw {
                RawDecision::RollHold(_) => NavMode::RollHold,
                _ => NavMode::IgcTrack,
            };
            let mode = self.gate.update(raw_mode);
            if mode == NavMode::IgcTrack && !turn_feasible(g.r_a, g.rho, self.params.r_min) {
                self.plan.advance(WaypointStatus::Infeasible);
                self.gate.reset();
                events.push(NavEvent::Infeasible {
                    index,
                    r_a: g.r_a,
                    rho: g.rho,
                });
                continue;
            }
            let phi_ref = match mode {
                NavMode::RollHold => g.rho.signum() * self.params.phi_roll,
                NavMode::IgcTrack => 0.0,
            };
            return NavOutput {
                command: Some(NavCommand { mode, phi_ref }),
                geometry: Some(g),
                events,
            };
        }
    }
}
