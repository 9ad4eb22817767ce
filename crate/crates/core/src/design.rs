//! Gain design for the nonlinear closed loop.
//!
//! The linear search alone optimises the fifteen-state model at the
//! climbing-turn trim, while the scenarios fly mostly straight and level.
//! The design search therefore scores every trial gain on three things:
//! Schur stability of both the design-trim and the level-trim models, the
//! performance index on the design model, and a pair of short nonlinear
//! training flights that share no waypoints with the shipped scenarios.
//! The search starts from a hand-structured baseline gain.

use nalgebra::DMatrix;

use crate::error::{IgcError, Result};
use crate::guidance::PpnParams;
use crate::igc::{augment, discretize, DiscreteModel, IgcLinearModel, ModeTable, IGC_DIM};
use crate::linalg::spectral_radius;
use crate::sim::{run_scenario, Controller, ControllerSettings, ScenarioOutcome, ScenarioSpec};
use crate::sof::{
    build_generalized_plant, certify_finalists, closed_loop_modes, evolve_from, feedback_map, performance_index,
    GaConfig, GeneralizedPlant, LmiCertificate, SofGain, SofProblem, Weights,
};
use crate::vehicle::{linearize, trim_solve, AeroConfig, TrimOptions, TrimPoint, TrimTargets};

/// Structured starting gain. Each entry maps one feedback signal to one
/// actuator; all others start at zero. Units follow the gain columns
/// (rad or N per m, rad, rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineGains {
    pub altitude_to_elevator: f64,
    pub pitch_to_elevator: f64,
    pub pitch_rate_to_elevator: f64,
    pub altitude_to_thrust: f64,
    pub pitch_to_thrust: f64,
    /// Bank demanded per metre of miss distance (rad/m).
    pub miss_to_bank: f64,
    pub bank_to_rudder: f64,
    pub roll_rate_to_rudder: f64,
    pub yaw_rate_to_rudder: f64,
}

impl Default for BaselineGains {
    fn default() -> Self {
        Self {
            altitude_to_elevator: 0.1,
            pitch_to_elevator: 0.2,
            pitch_rate_to_elevator: 0.1,
            altitude_to_thrust: 0.05,
            pitch_to_thrust: 0.0,
            miss_to_bank: 0.02,
            bank_to_rudder: 1.0,
            roll_rate_to_rudder: 0.3,
            yaw_rate_to_rudder: 0.0,
        }
    }
}

impl BaselineGains {
    /// The 3×7 gain over `[e_h, e_x1, q, θ, p, r, φ]`. Positive elevator
    /// pitches down and positive rudder rolls right, hence the signs.
    pub fn matrix(&self) -> DMatrix<f64> {
        let b = self;
        DMatrix::from_row_slice(
            3,
            7,
            &[
                -b.altitude_to_elevator,
                0.0,
                b.pitch_rate_to_elevator,
                b.pitch_to_elevator,
                0.0,
                0.0,
                0.0,
                0.0,
                b.bank_to_rudder * b.miss_to_bank,
                0.0,
                0.0,
                -b.roll_rate_to_rudder,
                -b.yaw_rate_to_rudder,
                -b.bank_to_rudder,
                b.altitude_to_thrust,
                0.0,
                0.0,
                -b.pitch_to_thrust,
                0.0,
                0.0,
                0.0,
            ],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.altitude_to_elevator,
            self.pitch_to_elevator,
            self.pitch_rate_to_elevator,
            self.altitude_to_thrust,
            self.pitch_to_thrust,
            self.miss_to_bank,
            self.bank_to_rudder,
            self.roll_rate_to_rudder,
            self.yaw_rate_to_rudder,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(IgcError::Config("baseline gains must be finite".into()));
        }
        Ok(())
    }
}

/// Two training flights from the published initial condition: a zig-zag
/// course that needs turns both ways, and a straight westbound row of
/// waypoints 40 m apart.
pub fn training_courses(params: PpnParams) -> Vec<ScenarioSpec> {
    let mut zigzag = ScenarioSpec::line(params);
    zigzag.name = "training_zigzag".into();
    zigzag.waypoints = vec![(70.0, -30.0), (150.0, 40.0), (40.0, 150.0), (-60.0, 60.0)];
    zigzag.duration = 120.0;
    let mut row = ScenarioSpec::line(params);
    row.name = "training_row".into();
    row.waypoints = vec![(40.0, -30.0), (40.0, -70.0), (40.0, -110.0), (40.0, -150.0)];
    row.duration = 60.0;
    vec![zigzag, row]
}

/// Commands within this margin of a hard limit count as saturated.
const SATURATION_MARGIN: f64 = 0.1;

/// Score of one nonlinear flight, lower is better. Abnormal ends dominate,
/// then missed waypoints, actuator saturation, altitude error beyond 2 m,
/// time outside the airspeed band, tracking error (weighted up within
/// 25 m of a waypoint) and flight time.
pub fn flight_cost(spec: &ScenarioSpec, out: &ScenarioOutcome, cfg: &AeroConfig) -> f64 {
    let m = &out.metrics;
    let t_end = out.telemetry.last().map_or(0.0, |r| r.t);
    let mut c = 0.0;
    if !out.termination.is_nominal() {
        c += 20.0 + 20.0 * (1.0 - t_end / spec.duration);
    }
    if !spec.waypoints.is_empty() {
        c += 10.0 * (spec.waypoints.len() - m.reached()) as f64 / spec.waypoints.len() as f64;
    }
    let margin = SATURATION_MARGIN.to_radians();
    let (e, r) = (cfg.limits.elevator, cfg.limits.rudder);
    let saturated = out
        .telemetry
        .iter()
        .filter(|s| {
            s.elevator_cmd <= e.0 + margin
                || s.elevator_cmd >= e.1 - margin
                || s.rudder_cmd <= r.0 + margin
                || s.rudder_cmd >= r.1 - margin
        })
        .count();
    c += 30.0 * saturated as f64 / out.telemetry.len() as f64;
    c += 0.5 * (m.altitude_error_envelope() - 2.0).clamp(0.0, 50.0);
    c += 10.0 * (1.0 - m.airspeed_in_band);
    let mean_abs = |near: Option<f64>| {
        let v: Vec<f64> = out
            .telemetry
            .iter()
            .filter(|s| s.mode == "igc_track" && near.is_none_or(|lim| s.r_a < lim))
            .map(|s| s.d.abs())
            .collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    c += 0.5 * mean_abs(None) + 2.0 * mean_abs(Some(25.0));
    c + 5.0 * t_end / spec.duration
}

/// Everything the design search needs.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    /// Trim the linear model is built at.
    pub design_trim: TrimTargets,
    /// Airspeed of the level trim the controller operates about.
    pub operating_airspeed: f64,
    pub trim_options: TrimOptions,
    pub params: PpnParams,
    pub ts: f64,
    pub weights: Weights,
    pub ga: GaConfig,
    pub baseline: BaselineGains,
    pub controller: ControllerSettings,
    /// Nonlinear flights scored during the search; empty for a purely
    /// linear design.
    pub courses: Vec<ScenarioSpec>,
}

impl DesignSpec {
    pub fn new(cfg: &AeroConfig) -> Self {
        let params = PpnParams::for_airspeed(8.0, cfg.gravity);
        Self {
            design_trim: TrimTargets::default(),
            operating_airspeed: 8.0,
            trim_options: TrimOptions::default(),
            params,
            ts: 0.02,
            weights: Weights::default(),
            ga: GaConfig::default(),
            baseline: BaselineGains::default(),
            controller: ControllerSettings::default(),
            courses: training_courses(params),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.weights.validate()?;
        self.ga.validate()?;
        self.baseline.validate()?;
        self.controller.validate()?;
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(IgcError::Config("sample time must be positive".into()));
        }
        if !(self.operating_airspeed > 0.0) {
            return Err(IgcError::Config("operating airspeed must be positive".into()));
        }
        for c in &self.courses {
            c.validate()?;
        }
        Ok(())
    }
}

/// Linear models at the design trim.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignModels {
    pub design_trim: TrimPoint,
    pub operating_trim: TrimPoint,
    pub model: IgcLinearModel,
    pub discrete: DiscreteModel,
    /// Fifteen-state discrete model at the operating trim.
    pub operating_discrete: DiscreteModel,
    pub plant: GeneralizedPlant,
}

/// Trim both operating points and build the discrete models and the
/// weighted plant.
pub fn design_models(spec: &DesignSpec, cfg: &AeroConfig) -> Result<DesignModels> {
    let design_trim = trim_solve(spec.design_trim, cfg, &spec.trim_options)?;
    let operating_trim = trim_solve(TrimTargets::level(spec.operating_airspeed), cfg, &spec.trim_options)?;
    let nav = spec.params.nav_constant;
    let model = augment(&linearize(&design_trim, cfg)?, &design_trim, cfg, nav)?;
    let discrete = discretize(&model, spec.ts)?;
    let op_model = augment(&linearize(&operating_trim, cfg)?, &operating_trim, cfg, nav)?;
    let operating_discrete = discretize(&op_model, spec.ts)?;
    let plant = build_generalized_plant(&discrete, &spec.weights)?;
    Ok(DesignModels {
        design_trim,
        operating_trim,
        model,
        discrete,
        operating_discrete,
        plant,
    })
}

fn loop_problem(dm: &DiscreteModel) -> SofProblem {
    SofProblem::new(dm.a.clone(), dm.b.clone(), feedback_map() * &dm.c)
}

/// A certified design.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub models: DesignModels,
    pub gain: SofGain,
    pub certificate: LmiCertificate,
    /// Continuous-equivalent closed-loop modes at the design trim.
    pub modes: ModeTable,
    pub fitness: f64,
    pub design_radius: f64,
    pub operating_radius: f64,
    pub settings: ControllerSettings,
}

impl Design {
    /// The controller that flies this design.
    pub fn controller(&self) -> Controller {
        Controller::new(self.gain.clone(), &self.models.operating_trim).with_settings(self.settings)
    }
}

/// Cost above which a trial gain is out of contention; also the cap on the
/// linear performance index.
const INDEX_CAP: f64 = 100.0;

/// Run the design search and certify the winner on the weighted plant.
pub fn synthesize(spec: &DesignSpec, cfg: &AeroConfig) -> Result<Design> {
    spec.validate()?;
    cfg.validate()?;
    let models = design_models(spec, cfg)?;
    let design = loop_problem(&models.discrete);
    let operating = loop_problem(&models.operating_discrete);
    debug_assert_eq!(design.states(), IGC_DIM);
    let fitness = |f: &DMatrix<f64>| {
        let r = spectral_radius(&design.closed_loop(f)).max(spectral_radius(&operating.closed_loop(f)));
        let unstable = if r >= 1.0 { INDEX_CAP + 1e3 * (r - 1.0) } else { 0.0 };
        let mut c = unstable + performance_index(&design, f, spec.ts, &spec.ga).min(INDEX_CAP);
        let ctrl = Controller::new(SofGain::new(f.clone()), &models.operating_trim).with_settings(spec.controller);
        for course in &spec.courses {
            c += match run_scenario(course, cfg, &ctrl) {
                Ok(out) => flight_cost(course, &out, cfg),
                Err(_) => f64::INFINITY,
            };
        }
        c
    };
    let ranked = evolve_from(&design, &spec.ga, &spec.baseline.matrix(), fitness)?;
    let best = certify_finalists(&models.plant.sof_problem(), &ranked, &spec.ga, fitness).map_err(|best_residual| {
        IgcError::SynthesisFailed {
            best_residual,
            generations: spec.ga.generations,
        }
    })?;
    let gain = SofGain::new(best.f);
    let modes = closed_loop_modes(&models.discrete, &gain);
    let design_radius = spectral_radius(&design.closed_loop(&gain.f));
    let operating_radius = spectral_radius(&operating.closed_loop(&gain.f));
    Ok(Design {
        models,
        gain,
        certificate: best.certificate,
        modes,
        fitness: best.fitness,
        design_radius,
        operating_radius,
        settings: spec.controller,
    })
}
