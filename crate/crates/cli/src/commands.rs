use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use igc_core::design::design_models;
use igc_core::igc::{augment, discretize, open_loop_modes, IGC_INPUTS, IGC_OUTPUTS, IGC_STATES};
use igc_core::io::{read_matrix, write_matrix};
use igc_core::linalg::spectral_radius;
use igc_core::sim::{compute_metrics, read_telemetry, write_outputs, write_plot_scripts, Metrics, AIRSPEED_BAND};
use igc_core::sof::{closed_loop_modes, feedback_map, SofProblem, SOF_OUTPUTS};
use igc_core::vehicle::{coupling_spectrum_check, linearize, trim_solve, LINEAR_INPUTS, LINEAR_STATES};
use igc_core::{
    published_gain, run_scenario, Config, Controller, IgcError, NamedMatrix, Result, SofGain, TrimPoint, TrimTargets,
};

use crate::cli::{Command, Common, GainSource};

/// Tolerance for matching the coupled spectrum against the block spectra.
const COUPLING_TOL: f64 = 1e-6;

pub struct Session {
    pub cfg: Config,
    pub common: Common,
}

impl Session {
    pub fn new(common: Common) -> Result<Self> {
        let mut cfg = match &common.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(seed) = common.seed {
            cfg.ga.seed = seed;
        }
        Ok(Self { cfg, common })
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.common.verbose {
            eprintln!("igc: {}", msg.as_ref());
        }
    }

    fn out(&self, name: &str) -> Result<PathBuf> {
        let dir = &self.common.out;
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(dir.join(name))
    }

    fn write(&self, name: &str, body: &str) -> Result<()> {
        let path = self.out(name)?;
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        self.note(format!("wrote {}", path.display()));
        Ok(())
    }

    fn write_matrix(&self, name: &str, m: &NamedMatrix) -> Result<()> {
        let path = self.out(name)?;
        write_matrix(&path, m)?;
        self.note(format!("wrote {}", path.display()));
        Ok(())
    }

    pub fn run(&self, command: &Command) -> Result<()> {
        match command {
            Command::Trim => self.trim(),
            Command::Linearize => self.linearize(),
            Command::Synth => self.synth(),
            Command::Simulate => self.simulate(),
            Command::Report { telemetry } => self.report(telemetry.as_deref()),
        }
    }

    fn trim(&self) -> Result<()> {
        let aero = self.cfg.aero()?;
        let opts = self.cfg.trim_options();
        self.note("trimming the design point");
        let design = trim_solve(self.cfg.trim_targets(), &aero, &opts)?;
        self.note("trimming the level operating point");
        let operating = trim_solve(TrimTargets::level(self.cfg.trim.operating_airspeed), &aero, &opts)?;
        self.write("trim.csv", &trim_csv(&design, &operating))?;
        for (name, tp) in [("design", &design), ("operating", &operating)] {
            println!(
                "{name} trim: Va {:.3} m/s, alpha {:.4} deg, beta {:.4} deg, residual {:.3e}",
                tp.state.airspeed(),
                tp.state.alpha().to_degrees(),
                tp.state.beta().to_degrees(),
                tp.residual
            );
        }
        Ok(())
    }

    fn linearize(&self) -> Result<()> {
        let aero = self.cfg.aero()?;
        let params = self.cfg.ppn_params()?;
        let trim = trim_solve(self.cfg.trim_targets(), &aero, &self.cfg.trim_options())?;
        let lin = linearize(&trim, &aero)?;
        let model = augment(&lin, &trim, &aero, params.nav_constant)?;
        let discrete = discretize(&model, self.cfg.sim.control_dt)?;

        self.write_matrix(
            "A_c.txt",
            &NamedMatrix::new("A_c", &LINEAR_STATES, &LINEAR_STATES, lin.a.clone()),
        )?;
        self.write_matrix(
            "B_c.txt",
            &NamedMatrix::new("B_c", &LINEAR_STATES, &LINEAR_INPUTS, lin.b.clone()),
        )?;
        self.write_matrix(
            "igc_A.txt",
            &NamedMatrix::new("A", &IGC_STATES, &IGC_STATES, model.a.clone()),
        )?;
        self.write_matrix(
            "igc_B.txt",
            &NamedMatrix::new("B", &IGC_STATES, &IGC_INPUTS, model.b.clone()),
        )?;
        self.write_matrix(
            "igc_C.txt",
            &NamedMatrix::new("C", &IGC_OUTPUTS, &IGC_STATES, model.c.clone()),
        )?;
        self.write_matrix(
            "igc_Ad.txt",
            &NamedMatrix::new("A_d", &IGC_STATES, &IGC_STATES, discrete.a.clone()),
        )?;
        self.write_matrix(
            "igc_Bd.txt",
            &NamedMatrix::new("B_d", &IGC_STATES, &IGC_INPUTS, discrete.b.clone()),
        )?;

        let modes = open_loop_modes(&model);
        self.write("open_loop_modes.csv", &modes.to_csv())?;
        let coupling = coupling_spectrum_check(&lin, COUPLING_TOL);
        let mut csv = format!("# union_holds: {}\nblock,real,imag\n", coupling.union_holds);
        for (block, eigs) in [
            ("coupled", &coupling.coupled),
            ("longitudinal", &coupling.longitudinal),
            ("lateral", &coupling.lateral),
        ] {
            for z in eigs {
                let _ = writeln!(csv, "{block},{:.9},{:.9}", z.re, z.im);
            }
        }
        self.write("coupling.csv", &csv)?;
        println!(
            "open-loop max real part {:.4} 1/s; coupled spectrum equals block union: {}",
            modes.max_real(),
            coupling.union_holds
        );
        Ok(())
    }

    fn synth(&self) -> Result<()> {
        let aero = self.cfg.aero()?;
        let spec = self.cfg.design_spec()?;
        let gain = match &self.common.gain {
            GainSource::Synth => {
                self.note(format!(
                    "design search: population {}, generations {}, seed {}",
                    spec.ga.population, spec.ga.generations, spec.ga.seed
                ));
                let design = igc_core::synthesize(&spec, &aero)?;
                let cert = &design.certificate;
                self.write_matrix("F_d.txt", &gain_matrix(&design.gain))?;
                self.write_matrix("P_d.txt", &NamedMatrix::unlabeled("P_d", cert.p.clone()))?;
                self.write_matrix("N_d.txt", &NamedMatrix::unlabeled("N_d", cert.n.clone()))?;
                let mut csv = String::from("quantity,value\n");
                for (k, v) in [
                    ("lmi_max_eigenvalue", cert.max_eig_lmi),
                    ("p_min_eigenvalue", cert.min_eig_p),
                    ("weighted_spectral_radius", cert.spectral_radius),
                    ("design_spectral_radius", design.design_radius),
                    ("operating_spectral_radius", design.operating_radius),
                    ("fitness", design.fitness),
                ] {
                    let _ = writeln!(csv, "{k},{v:e}");
                }
                self.write("certificate.csv", &csv)?;
                self.write("closed_loop_modes.csv", &design.modes.to_csv())?;
                println!(
                    "certified: spectral radius {:.6} (weighted plant), {:.6} (design), {:.6} (operating); LMI max eigenvalue {:.3e}",
                    cert.spectral_radius, design.design_radius, design.operating_radius, cert.max_eig_lmi
                );
                return Ok(());
            }
            _ => self.fixed_gain()?,
        };
        // A supplied gain is written back and evaluated, not certified.
        let models = design_models(&spec, &aero)?;
        self.write_matrix("F_d.txt", &gain_matrix(&gain))?;
        let modes = closed_loop_modes(&models.discrete, &gain);
        self.write("closed_loop_modes.csv", &modes.to_csv())?;
        let dm = &models.discrete;
        let radius =
            spectral_radius(&SofProblem::new(dm.a.clone(), dm.b.clone(), feedback_map() * &dm.c).closed_loop(&gain.f));
        println!("supplied gain (not certified): design-model spectral radius {radius:.6}");
        Ok(())
    }

    fn simulate(&self) -> Result<()> {
        let aero = self.cfg.aero()?;
        let spec = self.cfg.scenario_spec(self.common.scenario.as_deref())?;
        let (controller, gain) = match &self.common.gain {
            GainSource::Synth => {
                self.note("synthesizing the gain");
                let design = igc_core::synthesize(&self.cfg.design_spec()?, &aero)?;
                (design.controller(), design.gain)
            }
            _ => {
                let gain = self.fixed_gain()?;
                let op = trim_solve(
                    TrimTargets::level(self.cfg.trim.operating_airspeed),
                    &aero,
                    &self.cfg.trim_options(),
                )?;
                let ctrl = Controller::new(gain.clone(), &op).with_settings(self.cfg.controller_settings());
                (ctrl, gain)
            }
        };
        self.write_matrix("F_d.txt", &gain_matrix(&gain))?;
        self.note(format!("flying '{}' ({} waypoints)", spec.name, spec.waypoints.len()));
        let outcome = run_scenario(&spec, &aero, &controller)?;
        let files = write_outputs(&outcome.telemetry, &outcome.metrics, &spec.waypoints, &self.common.out)?;
        self.note(format!("wrote {}", files.telemetry.display()));
        print!("{}", summary(&outcome.metrics, spec.waypoints.len()));
        match outcome.termination.to_error() {
            Some(err) => Err(err),
            None => Ok(()),
        }
    }

    fn report(&self, telemetry: Option<&Path>) -> Result<()> {
        let source = telemetry.map_or_else(|| self.common.out.join("telemetry.csv"), Path::to_path_buf);
        let records = read_telemetry(&source)?;
        let metrics = compute_metrics(&records)?;
        let dir = &self.common.out;
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        // the plot scripts read their data from the output directory
        let src_dir = source.parent().unwrap_or(Path::new("."));
        let waypoints = src_dir.join("waypoints.csv");
        if !same_dir(src_dir, dir) {
            copy(&source, &dir.join("telemetry.csv"))?;
            if waypoints.exists() {
                copy(&waypoints, &dir.join("waypoints.csv"))?;
            }
        }
        self.write("metrics.csv", &metrics.to_csv())?;
        let planned = records
            .iter()
            .map(|r| r.waypoint + 1)
            .chain(metrics.arrivals.iter().map(|a| a.index as i64 + 1))
            .max()
            .unwrap_or(0)
            .max(0) as usize;
        let text = summary(&metrics, planned);
        self.write("report.txt", &text)?;
        write_plot_scripts(dir, dir.join("waypoints.csv").exists())?;
        print!("{text}");
        Ok(())
    }

    fn fixed_gain(&self) -> Result<SofGain> {
        match &self.common.gain {
            GainSource::Fixture => Ok(published_gain()),
            GainSource::File(path) => {
                let m = read_matrix(path)?;
                if m.data.shape() != (IGC_INPUTS.len(), SOF_OUTPUTS.len()) {
                    return Err(IgcError::Config(format!(
                        "gain file {} holds a {}x{} matrix, expected {}x{}",
                        path.display(),
                        m.data.nrows(),
                        m.data.ncols(),
                        IGC_INPUTS.len(),
                        SOF_OUTPUTS.len()
                    )));
                }
                let gain = SofGain::new(m.data);
                if !gain.is_finite() {
                    return Err(IgcError::Config(format!(
                        "gain file {} has non-finite entries",
                        path.display()
                    )));
                }
                Ok(gain)
            }
            GainSource::Synth => unreachable!("synthesized gains are handled by the caller"),
        }
    }
}

fn gain_matrix(gain: &SofGain) -> NamedMatrix {
    NamedMatrix::new("F_d", &IGC_INPUTS, &SOF_OUTPUTS, gain.f.clone())
}

type TrimRow = (&'static str, fn(&TrimPoint) -> f64);

fn trim_csv(design: &TrimPoint, operating: &TrimPoint) -> String {
    let rows: [TrimRow; 18] = [
        ("airspeed_mps", |t| t.state.airspeed()),
        ("alpha_deg", |t| t.state.alpha().to_degrees()),
        ("beta_deg", |t| t.state.beta().to_degrees()),
        ("u_mps", |t| t.state.u),
        ("v_mps", |t| t.state.v),
        ("w_mps", |t| t.state.w),
        ("p_radps", |t| t.state.p),
        ("q_radps", |t| t.state.q),
        ("r_radps", |t| t.state.r),
        ("phi_deg", |t| t.state.phi.to_degrees()),
        ("theta_deg", |t| t.state.theta.to_degrees()),
        ("h_m", |t| t.state.h),
        ("elevator_deg", |t| t.controls.elevator.to_degrees()),
        ("rudder_deg", |t| t.controls.rudder.to_degrees()),
        ("thrust_n", |t| t.controls.thrust),
        ("turn_rate_radps", |t| t.targets.turn_rate),
        ("climb_rate_mps", |t| t.targets.climb_rate),
        ("residual", |t| t.residual),
    ];
    let mut s = String::from("quantity,design,operating\n");
    for (name, f) in rows {
        let _ = writeln!(s, "{name},{},{}", num(f(design)), num(f(operating)));
    }
    let _ = writeln!(s, "iterations,{},{}", design.iterations, operating.iterations);
    s
}

/// Shortest round-trip decimal, in exponent form for tiny values.
fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn summary(m: &Metrics, planned: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "samples            {} over {:.2} s", m.samples, m.duration);
    let _ = writeln!(s, "waypoints reached  {}/{}", m.reached(), planned);
    let _ = writeln!(s, "plan complete      {}", m.plan_complete);
    let _ = writeln!(
        s,
        "peak deflection    elevator {:.2} deg, rudder {:.2} deg",
        m.peak_elevator_deg, m.peak_rudder_deg
    );
    let _ = writeln!(s, "peak thrust        {:.3} N", m.peak_thrust);
    let _ = writeln!(
        s,
        "airspeed           {:.2} to {:.2} m/s, {:.1}% inside [{}, {}]",
        m.airspeed_min,
        m.airspeed_max,
        100.0 * m.airspeed_in_band,
        AIRSPEED_BAND.0,
        AIRSPEED_BAND.1
    );
    let _ = writeln!(
        s,
        "altitude error     {:.2} to {:.2} m",
        m.altitude_error_min, m.altitude_error_max
    );
    for a in &m.arrivals {
        let _ = writeln!(s, "waypoint {:<3}       {} at {:.2} s", a.index, a.status, a.time);
    }
    s
}

fn same_dir(a: &Path, b: &Path) -> bool {
    let canon = |p: &Path| fs::canonicalize(if p.as_os_str().is_empty() { Path::new(".") } else { p }).ok();
    matches!((canon(a), canon(b)), (Some(x), Some(y)) if x == y)
}

fn copy(from: &Path, to: &Path) -> Result<()> {
    fs::copy(from, to).map(|_| ()).map_err(|e| io_err(from, e))
}

fn io_err(path: &Path, source: std::io::Error) -> IgcError {
    IgcError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Process exit status for an error.
pub fn exit_code(err: &IgcError) -> u8 {
    match err {
        IgcError::Config(_) | IgcError::Parse { .. } | IgcError::Weight(_) => 3,
        IgcError::TrimFailed { .. } | IgcError::TrimOutOfEnvelope(_) => 4,
        IgcError::SynthesisFailed { .. } => 5,
        IgcError::Divergence { .. } | IgcError::Singularity { .. } => 6,
        _ => 1,
    }
}
