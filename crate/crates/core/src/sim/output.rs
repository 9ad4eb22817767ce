use std::fs;
use std::path::{Path, PathBuf};

use super::metrics::Metrics;
use super::TelemetryRecord;
use crate::error::{IgcError, Result};
use crate::io::write_waypoints;

/// First line of every telemetry file.
pub const TELEMETRY_VERSION: &str = "# igc-telemetry v1";

pub const TELEMETRY_COLUMNS: [&str; 34] = [
    "t",
    "x",
    "y",
    "h",
    "h_ref",
    "u",
    "v",
    "w",
    "p",
    "q",
    "r",
    "phi",
    "theta",
    "psi",
    "va",
    "alpha",
    "beta",
    "elevator",
    "rudder",
    "thrust",
    "elevator_cmd",
    "rudder_cmd",
    "thrust_cmd",
    "a_c",
    "gps_x",
    "gps_y",
    "sigma",
    "rho",
    "r_a",
    "d",
    "phi_ref",
    "mode",
    "waypoint",
    "event",
];

fn fields(r: &TelemetryRecord) -> Vec<String> {
    let nums = [
        r.t,
        r.x,
        r.y,
        r.h,
        r.h_ref,
        r.u,
        r.v,
        r.w,
        r.p,
        r.q,
        r.r,
        r.phi,
        r.theta,
        r.psi,
        r.va,
        r.alpha,
        r.beta,
        r.elevator,
        r.rudder,
        r.thrust,
        r.elevator_cmd,
        r.rudder_cmd,
        r.thrust_cmd,
        r.a_c,
        r.gps_x,
        r.gps_y,
        r.sigma,
        r.rho,
        r.r_a,
        r.d,
        r.phi_ref,
    ];
    let mut out: Vec<String> = nums.iter().map(|v| format!("{v:.6}")).collect();
    out.push(r.mode.clone());
    out.push(r.waypoint.to_string());
    out.push(r.event.clone());
    out
}

/// Telemetry as text: the version line, a header row, then one row per
/// sample with six decimals.
pub fn telemetry_csv(telemetry: &[TelemetryRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| IgcError::Domain(format!("telemetry encoding: {e}"));
    w.write_record(TELEMETRY_COLUMNS).map_err(csv_err)?;
    for r in telemetry {
        w.write_record(fields(r)).map_err(csv_err)?;
    }
    let body = w
        .into_inner()
        .map_err(|e| IgcError::Domain(format!("telemetry encoding: {e}")))?;
    let body = String::from_utf8(body).expect("csv output is UTF-8");
    Ok(format!("{TELEMETRY_VERSION}\n{body}"))
}

pub fn read_telemetry(path: &Path) -> Result<Vec<TelemetryRecord>> {
    let text = fs::read_to_string(path).map_err(|e| IgcError::io(path, e))?;
    let parse = |message: String| IgcError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let (first, rest) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    if first.trim_end() != TELEMETRY_VERSION {
        return Err(parse(format!(
            "expected version line '{TELEMETRY_VERSION}', found '{}'",
            first.trim_end()
        )));
    }
    let mut rdr = csv::Reader::from_reader(rest.as_bytes());
    let header = rdr.headers().map_err(|e| parse(e.to_string()))?.clone();
    if header.iter().ne(TELEMETRY_COLUMNS.iter().copied()) {
        return Err(parse("telemetry columns do not match the v1 schema".into()));
    }
    rdr.deserialize()
        .map(|row| row.map_err(|e| parse(e.to_string())))
        .collect()
}

/// Names of the generated plot scripts.
pub const PLOT_SCRIPTS: [&str; 4] = ["xy_path.gp", "miss_distance.gp", "attitude.gp", "controls.gp"];

const PLOT_HEADER: &str = "set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\nset grid\nset terminal pngcairo size 900,600\n";

fn plot_scripts(with_waypoints: bool) -> [(&'static str, String); 4] {
    let wp = if with_waypoints {
        ", 'waypoints.csv' using 'y':'x' with points pt 6 ps 2 lc rgb 'red' title 'waypoints'"
    } else {
        ""
    };
    [
        (
            PLOT_SCRIPTS[0],
            format!(
                "{PLOT_HEADER}set output 'xy_path.png'\nset size ratio -1\nset xlabel 'east y (m)'\nset ylabel 'north x (m)'\nplot 'telemetry.csv' using 'y':'x' with lines lc rgb 'blue' title 'path'{wp}\n"
            ),
        ),
        (
            PLOT_SCRIPTS[1],
            format!(
                "{PLOT_HEADER}set output 'miss_distance.png'\nset multiplot layout 2,1\nset ylabel 'd (m)'\nplot 'telemetry.csv' using 't':'d' with lines title 'miss distance'\nset xlabel 't (s)'\nset ylabel 'rho (deg)'\nplot 'telemetry.csv' using 't':(column('rho')*180/pi) with lines title 'rho'\nunset multiplot\n"
            ),
        ),
        (
            PLOT_SCRIPTS[2],
            format!(
                "{PLOT_HEADER}set output 'attitude.png'\nset multiplot layout 2,1\nset ylabel 'angle (deg)'\nplot 'telemetry.csv' using 't':(column('phi')*180/pi) with lines title 'phi', '' using 't':(column('theta')*180/pi) with lines title 'theta', '' using 't':(column('psi')*180/pi) with lines title 'psi'\nset xlabel 't (s)'\nset ylabel 'rate (deg/s)'\nplot 'telemetry.csv' using 't':(column('p')*180/pi) with lines title 'p', '' using 't':(column('q')*180/pi) with lines title 'q', '' using 't':(column('r')*180/pi) with lines title 'r'\nunset multiplot\n"
            ),
        ),
        (
            PLOT_SCRIPTS[3],
            format!(
                "{PLOT_HEADER}set output 'controls.png'\nset multiplot layout 3,1\nset ylabel 'deflection (deg)'\nplot 'telemetry.csv' using 't':(column('elevator')*180/pi) with lines title 'elevator', '' using 't':(column('rudder')*180/pi) with lines title 'rudder'\nset ylabel 'thrust (N)'\nplot 'telemetry.csv' using 't':'thrust' with lines title 'thrust'\nset xlabel 't (s)'\nset ylabel 'Va (m/s)'\nplot 'telemetry.csv' using 't':'va' with lines title 'airspeed'\nunset multiplot\n"
            ),
        ),
    ]
}

/// Write the gnuplot scripts into `dir`. They read `telemetry.csv` (and
/// `waypoints.csv` when `with_waypoints`) from the same directory.
pub fn write_plot_scripts(dir: &Path, with_waypoints: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| IgcError::io(dir, e))?;
    let mut out = Vec::new();
    for (name, body) in plot_scripts(with_waypoints) {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| IgcError::io(&path, e))?;
        out.push(path);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub telemetry: PathBuf,
    pub metrics: PathBuf,
    pub waypoints: Option<PathBuf>,
    pub plots: Vec<PathBuf>,
}

/// Telemetry, metrics, the waypoint list (if any) and plot scripts under
/// `dir`.
pub fn write_outputs(
    telemetry: &[TelemetryRecord],
    metrics: &Metrics,
    waypoints: &[(f64, f64)],
    dir: &Path,
) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| IgcError::io(dir, e))?;
    let tpath = dir.join("telemetry.csv");
    fs::write(&tpath, telemetry_csv(telemetry)?).map_err(|e| IgcError::io(&tpath, e))?;
    let mpath = dir.join("metrics.csv");
    fs::write(&mpath, metrics.to_csv()).map_err(|e| IgcError::io(&mpath, e))?;
    let wpath = if waypoints.is_empty() {
        None
    } else {
        let p = dir.join("waypoints.csv");
        write_waypoints(&p, waypoints)?;
        Some(p)
    };
    let plots = write_plot_scripts(dir, wpath.is_some())?;
    Ok(OutputFiles {
        telemetry: tpath,
        metrics: mpath,
        waypoints: wpath,
        plots,
    })
}
