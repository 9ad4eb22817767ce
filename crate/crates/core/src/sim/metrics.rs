use super::TelemetryRecord;
use crate::error::{IgcError, Result};

/// Airspeed band (m/s) whose occupancy is reported.
pub const AIRSPEED_BAND: (f64, f64) = (6.5, 9.5);

/// A waypoint closed during the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrival {
    pub index: usize,
    pub time: f64,
    /// `reached` or `infeasible`.
    pub status: String,
}

/// Summary figures, derived from telemetry alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub samples: usize,
    pub duration: f64,
    pub peak_elevator_deg: f64,
    pub peak_rudder_deg: f64,
    pub peak_thrust: f64,
    pub airspeed_min: f64,
    pub airspeed_max: f64,
    /// Fraction of samples with airspeed inside [`AIRSPEED_BAND`].
    pub airspeed_in_band: f64,
    pub altitude_error_min: f64,
    pub altitude_error_max: f64,
    pub arrivals: Vec<Arrival>,
    /// |d| at the last sample that had an active waypoint.
    pub final_miss_distance: f64,
    pub plan_complete: bool,
}

impl Metrics {
    pub fn reached(&self) -> usize {
        self.arrivals.iter().filter(|a| a.status == "reached").count()
    }

    pub fn altitude_error_envelope(&self) -> f64 {
        self.altitude_error_min.abs().max(self.altitude_error_max.abs())
    }

    /// `metric,value` rows.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("samples".into(), self.samples.to_string()),
            ("duration_s".into(), format!("{:.3}", self.duration)),
            ("peak_elevator_deg".into(), format!("{:.4}", self.peak_elevator_deg)),
            ("peak_rudder_deg".into(), format!("{:.4}", self.peak_rudder_deg)),
            ("peak_thrust_n".into(), format!("{:.4}", self.peak_thrust)),
            ("airspeed_min_mps".into(), format!("{:.4}", self.airspeed_min)),
            ("airspeed_max_mps".into(), format!("{:.4}", self.airspeed_max)),
            (
                "airspeed_in_band_fraction".into(),
                format!("{:.4}", self.airspeed_in_band),
            ),
            ("altitude_error_min_m".into(), format!("{:.4}", self.altitude_error_min)),
            ("altitude_error_max_m".into(), format!("{:.4}", self.altitude_error_max)),
            (
                "final_miss_distance_m".into(),
                format!("{:.4}", self.final_miss_distance),
            ),
            ("plan_complete".into(), self.plan_complete.to_string()),
            ("waypoints_reached".into(), self.reached().to_string()),
        ];
        for a in &self.arrivals {
            rows.push((format!("waypoint_{}_status", a.index), a.status.clone()));
            rows.push((format!("waypoint_{}_time_s", a.index), format!("{:.3}", a.time)));
        }
        let mut s = String::from("metric,value\n");
        for (k, v) in rows {
            s.push_str(&k);
            s.push(',');
            s.push_str(&v);
            s.push('\n');
        }
        s
    }
}

pub fn compute_metrics(telemetry: &[TelemetryRecord]) -> Result<Metrics> {
    let first = telemetry
        .first()
        .ok_or_else(|| IgcError::Domain("metrics need at least one telemetry sample".into()))?;
    let last = telemetry.last().expect("non-empty");
    let max_abs = |f: fn(&TelemetryRecord) -> f64| telemetry.iter().map(f).map(f64::abs).fold(0.0, f64::max);
    let va = telemetry.iter().map(|r| r.va);
    let in_band = telemetry
        .iter()
        .filter(|r| r.va >= AIRSPEED_BAND.0 && r.va <= AIRSPEED_BAND.1)
        .count();
    let herr = telemetry.iter().map(|r| r.h - r.h_ref);

    let mut arrivals = Vec::new();
    let mut plan_complete = false;
    for r in telemetry {
        for ev in r.event.split(';').filter(|e| !e.is_empty()) {
            if ev == "complete" {
                plan_complete = true;
                continue;
            }
            let (status, index) = ev
                .split_once(':')
                .ok_or_else(|| IgcError::Domain(format!("unknown navigation event '{ev}'")))?;
            let index = index
                .parse()
                .map_err(|_| IgcError::Domain(format!("bad waypoint index in event '{ev}'")))?;
            arrivals.push(Arrival {
                index,
                time: r.t,
                status: status.to_string(),
            });
        }
    }
    let final_miss_distance = telemetry
        .iter()
        .rev()
        .find(|r| r.waypoint >= 0)
        .map_or(0.0, |r| r.d.abs());

    Ok(Metrics {
        samples: telemetry.len(),
        duration: last.t - first.t,
        peak_elevator_deg: max_abs(|r| r.elevator).to_degrees(),
        peak_rudder_deg: max_abs(|r| r.rudder).to_degrees(),
        peak_thrust: max_abs(|r| r.thrust),
        airspeed_min: va.clone().fold(f64::INFINITY, f64::min),
        airspeed_max: va.fold(f64::NEG_INFINITY, f64::max),
        airspeed_in_band: in_band as f64 / telemetry.len() as f64,
        altitude_error_min: herr.clone().fold(f64::INFINITY, f64::min),
        altitude_error_max: herr.fold(f64::NEG_INFINITY, f64::max),
        arrivals,
        final_miss_distance,
        plan_complete,
    })
}
