use nalgebra::{SMatrix, SVector};

use super::config::AeroConfig;
use super::dynamics::derivative;
use super::state::{Controls, RigidBodyState};
use crate::error::{IgcError, Result};

/// Commanded steady flight condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimTargets {
    pub airspeed: f64,
    pub turn_rate: f64,
    pub climb_rate: f64,
}

impl TrimTargets {
    pub fn level(airspeed: f64) -> Self {
        Self {
            airspeed,
            turn_rate: 0.0,
            climb_rate: 0.0,
        }
    }
}

impl Default for TrimTargets {
    /// Climbing turn at cruise speed: 8 m/s, 0.8 rad/s, 1 m/s.
    fn default() -> Self {
        Self {
            airspeed: 8.0,
            turn_rate: 0.8,
            climb_rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrimOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Altitude assigned to the trimmed state (does not affect the dynamics).
    pub altitude: f64,
}

impl Default for TrimOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
            altitude: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrimPoint {
    pub state: RigidBodyState,
    pub controls: Controls,
    pub targets: TrimTargets,
    /// 2-norm of (u̇, v̇, ẇ, ṗ, q̇, ṙ, ḣ − ḣ_target) at the solution.
    pub residual: f64,
    pub iterations: usize,
}

const N: usize = 7;
type Unknowns = SVector<f64, N>;

fn build(z: &Unknowns, t: &TrimTargets, altitude: f64) -> (RigidBodyState, Controls) {
    let (alpha, beta, phi, theta) = (z[0], z[1], z[2], z[3]);
    let (sphi, cphi) = phi.sin_cos();
    let (sth, cth) = theta.sin_cos();
    let state = RigidBodyState {
        p: -t.turn_rate * sth,
        q: t.turn_rate * sphi * cth,
        r: t.turn_rate * cphi * cth,
        phi,
        theta,
        h: altitude,
        ..RigidBodyState::default()
    }
    .with_air_data(t.airspeed, alpha, beta);
    (state, Controls::new(z[4], z[5], z[6]))
}

fn residual(z: &Unknowns, t: &TrimTargets, cfg: &AeroConfig) -> Result<Unknowns> {
    let (state, controls) = build(z, t, 0.0);
    let d = derivative(&state, &controls, cfg)?;
    Ok(Unknowns::from_column_slice(&[
        d.u,
        d.v,
        d.w,
        d.p,
        d.q,
        d.r,
        d.h - t.climb_rate,
    ]))
}

/// Solve for the state and controls that hold the commanded airspeed, turn
/// rate and climb rate with zero body accelerations. Damped Newton on the
/// unknowns (α, β, φ, θ, δe, δr, δt) with a central-difference Jacobian.
pub fn trim_solve(targets: TrimTargets, cfg: &AeroConfig, opts: &TrimOptions) -> Result<TrimPoint> {
    if !(targets.airspeed > 0.0) {
        return Err(IgcError::Domain("trim airspeed must be positive".into()));
    }
    let g = cfg.gravity;
    let qbar_s = cfg.dynamic_pressure(targets.airspeed) * cfg.wing_area;
    let lon = &cfg.longitudinal;
    let cl_needed = cfg.mass * g / qbar_s;
    let alpha0 = ((cl_needed - lon.cl0) / lon.cl_alpha).clamp(-0.1, 0.4);
    let gamma0 = (targets.climb_rate / targets.airspeed).clamp(-0.5, 0.5).asin();
    let mut z = Unknowns::from_column_slice(&[
        alpha0,
        0.0,
        (targets.airspeed * targets.turn_rate / g).atan(),
        alpha0 + gamma0,
        -(lon.cm0 + lon.cm_alpha * alpha0) / lon.cm_de,
        0.0,
        0.5 * (cfg.limits.thrust.0 + cfg.limits.thrust.1),
    ]);

    let mut f = residual(&z, &targets, cfg)?;
    let mut norm = f.norm();
    let mut iterations = 0;
    while norm > opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let mut jac = SMatrix::<f64, N, N>::zeros();
        for j in 0..N {
            let h = 1e-7 * (1.0 + z[j].abs());
            let mut zp = z;
            let mut zm = z;
            zp[j] += h;
            zm[j] -= h;
            let col = (residual(&zp, &targets, cfg)? - residual(&zm, &targets, cfg)?) / (2.0 * h);
            jac.set_column(j, &col);
        }
        let step = match jac.lu().solve(&(-f)) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => break,
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let trial = z + step * lambda;
            if trial[2].abs() < 1.5 && trial[3].abs() < 1.4 {
                if let Ok(ft) = residual(&trial, &targets, cfg) {
                    let nt = ft.norm();
                    if nt < (1.0 - 1e-4 * lambda) * norm {
                        z = trial;
                        f = ft;
                        norm = nt;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !(norm <= opts.tolerance) {
        return Err(IgcError::TrimFailed {
            residual: norm,
            iterations,
        });
    }

    let (state, controls) = build(&z, &targets, opts.altitude);
    let lim = &cfg.limits;
    let outside = |v: f64, (lo, hi): (f64, f64)| v < lo || v > hi;
    if outside(controls.elevator, lim.elevator) {
        return Err(IgcError::TrimOutOfEnvelope(format!(
            "elevator {:.2} deg",
            controls.elevator.to_degrees()
        )));
    }
    if outside(controls.rudder, lim.rudder) {
        return Err(IgcError::TrimOutOfEnvelope(format!(
            "rudder {:.2} deg",
            controls.rudder.to_degrees()
        )));
    }
    if outside(controls.thrust, lim.thrust) {
        return Err(IgcError::TrimOutOfEnvelope(format!("thrust {:.3} N", controls.thrust)));
    }
    Ok(TrimPoint {
        state,
        controls,
        targets,
        residual: norm,
        iterations,
    })
}
