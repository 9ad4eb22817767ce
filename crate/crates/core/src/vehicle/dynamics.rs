use nalgebra::Vector3;

use super::aero::forces_and_moments;
use super::config::AeroConfig;
use super::state::{ActuatorState, Controls, RigidBodyState};
use crate::error::{IgcError, Result};

/// Simulation aborts beyond this pitch attitude (sec θ blows up at 90°).
pub const THETA_GUARD: f64 = 85.0 * std::f64::consts::PI / 180.0;

/// Heading rate `ψ̇ = q·sinφ·secθ + r·cosφ·secθ`.
pub fn heading_rate(state: &RigidBodyState) -> Result<f64> {
    check_attitude(state)?;
    let (sphi, cphi) = state.phi.sin_cos();
    Ok((state.q * sphi + state.r * cphi) / state.theta.cos())
}

fn check_attitude(state: &RigidBodyState) -> Result<()> {
    if state.theta.abs() > THETA_GUARD || !state.theta.is_finite() {
        return Err(IgcError::Singularity {
            theta_deg: state.theta.to_degrees(),
        });
    }
    Ok(())
}

/// Time derivative of all twelve states for the given actuator outputs.
pub fn sixdof_derivative(
    state: &RigidBodyState,
    actuators: &ActuatorState,
    cfg: &AeroConfig,
) -> Result<RigidBodyState> {
    let controls = clamp_controls(&actuators.outputs(), cfg);
    derivative(state, &controls, cfg)
}

/// Saturate deflections and thrust to the actuator ranges.
pub fn clamp_controls(c: &Controls, cfg: &AeroConfig) -> Controls {
    let lim = &cfg.limits;
    Controls {
        elevator: c.elevator.clamp(lim.elevator.0, lim.elevator.1),
        rudder: c.rudder.clamp(lim.rudder.0, lim.rudder.1),
        thrust: c.thrust.clamp(lim.thrust.0, lim.thrust.1),
    }
}

/// Equations of motion for explicit (unclamped) control values. Trim and
/// linearization use this entry point directly.
pub fn derivative(state: &RigidBodyState, controls: &Controls, cfg: &AeroConfig) -> Result<RigidBodyState> {
    check_attitude(state)?;
    let (force, moment) = forces_and_moments(state, controls, cfg)?;
    let g = cfg.gravity;
    let m = cfg.mass;
    let RigidBodyState {
        u,
        v,
        w,
        p,
        q,
        r,
        phi,
        theta,
        psi,
        ..
    } = *state;
    let (sphi, cphi) = phi.sin_cos();
    let (sth, cth) = theta.sin_cos();
    let (spsi, cpsi) = psi.sin_cos();

    let u_dot = r * v - q * w - g * sth + force.x / m;
    let v_dot = p * w - r * u + g * cth * sphi + force.y / m;
    let w_dot = q * u - p * v + g * cth * cphi + force.z / m;

    let omega = Vector3::new(p, q, r);
    let momentum = cfg.inertia * omega + Vector3::new(cfg.coupling.prop_momentum, 0.0, 0.0);
    let torque = moment - omega.cross(&momentum);
    let omega_dot = cfg
        .inertia
        .lu()
        .solve(&torque)
        .ok_or_else(|| IgcError::Domain("singular inertia tensor".into()))?;

    let phi_dot = p + (q * sphi + r * cphi) * sth / cth;
    let theta_dot = q * cphi - r * sphi;
    let psi_dot = (q * sphi + r * cphi) / cth;

    let north = u * cth * cpsi + v * (sphi * sth * cpsi - cphi * spsi) + w * (cphi * sth * cpsi + sphi * spsi);
    let east = u * cth * spsi + v * (sphi * sth * spsi + cphi * cpsi) + w * (cphi * sth * spsi - sphi * cpsi);
    let climb = u * sth - v * sphi * cth - w * cphi * cth;

    Ok(RigidBodyState {
        u: u_dot,
        v: v_dot,
        w: w_dot,
        p: omega_dot.x,
        q: omega_dot.y,
        r: omega_dot.z,
        phi: phi_dot,
        theta: theta_dot,
        psi: psi_dot,
        x: north,
        y: east,
        h: climb,
    })
}
