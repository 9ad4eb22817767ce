use nalgebra::Vector3;

use super::config::AeroConfig;
use super::state::{Controls, RigidBodyState};
use crate::error::{IgcError, Result};

/// Side force `Q̄·S·C_y` with
/// `C_y = C_yβ·β + C_yp·(b/2Va)·p + C_yr·(b/2Va)·r + C_yδr·δr`.
pub fn side_force(beta: f64, p: f64, r: f64, delta_r: f64, airspeed: f64, cfg: &AeroConfig) -> Result<f64> {
    if !(airspeed > 0.0) {
        return Err(IgcError::Domain(format!(
            "side force needs positive airspeed, got {airspeed}"
        )));
    }
    let lat = &cfg.lateral;
    let half_span = 0.5 * cfg.span / airspeed;
    let cy = lat.cy_beta * beta + lat.cy_p * half_span * p + lat.cy_r * half_span * r + lat.cy_dr * delta_r;
    Ok(cfg.dynamic_pressure(airspeed) * cfg.wing_area * cy)
}

/// Body-axis aerodynamic plus propulsive force (N) and moment (N·m) about the
/// centre of gravity. Gravity and gyroscopic terms are not included.
pub fn forces_and_moments(
    state: &RigidBodyState,
    controls: &Controls,
    cfg: &AeroConfig,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let va = state.airspeed();
    if !(va > 0.0) {
        return Err(IgcError::Domain(format!(
            "aerodynamic forces need positive airspeed, got {va}"
        )));
    }
    let alpha = state.alpha();
    let beta = state.beta();
    let qbar_s = cfg.dynamic_pressure(va) * cfg.wing_area;
    let lon = &cfg.longitudinal;
    let lat = &cfg.lateral;
    let cpl = &cfg.coupling;
    let c_hat = 0.5 * cfg.chord / va;
    let b_hat = 0.5 * cfg.span / va;
    let (de, dr, thrust) = (controls.elevator, controls.rudder, controls.thrust);

    let cl = lon.cl0 + lon.cl_alpha * alpha + lon.cl_q * c_hat * state.q + lon.cl_de * de;
    let cd = lon.cd0 + lon.cd_k * cl * cl;
    let lift = qbar_s * cl;
    let drag = qbar_s * cd;
    let (sa, ca) = alpha.sin_cos();

    let side = side_force(beta, state.p, state.r, dr, va, cfg)?;
    let force = Vector3::new(-drag * ca + lift * sa + thrust, side, -drag * sa - lift * ca);

    let roll = qbar_s
        * cfg.span
        * (lat.croll_beta * beta
            + lat.croll_p * b_hat * state.p
            + lat.croll_r * b_hat * state.r
            + lat.croll_dr * dr
            + cpl.wake_roll_alpha * alpha)
        - cpl.counter_torque * thrust;
    let pitch = qbar_s * cfg.chord * (lon.cm0 + lon.cm_alpha * alpha + lon.cm_q * c_hat * state.q + lon.cm_de * de);
    let yaw = qbar_s
        * cfg.span
        * (lat.cyaw_beta * beta + lat.cyaw_p * b_hat * state.p + lat.cyaw_r * b_hat * state.r + lat.cyaw_dr * dr)
        + cpl.wake_yaw * thrust;

    Ok((force, Vector3::new(roll, pitch, yaw)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn side_force_vanishes_without_sources() {
        let cfg = AeroConfig::default();
        assert_eq!(side_force(0.0, 0.0, 0.0, 0.0, 8.0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn side_force_from_sideslip_only() {
        let mut cfg = AeroConfig::default();
        cfg.lateral.cy_beta = -0.5;
        cfg.wing_area = 0.0165;
        cfg.air_density = 1.225;
        // 39.2 · 0.0165 · (−0.5 · 0.1)
        let y = side_force(0.1, 0.0, 0.0, 0.0, 8.0, &cfg).unwrap();
        assert!((y + 0.03234).abs() < 1e-12, "{y}");
    }

    #[test]
    fn side_force_uses_half_span_rate_scaling() {
        let mut cfg = AeroConfig::default();
        cfg.lateral = crate::vehicle::LateralCoeffs {
            cy_p: 1.0,
            ..cfg.lateral.clone()
        };
        let y = side_force(0.0, 2.0, 0.0, 0.0, 8.0, &cfg).unwrap();
        let expected = 39.2 * cfg.wing_area * (0.5 * cfg.span / 8.0) * 2.0;
        assert!((y - expected).abs() < 1e-12);
    }

    #[test]
    fn side_force_rejects_nonpositive_airspeed() {
        let cfg = AeroConfig::default();
        assert!(side_force(0.1, 0.0, 0.0, 0.0, 0.0, &cfg).is_err());
        assert!(side_force(0.1, 0.0, 0.0, 0.0, -1.0, &cfg).is_err());
    }
}
