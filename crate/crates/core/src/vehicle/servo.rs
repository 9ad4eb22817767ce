use nalgebra::SVector;

use super::config::{AeroConfig, ServoParams};
use super::dynamics::{clamp_controls, derivative};
use super::state::{ActuatorState, Controls, RigidBodyState, ServoState, StateVector, STATE_DIM};
use crate::error::Result;

fn servo_rates(cmd: f64, s: ServoState, params: &ServoParams) -> (f64, f64) {
    let wn = params.natural_freq;
    let accel = wn * wn * (cmd - s.deflection) - 2.0 * params.damping * wn * s.rate;
    (s.rate, accel)
}

fn clamp_servo(s: ServoState, (lo, hi): (f64, f64)) -> ServoState {
    if s.deflection > hi {
        ServoState {
            deflection: hi,
            rate: s.rate.min(0.0),
        }
    } else if s.deflection < lo {
        ServoState {
            deflection: lo,
            rate: s.rate.max(0.0),
        }
    } else {
        s
    }
}

/// One RK4 step of the unit-DC-gain second-order servo. The command is
/// saturated to `limits` and so is the resulting position.
pub fn servo_step(cmd: f64, state: ServoState, params: &ServoParams, limits: (f64, f64), dt: f64) -> ServoState {
    assert!(dt > 0.0, "servo step needs dt > 0");
    let cmd = cmd.clamp(limits.0, limits.1);
    let f = |s: ServoState| servo_rates(cmd, s, params);
    let add = |s: ServoState, k: (f64, f64), h: f64| ServoState {
        deflection: s.deflection + h * k.0,
        rate: s.rate + h * k.1,
    };
    let k1 = f(state);
    let k2 = f(add(state, k1, 0.5 * dt));
    let k3 = f(add(state, k2, 0.5 * dt));
    let k4 = f(add(state, k3, dt));
    let next = ServoState {
        deflection: state.deflection + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        rate: state.rate + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    };
    clamp_servo(next, limits)
}

const JOINT_DIM: usize = STATE_DIM + 4;
type JointVector = SVector<f64, JOINT_DIM>;

fn pack(state: &RigidBodyState, act: &ActuatorState) -> JointVector {
    let mut x = JointVector::zeros();
    x.fixed_rows_mut::<STATE_DIM>(0).copy_from(&state.to_vector());
    x[STATE_DIM] = act.elevator.deflection;
    x[STATE_DIM + 1] = act.elevator.rate;
    x[STATE_DIM + 2] = act.rudder.deflection;
    x[STATE_DIM + 3] = act.rudder.rate;
    x
}

fn unpack(x: &JointVector, thrust: f64) -> (RigidBodyState, ActuatorState) {
    let body = RigidBodyState::from_vector(&StateVector::from(x.fixed_rows::<STATE_DIM>(0)));
    let act = ActuatorState {
        elevator: ServoState {
            deflection: x[STATE_DIM],
            rate: x[STATE_DIM + 1],
        },
        rudder: ServoState {
            deflection: x[STATE_DIM + 2],
            rate: x[STATE_DIM + 3],
        },
        thrust,
    };
    (body, act)
}

/// Advance airframe and servos together by one RK4 step of length `dt` with
/// the command held constant. Thrust responds instantaneously.
pub fn propagate(
    state: &RigidBodyState,
    actuators: &ActuatorState,
    command: &Controls,
    cfg: &AeroConfig,
    dt: f64,
) -> Result<(RigidBodyState, ActuatorState)> {
    let cmd = clamp_controls(command, cfg);
    let f = |x: &JointVector| -> Result<JointVector> {
        let (body, act) = unpack(x, cmd.thrust);
        let seen = clamp_controls(&act.outputs(), cfg);
        let d = derivative(&body, &seen, cfg)?;
        let (de, dde) = servo_rates(cmd.elevator, act.elevator, &cfg.elevator_servo);
        let (dr, ddr) = servo_rates(cmd.rudder, act.rudder, &cfg.rudder_servo);
        let mut out = JointVector::zeros();
        out.fixed_rows_mut::<STATE_DIM>(0).copy_from(&d.to_vector());
        out[STATE_DIM] = de;
        out[STATE_DIM + 1] = dde;
        out[STATE_DIM + 2] = dr;
        out[STATE_DIM + 3] = ddr;
        Ok(out)
    };
    let x0 = pack(state, actuators);
    let k1 = f(&x0)?;
    let k2 = f(&(x0 + k1 * (0.5 * dt)))?;
    let k3 = f(&(x0 + k2 * (0.5 * dt)))?;
    let k4 = f(&(x0 + k3 * dt))?;
    let x1 = x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    let (body, mut act) = unpack(&x1, cmd.thrust);
    act.elevator = clamp_servo(act.elevator, cfg.limits.elevator);
    act.rudder = clamp_servo(act.rudder, cfg.limits.rudder);
    Ok((body, act))
}
