use nalgebra::SVector;

/// Rigid-body state in body axes (x forward, y right, z down) with Euler
/// angles and inertial position (x north, y east, h up).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidBodyState {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

pub const STATE_DIM: usize = 12;
pub type StateVector = SVector<f64, STATE_DIM>;

impl RigidBodyState {
    pub fn airspeed(&self) -> f64 {
        (self.u * self.u + self.v * self.v + self.w * self.w).sqrt()
    }

    pub fn alpha(&self) -> f64 {
        self.w.atan2(self.u)
    }

    /// Sideslip `asin(v/Va)`; zero at zero airspeed.
    pub fn beta(&self) -> f64 {
        let va = self.airspeed();
        if va > 0.0 {
            (self.v / va).clamp(-1.0, 1.0).asin()
        } else {
            0.0
        }
    }

    /// Course angle χ = ψ + β.
    pub fn course(&self) -> f64 {
        self.psi + self.beta()
    }

    pub fn to_vector(&self) -> StateVector {
        StateVector::from_column_slice(&[
            self.u, self.v, self.w, self.p, self.q, self.r, self.phi, self.theta, self.psi, self.x, self.y, self.h,
        ])
    }

    pub fn from_vector(x: &StateVector) -> Self {
        Self {
            u: x[0],
            v: x[1],
            w: x[2],
            p: x[3],
            q: x[4],
            r: x[5],
            phi: x[6],
            theta: x[7],
            psi: x[8],
            x: x[9],
            y: x[10],
            h: x[11],
        }
    }

    /// Body velocities from airspeed, angle of attack and sideslip.
    pub fn with_air_data(mut self, airspeed: f64, alpha: f64, beta: f64) -> Self {
        self.u = airspeed * alpha.cos() * beta.cos();
        self.v = airspeed * beta.sin();
        self.w = airspeed * alpha.sin() * beta.cos();
        self
    }
}

/// Position and rate of one second-order servo.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ServoState {
    pub deflection: f64,
    pub rate: f64,
}

/// Servo states plus the (instantaneous) thrust.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActuatorState {
    pub elevator: ServoState,
    pub rudder: ServoState,
    pub thrust: f64,
}

impl ActuatorState {
    /// Actuators at rest at the given positions.
    pub fn at_rest(controls: Controls) -> Self {
        Self {
            elevator: ServoState {
                deflection: controls.elevator,
                rate: 0.0,
            },
            rudder: ServoState {
                deflection: controls.rudder,
                rate: 0.0,
            },
            thrust: controls.thrust,
        }
    }

    pub fn outputs(&self) -> Controls {
        Controls {
            elevator: self.elevator.deflection,
            rudder: self.rudder.deflection,
            thrust: self.thrust,
        }
    }
}

/// Control-surface deflections (rad) and thrust (N) seen by the airframe, or
/// commanded to the actuators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Controls {
    pub elevator: f64,
    pub rudder: f64,
    pub thrust: f64,
}

impl Controls {
    pub fn new(elevator: f64, rudder: f64, thrust: f64) -> Self {
        Self {
            elevator,
            rudder,
            thrust,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.elevator, self.rudder, self.thrust]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn air_data_round_trip() {
        let s = RigidBodyState::default().with_air_data(8.0, 0.2286, -0.0532);
        assert!((s.airspeed() - 8.0).abs() < 1e-12);
        assert!((s.alpha() - 0.2286).abs() < 1e-12);
        assert!((s.beta() + 0.0532).abs() < 1e-12);
    }

    #[test]
    fn vector_round_trip() {
        let s = RigidBodyState {
            u: 1.0,
            v: 2.0,
            w: 3.0,
            p: 4.0,
            q: 5.0,
            r: 6.0,
            phi: 0.1,
            theta: 0.2,
            psi: 0.3,
            x: 10.0,
            y: 11.0,
            h: 20.0,
        };
        assert_eq!(RigidBodyState::from_vector(&s.to_vector()), s);
    }
}
