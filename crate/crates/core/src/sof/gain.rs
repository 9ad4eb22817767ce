use nalgebra::DMatrix;

use super::plant::feedback_map;
use crate::igc::{DiscreteModel, ModeTable};

/// Static output-feedback gain `U = F·Y_d` over the feedback signals
/// `[e_h, e_x1, q, θ, p, r, φ]` and inputs `[δe, δr, δt]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SofGain {
    pub f: DMatrix<f64>,
}

impl SofGain {
    pub fn new(f: DMatrix<f64>) -> Self {
        assert_eq!(f.shape(), (3, 7), "gain must be 3x7");
        Self { f }
    }

    /// Columns acting on `[e_h, e_x1, q]`.
    pub fn fd1(&self) -> DMatrix<f64> {
        self.f.columns(0, 3).into_owned()
    }

    /// Columns acting on `[θ, p, r, φ]`.
    pub fn fd2(&self) -> DMatrix<f64> {
        self.f.columns(3, 4).into_owned()
    }

    /// The same law written on the plant outputs `[q, θ, h, p, r, φ, x1]`
    /// with zero references.
    pub fn plant_gain(&self) -> DMatrix<f64> {
        &self.f * feedback_map()
    }

    pub fn is_finite(&self) -> bool {
        self.f.iter().all(|v| v.is_finite())
    }
}

/// The gain published with the method, kept as a regression fixture.
pub fn published_gain() -> SofGain {
    #[rustfmt::skip]
    let f = DMatrix::from_row_slice(3, 7, &[
        -0.0060, -0.3378, -0.8032,   0.0002, -0.0007,  0.0,    -0.1008,
         0.0,     0.0987,  0.0,     -0.0528,  0.0008, -0.0937, -0.0002,
        -1.152,  36.54,    0.0042,  -5.325, -19.1,     0.0004,  0.0091,
    ]);
    SofGain::new(f)
}

/// Continuous-equivalent closed-loop modes of the fifteen-state model under
/// `gain`.
pub fn closed_loop_modes(dm: &DiscreteModel, gain: &SofGain) -> ModeTable {
    dm.closed_loop_modes(&gain.plant_gain())
}
