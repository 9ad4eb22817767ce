use nalgebra::DMatrix;

use super::lmi::SofProblem;
use crate::error::{IgcError, Result};
use crate::igc::{DiscreteModel, IGC_DIM};

/// Shaping filters on the tracking error, the measured outputs and the
/// control effort.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    /// Low-pass `k/(s/ω + 1)` on each tracking error.
    pub w1_gain: f64,
    pub w1_corner: f64,
    /// High-pass `k·s/(s + ω)` on each measured output.
    pub w2_gain: f64,
    pub w2_corner: f64,
    /// Constant weight on each control input.
    pub w3_gain: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            w1_gain: 1.0,
            w1_corner: 10.0,
            w2_gain: 0.1,
            w2_corner: 50.0,
            w3_gain: 0.1,
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.w1_gain) && ok(self.w2_gain) && ok(self.w3_gain)) {
            return Err(IgcError::Weight("weight gains must be finite and non-negative".into()));
        }
        if !(self.w1_corner > 0.0 && self.w2_corner > 0.0) {
            return Err(IgcError::Weight(
                "weight corner frequencies must be positive (stable poles)".into(),
            ));
        }
        Ok(())
    }
}

/// Names of the feedback signals, in gain-column order: the two tracking
/// errors followed by the five attitude and rate measurements.
pub const SOF_OUTPUTS: [&str; 7] = ["e_h", "e_x1", "q", "theta", "p", "r", "phi"];

/// Rows of the plant output vector `[q, θ, h, p, r, φ, x1]` that feed each
/// feedback signal, and the sign applied.
pub const FEEDBACK_FROM_OUTPUT: [(usize, f64); 7] =
    [(2, -1.0), (6, -1.0), (0, 1.0), (1, 1.0), (3, 1.0), (4, 1.0), (5, 1.0)];

/// Tracked outputs as rows of the plant output vector (h and x1).
const TRACKED: [usize; 2] = [2, 6];

/// Discrete generalized plant
/// `x⁺ = A x + B_u u + B_w w`, `z_i = C_i x + D_i1 u + D_i2 w`, `y = C x + D_yw w`,
/// with state `[plant (15), W1 (2), W2 (7)]` and exogenous input `w` the
/// references of h and x1.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedPlant {
    pub a: DMatrix<f64>,
    pub b_u: DMatrix<f64>,
    pub b_w: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub d11: DMatrix<f64>,
    pub d12: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub d21: DMatrix<f64>,
    pub d22: DMatrix<f64>,
    pub c3: DMatrix<f64>,
    pub d31: DMatrix<f64>,
    pub d32: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d_yw: DMatrix<f64>,
    pub weights: Weights,
    pub ts: f64,
}

impl GeneralizedPlant {
    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn sof_problem(&self) -> SofProblem {
        SofProblem::new(self.a.clone(), self.b_u.clone(), self.c.clone())
    }
}

/// Feedback-signal map `Y_d = M·Y` from plant outputs.
pub fn feedback_map() -> DMatrix<f64> {
    let mut m = DMatrix::zeros(7, 7);
    for (row, &(col, sign)) in FEEDBACK_FROM_OUTPUT.iter().enumerate() {
        m[(row, col)] = sign;
    }
    m
}

fn first_order(pole: f64, ts: f64) -> (f64, f64) {
    // ẋ = −ω x + ω e sampled with a zero-order hold
    let ad = (-pole * ts).exp();
    (ad, 1.0 - ad)
}

pub fn build_generalized_plant(dm: &DiscreteModel, weights: &Weights) -> Result<GeneralizedPlant> {
    weights.validate()?;
    if dm.a.nrows() != IGC_DIM || dm.c.nrows() != 7 {
        return Err(IgcError::Assembly(format!(
            "expected the 15-state, 7-output model, got {} states and {} outputs",
            dm.a.nrows(),
            dm.c.nrows()
        )));
    }
    let np = IGC_DIM;
    let n1 = TRACKED.len();
    let n2 = dm.c.nrows();
    let n = np + n1 + n2;
    let m = dm.b.ncols();
    let (a1, b1) = first_order(weights.w1_corner, dm.ts);
    let (a2, b2) = first_order(weights.w2_corner, dm.ts);

    let c_track = DMatrix::from_fn(n1, np, |i, j| dm.c[(TRACKED[i], j)]);

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (np, np)).copy_from(&dm.a);
    // W1 driven by e = r − y_tracked
    a.view_mut((np, 0), (n1, np)).copy_from(&(&c_track * -b1));
    // W2 low-pass part driven by the outputs; the high-pass is y − x_lp
    a.view_mut((np + n1, 0), (n2, np)).copy_from(&(&dm.c * b2));
    for i in 0..n1 {
        a[(np + i, np + i)] = a1;
    }
    for i in 0..n2 {
        a[(np + n1 + i, np + n1 + i)] = a2;
    }

    let mut b_u = DMatrix::zeros(n, m);
    b_u.view_mut((0, 0), (np, m)).copy_from(&dm.b);
    let mut b_w = DMatrix::zeros(n, n1);
    for i in 0..n1 {
        b_w[(np + i, i)] = b1;
    }

    let mut c1 = DMatrix::zeros(n1, n);
    for i in 0..n1 {
        c1[(i, np + i)] = weights.w1_gain;
    }
    let mut c2 = DMatrix::zeros(n2, n);
    c2.view_mut((0, 0), (n2, np)).copy_from(&(&dm.c * weights.w2_gain));
    for i in 0..n2 {
        c2[(i, np + n1 + i)] = -weights.w2_gain;
    }
    let c3 = DMatrix::zeros(m, n);
    let d31 = DMatrix::identity(m, m) * weights.w3_gain;

    let fb = feedback_map();
    let mut c = DMatrix::zeros(7, n);
    c.view_mut((0, 0), (7, np)).copy_from(&(&fb * &dm.c));
    let mut d_yw = DMatrix::zeros(7, n1);
    d_yw[(0, 0)] = 1.0;
    d_yw[(1, 1)] = 1.0;

    Ok(GeneralizedPlant {
        a,
        b_u,
        b_w,
        c1,
        d11: DMatrix::zeros(n1, m),
        d12: DMatrix::zeros(n1, n1),
        c2,
        d21: DMatrix::zeros(n2, m),
        d22: DMatrix::zeros(n2, n1),
        c3,
        d31,
        d32: DMatrix::zeros(m, n1),
        c,
        d_yw,
        weights: *weights,
        ts: dm.ts,
    })
}
