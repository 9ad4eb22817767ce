use nalgebra::DMatrix;

use crate::error::{IgcError, Result};
use crate::vehicle::{heading_rate, AeroConfig, LinearModel, ServoParams, TrimPoint};

pub const IGC_DIM: usize = 15;

pub const IGC_STATES: [&str; IGC_DIM] = [
    "u", "w", "q", "theta", "h", "v", "p", "r", "phi", "x1", "x2", "de", "de_rate", "dr", "dr_rate",
];
pub const IGC_INPUTS: [&str; 3] = ["delta_e_cmd", "delta_r_cmd", "delta_t"];
pub const IGC_OUTPUTS: [&str; 7] = ["q", "theta", "h", "p", "r", "phi", "x1"];

/// State index of each measured output.
pub const OUTPUT_INDEX: [usize; 7] = [2, 3, 4, 6, 7, 8, 9];

const X1: usize = 9;
const X2: usize = 10;
const ELEV: usize = 11;
const RUDD: usize = 13;

/// Continuous model `Ẋ = A X + B U`, `Y = C X`.
#[derive(Debug, Clone, PartialEq)]
pub struct IgcLinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub airspeed: f64,
    pub nav_constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub ts: f64,
}

pub fn output_map() -> DMatrix<f64> {
    let mut c = DMatrix::zeros(OUTPUT_INDEX.len(), IGC_DIM);
    for (row, &col) in OUTPUT_INDEX.iter().enumerate() {
        c[(row, col)] = 1.0;
    }
    c
}

/// Partial derivatives of the lateral acceleration `Va·(ψ̇ + β̇)` with
/// respect to the linear states `[u, w, q, θ, h, v, p, r, φ]`, followed by
/// the derivative with respect to rudder deflection.
pub fn accel_jacobian(trim: &TrimPoint, cfg: &AeroConfig) -> Result<([f64; 9], f64)> {
    let s = &trim.state;
    let va = s.airspeed();
    if !(va > 0.0) {
        return Err(IgcError::Assembly("trim airspeed must be positive".into()));
    }
    let psi_dot = heading_rate(s)?;
    let (sphi, cphi) = s.phi.sin_cos();
    let (sth, cth) = s.theta.sin_cos();
    let g = cfg.gravity;
    let m = cfg.mass;
    let lat = &cfg.lateral;
    let half_rho_s = 0.5 * cfg.air_density * cfg.wing_area;
    let beta = s.beta();
    let dr = trim.controls.rudder;

    // Y = ½ρS·Va²·(Cyβ·β + Cyδr·δr) + ¼ρSb·Va·(Cyp·p + Cyr·r)
    let rate_part = 0.5 * half_rho_s * cfg.span * (lat.cy_p * s.p + lat.cy_r * s.r);
    let dy_dva = 2.0 * half_rho_s * va * (lat.cy_beta * beta + lat.cy_dr * dr) + rate_part;
    let dy_dbeta = half_rho_s * va * va * lat.cy_beta;
    let dy_dp = 0.5 * half_rho_s * cfg.span * va * lat.cy_p;
    let dy_dr = 0.5 * half_rho_s * cfg.span * va * lat.cy_r;
    let dy_ddr = half_rho_s * va * va * lat.cy_dr;

    let lateral = (va * va - s.v * s.v).sqrt();
    if !(lateral > 0.0) {
        return Err(IgcError::Assembly("sideslip of ±90° at trim".into()));
    }
    let dbeta_dv = lateral / (va * va);
    let dbeta_dother = |c: f64| -s.v * c / (va * va * lateral);

    let through_va = |c: f64| c / va * (psi_dot + dy_dva / m);
    let du = through_va(s.u) - s.r + dy_dbeta * dbeta_dother(s.u) / m;
    let dw = through_va(s.w) + s.p + dy_dbeta * dbeta_dother(s.w) / m;
    let dv = through_va(s.v) + dy_dbeta * dbeta_dv / m;
    let dq = va * sphi / cth;
    let dtheta = va * psi_dot * sth / cth - g * sth * sphi;
    let dp = s.w + dy_dp / m;
    let dr_rate = va * cphi / cth - s.u + dy_dr / m;
    let dphi = va * (s.q * cphi - s.r * sphi) / cth + g * cth * cphi;
    Ok(([du, dw, dq, dtheta, 0.0, dv, dp, dr_rate, dphi], dy_ddr / m))
}

fn servo_block(a: &mut DMatrix<f64>, b: &mut DMatrix<f64>, at: usize, input: usize, sp: &ServoParams) {
    let wn = sp.natural_freq;
    a[(at, at + 1)] = 1.0;
    a[(at + 1, at)] = -wn * wn;
    a[(at + 1, at + 1)] = -2.0 * sp.damping * wn;
    b[(at + 1, input)] = wn * wn;
}

/// Assemble the fifteen-state model from the airframe linearization. The
/// servo positions drive the airframe through the elevator and rudder
/// columns of `lin.b`; thrust enters directly.
pub fn augment(lin: &LinearModel, trim: &TrimPoint, cfg: &AeroConfig, nav_constant: f64) -> Result<IgcLinearModel> {
    if lin.a.shape() != (9, 9) || lin.b.shape() != (9, 3) {
        return Err(IgcError::Assembly(format!(
            "airframe model must be 9x9 / 9x3, got {:?} / {:?}",
            lin.a.shape(),
            lin.b.shape()
        )));
    }
    let (row, dr_coeff) = accel_jacobian(trim, cfg)?;
    let mut a = DMatrix::zeros(IGC_DIM, IGC_DIM);
    let mut b = DMatrix::zeros(IGC_DIM, 3);
    a.view_mut((0, 0), (9, 9)).copy_from(&lin.a);
    for i in 0..9 {
        a[(i, ELEV)] = lin.b[(i, 0)];
        a[(i, RUDD)] = lin.b[(i, 1)];
        b[(i, 2)] = lin.b[(i, 2)];
    }
    a[(X1, X2)] = 1.0;
    let gain = nav_constant - 1.0;
    for (j, v) in row.iter().enumerate() {
        a[(X2, j)] = gain * v;
    }
    a[(X2, RUDD)] = gain * dr_coeff;
    servo_block(&mut a, &mut b, ELEV, 0, &cfg.elevator_servo);
    servo_block(&mut a, &mut b, RUDD, 1, &cfg.rudder_servo);
    Ok(IgcLinearModel {
        a,
        b,
        c: output_map(),
        airspeed: trim.state.airspeed(),
        nav_constant,
    })
}

/// Zero-order-hold discretization through the exponential of the augmented
/// matrix `[[A, B], [0, 0]]·Ts`.
pub fn discretize(model: &IgcLinearModel, ts: f64) -> Result<DiscreteModel> {
    if !(ts > 0.0) {
        return Err(IgcError::Domain(format!("sample time must be positive, got {ts}")));
    }
    let (a, b) = zoh(&model.a, &model.b, ts);
    Ok(DiscreteModel {
        a,
        b,
        c: model.c.clone(),
        ts,
    })
}

pub(crate) fn zoh(a: &DMatrix<f64>, b: &DMatrix<f64>, ts: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * ts));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * ts));
    let e = aug.exp();
    (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned())
}
