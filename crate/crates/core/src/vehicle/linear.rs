use nalgebra::DMatrix;

use super::config::AeroConfig;
use super::dynamics::derivative;
use super::state::{Controls, RigidBodyState, StateVector};
use super::trim::TrimPoint;
use crate::error::{IgcError, Result};
use crate::linalg::{eigenvalues, spectra_match, C64};

/// Linear state ordering `[u, w, q, θ, h, v, p, r, φ]`: longitudinal block
/// first, lateral block second.
pub const LINEAR_STATES: [&str; 9] = ["u", "w", "q", "theta", "h", "v", "p", "r", "phi"];
pub const LINEAR_INPUTS: [&str; 3] = ["delta_e", "delta_r", "delta_t"];
pub const LONGITUDINAL_DIM: usize = 5;

/// Positions of the linear states inside [`RigidBodyState::to_vector`].
const FULL_INDEX: [usize; 9] = [0, 2, 4, 7, 11, 1, 3, 5, 6];

/// Coupled linear model `ẋ = A_c x + B_c u` about a trim point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl LinearModel {
    pub fn a11(&self) -> DMatrix<f64> {
        self.a.view((0, 0), (5, 5)).into_owned()
    }
    pub fn a12(&self) -> DMatrix<f64> {
        self.a.view((0, 5), (5, 4)).into_owned()
    }
    pub fn a21(&self) -> DMatrix<f64> {
        self.a.view((5, 0), (4, 5)).into_owned()
    }
    pub fn a22(&self) -> DMatrix<f64> {
        self.a.view((5, 5), (4, 4)).into_owned()
    }
}

/// Extract the linear-state deviation vector from a full state.
pub fn linear_state(full: &RigidBodyState) -> [f64; 9] {
    let v = full.to_vector();
    FULL_INDEX.map(|i| v[i])
}

/// Central-difference Jacobians of the equations of motion at `trim`,
/// projected onto the nine linear states and three inputs. `step` is the
/// relative perturbation size.
pub fn linearize_with_step(trim: &TrimPoint, cfg: &AeroConfig, step: f64) -> Result<LinearModel> {
    if !(trim.residual.is_finite()) {
        return Err(IgcError::Linearization("trim residual is not finite".into()));
    }
    let x0 = trim.state.to_vector();
    let u0 = trim.controls.to_array();
    let eval = |x: &StateVector, u: [f64; 3]| -> Result<StateVector> {
        Ok(derivative(&RigidBodyState::from_vector(x), &Controls::from_array(u), cfg)?.to_vector())
    };
    let mut a = DMatrix::zeros(9, 9);
    for (col, &fi) in FULL_INDEX.iter().enumerate() {
        let h = step * (1.0 + x0[fi].abs());
        let mut xp = x0;
        let mut xm = x0;
        xp[fi] += h;
        xm[fi] -= h;
        let df = (eval(&xp, u0)? - eval(&xm, u0)?) / (2.0 * h);
        for (row, &fr) in FULL_INDEX.iter().enumerate() {
            a[(row, col)] = df[fr];
        }
    }
    let mut b = DMatrix::zeros(9, 3);
    for j in 0..3 {
        let h = step * (1.0 + u0[j].abs());
        let mut up = u0;
        let mut um = u0;
        up[j] += h;
        um[j] -= h;
        let df = (eval(&x0, up)? - eval(&x0, um)?) / (2.0 * h);
        for (row, &fr) in FULL_INDEX.iter().enumerate() {
            b[(row, j)] = df[fr];
        }
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(IgcError::Linearization("non-finite Jacobian entry".into()));
    }
    Ok(LinearModel { a, b })
}

pub fn linearize(trim: &TrimPoint, cfg: &AeroConfig) -> Result<LinearModel> {
    linearize_with_step(trim, cfg, 1e-5)
}

/// Spectrum of the coupled model against the union of the spectra of its
/// decoupled diagonal blocks.
#[derive(Debug, Clone)]
pub struct CouplingReport {
    pub union_holds: bool,
    pub coupled: Vec<C64>,
    pub longitudinal: Vec<C64>,
    pub lateral: Vec<C64>,
}

pub fn coupling_spectrum_check(model: &LinearModel, tol: f64) -> CouplingReport {
    let coupled = eigenvalues(&model.a);
    let longitudinal = eigenvalues(&model.a11());
    let lateral = eigenvalues(&model.a22());
    let union: Vec<C64> = longitudinal.iter().chain(lateral.iter()).copied().collect();
    CouplingReport {
        union_holds: spectra_match(&coupled, &union, tol),
        coupled,
        longitudinal,
        lateral,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::trim::{trim_solve, TrimOptions, TrimTargets};

    #[test]
    fn decoupled_vehicle_has_zero_coupling_blocks() {
        let cfg = AeroConfig::default().decoupled();
        let trim = trim_solve(TrimTargets::level(8.0), &cfg, &TrimOptions::default()).unwrap();
        let lin = linearize(&trim, &cfg).unwrap();
        assert!(lin.a12().amax() < 1e-12, "{}", lin.a12());
        assert!(lin.a21().amax() < 1e-12, "{}", lin.a21());
        assert!(coupling_spectrum_check(&lin, 1e-6).union_holds);
    }

    #[test]
    fn block_diagonal_model_satisfies_union() {
        let mut a = DMatrix::zeros(9, 9);
        for i in 0..9 {
            a[(i, i)] = -(i as f64) - 1.0;
        }
        a[(0, 1)] = 2.0;
        a[(6, 7)] = -3.0;
        let report = coupling_spectrum_check(
            &LinearModel {
                a,
                b: DMatrix::zeros(9, 3),
            },
            1e-9,
        );
        assert!(report.union_holds);
    }

    #[test]
    fn altitude_column_is_zero() {
        let cfg = AeroConfig::default();
        let trim = trim_solve(TrimTargets::default(), &cfg, &TrimOptions::default()).unwrap();
        let lin = linearize(&trim, &cfg).unwrap();
        assert!(lin.a.column(4).amax() == 0.0);
    }
}
