use std::fmt;

use nalgebra::DMatrix;

use super::model::{DiscreteModel, IgcLinearModel, IGC_DIM};
use crate::linalg::{eigenvalues, participation, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeKind {
    ShortPeriod,
    Phugoid,
    DutchRoll,
    RollSubsidence,
    Spiral,
    Altitude,
    Guidance,
    ElevatorServo,
    RudderServo,
    Integrator,
    Unclassified,
}

impl ModeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModeKind::ShortPeriod => "short_period",
            ModeKind::Phugoid => "phugoid",
            ModeKind::DutchRoll => "dutch_roll",
            ModeKind::RollSubsidence => "roll_subsidence",
            ModeKind::Spiral => "spiral",
            ModeKind::Altitude => "altitude",
            ModeKind::Guidance => "guidance",
            ModeKind::ElevatorServo => "elevator_servo",
            ModeKind::RudderServo => "rudder_servo",
            ModeKind::Integrator => "integrator",
            ModeKind::Unclassified => "unclassified",
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One real pole or one complex-conjugate pair (stored with `im ≥ 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub kind: ModeKind,
    pub pole: C64,
    pub natural_freq: f64,
    pub damping: f64,
}

impl Mode {
    pub fn is_oscillatory(&self) -> bool {
        self.pole.im != 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeTable {
    pub modes: Vec<Mode>,
}

impl ModeTable {
    pub fn of_kind(&self, kind: ModeKind) -> impl Iterator<Item = &Mode> {
        self.modes.iter().filter(move |m| m.kind == kind)
    }

    /// Every continuous pole, conjugates included.
    pub fn poles(&self) -> Vec<C64> {
        let mut out = Vec::new();
        for m in &self.modes {
            out.push(m.pole);
            if m.is_oscillatory() {
                out.push(m.pole.conj());
            }
        }
        out
    }

    pub fn max_real(&self) -> f64 {
        self.modes.iter().map(|m| m.pole.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest damping ratio over the oscillatory modes.
    pub fn min_damping(&self) -> Option<f64> {
        self.modes
            .iter()
            .filter(|m| m.is_oscillatory())
            .map(|m| m.damping)
            .reduce(f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("mode,real,imag,natural_freq,damping\n");
        for m in &self.modes {
            s.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                m.kind, m.pole.re, m.pole.im, m.natural_freq, m.damping
            ));
        }
        s
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Group {
    Longitudinal,
    Altitude,
    Lateral,
    Guidance,
    Elevator,
    Rudder,
}

const GROUP_OF: [Group; IGC_DIM] = [
    Group::Longitudinal,
    Group::Longitudinal,
    Group::Longitudinal,
    Group::Longitudinal,
    Group::Altitude,
    Group::Lateral,
    Group::Lateral,
    Group::Lateral,
    Group::Lateral,
    Group::Guidance,
    Group::Guidance,
    Group::Elevator,
    Group::Elevator,
    Group::Rudder,
    Group::Rudder,
];

const GROUPS: [Group; 6] = [
    Group::Longitudinal,
    Group::Altitude,
    Group::Lateral,
    Group::Guidance,
    Group::Elevator,
    Group::Rudder,
];

fn group_shares(part: &[f64]) -> Vec<(Group, f64)> {
    GROUPS
        .iter()
        .map(|&g| {
            let e: f64 = part
                .iter()
                .zip(GROUP_OF.iter())
                .filter(|(_, gg)| **gg == g)
                .map(|(x, _)| x)
                .sum();
            (g, e)
        })
        .collect()
}

fn mode_of(pole: C64, kind: ModeKind) -> Mode {
    let wn = pole.norm();
    let damping = if wn > 0.0 { -pole.re / wn } else { 0.0 };
    Mode {
        kind,
        pole,
        natural_freq: wn,
        damping,
    }
}

/// Name the modes of a fifteen-state matrix `a` whose continuous-time poles
/// are `poles` (one entry per eigenvalue `eigs` of `a`, in matching order).
/// Each eigenvalue cluster is attributed to the state groups carrying the
/// largest participation; within the airframe groups the frequency ordering
/// separates short period from phugoid and roll subsidence from spiral.
pub fn classify_modes(a: &DMatrix<f64>, eigs: &[C64], poles: &[C64]) -> ModeTable {
    assert_eq!(a.nrows(), IGC_DIM, "mode classification expects the 15-state model");
    assert_eq!(eigs.len(), poles.len());
    let zero_tol = 1e-5;
    let mut lon_complex = Vec::new();
    let mut lat_complex = Vec::new();
    let mut lat_real = Vec::new();
    let mut modes = Vec::new();

    let is_zero = |i: usize| poles[i].norm() < zero_tol;
    for _ in (0..eigs.len()).filter(|&i| is_zero(i)) {
        modes.push(mode_of(C64::new(0.0, 0.0), ModeKind::Integrator));
    }
    let upper: Vec<usize> = (0..eigs.len()).filter(|&i| !is_zero(i) && poles[i].im >= 0.0).collect();
    let mut done = vec![false; eigs.len()];
    for &i in &upper {
        if done[i] {
            continue;
        }
        let cluster: Vec<usize> = upper
            .iter()
            .copied()
            .filter(|&j| !done[j] && (eigs[j] - eigs[i]).norm() <= 1e-6 * (1.0 + eigs[i].norm()))
            .collect();
        for &j in &cluster {
            done[j] = true;
        }
        let part = participation(a, eigs[i], cluster.len());
        let mut shares = group_shares(&part);
        let total: f64 = shares.iter().map(|s| s.1).sum::<f64>().max(f64::MIN_POSITIVE);
        for &j in &cluster {
            let pole = poles[j];
            let (gi, _) = shares
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1))
                .expect("non-empty groups");
            let (group, share) = shares[gi];
            shares[gi].1 -= total / cluster.len() as f64;
            let share = share * cluster.len() as f64 / total;
            let kind = match group {
                _ if share < 0.35 => ModeKind::Unclassified,
                Group::Elevator => ModeKind::ElevatorServo,
                Group::Rudder => ModeKind::RudderServo,
                Group::Altitude => ModeKind::Altitude,
                Group::Guidance => ModeKind::Guidance,
                Group::Longitudinal if pole.im > 0.0 => {
                    lon_complex.push(pole);
                    continue;
                }
                Group::Lateral if pole.im > 0.0 => {
                    lat_complex.push(pole);
                    continue;
                }
                Group::Lateral => {
                    lat_real.push(pole);
                    continue;
                }
                Group::Longitudinal => ModeKind::Unclassified,
            };
            modes.push(mode_of(pole, kind));
        }
    }
    let by_freq = |v: &mut Vec<C64>| v.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    by_freq(&mut lon_complex);
    for (i, p) in lon_complex.into_iter().enumerate() {
        let kind = match i {
            0 => ModeKind::ShortPeriod,
            1 => ModeKind::Phugoid,
            _ => ModeKind::Unclassified,
        };
        modes.push(mode_of(p, kind));
    }
    by_freq(&mut lat_complex);
    for (i, p) in lat_complex.into_iter().enumerate() {
        let kind = if i == 0 {
            ModeKind::DutchRoll
        } else {
            ModeKind::Unclassified
        };
        modes.push(mode_of(p, kind));
    }
    lat_real.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    for (i, p) in lat_real.into_iter().enumerate() {
        let kind = match i {
            0 => ModeKind::Spiral,
            1 => ModeKind::RollSubsidence,
            _ => ModeKind::Unclassified,
        };
        modes.push(mode_of(p, kind));
    }
    modes.sort_by(|x, y| x.kind.cmp(&y.kind).then(y.natural_freq.total_cmp(&x.natural_freq)));
    ModeTable { modes }
}

pub fn open_loop_modes(model: &IgcLinearModel) -> ModeTable {
    let eigs = eigenvalues(&model.a);
    classify_modes(&model.a, &eigs, &eigs)
}

/// Continuous equivalents `ln(λ)/Ts` of the poles of `A_d + B_d·F·C`, with
/// the closed-loop matrix.
pub fn closed_loop_poles(dm: &DiscreteModel, gain: &DMatrix<f64>) -> (DMatrix<f64>, Vec<C64>, Vec<C64>) {
    let acl = &dm.a + &dm.b * gain * &dm.c;
    let eigs = eigenvalues(&acl);
    let poles = eigs.iter().map(|z| z.ln() / dm.ts).collect();
    (acl, eigs, poles)
}

impl DiscreteModel {
    /// Mode table of the closed loop under output feedback `U = F·Y`.
    pub fn closed_loop_modes(&self, gain: &DMatrix<f64>) -> ModeTable {
        let (acl, eigs, poles) = closed_loop_poles(self, gain);
        classify_modes(&acl, &eigs, &poles)
    }
}
