use igc_core::linalg::eigenvalues;
use igc_core::vehicle::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn design_trim(cfg: &AeroConfig) -> TrimPoint {
    trim_solve(TrimTargets::default(), cfg, &TrimOptions::default()).unwrap()
}

/// Same airframe with no air and no gravity, so nothing but inertia acts.
fn vacuum() -> AeroConfig {
    AeroConfig {
        air_density: 0.0,
        gravity: 0.0,
        coupling: CouplingCoeffs::none(),
        ..AeroConfig::default()
    }
}

fn rk4(s: &RigidBodyState, c: &Controls, cfg: &AeroConfig, dt: f64) -> RigidBodyState {
    let f = |x: &StateVector| derivative(&RigidBodyState::from_vector(x), c, cfg).unwrap().to_vector();
    let x = s.to_vector();
    let k1 = f(&x);
    let k2 = f(&(x + k1 * (0.5 * dt)));
    let k3 = f(&(x + k2 * (0.5 * dt)));
    let k4 = f(&(x + k3 * dt));
    RigidBodyState::from_vector(&(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)))
}

fn state_strategy() -> impl Strategy<Value = RigidBodyState> {
    (
        (4.0..12.0f64, -2.0..2.0f64, -2.0..2.0f64),
        (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64),
        (-1.5..1.5f64, -1.2..1.2f64, -3.0..3.0f64),
    )
        .prop_map(|((u, v, w), (p, q, r), (phi, theta, psi))| RigidBodyState {
            u,
            v,
            w,
            p,
            q,
            r,
            phi,
            theta,
            psi,
            ..RigidBodyState::default()
        })
}

#[test]
fn side_force_examples() {
    let cfg = AeroConfig::default();
    assert_eq!(side_force(0.0, 0.0, 0.0, 0.0, 8.0, &cfg).unwrap(), 0.0);
    assert!((cfg.dynamic_pressure(8.0) - 39.2).abs() < 1e-12);
    let only_beta = AeroConfig {
        lateral: LateralCoeffs {
            cy_beta: -0.5,
            cy_p: 0.0,
            cy_r: 0.0,
            cy_dr: 0.0,
            ..cfg.lateral
        },
        ..cfg.clone()
    };
    let f = side_force(0.1, 0.3, -0.2, 0.1, 8.0, &only_beta).unwrap();
    assert!((f + 0.03234).abs() < 1e-12, "{f}");
    assert!(side_force(0.1, 0.0, 0.0, 0.0, 0.0, &cfg).is_err());
}

#[test]
fn heading_rate_examples() {
    let s = RigidBodyState {
        r: 1.0,
        ..Default::default()
    };
    assert_eq!(heading_rate(&s).unwrap(), 1.0);
    let s = RigidBodyState {
        phi: std::f64::consts::FRAC_PI_2,
        q: 1.0,
        ..Default::default()
    };
    assert!((heading_rate(&s).unwrap() - 1.0).abs() < 1e-15);
    let s = RigidBodyState {
        theta: 86f64.to_radians(),
        u: 8.0,
        ..Default::default()
    };
    assert!(heading_rate(&s).is_err());
}

#[test]
fn trim_holds_the_commanded_condition() {
    let cfg = AeroConfig::default();
    let tp = design_trim(&cfg);
    assert!(tp.residual < 1e-8);
    let d = derivative(&tp.state, &tp.controls, &cfg).unwrap();
    let acc = [d.u, d.v, d.w, d.p, d.q, d.r];
    assert!(acc.iter().map(|a| a * a).sum::<f64>().sqrt() <= 1e-8);
    assert!((d.psi - 0.8).abs() < 1e-8);
    assert!((d.h - 1.0).abs() < 1e-8);
    assert!((tp.state.airspeed() - 8.0).abs() < 1e-12);
    // same order of magnitude as the published initial condition
    // (α = 0.2286 rad, β = −0.0532 rad); the sideslip sign depends on the
    // yaw coupling of the coefficient set
    let (alpha, beta) = (tp.state.alpha(), tp.state.beta());
    assert!(alpha > 0.05 && alpha < 0.5, "alpha {alpha}");
    assert!(beta.abs() > 0.005 && beta.abs() < 0.2, "beta {beta}");
}

#[test]
fn symmetric_level_trim_has_no_sideslip_or_bank() {
    let cfg = AeroConfig::default().decoupled();
    let tp = trim_solve(TrimTargets::level(8.0), &cfg, &TrimOptions::default()).unwrap();
    assert!(tp.state.v.abs() < 1e-9 && tp.state.phi.abs() < 1e-9);
}

#[test]
fn unreachable_trim_reports_failure() {
    let cfg = AeroConfig::default();
    let opts = TrimOptions {
        max_iterations: 100,
        ..TrimOptions::default()
    };
    let err = trim_solve(
        TrimTargets {
            airspeed: 8.0,
            turn_rate: 0.0,
            climb_rate: 6.0,
        },
        &cfg,
        &opts,
    );
    assert!(err.is_err());
}

#[test]
fn linearization_step_halving_converges_quadratically() {
    let cfg = AeroConfig::default();
    let tp = design_trim(&cfg);
    let a1 = linearize_with_step(&tp, &cfg, 4e-3).unwrap();
    let a2 = linearize_with_step(&tp, &cfg, 2e-3).unwrap();
    let a4 = linearize_with_step(&tp, &cfg, 1e-3).unwrap();
    let e1 = (&a1.a - &a2.a).amax();
    let e2 = (&a2.a - &a4.a).amax();
    // central differences: the error shrinks fourfold per halving
    let ratio = e1 / e2;
    assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    let fine = linearize(&tp, &cfg).unwrap();
    assert!((&fine.a - &a4.a).amax() < 2.0 * e2);
}

#[test]
fn linear_model_predicts_small_perturbations() {
    let cfg = AeroConfig::default();
    let tp = design_trim(&cfg);
    let lin = linearize(&tp, &cfg).unwrap();
    let dir_x = DVector::from_column_slice(&[0.3, -0.2, 0.5, 0.1, 0.0, 0.4, -0.6, 0.2, 0.3]);
    let dir_u = DVector::from_column_slice(&[0.2, -0.3, 0.1]);
    let (dt, steps) = (0.002, 10);
    let err = |eps: f64| {
        let mut base = tp.state;
        let mut pert = tp.state.to_vector();
        for (k, &i) in [0usize, 2, 4, 7, 11, 1, 3, 5, 6].iter().enumerate() {
            pert[i] += eps * dir_x[k];
        }
        let mut pert = RigidBodyState::from_vector(&pert);
        let u0 = tp.controls.to_array();
        let cu = Controls::from_array([0, 1, 2].map(|j| u0[j] + eps * dir_u[j]));
        // linear propagation by RK4 on ẋ = A x + B u
        let f = |x: &DVector<f64>| &lin.a * x + &lin.b * (&dir_u * eps);
        let mut x = &dir_x * eps;
        for _ in 0..steps {
            base = rk4(&base, &tp.controls, &cfg, dt);
            pert = rk4(&pert, &cu, &cfg, dt);
            let k1 = f(&x);
            let k2 = f(&(&x + &k1 * (0.5 * dt)));
            let k3 = f(&(&x + &k2 * (0.5 * dt)));
            let k4 = f(&(&x + &k3 * dt));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        let a = linear_state(&pert);
        let b = linear_state(&base);
        let nonlinear = DVector::from_iterator(9, (0..9).map(|i| a[i] - b[i]));
        (nonlinear - x).amax()
    };
    let (e1, e2) = (err(1e-3), err(5e-4));
    assert!(e1 < 1e-5, "{e1}");
    let ratio = e1 / e2;
    assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
}

#[test]
fn default_vehicle_has_an_unstable_spiral() {
    let cfg = AeroConfig::default();
    let lin = linearize(&design_trim(&cfg), &cfg).unwrap();
    let unstable: Vec<_> = eigenvalues(&lin.a)
        .into_iter()
        .filter(|l| l.re > 1e-6 && l.im.abs() < 1e-9)
        .collect();
    assert_eq!(unstable.len(), 1, "{unstable:?}");
}

#[test]
fn coupling_spectrum_examples() {
    let cfg = AeroConfig::default();
    let lin = linearize(&design_trim(&cfg), &cfg).unwrap();
    assert!(!coupling_spectrum_check(&lin, 1e-6).union_holds);

    let mut scaled = lin.clone();
    for (i, j) in (0..9).flat_map(|i| (0..9).map(move |j| (i, j))) {
        if (i < LONGITUDINAL_DIM) != (j < LONGITUDINAL_DIM) {
            scaled.a[(i, j)] *= 1e-12;
        }
    }
    assert!(coupling_spectrum_check(&scaled, 1e-6).union_holds);

    let dec = cfg.decoupled();
    let lin = linearize(
        &trim_solve(TrimTargets::level(8.0), &dec, &TrimOptions::default()).unwrap(),
        &dec,
    )
    .unwrap();
    assert!(lin.a12().amax() < 1e-12 && lin.a21().amax() < 1e-12);
    assert!(coupling_spectrum_check(&lin, 1e-6).union_holds);
}

#[test]
fn block_partition_follows_the_state_lists() {
    assert_eq!(&LINEAR_STATES[..LONGITUDINAL_DIM], &["u", "w", "q", "theta", "h"]);
    assert_eq!(&LINEAR_STATES[LONGITUDINAL_DIM..], &["v", "p", "r", "phi"]);
    let s = RigidBodyState {
        u: 1.0,
        v: 2.0,
        w: 3.0,
        p: 4.0,
        q: 5.0,
        r: 6.0,
        phi: 7.0,
        theta: 8.0,
        psi: 9.0,
        x: 10.0,
        y: 11.0,
        h: 12.0,
    };
    assert_eq!(linear_state(&s), [1.0, 3.0, 5.0, 8.0, 12.0, 2.0, 4.0, 6.0, 7.0]);
    let cfg = AeroConfig::default();
    let lin = linearize(&design_trim(&cfg), &cfg).unwrap();
    let blocks = [
        (lin.a11(), 0, 0),
        (lin.a12(), 0, 5),
        (lin.a21(), 5, 0),
        (lin.a22(), 5, 5),
    ];
    for (blk, r0, c0) in blocks {
        let want: DMatrix<f64> = lin.a.view((r0, c0), blk.shape()).into_owned();
        assert_eq!(blk, want);
    }
}

#[test]
fn servo_step_response_overshoot() {
    let params = ServoParams::default();
    let lim = (-1.0, 1.0);
    let mut s = ServoState::default();
    let mut peak: f64 = 0.0;
    for _ in 0..1000 {
        s = servo_step(0.1, s, &params, lim, 0.001);
        peak = peak.max(s.deflection);
    }
    let z = params.damping;
    let want = (-std::f64::consts::PI * z / (1.0 - z * z).sqrt()).exp();
    assert!((want - 0.0309).abs() < 1e-4);
    assert!(((peak - 0.1) / 0.1 - want).abs() < 1e-4, "{peak}");
    assert!((s.deflection - 0.1).abs() < 1e-9);

    let cfg = AeroConfig::default();
    let mut s = ServoState::default();
    for _ in 0..2000 {
        s = servo_step(-40f64.to_radians(), s, &params, cfg.limits.elevator, 0.001);
    }
    assert!((s.deflection.to_degrees() + 35.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn heading_rate_matches_a_force_free_trajectory(s in state_strategy()) {
        let cfg = vacuum();
        let c = Controls::new(0.0, 0.0, 0.0);
        let dt = 1e-5;
        let next = rk4(&s, &c, &cfg, dt);
        let fd = (next.psi - s.psi) / dt;
        let exact = heading_rate(&s).unwrap();
        prop_assert!((fd - exact).abs() < 1e-3 * (1.0 + exact.abs()), "{fd} vs {exact}");
        let psi_dot = derivative(&s, &c, &cfg).unwrap().psi;
        prop_assert!((psi_dot - exact).abs() <= 1e-14 * (1.0 + exact.abs()), "{psi_dot} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn speed_is_conserved_without_forces(s in state_strategy()) {
        let cfg = vacuum();
        let c = Controls::new(0.0, 0.0, 0.0);
        let mut x = s;
        for _ in 0..500 {
            x = rk4(&x, &c, &cfg, 0.002);
            if x.theta.abs() > 1.3 { break; }
        }
        prop_assert!((x.airspeed() - s.airspeed()).abs() < 1e-9 * s.airspeed());
    }

    #[test]
    fn actuator_outputs_never_leave_their_ranges(
        cmds in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64, -1.0..2.0f64), 1..60)
    ) {
        let cfg = AeroConfig::default();
        let tp = trim_solve(TrimTargets::level(8.0), &cfg, &TrimOptions::default()).unwrap();
        let mut body = tp.state;
        let mut act = ActuatorState::at_rest(tp.controls);
        let lim = cfg.limits;
        for (de, dr, dt) in cmds {
            let cmd = Controls::new(de, dr, dt);
            let clamped = clamp_controls(&cmd, &cfg);
            prop_assert!(clamped.elevator >= lim.elevator.0 && clamped.elevator <= lim.elevator.1);
            for _ in 0..10 {
                match propagate(&body, &act, &cmd, &cfg, 0.002) {
                    Ok((b, a)) => { body = b; act = a; }
                    Err(_) => return Ok(()),
                }
                let o = act.outputs();
                prop_assert!(o.elevator >= lim.elevator.0 && o.elevator <= lim.elevator.1);
                prop_assert!(o.rudder >= lim.rudder.0 && o.rudder <= lim.rudder.1);
                prop_assert!(o.thrust >= lim.thrust.0 && o.thrust <= lim.thrust.1);
            }
        }
    }
}
