use igc_core::igc::*;
use igc_core::linalg::{eigenvalues, spectral_radius};
use igc_core::sof::*;
use igc_core::vehicle::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn default_discrete() -> DiscreteModel {
    let cfg = AeroConfig::default();
    let trim = trim_solve(TrimTargets::default(), &cfg, &TrimOptions::default()).unwrap();
    let lin = linearize(&trim, &cfg).unwrap();
    discretize(&augment(&lin, &trim, &cfg, 3.0).unwrap(), 0.02).unwrap()
}

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// Negative definiteness by Cholesky of `−M − margin·I`, independent of the
/// eigenvalue routines used by the certificate.
fn negative_definite(m: &DMatrix<f64>, margin: f64) -> bool {
    let n = m.nrows();
    let sym = -(m + m.transpose()) * 0.5 - DMatrix::identity(n, n) * margin;
    sym.cholesky().is_some()
}

#[test]
fn plant_dimensions_and_pass_through_weight() {
    let dm = default_discrete();
    let w = Weights {
        w1_gain: 0.0,
        w2_gain: 0.0,
        w3_gain: 1.0,
        ..Weights::default()
    };
    let gp = build_generalized_plant(&dm, &w).unwrap();
    assert_eq!(gp.states(), 15 + 2 + 7);
    assert_eq!(gp.c.nrows(), 7);
    // Z3 = U exactly, and the other performance outputs vanish
    assert_eq!(gp.d31, DMatrix::identity(3, 3));
    assert!(gp.c3.amax() == 0.0 && gp.d32.amax() == 0.0);
    assert!(gp.c1.amax() == 0.0 && gp.c2.amax() == 0.0);
    assert!(gp.d11.amax() == 0.0 && gp.d21.amax() == 0.0);

    let bad = Weights {
        w1_corner: -1.0,
        ..Weights::default()
    };
    assert!(build_generalized_plant(&dm, &bad).is_err());
}

/// DC gain from the references to the W1 output, through the full weighted
/// plant, against `W1(1)·(I − T(1))` with `T` the reference-to-tracked-output
/// map of the bare fifteen-state loop.
#[test]
fn low_pass_path_at_dc_is_weighted_sensitivity() {
    let dm = default_discrete();
    let w = Weights::default();
    let gp = build_generalized_plant(&dm, &w).unwrap();
    let f = published_gain().f;

    let n = gp.states();
    let acl = &gp.a + &gp.b_u * &f * &gp.c;
    let bcl = &gp.b_w + &gp.b_u * &f * &gp.d_yw;
    let inv = (DMatrix::identity(n, n) - acl).try_inverse().unwrap();
    let z1 = &gp.c1 * &inv * &bcl + &gp.d12;

    // bare loop: u = F·(M·C·x + [r_h, r_x1, 0…])
    let k = &f * feedback_map();
    let a15 = &dm.a + &dm.b * &k * &dm.c;
    let mut inject = DMatrix::zeros(7, 2);
    inject[(0, 0)] = 1.0;
    inject[(1, 1)] = 1.0;
    let b15 = &dm.b * &f * inject;
    let inv15 = (DMatrix::identity(15, 15) - a15).try_inverse().unwrap();
    let mut tracked = DMatrix::zeros(2, 15);
    tracked[(0, 4)] = 1.0;
    tracked[(1, 9)] = 1.0;
    let t = &tracked * inv15 * b15;
    let want = (DMatrix::identity(2, 2) - t) * w.w1_gain;
    let scale = want.amax().max(1.0);
    assert!((&z1 - &want).amax() < 1e-8 * scale, "{z1} vs {want}");
}

#[test]
fn scalar_lmi_examples() {
    let p = SofProblem::new(scalar(0.5), scalar(0.0), scalar(1.0));
    let block = lmi_block(&p, &scalar(1.0), &scalar(1.0), &scalar(3.7));
    assert_eq!(block, DMatrix::from_row_slice(2, 2, &[-1.0, -0.5, -0.5, -1.0]));
    assert!((lmi_residual(&p, &scalar(1.0), &scalar(1.0), &scalar(3.7)) + 0.5).abs() < 1e-12);
    let cert = LmiCertificate::verify(&p, &scalar(1.0), &scalar(1.0), &scalar(0.0)).unwrap();
    assert!(cert.spectral_radius < 1.0);

    // unstable and uncontrollable: no (N, P) makes the block negative
    let p = SofProblem::new(scalar(2.0), scalar(0.0), scalar(1.0));
    for i in -40..=40 {
        for j in 1..=80 {
            let (nv, pv) = (i as f64 * 0.25, j as f64 * 0.25);
            assert!(lmi_residual(&p, &scalar(nv), &scalar(pv), &scalar(0.0)) >= 0.0);
        }
    }
}

#[test]
fn stable_plant_is_certified() {
    let a = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, -0.1, 0.7, 0.3, 0.0, 0.0, -0.4]);
    let p = SofProblem::new(
        a,
        DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 0.5]),
        DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]),
    );
    let n = slack_from_gain(&p, &DMatrix::zeros(1, 1)).unwrap();
    let report = solve_sof(&p, &n, &SolverOptions::default());
    let sol = report.solution.expect("certified");
    assert!(sol.certificate.holds());
    assert!(negative_definite(
        &lmi_block(&p, &sol.certificate.n, &sol.certificate.p, &sol.f),
        0.0
    ));
    assert!(spectral_radius(&p.closed_loop(&sol.f)) < 1.0);
}

/// `A = A_s − B·F₀·C` with `A_s` Schur stable, so `F₀` is a known
/// stabilizing output feedback.
fn constructed_plant(rng: &mut ChaCha8Rng) -> (SofProblem, DMatrix<f64>) {
    let n = 4;
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let poles = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(-0.6..0.6)));
    let a_s = &q * poles * q.transpose();
    let b = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
    let c = DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0));
    let f0 = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-0.8..0.8));
    let a = &a_s - &b * &f0 * &c;
    (SofProblem::new(a, b, c), f0)
}

#[test]
fn constructed_stabilizable_plants_are_solved() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = GaConfig {
        population: 30,
        generations: 40,
        mutation_scale: 0.5,
        ..GaConfig::default()
    };
    let mut tried = 0;
    while tried < 5 {
        let (p, f0) = constructed_plant(&mut rng);
        if spectral_radius(&p.a) < 1.05 {
            continue;
        }
        tried += 1;
        assert!(spectral_radius(&p.closed_loop(&f0)) < 1.0);
        let found = search_problem(&p, &cfg).expect("stabilizing gain exists");
        assert!(found.certificate.holds());
        assert!(spectral_radius(&p.closed_loop(&found.f)) < 1.0);
    }
}

#[test]
fn unstabilizable_plant_is_rejected() {
    // the mode at 1.5 is unreachable: PBH rank of [A − 1.5I, B] is 2 < 3
    let a = DMatrix::from_row_slice(3, 3, &[1.5, 0.0, 0.0, 0.0, 0.4, 0.2, 0.0, 0.1, 0.3]);
    let b = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 1.0]);
    let c = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
    let mut pbh = DMatrix::zeros(3, 4);
    pbh.view_mut((0, 0), (3, 3))
        .copy_from(&(&a - DMatrix::identity(3, 3) * 1.5));
    pbh.view_mut((0, 3), (3, 1)).copy_from(&b);
    assert_eq!(pbh.rank(1e-12), 2);
    let p = SofProblem::new(a, b, c);
    let report = solve_sof(&p, &DMatrix::identity(3, 3), &SolverOptions::default());
    assert!(report.solution.is_none());
    assert!(report.best_residual >= 0.0);
    let cfg = GaConfig {
        generations: 10,
        ..GaConfig::default()
    };
    assert!(search_problem(&p, &cfg).is_err());
}

#[test]
fn search_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (p, _) = constructed_plant(&mut rng);
    let cfg = GaConfig {
        population: 16,
        generations: 15,
        mutation_scale: 0.5,
        ..GaConfig::default()
    };
    let a = search_problem(&p, &cfg).unwrap();
    let b = search_problem(&p, &cfg).unwrap();
    let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.f), bits(&b.f));
    assert_eq!(bits(&a.certificate.p), bits(&b.certificate.p));
}

#[test]
fn published_gain_fixture() {
    let g = published_gain();
    assert_eq!(g.f.shape(), (3, 7));
    assert_eq!(g.fd1()[(2, 1)], 36.54);
    assert_eq!(g.fd2()[(2, 1)], -19.1);
    assert_eq!(g.fd1()[(1, 0)], 0.0);
    assert_eq!(g.f[(0, 0)], -0.0060);
    assert_eq!(g.f[(0, 6)], -0.1008);
}

#[test]
fn zero_gain_reproduces_the_open_loop_modes() {
    let cfg = AeroConfig::default();
    let trim = trim_solve(TrimTargets::default(), &cfg, &TrimOptions::default()).unwrap();
    let lin = linearize(&trim, &cfg).unwrap();
    let model = augment(&lin, &trim, &cfg, 3.0).unwrap();
    let dm = discretize(&model, 0.02).unwrap();
    let open = open_loop_modes(&model);
    let closed = closed_loop_modes(&dm, &SofGain::new(DMatrix::zeros(3, 7)));
    assert_eq!(open.modes.len(), closed.modes.len());
    for (o, c) in open.modes.iter().zip(&closed.modes) {
        assert_eq!(o.kind, c.kind);
        assert!((o.pole - c.pole).norm() < 1e-6, "{} vs {}", o.pole, c.pole);
    }
    let eigs = eigenvalues(&dm.a);
    assert!(eigs.iter().all(|z| z.norm() > 0.0));
}
