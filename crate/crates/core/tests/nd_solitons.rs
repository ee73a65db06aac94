use csf_core::{
    fit_plane, fit_plane_points, integrate_soliton, spherical_residuals, triple_derivative_check,
    verify_planarity, Curve, SolitonKind, SolitonSpec, Vector,
};
use rand::{rngs::StdRng, Rng, SeedableRng};

fn random_unit(rng: &mut StdRng, n: usize) -> Vector {
    loop {
        let v = Vector::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        if v.norm() > 0.1 {
            return v.normalized().unwrap();
        }
    }
}

fn random_spec(rng: &mut StdRng, kind: SolitonKind, n: usize) -> SolitonSpec<f64> {
    let p0 = Vector::new((0..n).map(|_| rng.gen_range(-1.2..1.2)).collect()).unwrap();
    let v0 = random_unit(rng, n);
    let span = match kind {
        SolitonKind::Shrinker => 8.0,
        SolitonKind::Expander => 2.0,
    };
    SolitonSpec::new(kind, p0, v0, span).unwrap()
}

fn check_planar(c: &Curve, kind: SolitonKind) {
    let fit = fit_plane(c).unwrap();
    assert!(fit.max_residual <= 1e-7 * (1.0 + c.diameter()), "plane residual {}", fit.max_residual);
    let rep = verify_planarity(c, kind).unwrap();
    assert!(rep.v_drift <= 1e-7, "{kind:?} drift {}", rep.v_drift);
    assert!(rep.spanned_by_initial <= 1e-7, "span distance {}", rep.spanned_by_initial);
}

#[test]
fn random_shrinkers_in_r3_are_planar() {
    let mut rng = StdRng::seed_from_u64(2024);
    for _ in 0..20 {
        let spec = random_spec(&mut rng, SolitonKind::Shrinker, 3);
        check_planar(&integrate_soliton(&spec).unwrap(), SolitonKind::Shrinker);
    }
}

#[test]
fn random_expanders_in_r3_are_planar() {
    let mut rng = StdRng::seed_from_u64(99);
    for _ in 0..20 {
        let spec = random_spec(&mut rng, SolitonKind::Expander, 3);
        check_planar(&integrate_soliton(&spec).unwrap(), SolitonKind::Expander);
    }
}

#[test]
fn higher_dimensions_stay_in_the_initial_plane() {
    let mut rng = StdRng::seed_from_u64(3);
    for n in [4, 6] {
        let spec = random_spec(&mut rng, SolitonKind::Shrinker, n);
        let c = integrate_soliton(&spec).unwrap();
        assert!(verify_planarity(&c, SolitonKind::Shrinker).unwrap().spanned_by_initial <= 1e-7);
    }
}

#[test]
fn unit_speed_is_conserved() {
    let mut rng = StdRng::seed_from_u64(8);
    for kind in [SolitonKind::Shrinker, SolitonKind::Expander] {
        for _ in 0..5 {
            let c = integrate_soliton(&random_spec(&mut rng, kind, 3)).unwrap();
            let d = c.d1().iter().fold(0.0f64, |m, v| m.max((v.norm() - 1.0).abs()));
            assert!(d <= 1e-8, "{kind:?} speed defect {d}");
        }
    }
}

#[test]
fn combinations_of_rs_solutions_keep_v_constant() {
    let mut rng = StdRng::seed_from_u64(21);
    let c = integrate_soliton(&random_spec(&mut rng, SolitonKind::Shrinker, 3)).unwrap();
    let rep = verify_planarity(&c, SolitonKind::Shrinker).unwrap();
    let (a, b) = (0.37, -1.9);
    let (r1, r2) = (&rep.rs_solutions[0], &rep.rs_solutions[1]);
    let v = |i: usize| {
        let r = a * r1.r[i] + b * r2.r[i];
        let s = a * r1.s[i] + b * r2.s[i];
        c.d1()[i].clone() * r + c.d2()[i].clone() * s
    };
    let v0 = v(0);
    let drift = (0..c.len()).fold(0.0f64, |m, i| m.max(v(i).distance(&v0)));
    assert!(drift <= 1e-7);
}

#[test]
fn lifted_planar_shrinker_satisfies_third_derivative_identity() {
    use csf_core::{reconstruct_shrinker, solve_alpha_shrinker, Orientation, PlanarSettings};
    let a = solve_alpha_shrinker(0.6, 0.0, 9.0, &PlanarSettings::default()).unwrap();
    let c = reconstruct_shrinker(&a, 0.0, Orientation::Positive, 2001).unwrap();
    let lifted = c.samples.embed(3);
    assert!(triple_derivative_check(&lifted, SolitonKind::Shrinker).unwrap().max <= 1e-5);
}

#[test]
fn helix_is_not_planar() {
    let k = 1.0 / 2f64.sqrt();
    let pts: Vec<Vector> = (0..400)
        .map(|i| {
            let t = 0.05 * i as f64;
            Vector::new(vec![(k * t).cos(), (k * t).sin(), k * t]).unwrap()
        })
        .collect();
    assert!(fit_plane_points(&pts).unwrap().max_residual > 0.1);
}

#[test]
fn tilted_shrinker_spherical_residuals() {
    let mut rng = StdRng::seed_from_u64(77);
    // Generic data: the plane through the origin is tilted against every axis.
    let spec = SolitonSpec::new(
        SolitonKind::Shrinker,
        Vector::new(vec![0.4, -0.5, 0.3]).unwrap(),
        random_unit(&mut rng, 3),
        10.0,
    )
    .unwrap();
    let c = integrate_soliton(&spec).unwrap();
    let s = spherical_residuals(&c).unwrap();
    for r in [s.res_radial, s.res_theta, s.res_phi, s.res_speed] {
        assert!(r <= 1e-6, "{s:?}");
    }
}
