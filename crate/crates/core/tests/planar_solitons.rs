use csf_core::ode::Tolerances;
use csf_core::{
    arc_length_defect, expander_residual, integrate_soliton, reconstruct_expander, reconstruct_shrinker,
    shrinker_residual, solve_alpha_expander, solve_alpha_shrinker, solve_alpha_shrinker_period,
    unit_speed_polar_residual, Orientation, PlanarSettings, SolitonKind, SolitonSpec, Vector,
};
use rand::{rngs::StdRng, Rng, SeedableRng};

fn settings() -> PlanarSettings<f64> {
    PlanarSettings::default()
}

#[test]
fn shrinker_minimum_is_initial_value_over_five_periods() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut alphas: Vec<f64> = (0..49).map(|_| rng.gen_range(0.05..0.95)).collect();
    alphas.push(0.6);
    for a0 in alphas {
        let one = solve_alpha_shrinker_period(a0, 0.0, &settings()).unwrap();
        let five = solve_alpha_shrinker(a0, 0.0, 5.0 * one.period.unwrap(), &settings()).unwrap();
        assert!((five.min_alpha() - a0).abs() <= 1e-6, "alpha0 = {a0}: min {}", five.min_alpha());
    }
}

#[test]
fn alpha_is_symmetric_about_critical_times() {
    let a = solve_alpha_shrinker(0.3, 0.0, 25.0, &settings()).unwrap();
    assert!(a.critical_times.len() >= 4);
    let (lo, hi) = a.span();
    for &tc in &a.critical_times {
        for k in 1..=20 {
            let dt = 0.1 * k as f64;
            if tc - dt < lo || tc + dt > hi {
                continue;
            }
            let d = a.alpha(tc + dt).unwrap() - a.alpha(tc - dt).unwrap();
            assert!(d.abs() <= 1e-7, "asymmetry {d} at {tc} +- {dt}");
        }
    }
}

fn fd_alpha_residual(kind: SolitonKind, pos: &[Vector], h: f64) -> f64 {
    let alpha: Vec<f64> = pos.iter().map(|p| p.norm_squared()).collect();
    let sigma = if kind == SolitonKind::Shrinker { 1.0 } else { -1.0 };
    let mut worst: f64 = 0.0;
    for i in 2..alpha.len() - 2 {
        let d1 = (alpha[i - 2] - 8.0 * alpha[i - 1] + 8.0 * alpha[i + 1] - alpha[i + 2]) / (12.0 * h);
        let d2 = (-alpha[i - 2] + 16.0 * alpha[i - 1] - 30.0 * alpha[i] + 16.0 * alpha[i + 1] - alpha[i + 2])
            / (12.0 * h * h);
        worst = worst.max((d2 - sigma * (0.5 * d1 * d1 - 2.0 * alpha[i]) - 2.0).abs());
    }
    worst
}

#[test]
fn reconstruction_round_trips_through_squared_norm() {
    let one = solve_alpha_shrinker_period(0.6, 0.0, &settings()).unwrap();
    let c = reconstruct_shrinker(&one, 0.0, Orientation::Positive, 2001).unwrap();
    let h = c.samples.uniform_spacing(1e-9).unwrap();
    assert!(fd_alpha_residual(SolitonKind::Shrinker, c.samples.positions(), h) <= 1e-5);
    assert!(arc_length_defect(&c.samples) <= 1e-7);
    assert!(unit_speed_polar_residual(&c).unwrap() <= 1e-8);
    assert!(shrinker_residual(&c.samples).max <= 1e-7);
}

#[test]
fn direct_integration_satisfies_alpha_equation() {
    // Off-centre initial data with <p0, v0> != 0.
    let th: f64 = 1.2;
    let spec = SolitonSpec::new(
        SolitonKind::Shrinker,
        Vector::new(vec![0.5, 0.3]).unwrap(),
        Vector::new(vec![th.cos(), th.sin()]).unwrap(),
        8.0,
    )
    .unwrap()
    .with_samples(2001)
    .with_tolerances(Tolerances::new(1e-12, 1e-14));
    let c = integrate_soliton(&spec).unwrap();
    let h = c.uniform_spacing(1e-9).unwrap();
    let r = fd_alpha_residual(SolitonKind::Shrinker, c.positions(), h);
    assert!(r <= 1e-5, "{r}");
}

#[test]
fn direct_and_polar_shrinkers_agree() {
    let one = solve_alpha_shrinker_period(0.6, 0.0, &settings()).unwrap();
    let period = one.period.unwrap();
    let polar = reconstruct_shrinker(&one, 0.0, Orientation::Positive, 1001).unwrap();
    let spec = SolitonSpec::new(
        SolitonKind::Shrinker,
        Vector::new(vec![0.6f64.sqrt(), 0.0]).unwrap(),
        Vector::new(vec![0.0, 1.0]).unwrap(),
        period,
    )
    .unwrap()
    .with_samples(1001);
    let direct = integrate_soliton(&spec).unwrap();
    for (p, q) in polar.samples.positions().iter().zip(direct.positions()) {
        assert!(p.distance(q) <= 1e-6);
    }
}

#[test]
fn expanders_stay_positive_with_minimum_at_start() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..20 {
        let a0: f64 = rng.gen_range(0.05..5.0);
        let a = solve_alpha_expander(a0, 0.0, 10.0, &settings()).unwrap();
        assert!((a.min_alpha() - a0).abs() <= 1e-6);
        assert!(a.solution.nodes().iter().all(|(_, y)| y[0] > 0.0));
    }
}

#[test]
fn reconstructed_expanders_pass_residual() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..8 {
        let a0: f64 = rng.gen_range(0.05..5.0);
        let a = solve_alpha_expander(a0, 0.0, 2.0, &settings()).unwrap();
        let c = reconstruct_expander(&a, 0.0, Orientation::Positive, 801).unwrap();
        assert!(expander_residual(&c.samples).max <= 1e-7, "alpha0 = {a0}");
        assert!(arc_length_defect(&c.samples) <= 1e-7);
        assert!(unit_speed_polar_residual(&c).unwrap() <= 1e-8);
    }
}

#[test]
fn single_precision_pipeline() {
    let s = PlanarSettings::<f32>::with_tolerances(Tolerances::new(1e-5, 1e-6));
    let a = solve_alpha_shrinker(0.6f32, 0.0, 9.0, &s).unwrap();
    let c = reconstruct_shrinker(&a, 0.0, Orientation::Positive, 400).unwrap();
    assert!(shrinker_residual(&c.samples).max <= 1e-4);
    assert!((a.min_alpha() - 0.6).abs() <= 1e-4);
}

#[test]
fn tolerance_refinement_converges() {
    let coarse = PlanarSettings::with_tolerances(Tolerances::new(1e-7, 1e-9));
    let fine = PlanarSettings::with_tolerances(Tolerances::new(1e-12, 1e-14));
    let pc = solve_alpha_shrinker_period(0.6, 0.0, &coarse).unwrap().period.unwrap();
    let pf = solve_alpha_shrinker_period(0.6, 0.0, &fine).unwrap().period.unwrap();
    let pd = solve_alpha_shrinker_period(0.6, 0.0, &settings()).unwrap().period.unwrap();
    assert!((pd - pf).abs() <= (pc - pf).abs().max(1e-12));
    assert!((pd - pf).abs() <= 1e-8);
}
