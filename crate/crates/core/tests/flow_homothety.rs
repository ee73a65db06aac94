use std::f64::consts::TAU;

use csf_core::ode::Tolerances;
use csf_core::{
    area_variation_check, closed_shrinker, closure_scan, curvature_vectors, evolve, hausdorff, homothety_rescaling,
    homothety_scale, length_variation_check, rescaled_flow_area, ClosureSettings, FlowSettings, FlowStatus,
    PlanarSettings, PolyCurve, Vector,
};

fn ellipse(n: usize, a: f64, b: f64) -> PolyCurve<f64> {
    let v = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            Vector::new(vec![a * t.cos(), b * t.sin()]).unwrap()
        })
        .collect();
    PolyCurve::new(v, true).unwrap()
}

fn circle(n: usize) -> PolyCurve<f64> {
    ellipse(n, 1.0, 1.0)
}

fn mean_radius(c: &PolyCurve<f64>) -> f64 {
    let o = c.centroid();
    c.vertices().iter().map(|p| p.distance(&o)).sum::<f64>() / c.len() as f64
}

fn snapshots(iv: f64) -> FlowSettings<f64> {
    FlowSettings {
        snapshot_interval: Some(iv),
        ..FlowSettings::default()
    }
}

#[test]
fn circle_radius_follows_homothety() {
    let run = evolve(&circle(256), 0.4, &snapshots(0.05)).unwrap();
    assert_eq!(run.status, FlowStatus::Completed);
    for s in &run.snapshots {
        let exact = homothety_scale(s.time).unwrap();
        let err = (mean_radius(&s.curve) - exact).abs() / exact;
        assert!(err <= 1e-3, "t = {}: {err}", s.time);
    }
}

#[test]
fn radius_error_is_second_order_in_vertex_count() {
    let err = |n| {
        let run = evolve(&circle(n), 0.25, &FlowSettings::default()).unwrap();
        (mean_radius(run.final_curve()) - 0.5f64.sqrt()).abs()
    };
    let (coarse, fine) = (err(128), err(256));
    assert!(coarse / fine >= 3.5, "{coarse} / {fine}");
}

#[test]
fn circle_goes_extinct_near_one_half() {
    let run = evolve(&circle(256), 1.0, &FlowSettings::default()).unwrap();
    assert_eq!(run.status, FlowStatus::Extinct);
    assert!((run.final_time() - 0.5).abs() <= 0.02, "{}", run.final_time());
}

#[test]
fn rescaled_circle_keeps_its_area() {
    let run = evolve(&circle(256), 0.4, &FlowSettings::default()).unwrap();
    let areas = rescaled_flow_area(&run, homothety_rescaling).unwrap();
    let a0 = areas[0].1;
    for (t, a) in areas {
        assert!((a - a0).abs() <= 5e-3 * a0, "t = {t}");
    }
}

#[test]
fn ellipse_shortens_and_rounds_off() {
    let run = evolve(&ellipse(200, 2.0, 1.0), 0.5, &FlowSettings::default()).unwrap();
    assert_eq!(run.status, FlowStatus::Completed);
    assert!(run.lengths.windows(2).all(|w| w[1] < w[0]));
    let areas = run.areas.as_ref().unwrap();
    // Enclosed area decreases at the constant rate 2 pi.
    let rate = (areas[0] - areas[areas.len() - 1]) / run.final_time();
    assert!((rate - TAU).abs() <= 1e-2 * TAU, "{rate}");
}

#[test]
fn first_variations_on_an_ellipse() {
    let c = ellipse(800, 1.5, 0.8);
    let kappa = curvature_vectors(&c);
    let (num, form) = length_variation_check(&c, &kappa).unwrap();
    assert!((num - form).abs() <= 1e-3 * form.abs(), "{num} {form}");
    let (num, form) = area_variation_check(&c, &kappa).unwrap();
    assert!((num - form).abs() <= 1e-3 * form.abs(), "{num} {form}");
}

#[test]
fn abresch_langer_curve_shrinks_homothetically() {
    let cs = ClosureSettings::new(6, PlanarSettings::with_tolerances(Tolerances::new(1e-11, 1e-13)));
    let scan = closure_scan(0.05, 0.95, 12, &cs).unwrap();
    let (_, polar) = closed_shrinker(2, 3, &scan, &cs.planar, 4001).unwrap();
    let start = PolyCurve::from_points(polar.samples.positions().to_vec(), true)
        .unwrap()
        .resample(512)
        .unwrap();
    let run = evolve(&start, 0.3, &snapshots(0.1)).unwrap();
    assert_eq!(run.status, FlowStatus::Completed);
    let diam = start.diameter();
    for s in &run.snapshots {
        let expected = start.scaled(homothety_scale(s.time).unwrap());
        let d = hausdorff(&s.curve, &expected);
        assert!(d <= 1e-2 * diam, "t = {}: {d}", s.time);
    }
}
