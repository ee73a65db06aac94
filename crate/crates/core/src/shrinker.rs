//! Planar self-shrinkers (Abresch–Langer curves) and the closed-curve search.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, precondition, Error, Result};
use crate::geometry::{CurveSample, ResidualReport};
use crate::ode::{integrate, IvpProblem};
use crate::planar::{
    alpha_second_derivative, reconstruct, soliton_residual, solve_alpha, theta_from_alpha,
    AlphaSolution, Orientation, PlanarSettings, PolarCurve, SolitonKind,
};
use crate::scalar::Real;

/// Longest span searched for a period before giving up.
pub const MAX_PERIOD_SEARCH: f64 = 500.0;

/// `alpha'' - alpha'^2 / 2 + 2 alpha = 2` on `[0, t_span]` (or `[t_span, 0]` when negative).
pub fn solve_alpha_shrinker<T: Real>(
    alpha0: T,
    dalpha0: T,
    t_span: T,
    settings: &PlanarSettings<T>,
) -> Result<AlphaSolution<T>> {
    let (lo, hi) = if t_span >= T::zero() {
        (T::zero(), t_span)
    } else {
        (t_span, T::zero())
    };
    solve_alpha(SolitonKind::Shrinker, alpha0, dalpha0, lo, hi, settings, false)
}

/// Integrates exactly one period of the shrinker alpha ODE. Fails if no period is found
/// within [`MAX_PERIOD_SEARCH`].
pub fn solve_alpha_shrinker_period<T: Real>(
    alpha0: T,
    dalpha0: T,
    settings: &PlanarSettings<T>,
) -> Result<AlphaSolution<T>> {
    let sol = solve_alpha(
        SolitonKind::Shrinker,
        alpha0,
        dalpha0,
        T::zero(),
        T::lit(MAX_PERIOD_SEARCH),
        settings,
        true,
    )?;
    if sol.period.is_none() {
        return Err(Error::InvalidInput(format!(
            "no period detected for alpha0 = {alpha0}, alpha0' = {dalpha0}"
        )));
    }
    Ok(sol)
}

pub fn reconstruct_shrinker<T: Real>(
    alpha: &AlphaSolution<T>,
    theta0: T,
    orientation: Orientation,
    n_samples: usize,
) -> Result<PolarCurve<T>> {
    if alpha.kind != SolitonKind::Shrinker {
        return Err(invalid("reconstruct_shrinker needs a shrinker alpha solution"));
    }
    reconstruct(alpha, theta0, orientation, n_samples)
}

/// Residual of `gamma'' = <gamma, gamma'> gamma' - gamma`. Expects a unit-speed curve.
pub fn shrinker_residual<T: Real>(curve: &CurveSample<T>) -> ResidualReport<T> {
    soliton_residual(curve, SolitonKind::Shrinker)
}

/// Rotation and closure data of one shrinker orbit with `alpha'(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport<T> {
    pub alpha0: T,
    /// `None` for the circle.
    pub period_t: Option<T>,
    /// `theta(T) - theta(0)` over one period.
    pub delta_theta: Option<T>,
    /// `delta_theta / 2 pi`.
    pub rotation_ratio: Option<T>,
    /// `min_{1 <= q <= q_max} |q delta_theta - 2 pi p|` over integers `p`.
    pub closure_gap: T,
    /// `(p, q)` attaining the gap.
    pub best_pq: Option<(i64, u32)>,
    pub closed: bool,
    /// Distance between start and the point after `q` periods, when it was computed.
    pub endpoint_gap: Option<T>,
}

/// Thresholds for declaring a curve closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureSettings<T> {
    pub planar: PlanarSettings<T>,
    pub q_max: u32,
    pub gap_tol: T,
    /// Endpoint tolerance relative to the curve diameter.
    pub endpoint_tol: T,
}

impl<T: Real> ClosureSettings<T> {
    pub fn new(q_max: u32, planar: PlanarSettings<T>) -> Self {
        Self {
            planar,
            q_max,
            gap_tol: T::lit(1e-6),
            endpoint_tol: T::lit(1e-5),
        }
    }
}

/// Rotation over one period of the shrinker through `(alpha0, 0)`.
pub fn rotation_over_period<T: Real>(alpha0: T, settings: &PlanarSettings<T>) -> Result<(T, T)> {
    let alpha = solve_alpha_shrinker_period(alpha0, T::zero(), settings)?;
    let period = alpha.period.expect("checked by solve_alpha_shrinker_period");
    let theta = theta_from_alpha(&alpha, T::zero(), Orientation::Positive)?;
    Ok((period, theta.theta(period)?))
}

pub fn closure_report<T: Real>(alpha0: T, settings: &ClosureSettings<T>) -> Result<ClosureReport<T>> {
    if alpha0 == T::one() {
        return Ok(ClosureReport {
            alpha0,
            period_t: None,
            delta_theta: None,
            rotation_ratio: None,
            closure_gap: T::zero(),
            best_pq: None,
            closed: true,
            endpoint_gap: Some(T::zero()),
        });
    }
    if settings.q_max == 0 {
        return Err(invalid("q_max must be at least 1"));
    }
    let (period, delta) = rotation_over_period(alpha0, &settings.planar)?;
    let tau = T::PI() + T::PI();
    let mut best = (T::infinity(), 0i64, 1u32);
    for q in 1..=settings.q_max {
        let total = T::from_u32(q).expect("small q") * delta;
        let p = (total / tau).round();
        let gap = (total - p * tau).abs();
        if gap < best.0 {
            best = (gap, p.to_i64().unwrap_or(0), q);
        }
    }
    let (gap, p, q) = best;
    let mut closed = false;
    let mut endpoint_gap = None;
    if gap <= settings.gap_tol {
        let d = endpoint_distance(alpha0, period, q, &settings.planar)?;
        endpoint_gap = Some(d.0);
        closed = d.0 <= settings.endpoint_tol * d.1;
    }
    Ok(ClosureReport {
        alpha0,
        period_t: Some(period),
        delta_theta: Some(delta),
        rotation_ratio: Some(delta / tau),
        closure_gap: gap,
        best_pq: Some((p, q)),
        closed,
        endpoint_gap,
    })
}

/// Integrates the joint `(alpha, alpha', theta)` system over `q` periods and returns the
/// distance from the start point together with the curve diameter bound `2 sqrt(max alpha)`.
fn endpoint_distance<T: Real>(alpha0: T, period: T, q: u32, settings: &PlanarSettings<T>) -> Result<(T, T)> {
    let span = period * T::from_u32(q).expect("small q");
    let rhs = move |_t: T, y: &[T], dy: &mut [T]| {
        dy[0] = y[1];
        dy[1] = alpha_second_derivative(SolitonKind::Shrinker, y[0], y[1]);
        let qv = (T::lit(4.0) * y[0] - y[1] * y[1]).max(T::zero());
        dy[2] = qv.sqrt() / (T::two() * y[0]);
    };
    let problem = IvpProblem::new(T::zero(), vec![alpha0, T::zero(), T::zero()], span, rhs)?;
    let (sol, _) = integrate(&problem, &settings.tol, &[])?;
    let y = sol.final_state();
    let (s, c) = y[2].sin_cos();
    let u = y[0].sqrt();
    let u0 = alpha0.sqrt();
    let dist = ((u * c - u0) * (u * c - u0) + (u * s) * (u * s)).sqrt();
    let amax = sol.states().iter().fold(T::zero(), |m, st| m.max(st[0]));
    Ok((dist, T::two() * amax.sqrt()))
}

/// Closure reports on a uniform grid of `alpha0` values.
#[derive(Debug, Clone)]
pub struct ClosureScan<T> {
    pub alpha0s: Vec<T>,
    pub results: Vec<Result<ClosureReport<T>>>,
    /// `Some(true)` increasing, `Some(false)` decreasing, `None` non-monotone or too little data.
    pub monotone_increasing: Option<bool>,
}

impl<T: Real> ClosureScan<T> {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.is_err()).count()
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone_increasing.is_some()
    }

    fn ratios(&self) -> Vec<(T, T)> {
        self.alpha0s
            .iter()
            .zip(&self.results)
            .filter_map(|(&a, r)| r.as_ref().ok().and_then(|r| r.rotation_ratio).map(|x| (a, x)))
            .collect()
    }
}

/// Evaluates [`closure_report`] on `n_grid` evenly spaced points of `[from, to]`, in parallel.
/// Failed points are recorded and the scan continues.
pub fn closure_scan<T: Real>(
    from: T,
    to: T,
    n_grid: usize,
    settings: &ClosureSettings<T>,
) -> Result<ClosureScan<T>> {
    let margin = T::lit(1e-4);
    if !(from > T::zero() && to < T::one() - margin && from < to) {
        return Err(precondition(format!(
            "scan range must satisfy 0 < from < to <= 1 - 1e-4, got [{from}, {to}]"
        )));
    }
    if n_grid < 2 {
        return Err(invalid("scan needs at least 2 grid points"));
    }
    let alpha0s: Vec<T> = (0..n_grid)
        .map(|i| from + (to - from) * T::from_usize_lossy(i) / T::from_usize_lossy(n_grid - 1))
        .collect();
    let results: Vec<Result<ClosureReport<T>>> = alpha0s
        .par_iter()
        .map(|&a| closure_report(a, settings))
        .collect();
    let mut scan = ClosureScan {
        alpha0s,
        results,
        monotone_increasing: None,
    };
    let ratios = scan.ratios();
    if ratios.len() >= 2 {
        let inc = ratios.windows(2).all(|w| w[1].1 > w[0].1);
        let dec = ratios.windows(2).all(|w| w[1].1 < w[0].1);
        scan.monotone_increasing = if inc {
            Some(true)
        } else if dec {
            Some(false)
        } else {
            None
        };
    }
    Ok(scan)
}

/// Finds `alpha0` whose rotation ratio equals `target` to `1e-10`, bisecting inside the first
/// scan interval that brackets the target.
pub fn find_alpha0_for_ratio<T: Real>(
    target: T,
    scan: &ClosureScan<T>,
    settings: &PlanarSettings<T>,
) -> Result<T> {
    let ratios = scan.ratios();
    let bracket = ratios
        .windows(2)
        .find(|w| (w[0].1 - target) * (w[1].1 - target) <= T::zero())
        .ok_or_else(|| invalid(format!("rotation ratio {target} not bracketed by the scan")))?;
    let (mut lo, mut f_lo) = (bracket[0].0, bracket[0].1 - target);
    let mut hi = bracket[1].0;
    let ratio = |a: T| -> Result<T> {
        let (_, d) = rotation_over_period(a, settings)?;
        Ok(d / (T::PI() + T::PI()))
    };
    let goal = T::lit(1e-10);
    let mut best = (lo, f_lo.abs());
    for _ in 0..200 {
        let mid = lo + (hi - lo) * T::half();
        let f_mid = ratio(mid)? - target;
        if f_mid.abs() < best.1 {
            best = (mid, f_mid.abs());
        }
        if f_mid.abs() <= goal || (hi - lo).abs() <= T::epsilon() * T::lit(4.0) {
            break;
        }
        if f_mid * f_lo <= T::zero() {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    if best.1 > goal {
        return Err(Error::InvalidInput(format!(
            "bisection stalled {:e} away from rotation ratio {target}",
            best.1.to_f64_lossy()
        )));
    }
    Ok(best.0)
}

/// A closed Abresch–Langer curve: `alpha0` tuned to rotation ratio `p/q`, sampled over `q`
/// periods.
pub fn closed_shrinker<T: Real>(
    p: u32,
    q: u32,
    scan: &ClosureScan<T>,
    settings: &PlanarSettings<T>,
    n_samples: usize,
) -> Result<(T, PolarCurve<T>)> {
    let target = T::from_u32(p).expect("small p") / T::from_u32(q).expect("small q");
    let alpha0 = find_alpha0_for_ratio(target, scan, settings)?;
    let one = solve_alpha_shrinker_period(alpha0, T::zero(), settings)?;
    let period = one.period.expect("period detected");
    let span = period * T::from_u32(q).expect("small q");
    let alpha = solve_alpha_shrinker(alpha0, T::zero(), span, settings)?;
    let curve = reconstruct_shrinker(&alpha, T::zero(), Orientation::Positive, n_samples)?;
    Ok((alpha0, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::arc_length_defect;
    use crate::ode::{integrate_fixed, Tolerances};
    use std::f64::consts::{SQRT_2, TAU};

    fn settings() -> PlanarSettings<f64> {
        PlanarSettings::default()
    }

    #[test]
    fn circle_equilibrium() {
        let a = solve_alpha_shrinker(1.0, 0.0, 10.0, &settings()).unwrap();
        assert!(a.period.is_none());
        assert!(a.is_circle());
        for (_, y) in a.solution.nodes() {
            assert_eq!(y[0], 1.0);
            assert_eq!(y[1], 0.0);
        }
        let c = reconstruct_shrinker(&a, 0.0, Orientation::Positive, 64).unwrap();
        for (t, p) in c.samples.params().iter().zip(c.samples.positions()) {
            assert!((p[0] - t.cos()).abs() <= 1e-12 && (p[1] - t.sin()).abs() <= 1e-12);
        }
        for (p, a2) in c.samples.positions().iter().zip(c.samples.d2()) {
            assert!((a2 + p).norm() <= 1e-12);
        }
        let th = theta_from_alpha(&a, 0.3, Orientation::Negative).unwrap();
        assert!((th.theta(2.0).unwrap() - (0.3 - 2.0)).abs() <= 1e-12);
    }

    #[test]
    fn alpha_06_is_periodic_with_minimum_06() {
        let a = solve_alpha_shrinker(0.6, 0.0, 20.0, &settings()).unwrap();
        assert!((a.min_alpha() - 0.6).abs() <= 1e-6);
        assert!(a.period.unwrap() > 0.0);
    }

    /// Period of (0.6, 0) from the fixed-step oracle: find the second rising zero of alpha'
    /// on a 10^6-step RK4 trajectory and refine by linear interpolation.
    fn oracle_period(alpha0: f64) -> f64 {
        let p = IvpProblem::new(0.0, vec![alpha0, 0.0], 20.0, |_, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = 0.5 * y[1] * y[1] - 2.0 * y[0] + 2.0;
        })
        .unwrap();
        let sol = integrate_fixed(&p, 1_000_000).unwrap();
        let (ts, ys) = (sol.times(), sol.states());
        for i in 1..ts.len() {
            if ys[i - 1][1] < 0.0 && ys[i][1] >= 0.0 {
                let f = ys[i - 1][1] / (ys[i - 1][1] - ys[i][1]);
                return ts[i - 1] + f * (ts[i] - ts[i - 1]);
            }
        }
        panic!("no period");
    }

    #[test]
    fn period_matches_fixed_step_oracle() {
        let a = solve_alpha_shrinker(0.6, 0.0, 20.0, &settings()).unwrap();
        let oracle = oracle_period(0.6);
        // Linear interpolation over a 2e-5 step limits the oracle to ~1e-10.
        assert!((a.period.unwrap() - oracle).abs() <= 1e-8, "{} vs {oracle}", a.period.unwrap());
        assert!((a.period.unwrap() - PERIOD_06).abs() <= 1e-8);
    }

    /// Regression constant from [`oracle_period`].
    const PERIOD_06: f64 = 4.484007073467;

    #[test]
    fn adaptive_agrees_with_fixed_step() {
        let p = IvpProblem::new(0.0, vec![0.6, 0.0], 10.0, |_, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = 0.5 * y[1] * y[1] - 2.0 * y[0] + 2.0;
        })
        .unwrap();
        let fixed = integrate_fixed(&p, 100_000).unwrap();
        let a = solve_alpha_shrinker(0.6, 0.0, 10.0, &settings()).unwrap();
        let (x, dx) = a.state(10.0).unwrap();
        assert!((x - fixed.final_state()[0]).abs() <= 1e-7);
        assert!((dx - fixed.final_state()[1]).abs() <= 1e-7);
    }

    #[test]
    fn theta_matches_quadrature_oracle() {
        let a = solve_alpha_shrinker_period(0.6, 0.0, &settings()).unwrap();
        let period = a.period.unwrap();
        let th = theta_from_alpha(&a, 0.0, Orientation::Positive).unwrap();
        // Composite Simpson on the integrand sampled from the alpha dense output.
        let n = 20_000;
        let h = period / n as f64;
        let f = |t: f64| {
            let (x, dx) = a.state(t).unwrap();
            (4.0 * x - dx * dx).max(0.0).sqrt() / (2.0 * x)
        };
        let mut s = f(0.0) + f(period);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        let quad = s * h / 3.0;
        assert!((th.theta(period).unwrap() - quad).abs() <= 1e-7);
        let mirror = theta_from_alpha(&a, 0.0, Orientation::Negative).unwrap();
        for &t in &[0.5, 1.7, 3.3] {
            assert!((mirror.theta(t).unwrap() + th.theta(t).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn reconstruction_is_a_unit_speed_shrinker() {
        let a = solve_alpha_shrinker(0.6, 0.0, 2.0 * PERIOD_06, &settings()).unwrap();
        let c = reconstruct_shrinker(&a, 0.0, Orientation::Positive, 2000).unwrap();
        assert!(shrinker_residual(&c.samples).max <= 1e-7);
        assert!(arc_length_defect(&c.samples) <= 1e-7);
        let radii: Vec<f64> = c.samples.positions().iter().map(|p| p.norm()).collect();
        let rmin = radii.iter().cloned().fold(f64::INFINITY, f64::min);
        let rmax = radii.iter().cloned().fold(0.0, f64::max);
        assert!((rmin - 0.6f64.sqrt()).abs() <= 1e-6);
        assert!((rmax - a.max_alpha().sqrt()).abs() <= 1e-6);
        assert!(rmax > 1.0);
    }

    #[test]
    fn residual_of_non_shrinker_circle() {
        // Circle of radius 2 with unit speed.
        let n = 64;
        let params: Vec<f64> = (0..n).map(|i| 4.0 * std::f64::consts::PI * i as f64 / n as f64).collect();
        let v = |a: f64, b: f64| crate::VecN::from_slice(&[a, b]).unwrap();
        let pos = params.iter().map(|&s| v(2.0 * (s / 2.0).cos(), 2.0 * (s / 2.0).sin())).collect();
        let d1 = params.iter().map(|&s| v(-(s / 2.0).sin(), (s / 2.0).cos())).collect();
        let d2 = params.iter().map(|&s| v(-0.5 * (s / 2.0).cos(), -0.5 * (s / 2.0).sin())).collect();
        let c = CurveSample::new(params, pos, d1, d2).unwrap();
        let r = shrinker_residual(&c);
        assert!((r.max - 1.5).abs() <= 1e-12);
    }

    #[test]
    fn rotation_ratio_near_circle_limit() {
        let (_, d) = rotation_over_period(1.0 - 1e-6, &settings()).unwrap();
        assert!((d / TAU - 1.0 / SQRT_2).abs() <= 1e-4);
    }

    #[test]
    fn rotation_ratio_at_06() {
        let cs = ClosureSettings::new(10, settings());
        let r = closure_report(0.6, &cs).unwrap();
        let ratio = r.rotation_ratio.unwrap();
        assert!(ratio > 0.5 && ratio < 1.0);
        assert!((ratio - RATIO_06).abs() <= 1e-8, "{ratio}");
        let circle = closure_report(1.0, &cs).unwrap();
        assert!(circle.closed && circle.rotation_ratio.is_none());
    }

    /// Regression constant for the rotation ratio at alpha0 = 0.6.
    const RATIO_06: f64 = 0.703845706890;

    #[test]
    fn scan_rejects_bad_range() {
        let cs = ClosureSettings::new(5, settings());
        assert!(closure_scan(0.5, 1.0, 10, &cs).is_err());
        assert!(closure_scan(0.0, 0.5, 10, &cs).is_err());
    }

    #[test]
    fn finds_two_thirds_curve() {
        let cs = ClosureSettings::new(6, PlanarSettings::with_tolerances(Tolerances::new(1e-11, 1e-13)));
        let scan = closure_scan(0.05, 0.95, 12, &cs).unwrap();
        assert_eq!(scan.failures(), 0);
        let a0 = find_alpha0_for_ratio(2.0 / 3.0, &scan, &cs.planar).unwrap();
        let r = closure_report(a0, &cs).unwrap();
        assert!(r.closed, "{r:?}");
        assert_eq!(r.best_pq, Some((2, 3)));
    }
}
