//! Planar self-expanders from the sign-flipped alpha ODE.

use crate::error::{invalid, Result};
use crate::geometry::{CurveSample, ResidualReport};
use crate::planar::{
    reconstruct, soliton_residual, solve_alpha, AlphaSolution, Orientation, PlanarSettings,
    PolarCurve, SolitonKind,
};
use crate::scalar::Real;

/// `alpha'' + alpha'^2 / 2 - 2 alpha = 2` on `[-t_span, t_span]` when `t_span > 0`.
///
/// Expanders have no equilibrium (it would need `alpha = -1`), so integrating both sides of
/// the minimum is the natural default.
pub fn solve_alpha_expander<T: Real>(
    alpha0: T,
    dalpha0: T,
    t_span: T,
    settings: &PlanarSettings<T>,
) -> Result<AlphaSolution<T>> {
    if !(t_span > T::zero()) {
        return Err(invalid(format!("expander span must be positive, got {t_span}")));
    }
    solve_alpha(SolitonKind::Expander, alpha0, dalpha0, -t_span, t_span, settings, false)
}

/// One-sided variant on `[0, t_end]` or `[t_end, 0]`.
pub fn solve_alpha_expander_one_sided<T: Real>(
    alpha0: T,
    dalpha0: T,
    t_end: T,
    settings: &PlanarSettings<T>,
) -> Result<AlphaSolution<T>> {
    let (lo, hi) = if t_end >= T::zero() {
        (T::zero(), t_end)
    } else {
        (t_end, T::zero())
    };
    solve_alpha(SolitonKind::Expander, alpha0, dalpha0, lo, hi, settings, false)
}

pub fn reconstruct_expander<T: Real>(
    alpha: &AlphaSolution<T>,
    theta0: T,
    orientation: Orientation,
    n_samples: usize,
) -> Result<PolarCurve<T>> {
    if alpha.kind != SolitonKind::Expander {
        return Err(invalid("reconstruct_expander needs an expander alpha solution"));
    }
    reconstruct(alpha, theta0, orientation, n_samples)
}

/// Residual of `gamma'' = gamma - <gamma, gamma'> gamma'`.
pub fn expander_residual<T: Real>(curve: &CurveSample<T>) -> ResidualReport<T> {
    soliton_residual(curve, SolitonKind::Expander)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{arc_length_defect, VecN};
    use crate::ode::{integrate_fixed, IvpProblem};
    use crate::planar::{theta_from_alpha, unit_speed_polar_residual};

    fn settings() -> PlanarSettings<f64> {
        PlanarSettings::default()
    }

    #[test]
    fn unit_minimum_grows_on_both_sides() {
        let a = solve_alpha_expander(1.0, 0.0, 3.0, &settings()).unwrap();
        let nodes = a.solution.nodes();
        for w in nodes.windows(2) {
            let (t0, y0) = w[0];
            let (t1, y1) = w[1];
            if t0 >= 0.0 {
                assert!(y1[0] > y0[0], "not increasing at {t1}");
            } else if t1 <= 0.0 {
                assert!(y1[0] < y0[0], "not decreasing at {t1}");
            }
        }
        assert!((a.min_alpha() - 1.0).abs() <= 1e-12);
        assert!(a.period.is_none());
    }

    #[test]
    fn alpha_at_5_matches_fixed_step_oracle() {
        let p = IvpProblem::new(0.0, vec![0.5, 0.0], 5.0, |_, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -0.5 * y[1] * y[1] + 2.0 * y[0] + 2.0;
        })
        .unwrap();
        let oracle = integrate_fixed(&p, 1_000_000).unwrap().final_state()[0];
        let a = solve_alpha_expander_one_sided(0.5, 0.0, 5.0, &settings()).unwrap();
        let v = a.alpha(5.0).unwrap();
        assert!(((v - oracle) / oracle).abs() <= 1e-9, "{v} vs {oracle}");
        assert!(((v - ALPHA_05_AT_5) / ALPHA_05_AT_5).abs() <= 1e-9, "{v}");
    }

    /// Regression value of `alpha(5)` for `alpha0 = 0.5`.
    const ALPHA_05_AT_5: f64 = 28.87159635591551;

    #[test]
    fn reconstruction_is_an_expander() {
        let a = solve_alpha_expander(0.5, 0.0, 2.0, &settings()).unwrap();
        let c = reconstruct_expander(&a, 0.0, Orientation::Positive, 1000).unwrap();
        assert!(expander_residual(&c.samples).max <= 1e-7);
        assert!(arc_length_defect(&c.samples) <= 1e-7);
        assert!(unit_speed_polar_residual(&c).unwrap() <= 1e-8);
        let m = reconstruct_expander(&a, 0.0, Orientation::Negative, 1000).unwrap();
        for (p, q) in c.samples.positions().iter().zip(m.samples.positions()) {
            assert!((p[0] - q[0]).abs() <= 1e-10 && (p[1] + q[1]).abs() <= 1e-10);
        }
    }

    #[test]
    fn unit_circle_is_not_an_expander() {
        let n = 64;
        let params: Vec<f64> = (0..n).map(|i| std::f64::consts::TAU * i as f64 / n as f64).collect();
        let v = |a: f64, b: f64| VecN::from_slice(&[a, b]).unwrap();
        let pos = params.iter().map(|&s| v(s.cos(), s.sin())).collect();
        let d1 = params.iter().map(|&s| v(-s.sin(), s.cos())).collect();
        let d2 = params.iter().map(|&s| v(-s.cos(), -s.sin())).collect();
        let c = CurveSample::new(params, pos, d1, d2).unwrap();
        assert!((expander_residual(&c).max - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn curve_is_unbounded() {
        let a = solve_alpha_expander(0.5, 0.0, 5.0, &settings()).unwrap();
        let (lo, hi) = a.span();
        let r0 = 0.5f64.sqrt();
        assert!(a.alpha(lo).unwrap().sqrt() >= 2.0 * r0);
        assert!(a.alpha(hi).unwrap().sqrt() >= 2.0 * r0);
    }

    #[test]
    fn theta_rejects_wrong_kind() {
        let a = crate::shrinker::solve_alpha_shrinker(0.6, 0.0, 1.0, &settings()).unwrap();
        assert!(reconstruct_expander(&a, 0.0, Orientation::Positive, 32).is_err());
        assert!(theta_from_alpha(&a, 0.0, Orientation::Positive).is_ok());
        assert!(solve_alpha_expander(0.5, 0.0, 0.0, &settings()).is_err());
    }
}
