//! Polar reduction shared by planar shrinkers and expanders.
//!
//! A unit-speed planar soliton not through the origin is written as
//! `gamma = u (cos theta, sin theta)` with `u = sqrt(alpha)`, `alpha = <gamma, gamma>`.
//! `alpha` solves a scalar second-order ODE and `theta` follows from the unit-speed
//! condition `theta'^2 = (1 - u'^2) / u^2`, i.e. `theta' = sqrt(4 alpha - alpha'^2) / (2 alpha)`.

use serde::Serialize;

use crate::error::{invalid, precondition, Error, Result};
use crate::geometry::{CurveSample, ResidualReport, VecN};
use crate::ode::{integrate, Direction, EventSpec, IvpProblem, Tolerances, TwoSided};
use crate::scalar::Real;

/// Which self-similar equation a curve solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolitonKind {
    /// `gamma'' = -gamma^perp`
    Shrinker,
    /// `gamma'' = gamma^perp`
    Expander,
}

impl SolitonKind {
    /// `+1` for shrinkers, `-1` for expanders.
    pub fn sign<T: Real>(self) -> T {
        match self {
            SolitonKind::Shrinker => T::one(),
            SolitonKind::Expander => -T::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SolitonKind::Shrinker => "shrinker",
            SolitonKind::Expander => "expander",
        }
    }
}

impl std::str::FromStr for SolitonKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shrinker" => Ok(SolitonKind::Shrinker),
            "expander" => Ok(SolitonKind::Expander),
            other => Err(invalid(format!("unknown soliton kind `{other}`"))),
        }
    }
}

/// Sign branch of `theta'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Orientation::Positive => T::one(),
            Orientation::Negative => -T::one(),
        }
    }

    pub fn from_sign(s: i32) -> Result<Self> {
        match s {
            1 => Ok(Orientation::Positive),
            -1 => Ok(Orientation::Negative),
            other => Err(invalid(format!("orientation must be +1 or -1, got {other}"))),
        }
    }
}

/// Settings shared by the planar pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarSettings<T> {
    pub tol: Tolerances<T>,
    /// Max deviation of `(alpha, alpha')` from the initial state to accept a period.
    pub period_match: T,
    /// Values of `1 - u'^2` in `[-domain_clamp, 0)` are clamped to zero.
    pub domain_clamp: T,
}

impl<T: Real> Default for PlanarSettings<T> {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            period_match: T::lit(1e-8),
            domain_clamp: T::lit(1e-10),
        }
    }
}

impl<T: Real> PlanarSettings<T> {
    /// Settings for the given tolerances; the period match loosens to `100 rel_tol` when
    /// that exceeds the default `1e-8`.
    pub fn with_tolerances(tol: Tolerances<T>) -> Self {
        let d = Self::default();
        Self {
            tol,
            period_match: d.period_match.max(T::lit(100.0) * tol.rel_tol),
            ..d
        }
    }
}

/// `alpha''` as a function of `(alpha, alpha')`.
///
/// Shrinker: `alpha'' = alpha'^2 / 2 - 2 alpha + 2`; expander: `alpha'' = -alpha'^2 / 2 + 2 alpha + 2`.
pub fn alpha_second_derivative<T: Real>(kind: SolitonKind, alpha: T, dalpha: T) -> T {
    let sigma: T = kind.sign();
    sigma * (T::half() * dalpha * dalpha - T::two() * alpha) + T::two()
}

/// `theta'` from `(alpha, alpha')`, clamping tiny negative `4 alpha - alpha'^2` to zero.
fn theta_rate<T: Real>(orientation: T, alpha: T, dalpha: T) -> T {
    let q = (T::lit(4.0) * alpha - dalpha * dalpha).max(T::zero());
    orientation * q.sqrt() / (T::two() * alpha)
}

/// Numerical solution of the alpha ODE with initial data at `t = 0`.
#[derive(Debug, Clone)]
pub struct AlphaSolution<T> {
    pub kind: SolitonKind,
    pub alpha0: T,
    pub dalpha0: T,
    /// State `(alpha, alpha')`.
    pub solution: TwoSided<T>,
    /// Time of first return of `(alpha, alpha')` to the initial state, when detected.
    pub period: Option<T>,
    /// Crossings of `alpha' = 0` (local extrema of `alpha`) in increasing order.
    pub critical_times: Vec<T>,
    pub settings: PlanarSettings<T>,
}

impl<T: Real> AlphaSolution<T> {
    pub fn span(&self) -> (T, T) {
        self.solution.bounds()
    }

    /// `(alpha, alpha')` at `t`.
    pub fn state(&self, t: T) -> Result<(T, T)> {
        let y = self.solution.interpolate(t)?;
        Ok((y[0], y[1]))
    }

    pub fn alpha(&self, t: T) -> Result<T> {
        Ok(self.state(t)?.0)
    }

    /// Minimum of alpha over accepted nodes and detected extrema.
    pub fn min_alpha(&self) -> T {
        let nodes = self.solution.nodes();
        let mut m = nodes.iter().fold(T::infinity(), |m, (_, y)| m.min(y[0]));
        for &t in &self.critical_times {
            if let Ok(a) = self.alpha(t) {
                m = m.min(a);
            }
        }
        m
    }

    /// Maximum of alpha over accepted nodes and detected extrema.
    pub fn max_alpha(&self) -> T {
        let nodes = self.solution.nodes();
        let mut m = nodes.iter().fold(T::neg_infinity(), |m, (_, y)| m.max(y[0]));
        for &t in &self.critical_times {
            if let Ok(a) = self.alpha(t) {
                m = m.max(a);
            }
        }
        m
    }

    /// True for the equilibrium `alpha = 1, alpha' = 0` of the shrinker equation.
    pub fn is_circle(&self) -> bool {
        self.kind == SolitonKind::Shrinker && self.alpha0 == T::one() && self.dalpha0 == T::zero()
    }
}

/// Integrates the alpha ODE over `[start, end]` (`start <= 0 <= end`) with
/// `alpha(0) = alpha0`, `alpha'(0) = dalpha0`.
///
/// With `stop_at_period`, the forward integration ends at the first detected period.
pub fn solve_alpha<T: Real>(
    kind: SolitonKind,
    alpha0: T,
    dalpha0: T,
    start: T,
    end: T,
    settings: &PlanarSettings<T>,
    stop_at_period: bool,
) -> Result<AlphaSolution<T>> {
    if !(alpha0 > T::zero()) || !alpha0.is_finite() || !dalpha0.is_finite() {
        return Err(invalid(format!("alpha0 must be positive and finite, got {alpha0}")));
    }
    if !(start <= T::zero() && end >= T::zero()) || start == end {
        return Err(invalid("span must contain the initial time 0 and be non-empty"));
    }

    let rhs = move |_t: T, y: &[T], dy: &mut [T]| {
        dy[0] = y[1];
        dy[1] = alpha_second_derivative(kind, y[0], y[1]);
    };

    // Poincare section for the period: alpha' = 0 entered in the direction of alpha''(0), or
    // alpha = alpha0 crossed in the direction of alpha'(0).
    let a2 = alpha_second_derivative(kind, alpha0, dalpha0);
    let section: Option<(bool, Direction)> = if dalpha0 == T::zero() {
        if a2 > T::zero() {
            Some((true, Direction::Rising))
        } else if a2 < T::zero() {
            Some((true, Direction::Falling))
        } else {
            None
        }
    } else if dalpha0 > T::zero() {
        Some((false, Direction::Rising))
    } else {
        Some((false, Direction::Falling))
    };

    let mut critical_times = Vec::new();
    let mut period = None;
    let mut solution = TwoSided {
        t0: T::zero(),
        forward: None,
        backward: None,
    };

    for forward in [true, false] {
        let t_end = if forward { end } else { start };
        if t_end == T::zero() {
            continue;
        }
        let problem = IvpProblem::new(T::zero(), vec![alpha0, dalpha0], t_end, rhs)?;
        let mut events = vec![
            EventSpec::new(Direction::Falling, true, |_, y: &[T]| y[0]),
            EventSpec::new(Direction::Any, false, |_, y: &[T]| y[1]),
        ];
        if forward {
            if let Some((on_derivative, dir)) = section {
                events.push(EventSpec::new(dir, false, move |_, y: &[T]| {
                    if on_derivative {
                        y[1]
                    } else {
                        y[0] - alpha0
                    }
                }));
            }
        }
        let (mut sol, hits) = integrate(&problem, &settings.tol, &events)?;
        if let Some(hit) = hits.iter().find(|h| h.index == 0) {
            return Err(Error::Positivity {
                t: hit.t.to_f64_lossy(),
            });
        }
        critical_times.extend(hits.iter().filter(|h| h.index == 1).map(|h| h.t));
        if forward {
            let scale = alpha0.abs().max(T::one());
            let found = hits.iter().find(|h| {
                h.index == 2
                    && (h.state[0] - alpha0).abs() <= settings.period_match * scale
                    && (h.state[1] - dalpha0).abs() <= settings.period_match * scale
            });
            if let Some(hit) = found {
                period = Some(hit.t);
                if stop_at_period {
                    // Re-integrate exactly up to the period so the solution ends there.
                    let problem = IvpProblem::new(T::zero(), vec![alpha0, dalpha0], hit.t, rhs)?;
                    let crit = EventSpec::new(Direction::Any, false, |_, y: &[T]| y[1]);
                    let (trunc, hits) = integrate(&problem, &settings.tol, &[crit])?;
                    critical_times.clear();
                    critical_times.extend(hits.iter().map(|h| h.t));
                    sol = trunc;
                }
            }
            solution.forward = Some(sol);
        } else {
            solution.backward = Some(sol);
        }
    }
    critical_times.sort_by(|a, b| a.partial_cmp(b).expect("finite event times"));

    Ok(AlphaSolution {
        kind,
        alpha0,
        dalpha0,
        solution,
        period,
        critical_times,
        settings: *settings,
    })
}

/// Polar angle obtained by integrating `theta'` jointly with the alpha system.
#[derive(Debug, Clone)]
pub struct ThetaFunction<T> {
    pub kind: SolitonKind,
    pub theta0: T,
    pub orientation: Orientation,
    /// State `(alpha, alpha', theta)`.
    pub joint: TwoSided<T>,
}

impl<T: Real> ThetaFunction<T> {
    pub fn theta(&self, t: T) -> Result<T> {
        Ok(self.joint.interpolate(t)?[2])
    }

    /// `(alpha, alpha', theta)` at `t`.
    pub fn state(&self, t: T) -> Result<(T, T, T)> {
        let y = self.joint.interpolate(t)?;
        Ok((y[0], y[1], y[2]))
    }

    pub fn span(&self) -> (T, T) {
        self.joint.bounds()
    }
}

/// `theta(t) = theta0 + orientation * int_0^t sqrt(4 alpha - alpha'^2) / (2 alpha)`.
pub fn theta_from_alpha<T: Real>(
    alpha: &AlphaSolution<T>,
    theta0: T,
    orientation: Orientation,
) -> Result<ThetaFunction<T>> {
    let kind = alpha.kind;
    let o: T = orientation.sign();
    let rhs = move |_t: T, y: &[T], dy: &mut [T]| {
        dy[0] = y[1];
        dy[1] = alpha_second_derivative(kind, y[0], y[1]);
        dy[2] = theta_rate(o, y[0], y[1]);
    };
    let (lo, hi) = alpha.span();
    // The angle rate feeds the unit-speed check directly, so it gets a hundredth of the budget.
    let theta_tol = alpha.settings.tol.scaled(T::lit(0.01));
    let mut joint = TwoSided {
        t0: T::zero(),
        forward: None,
        backward: None,
    };
    for t_end in [hi, lo] {
        if t_end == T::zero() {
            continue;
        }
        let problem = IvpProblem::new(T::zero(), vec![alpha.alpha0, alpha.dalpha0, theta0], t_end, rhs)?;
        let positivity = EventSpec::new(Direction::Falling, true, |_, y: &[T]| y[0]);
        let (sol, hits) = integrate(&problem, &theta_tol, &[positivity])?;
        if let Some(hit) = hits.first() {
            return Err(Error::Positivity {
                t: hit.t.to_f64_lossy(),
            });
        }
        for (t, y) in sol.times().iter().zip(sol.states()) {
            check_domain(*t, y[0], y[1], alpha.settings.domain_clamp)?;
        }
        if t_end > T::zero() {
            joint.forward = Some(sol);
        } else {
            joint.backward = Some(sol);
        }
    }
    Ok(ThetaFunction {
        kind,
        theta0,
        orientation,
        joint,
    })
}

fn check_domain<T: Real>(t: T, alpha: T, dalpha: T, clamp: T) -> Result<()> {
    let defect = T::one() - dalpha * dalpha / (T::lit(4.0) * alpha);
    if defect < -clamp {
        return Err(Error::Domain {
            t: t.to_f64_lossy(),
            defect: defect.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Reconstructed planar soliton in polar form.
#[derive(Debug, Clone)]
pub struct PolarCurve<T> {
    pub alpha: AlphaSolution<T>,
    pub theta: ThetaFunction<T>,
    pub samples: CurveSample<T>,
}

impl<T: Real> PolarCurve<T> {
    pub fn theta0(&self) -> T {
        self.theta.theta0
    }

    pub fn orientation(&self) -> Orientation {
        self.theta.orientation
    }

    /// Position, first and second derivative at `t` from `(alpha, alpha', theta)`.
    pub fn frame_at(&self, t: T) -> Result<[VecN<T>; 3]> {
        let (a, da, th) = self.theta.state(t)?;
        polar_point(
            self.alpha.kind,
            self.theta.orientation.sign(),
            t,
            a,
            da,
            th,
            self.alpha.settings.domain_clamp,
        )
    }
}

fn polar_point<T: Real>(
    kind: SolitonKind,
    o: T,
    t: T,
    alpha: T,
    dalpha: T,
    theta: T,
    clamp: T,
) -> Result<[VecN<T>; 3]> {
    if !(alpha > T::zero()) {
        return Err(Error::Positivity { t: t.to_f64_lossy() });
    }
    check_domain(t, alpha, dalpha, clamp)?;
    let sigma: T = kind.sign();
    let u = alpha.sqrt();
    let du = dalpha / (T::two() * u);
    let ddalpha = alpha_second_derivative(kind, alpha, dalpha);
    let ddu = (ddalpha - T::two() * du * du) / (T::two() * u);
    let dtheta = theta_rate(o, alpha, dalpha);
    // Derivative of theta' along the flow: d/dt sqrt(4a - a'^2) = sigma a' sqrt(4a - a'^2) / 2.
    let ddtheta = dtheta * (sigma * dalpha * T::half() - dalpha / alpha);
    let (s, c) = theta.sin_cos();
    let radial = [c, s];
    let angular = [-s, c];
    let combine = |a: T, b: T| VecN::from_vec_unchecked(vec![a * radial[0] + b * angular[0], a * radial[1] + b * angular[1]]);
    Ok([
        combine(u, T::zero()),
        combine(du, u * dtheta),
        combine(ddu - u * dtheta * dtheta, T::two() * du * dtheta + u * ddtheta),
    ])
}

/// Samples `gamma = u (cos theta, sin theta)` with derivatives on a uniform grid over the
/// span of `alpha`.
pub fn reconstruct<T: Real>(
    alpha: &AlphaSolution<T>,
    theta0: T,
    orientation: Orientation,
    n_samples: usize,
) -> Result<PolarCurve<T>> {
    if n_samples < 16 {
        return Err(precondition(format!("need at least 16 samples, got {n_samples}")));
    }
    let theta = theta_from_alpha(alpha, theta0, orientation)?;
    let (lo, hi) = theta.span();
    let o: T = orientation.sign();
    let mut params = Vec::with_capacity(n_samples);
    let mut pos = Vec::with_capacity(n_samples);
    let mut d1 = Vec::with_capacity(n_samples);
    let mut d2 = Vec::with_capacity(n_samples);
    let step = (hi - lo) / T::from_usize_lossy(n_samples - 1);
    for i in 0..n_samples {
        let t = if i + 1 == n_samples {
            hi
        } else {
            lo + step * T::from_usize_lossy(i)
        };
        let (a, da, th) = theta.state(t)?;
        let [p, v, w] = polar_point(alpha.kind, o, t, a, da, th, alpha.settings.domain_clamp)?;
        params.push(t);
        pos.push(p);
        d1.push(v);
        d2.push(w);
    }
    let samples = CurveSample::new(params, pos, d1, d2)?;
    Ok(PolarCurve {
        alpha: alpha.clone(),
        theta,
        samples,
    })
}

/// `|| gamma'' - sign (<gamma, gamma'> gamma' - gamma) ||` per sample, with `sign = +1` for
/// shrinkers and `-1` for expanders.
pub fn soliton_residual<T: Real>(curve: &CurveSample<T>, kind: SolitonKind) -> ResidualReport<T> {
    let sigma: T = kind.sign();
    let per_sample = curve
        .positions()
        .iter()
        .zip(curve.d1())
        .zip(curve.d2())
        .map(|((p, v), a)| {
            let target = (v * p.dot(v)).add_scaled(-T::one(), p);
            a.add_scaled(-sigma, &target).norm()
        })
        .collect();
    let name = match kind {
        SolitonKind::Shrinker => "gamma'' = <gamma, gamma'> gamma' - gamma",
        SolitonKind::Expander => "gamma'' = gamma - <gamma, gamma'> gamma'",
    };
    ResidualReport::from_samples(name, per_sample)
}

/// Max over samples of `| theta'^2 u^2 + u'^2 - 1 |`, with `theta'` obtained by
/// differentiating the computed angle (five-point stencil) rather than from its formula.
pub fn unit_speed_polar_residual<T: Real>(curve: &PolarCurve<T>) -> Result<T> {
    let (lo, hi) = curve.theta.span();
    let h = T::lit(5e-4) * (hi - lo).abs().min(T::one());
    let mut worst = T::zero();
    for &t in curve.samples.params() {
        let t = t.max(lo + T::two() * h).min(hi - T::two() * h);
        let th = |k: f64| curve.theta.theta(t + T::lit(k) * h);
        let dtheta = (th(-2.0)? - T::lit(8.0) * th(-1.0)? + T::lit(8.0) * th(1.0)? - th(2.0)?)
            / (T::lit(12.0) * h);
        let (a, da, _) = curve.theta.state(t)?;
        let u2 = a;
        let du = da / (T::two() * a.sqrt());
        worst = worst.max((dtheta * dtheta * u2 + du * du - T::one()).abs());
    }
    Ok(worst)
}

/// Straight line through the origin, the degenerate soliton of both kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct StraightLine<T> {
    pub direction: VecN<T>,
}

impl<T: Real> StraightLine<T> {
    pub fn new(direction: VecN<T>) -> Result<Self> {
        let direction = direction
            .normalized()
            .ok_or_else(|| invalid("line direction must be nonzero"))?;
        Ok(Self { direction })
    }

    /// `gamma(t) = t v` on a uniform grid over `[t0, t1]`.
    pub fn sample(&self, t0: T, t1: T, n: usize) -> Result<CurveSample<T>> {
        if n < 2 || !(t1 > t0) {
            return Err(invalid("line sampling needs n >= 2 and t1 > t0"));
        }
        let dim = self.direction.dim();
        let params: Vec<T> = (0..n)
            .map(|i| t0 + (t1 - t0) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1))
            .collect();
        let pos = params.iter().map(|&t| &self.direction * t).collect();
        CurveSample::new(
            params,
            pos,
            vec![self.direction.clone(); n],
            vec![VecN::zeros(dim); n],
        )
    }
}
