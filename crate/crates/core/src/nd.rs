//! Solitons integrated directly in `R^n`, with planarity and spherical-coordinate checks.
//!
//! Planarity rests on the linear system for `(r, s)` that keeps `v = r gamma' + s gamma''`
//! constant. For shrinkers, `gamma''' = -|gamma''|^2 gamma' + <gamma, gamma'> gamma''` gives
//!
//! ```text
//! r' = s (<gamma, gamma> - <gamma, gamma'>^2),   s' = -s <gamma, gamma'> - r.
//! ```
//!
//! For expanders, differentiating `gamma'' = gamma - <gamma, gamma'> gamma'` at unit speed
//! gives `gamma''' = -|gamma''|^2 gamma' - <gamma, gamma'> gamma''`, so only the `s` equation
//! changes sign: `s' = s <gamma, gamma'> - r`.

use serde::Serialize;

use crate::error::{invalid, precondition, Error, Result};
use crate::geometry::{fit_plane, CurveSample, PlaneFit, ResidualReport, VecN};
use crate::ode::{integrate, IvpProblem, Tolerances};
use crate::planar::SolitonKind;
use crate::scalar::Real;

const UNIT_V0_TOL: f64 = 1e-12;
const FLAT_CURVATURE: f64 = 1e-10;
const SPHERICAL_SINGULAR: f64 = 1e-8;

/// Initial data for a soliton in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonSpec<T> {
    pub kind: SolitonKind,
    pub p0: VecN<T>,
    pub v0: VecN<T>,
    /// Integrate on `[0, t_span]` (or `[t_span, 0]` when negative).
    pub t_span: T,
    pub n_samples: usize,
    pub tol: Tolerances<T>,
}

impl<T: Real> SolitonSpec<T> {
    pub fn new(kind: SolitonKind, p0: VecN<T>, v0: VecN<T>, t_span: T) -> Result<Self> {
        let spec = Self {
            kind,
            p0,
            v0,
            t_span,
            n_samples: 2001,
            tol: Tolerances::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances<T>) -> Self {
        self.tol = tol;
        self
    }

    pub fn dimension(&self) -> usize {
        self.p0.dim()
    }

    fn validate(&self) -> Result<()> {
        if self.p0.dim() != self.v0.dim() {
            return Err(invalid(format!(
                "p0 has dimension {} but v0 has {}",
                self.p0.dim(),
                self.v0.dim()
            )));
        }
        if (self.v0.norm() - T::one()).abs() > T::lit(UNIT_V0_TOL) {
            return Err(invalid(format!("v0 must be a unit vector, |v0| = {}", self.v0.norm())));
        }
        if !(self.t_span.abs() > T::zero()) || !self.t_span.is_finite() {
            return Err(invalid("t_span must be finite and non-zero"));
        }
        if self.n_samples < 2 {
            return Err(invalid("need at least 2 samples"));
        }
        Ok(())
    }
}

/// `gamma''` prescribed by the soliton equation.
pub fn soliton_acceleration<T: Real>(kind: SolitonKind, p: &[T], v: &[T], out: &mut [T]) {
    let c = p.iter().zip(v).fold(T::zero(), |s, (&a, &b)| s + a * b);
    let sigma: T = kind.sign();
    for ((o, &pi), &vi) in out.iter_mut().zip(p).zip(v) {
        *o = sigma * (c * vi - pi);
    }
}

/// Integrates `(gamma, gamma')' = (gamma', gamma'')` and samples on a uniform grid; `d2`
/// is evaluated from the equation at each sample.
pub fn integrate_soliton<T: Real>(spec: &SolitonSpec<T>) -> Result<CurveSample<T>> {
    spec.validate()?;
    let n = spec.dimension();
    let kind = spec.kind;
    let mut y0 = spec.p0.as_slice().to_vec();
    y0.extend_from_slice(spec.v0.as_slice());
    let rhs = move |_t: T, y: &[T], dy: &mut [T]| {
        let (p, v) = y.split_at(n);
        dy[..n].copy_from_slice(v);
        soliton_acceleration(kind, p, v, &mut dy[n..]);
    };
    let problem = IvpProblem::new(T::zero(), y0, spec.t_span, rhs)?;
    let (sol, _) = integrate(&problem, &spec.tol, &[])?;

    let m = spec.n_samples;
    let (lo, hi) = if spec.t_span > T::zero() {
        (T::zero(), spec.t_span)
    } else {
        (spec.t_span, T::zero())
    };
    let mut params = Vec::with_capacity(m);
    let mut pos = Vec::with_capacity(m);
    let mut d1 = Vec::with_capacity(m);
    let mut d2 = Vec::with_capacity(m);
    let mut y = vec![T::zero(); 2 * n];
    let mut acc = vec![T::zero(); n];
    for i in 0..m {
        let t = if i + 1 == m {
            hi
        } else {
            lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(m - 1)
        };
        sol.interpolate_into(t, &mut y)?;
        let (p, v) = y.split_at(n);
        soliton_acceleration(kind, p, v, &mut acc);
        params.push(t);
        pos.push(VecN::from_slice(p)?);
        d1.push(VecN::from_slice(v)?);
        d2.push(VecN::from_slice(&acc)?);
    }
    CurveSample::new(params, pos, d1, d2)
}

/// One `(r, s)` trajectory and the drift of `v = r gamma' + s gamma''`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RsTrajectory<T> {
    pub initial: (T, T),
    pub r: Vec<T>,
    pub s: Vec<T>,
    pub v_drift: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanarityReport<T> {
    pub kind: SolitonKind,
    /// `|gamma''| < 1e-10` everywhere: the curve is a straight line.
    pub degenerate: bool,
    /// Trajectories from `(1, 0)` and `(0, 1)`; empty when degenerate.
    pub rs_solutions: Vec<RsTrajectory<T>>,
    /// Max over both trajectories and all samples of `|v(t) - v(t_0)|`.
    pub v_drift: T,
    pub plane: PlaneFit<T>,
    /// Max over samples of `dist(gamma, span{gamma(t_0), gamma'(t_0)}) / (1 + |gamma|)`.
    pub spanned_by_initial: T,
}

/// Integrates the `(r, s)` system along `curve` (positions and velocities from quintic
/// Hermite interpolation of the samples) and measures how constant `v` stays.
pub fn verify_planarity<T: Real>(curve: &CurveSample<T>, kind: SolitonKind) -> Result<PlanarityReport<T>> {
    let plane = fit_plane(curve)?;
    let spanned_by_initial = span_distance(curve);
    let flat = curve.d2().iter().all(|a| a.norm() < T::lit(FLAT_CURVATURE));
    if flat {
        return Ok(PlanarityReport {
            kind,
            degenerate: true,
            rs_solutions: Vec::new(),
            v_drift: T::zero(),
            plane,
            spanned_by_initial,
        });
    }
    let params = curve.params();
    let (t0, t1) = (params[0], params[params.len() - 1]);
    let sigma: T = kind.sign();
    let rhs = |t: T, y: &[T], dy: &mut [T]| {
        let (p, v) = curve.interpolate(t);
        let c = p.dot(&v);
        dy[0] = y[1] * (p.norm_squared() - c * c);
        dy[1] = -sigma * y[1] * c - y[0];
    };
    let tol = Tolerances::new(T::lit(1e-12).max(T::epsilon() * T::lit(100.0)), T::lit(1e-14).max(T::epsilon() * T::lit(100.0)));
    let mut rs_solutions = Vec::with_capacity(2);
    let mut v_drift = T::zero();
    for init in [(T::one(), T::zero()), (T::zero(), T::one())] {
        let problem = IvpProblem::new(t0, vec![init.0, init.1], t1, rhs)?;
        let (sol, _) = integrate(&problem, &tol, &[])?;
        let mut r = Vec::with_capacity(params.len());
        let mut s = Vec::with_capacity(params.len());
        let mut buf = [T::zero(); 2];
        for &t in params {
            sol.interpolate_into(t, &mut buf)?;
            r.push(buf[0]);
            s.push(buf[1]);
        }
        let v_at = |i: usize| curve.d1()[i].clone() * r[i] + curve.d2()[i].clone() * s[i];
        let v0 = v_at(0);
        let drift = (0..params.len()).fold(T::zero(), |m, i| m.max(v_at(i).distance(&v0)));
        v_drift = v_drift.max(drift);
        rs_solutions.push(RsTrajectory {
            initial: init,
            r,
            s,
            v_drift: drift,
        });
    }
    Ok(PlanarityReport {
        kind,
        degenerate: false,
        rs_solutions,
        v_drift,
        plane,
        spanned_by_initial,
    })
}

/// Distance of samples from the linear span of the first position and tangent.
fn span_distance<T: Real>(curve: &CurveSample<T>) -> T {
    let mut basis: Vec<VecN<T>> = Vec::with_capacity(2);
    for v in [&curve.d1()[0], &curve.positions()[0]] {
        let mut w = v.clone();
        for b in &basis {
            w = w.add_scaled(-w.dot(b), b);
        }
        let n = w.norm();
        if n > T::lit(1e-12) * (T::one() + v.norm()) {
            basis.push(w * (T::one() / n));
        }
    }
    curve.positions().iter().fold(T::zero(), |m, p| {
        let mut w = p.clone();
        for b in &basis {
            w = w.add_scaled(-w.dot(b), b);
        }
        m.max(w.norm() / (T::one() + p.norm()))
    })
}

/// Compares a five-point finite difference of `gamma''` with the third-derivative identity
/// for the given kind. Needs a uniform grid with at least five samples.
pub fn triple_derivative_check<T: Real>(curve: &CurveSample<T>, kind: SolitonKind) -> Result<ResidualReport<T>> {
    let n = curve.len();
    if n < 5 {
        return Err(invalid(format!("need at least 5 samples for the stencil, got {n}")));
    }
    let h = curve
        .uniform_spacing(T::lit(1e-6))
        .ok_or_else(|| precondition("triple_derivative_check needs uniformly spaced samples"))?;
    let sigma: T = kind.sign();
    let d2 = curve.d2();
    let mut per_sample = Vec::with_capacity(n - 4);
    for i in 2..n - 2 {
        let fd = (d2[i - 2].clone() - d2[i - 1].clone() * T::lit(8.0) + d2[i + 1].clone() * T::lit(8.0)
            - d2[i + 2].clone())
            * (T::one() / (T::lit(12.0) * h));
        let (p, v, a) = (&curve.positions()[i], &curve.d1()[i], &d2[i]);
        let identity = v.clone() * (-a.norm_squared()) + a.clone() * (sigma * p.dot(v));
        per_sample.push((fd - identity).norm());
    }
    let name = match kind {
        SolitonKind::Shrinker => "gamma''' = -|gamma''|^2 gamma' + <gamma, gamma'> gamma''",
        SolitonKind::Expander => "gamma''' = -|gamma''|^2 gamma' - <gamma, gamma'> gamma''",
    };
    Ok(ResidualReport::from_samples(name, per_sample))
}

/// Max-norm residuals of the shrinker equations in spherical coordinates
/// `gamma = u (cos theta sin phi, sin theta sin phi, cos phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalResiduals<T> {
    /// `u'' - sin^2 phi u theta'^2 - u phi'^2 + u - u u'^2`
    pub res_radial: T,
    /// `2 u' theta' + u theta'' + 2 u theta' phi' cot phi - u^2 u' theta'`
    pub res_theta: T,
    /// `2 u' phi' - u theta'^2 sin phi cos phi + u phi'' - u^2 u' phi'`
    pub res_phi: T,
    /// `u'^2 + u^2 theta'^2 sin^2 phi + u^2 phi'^2 - 1`
    pub res_speed: T,
    pub evaluated: usize,
    /// Samples near the origin or the polar axis.
    pub skipped: usize,
}

/// Spherical coordinates and their first two derivatives from `(gamma, gamma', gamma'')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalJet<T> {
    pub u: [T; 3],
    pub theta: [T; 3],
    pub phi: [T; 3],
}

/// `None` when the point is within `1e-8` of the origin or `sin phi < 1e-8`.
pub fn spherical_jet<T: Real>(p: &VecN<T>, v: &VecN<T>, a: &VecN<T>) -> Option<SphericalJet<T>> {
    let tiny = T::lit(SPHERICAL_SINGULAR);
    let u = p.norm();
    if u < tiny {
        return None;
    }
    let (x, y, z) = (p[0], p[1], p[2]);
    let (x1, y1, z1) = (v[0], v[1], v[2]);
    let (x2, y2, z2) = (a[0], a[1], a[2]);
    let rho = (x * x + y * y).sqrt();
    if rho / u < tiny {
        return None;
    }
    let du = p.dot(v) / u;
    let ddu = (v.norm_squared() + p.dot(a) - du * du) / u;

    let rho2 = rho * rho;
    let cross1 = x * y1 - y * x1;
    let dtheta = cross1 / rho2;
    let drho = (x * x1 + y * y1) / rho;
    let ddtheta = (x * y2 - y * x2) / rho2 - T::two() * dtheta * drho / rho;

    let ddrho = (x1 * x1 + y1 * y1 + x * x2 + y * y2 - drho * drho) / rho;
    let u2 = u * u;
    let dphi = (z * drho - rho * z1) / u2;
    let ddphi = (z * ddrho - rho * z2) / u2 - T::two() * dphi * du / u;

    Some(SphericalJet {
        u: [u, du, ddu],
        theta: [y.atan2(x), dtheta, ddtheta],
        phi: [rho.atan2(z), dphi, ddphi],
    })
}

pub fn spherical_residuals<T: Real>(curve: &CurveSample<T>) -> Result<SphericalResiduals<T>> {
    if curve.dim() != 3 {
        return Err(invalid(format!("spherical residuals need a curve in R^3, got R^{}", curve.dim())));
    }
    let mut out = SphericalResiduals {
        res_radial: T::zero(),
        res_theta: T::zero(),
        res_phi: T::zero(),
        res_speed: T::zero(),
        evaluated: 0,
        skipped: 0,
    };
    for ((p, v), a) in curve.positions().iter().zip(curve.d1()).zip(curve.d2()) {
        let Some(j) = spherical_jet(p, v, a) else {
            out.skipped += 1;
            continue;
        };
        out.evaluated += 1;
        let [u, du, ddu] = j.u;
        let [_, dth, ddth] = j.theta;
        let [phi, dph, ddph] = j.phi;
        let (sp, cp) = phi.sin_cos();
        let radial = ddu - sp * sp * u * dth * dth - u * dph * dph + u - u * du * du;
        let theta = T::two() * du * dth + u * ddth + T::two() * u * dth * dph * cp / sp - u * u * du * dth;
        let phi_eq = T::two() * du * dph - u * dth * dth * sp * cp + u * ddph - u * u * du * dph;
        let speed = du * du + u * u * dth * dth * sp * sp + u * u * dph * dph - T::one();
        out.res_radial = out.res_radial.max(radial.abs());
        out.res_theta = out.res_theta.max(theta.abs());
        out.res_phi = out.res_phi.max(phi_eq.abs());
        out.res_speed = out.res_speed.max(speed.abs());
    }
    if out.evaluated == 0 {
        return Err(Error::Precondition(
            "every sample sits at the origin or on the polar axis".into(),
        ));
    }
    Ok(out)
}
