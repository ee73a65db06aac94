//! Polygonal curve shortening flow, first-variation checks and homothety tools.
//!
//! Each vertex moves with the reparametrization-invariant velocity
//! `gamma_uu / |gamma_u|^2 - <gamma_uu, gamma_u> gamma_u / |gamma_u|^4`, where `gamma_u` and
//! `gamma_uu` are three-point central differences in the vertex index. Time stepping is
//! explicit Euler with `dt <= 0.25 h_min^2`.

use serde::Serialize;

use crate::error::{invalid, precondition, Error, Result};
use crate::geometry::{diameter, CurveSample, VecN};
use crate::scalar::Real;

const MIN_EDGE: f64 = 1e-12;

/// Polygon in `R^n`, open or closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyCurve<T> {
    vertices: Vec<VecN<T>>,
    closed: bool,
}

impl<T: Real> PolyCurve<T> {
    pub fn new(vertices: Vec<VecN<T>>, closed: bool) -> Result<Self> {
        let need = if closed { 3 } else { 2 };
        if vertices.len() < need {
            return Err(invalid(format!(
                "{} polygon needs at least {need} vertices, got {}",
                if closed { "closed" } else { "open" },
                vertices.len()
            )));
        }
        let dim = vertices[0].dim();
        if vertices.iter().any(|v| v.dim() != dim) {
            return Err(invalid("polygon vertices must share one dimension"));
        }
        let c = Self { vertices, closed };
        let min = c.min_edge();
        if !(min > T::lit(MIN_EDGE)) {
            return Err(invalid(format!("consecutive vertices coincide (edge length {min:e})")));
        }
        Ok(c)
    }

    /// Polygon through the sample positions. For a closed curve whose last sample repeats
    /// the first (within `1e-9` of the diameter), the duplicate is dropped.
    pub fn from_curve(curve: &CurveSample<T>, closed: bool) -> Result<Self> {
        Self::from_points(curve.positions().to_vec(), closed)
    }

    /// As [`PolyCurve::from_curve`] for bare points.
    pub fn from_points(mut v: Vec<VecN<T>>, closed: bool) -> Result<Self> {
        if closed && v.len() > 3 {
            let d = diameter(&v);
            if v[0].distance(&v[v.len() - 1]) <= T::lit(1e-9) * d {
                v.pop();
            }
        }
        Self::new(v, closed)
    }

    pub fn vertices(&self) -> &[VecN<T>] {
        &self.vertices
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    fn n_edges(&self) -> usize {
        if self.closed {
            self.len()
        } else {
            self.len() - 1
        }
    }

    pub fn edge_lengths(&self) -> Vec<T> {
        let n = self.len();
        (0..self.n_edges())
            .map(|i| self.vertices[i].distance(&self.vertices[(i + 1) % n]))
            .collect()
    }

    pub fn min_edge(&self) -> T {
        self.edge_lengths().into_iter().fold(T::infinity(), T::min)
    }

    pub fn max_edge(&self) -> T {
        self.edge_lengths().into_iter().fold(T::zero(), T::max)
    }

    pub fn length(&self) -> T {
        self.edge_lengths().into_iter().fold(T::zero(), |s, e| s + e)
    }

    /// Signed shoelace area; `None` unless the polygon is closed and planar (`R^2`).
    pub fn signed_area(&self) -> Option<T> {
        if !self.closed || self.dim() != 2 {
            return None;
        }
        Some(shoelace(&self.vertices))
    }

    pub fn diameter(&self) -> T {
        diameter(&self.vertices)
    }

    pub fn centroid(&self) -> VecN<T> {
        let mut c = VecN::zeros(self.dim());
        for v in &self.vertices {
            c += v;
        }
        c * (T::one() / T::from_usize_lossy(self.len()))
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v.clone() * factor).collect(),
            closed: self.closed,
        }
    }

    /// Uniform arc-length redistribution of `n` vertices: periodic cubic spline through
    /// the vertices when closed, linear interpolation when open (endpoints kept).
    pub fn resample(&self, n: usize) -> Result<Self> {
        if self.closed {
            let spline = PeriodicSpline::new(&self.vertices)?;
            Self::new(spline.uniform_points(n)?, true)
        } else {
            if n < 2 {
                return Err(invalid("open polygon needs at least 2 vertices"));
            }
            Self::new(linear_uniform(&self.vertices, n), false)
        }
    }
}

fn shoelace<T: Real>(v: &[VecN<T>]) -> T {
    let n = v.len();
    let mut s = T::zero();
    for i in 0..n {
        let (a, b) = (&v[i], &v[(i + 1) % n]);
        s = s + a[0] * b[1] - b[0] * a[1];
    }
    s * T::half()
}

fn linear_uniform<T: Real>(v: &[VecN<T>], n: usize) -> Vec<VecN<T>> {
    let mut cum = vec![T::zero()];
    for w in v.windows(2) {
        let last = *cum.last().expect("non-empty");
        cum.push(last + w[0].distance(&w[1]));
    }
    let total = *cum.last().expect("non-empty");
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        if i + 1 == n {
            out.push(v[v.len() - 1].clone());
            break;
        }
        let s = total * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1);
        while k + 2 < cum.len() && cum[k + 1] < s {
            k += 1;
        }
        let f = (s - cum[k]) / (cum[k + 1] - cum[k]);
        out.push(v[k].add_scaled(f, &(&v[k + 1] - &v[k])));
    }
    out
}

/// Periodic cubic spline with chord-length knots.
struct PeriodicSpline<T> {
    knots: Vec<T>,
    points: Vec<VecN<T>>,
    /// Second derivatives at the knots.
    m: Vec<VecN<T>>,
}

impl<T: Real> PeriodicSpline<T> {
    fn new(points: &[VecN<T>]) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(invalid("periodic spline needs at least 3 points"));
        }
        let h: Vec<T> = (0..n).map(|i| points[i].distance(&points[(i + 1) % n])).collect();
        let mut knots = vec![T::zero()];
        for &hi in &h {
            let last = *knots.last().expect("non-empty");
            knots.push(last + hi);
        }
        let dim = points[0].dim();
        let six = T::lit(6.0);
        let lower: Vec<T> = (0..n).map(|i| h[(i + n - 1) % n]).collect();
        let diag: Vec<T> = (0..n).map(|i| T::two() * (h[(i + n - 1) % n] + h[i])).collect();
        let upper: Vec<T> = h.clone();
        let mut m = vec![VecN::zeros(dim); n];
        for j in 0..dim {
            let rhs: Vec<T> = (0..n)
                .map(|i| {
                    let (prev, next) = ((i + n - 1) % n, (i + 1) % n);
                    six * ((points[next][j] - points[i][j]) / h[i]
                        - (points[i][j] - points[prev][j]) / h[prev])
                })
                .collect();
            let sol = solve_cyclic(&lower, &diag, &upper, &rhs);
            for (mi, s) in m.iter_mut().zip(sol) {
                mi[j] = s;
            }
        }
        Ok(Self {
            knots,
            points: points.to_vec(),
            m,
        })
    }

    fn segment(&self, i: usize) -> (T, &VecN<T>, &VecN<T>, &VecN<T>, &VecN<T>) {
        let n = self.points.len();
        let h = self.knots[i + 1] - self.knots[i];
        (h, &self.points[i], &self.points[(i + 1) % n], &self.m[i], &self.m[(i + 1) % n])
    }

    fn eval(&self, i: usize, t: T) -> VecN<T> {
        let (h, y0, y1, m0, m1) = self.segment(i);
        let six = T::lit(6.0);
        let a = h - t;
        let mut out = Vec::with_capacity(y0.dim());
        for j in 0..y0.dim() {
            out.push(
                m0[j] * a * a * a / (six * h)
                    + m1[j] * t * t * t / (six * h)
                    + (y0[j] / h - m0[j] * h / six) * a
                    + (y1[j] / h - m1[j] * h / six) * t,
            );
        }
        VecN::from_vec_unchecked(out)
    }

    fn speed(&self, i: usize, t: T) -> T {
        let (h, y0, y1, m0, m1) = self.segment(i);
        let six = T::lit(6.0);
        let a = h - t;
        let mut s = T::zero();
        for j in 0..y0.dim() {
            let d = -m0[j] * a * a / (T::two() * h) + m1[j] * t * t / (T::two() * h)
                + (y1[j] - y0[j]) / h
                - (m1[j] - m0[j]) * h / six;
            s = s + d * d;
        }
        s.sqrt()
    }

    /// Arc length of segment `i` on `[0, t]`, five-point Gauss–Legendre.
    fn arc(&self, i: usize, t: T) -> T {
        const X: [f64; 5] = [
            0.0,
            -0.538_469_310_105_683_1,
            0.538_469_310_105_683_1,
            -0.906_179_845_938_664,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
            0.236_926_885_056_189_1,
        ];
        let half = t * T::half();
        X.iter().zip(W).fold(T::zero(), |s, (&x, w)| {
            s + T::lit(w) * self.speed(i, half + half * T::lit(x))
        }) * half
    }

    fn uniform_points(&self, n: usize) -> Result<Vec<VecN<T>>> {
        if n < 3 {
            return Err(invalid("closed polygon needs at least 3 vertices"));
        }
        let segs = self.points.len();
        let mut cum = vec![T::zero()];
        for i in 0..segs {
            let h = self.knots[i + 1] - self.knots[i];
            let last = *cum.last().expect("non-empty");
            cum.push(last + self.arc(i, h));
        }
        let total = cum[segs];
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        for i in 0..n {
            let s = total * T::from_usize_lossy(i) / T::from_usize_lossy(n);
            while k + 1 < segs && cum[k + 1] <= s {
                k += 1;
            }
            let target = s - cum[k];
            let h = self.knots[k + 1] - self.knots[k];
            // Newton on the local arc length, safeguarded to stay inside the segment.
            let seg_len = cum[k + 1] - cum[k];
            let mut t = h * target / seg_len;
            for _ in 0..20 {
                let f = self.arc(k, t) - target;
                let d = self.speed(k, t);
                if !(d > T::zero()) {
                    break;
                }
                let next = (t - f / d).max(T::zero()).min(h);
                let done = (next - t).abs() <= T::epsilon() * T::lit(8.0) * h;
                t = next;
                if done {
                    break;
                }
            }
            out.push(self.eval(k, t));
        }
        Ok(out)
    }
}

/// Cyclic tridiagonal solve (Sherman–Morrison over the Thomas algorithm). Row `i` reads
/// `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` with wrap-around.
fn solve_cyclic<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] = diag[0] - gamma;
    b[n - 1] = diag[n - 1] - upper[n - 1] * lower[0] / gamma;
    let x = thomas(lower, &b, upper, rhs);
    let mut u = vec![T::zero(); n];
    u[0] = gamma;
    u[n - 1] = upper[n - 1];
    let z = thomas(lower, &b, upper, &u);
    let fact = (x[0] + lower[0] * x[n - 1] / gamma) / (T::one() + z[0] + lower[0] * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(&xi, &zi)| xi - fact * zi).collect()
}

fn thomas<T: Real>(a: &[T], b: &[T], c: &[T], d: &[T]) -> Vec<T> {
    let n = b.len();
    let mut cp = vec![T::zero(); n];
    let mut dp = vec![T::zero(); n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Discrete curvature vector at every vertex (zero at the ends of an open polygon).
pub fn curvature_vectors<T: Real>(curve: &PolyCurve<T>) -> Vec<VecN<T>> {
    let v = curve.vertices();
    let n = v.len();
    let dim = curve.dim();
    (0..n)
        .map(|i| {
            if !curve.closed() && (i == 0 || i + 1 == n) {
                return VecN::zeros(dim);
            }
            let (prev, next) = (&v[(i + n - 1) % n], &v[(i + 1) % n]);
            let d1 = (next - prev) * T::half();
            let d2 = &(next - &v[i]) - &(&v[i] - prev);
            let g = d1.norm_squared();
            let tangential = d2.dot(&d1) / (g * g);
            (d2 * (T::one() / g)).add_scaled(-tangential, &d1)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSettings<T> {
    pub dt_max: T,
    /// Resample when `max edge / min edge` exceeds `resample_ratio`. Closed curves only.
    pub resample: bool,
    pub resample_ratio: T,
    /// Stop when `|area| < extinction_fraction * |initial area|` (closed planar curves).
    pub extinction_fraction: T,
    /// Time between stored snapshots; the initial and final states are always stored.
    pub snapshot_interval: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for FlowSettings<T> {
    fn default() -> Self {
        Self {
            dt_max: T::lit(1e-3),
            resample: true,
            resample_ratio: T::lit(1.1),
            extinction_fraction: T::lit(1e-4),
            snapshot_interval: None,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FlowStatus {
    Completed,
    Extinct,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot<T> {
    pub time: T,
    pub curve: PolyCurve<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowRun<T> {
    pub snapshots: Vec<Snapshot<T>>,
    /// Time after every accepted step, starting with `0`.
    pub step_times: Vec<T>,
    pub lengths: Vec<T>,
    /// Signed areas, present for closed planar curves.
    pub areas: Option<Vec<T>>,
    pub resamplings: usize,
    pub status: FlowStatus,
}

impl<T: Real> FlowRun<T> {
    pub fn final_time(&self) -> T {
        *self.step_times.last().expect("at least the initial time")
    }

    pub fn final_curve(&self) -> &PolyCurve<T> {
        &self.snapshots.last().expect("initial snapshot").curve
    }

    /// Snapshot at exactly `t`, if one was stored.
    pub fn snapshot_at(&self, t: T) -> Option<&PolyCurve<T>> {
        self.snapshots.iter().find(|s| s.time == t).map(|s| &s.curve)
    }
}

/// Evolves `curve` to `t_end`. Numerical trouble (edge collapse, non-finite vertices)
/// ends the run with [`FlowStatus::Failed`] and the last good snapshot; only invalid
/// arguments produce an `Err`.
pub fn evolve<T: Real>(curve: &PolyCurve<T>, t_end: T, settings: &FlowSettings<T>) -> Result<FlowRun<T>> {
    if !(t_end > T::zero()) || !t_end.is_finite() {
        return Err(invalid(format!("t_end must be positive, got {t_end}")));
    }
    if !(settings.dt_max > T::zero()) {
        return Err(invalid("dt_max must be positive"));
    }
    if let Some(iv) = settings.snapshot_interval {
        if !(iv > T::zero()) {
            return Err(invalid("snapshot interval must be positive"));
        }
    }
    let area0 = curve.signed_area();
    let mut run = FlowRun {
        snapshots: vec![Snapshot {
            time: T::zero(),
            curve: curve.clone(),
        }],
        step_times: vec![T::zero()],
        lengths: vec![curve.length()],
        areas: area0.map(|a| vec![a]),
        resamplings: 0,
        status: FlowStatus::Completed,
    };
    let quarter = T::lit(0.25);
    let mut current = curve.clone();
    let mut t = T::zero();
    let mut next_snapshot = settings.snapshot_interval;
    let mut n_snapshots = 1usize;
    let mut steps = 0usize;
    while t < t_end {
        if steps >= settings.max_steps {
            run.status = FlowStatus::Failed {
                reason: format!("step limit {} reached at t = {t}", settings.max_steps),
            };
            break;
        }
        steps += 1;
        let h = current.min_edge();
        let mut dt = settings.dt_max.min(quarter * h * h).min(t_end - t);
        let mut snap = false;
        if let Some(ts) = next_snapshot {
            if ts < t_end && t + dt >= ts {
                dt = ts - t;
                snap = true;
            }
        }
        let vel = curvature_vectors(&current);
        let moved: Vec<VecN<T>> = current
            .vertices()
            .iter()
            .zip(&vel)
            .map(|(p, v)| p.add_scaled(dt, v))
            .collect();
        t = if snap { next_snapshot.expect("snap implies a target") } else if dt == t_end - t { t_end } else { t + dt };
        if moved.iter().any(|p| !p.is_finite()) {
            run.status = FlowStatus::Failed {
                reason: format!("non-finite vertex at t = {t}"),
            };
            break;
        }
        let mut next = match PolyCurve::new(moved, current.closed()) {
            Ok(c) => c,
            Err(_) => {
                run.status = FlowStatus::Failed {
                    reason: format!("edge collapsed below {MIN_EDGE:e} at t = {t}"),
                };
                break;
            }
        };
        if settings.resample && next.closed() && next.max_edge() > settings.resample_ratio * next.min_edge() {
            match next.resample(next.len()) {
                Ok(r) => {
                    next = r;
                    run.resamplings += 1;
                }
                Err(e) => {
                    run.status = FlowStatus::Failed {
                        reason: format!("resampling failed at t = {t}: {e}"),
                    };
                    break;
                }
            }
        }
        current = next;
        run.step_times.push(t);
        run.lengths.push(current.length());
        let area = current.signed_area();
        if let (Some(list), Some(a)) = (run.areas.as_mut(), area) {
            list.push(a);
        }
        if snap {
            run.snapshots.push(Snapshot {
                time: t,
                curve: current.clone(),
            });
            n_snapshots += 1;
            next_snapshot = settings.snapshot_interval.map(|iv| iv * T::from_usize_lossy(n_snapshots));
        }
        if let (Some(a0), Some(a)) = (area0, area) {
            if a.abs() < settings.extinction_fraction * a0.abs() {
                run.status = FlowStatus::Extinct;
                break;
            }
        }
    }
    if run.snapshots.last().map(|s| s.time) != Some(t) {
        run.snapshots.push(Snapshot { time: t, curve: current });
    }
    Ok(run)
}

/// `(dL/dt numeric, dL/dt formula)` for the deformation `p_i + t V_i`.
///
/// Numeric: central difference with `eps = 1e-6 * diameter`. Formula: `-sum <V_i, k_i> ds_i`
/// with `k_i` the discrete curvature vector and `ds_i` the mean of the adjacent edges.
pub fn length_variation_check<T: Real>(curve: &PolyCurve<T>, field: &[VecN<T>]) -> Result<(T, T)> {
    check_field(curve, field)?;
    let eps = T::lit(1e-6) * curve.diameter();
    let shifted = |s: T| -> Result<T> {
        let v: Vec<VecN<T>> = curve.vertices().iter().zip(field).map(|(p, f)| p.add_scaled(s, f)).collect();
        Ok(PolyCurve::new(v, true)?.length())
    };
    let numeric = (shifted(eps)? - shifted(-eps)?) / (T::two() * eps);
    let k = curvature_vectors(curve);
    let e = curve.edge_lengths();
    let n = curve.len();
    let mut formula = T::zero();
    for i in 0..n {
        let ds = (e[(i + n - 1) % n] + e[i]) * T::half();
        formula = formula - field[i].dot(&k[i]) * ds;
    }
    Ok((numeric, formula))
}

/// `(dA/dt numeric, dA/dt formula)` for a closed planar polygon.
///
/// Formula: `-sum <V_i, N_i> ds_i` with the left normal `N = (-y_s, x_s)` discretized as
/// `N_i ds_i = J (p_{i+1} - p_{i-1}) / 2`. With this normal, the counter-clockwise
/// orientation makes the sign negative.
pub fn area_variation_check<T: Real>(curve: &PolyCurve<T>, field: &[VecN<T>]) -> Result<(T, T)> {
    check_field(curve, field)?;
    if curve.dim() != 2 {
        return Err(precondition("area variation needs a planar polygon"));
    }
    let eps = T::lit(1e-6) * curve.diameter();
    let shifted = |s: T| -> T {
        let v: Vec<VecN<T>> = curve.vertices().iter().zip(field).map(|(p, f)| p.add_scaled(s, f)).collect();
        shoelace(&v)
    };
    let numeric = (shifted(eps) - shifted(-eps)) / (T::two() * eps);
    let v = curve.vertices();
    let n = v.len();
    let mut formula = T::zero();
    for i in 0..n {
        let d = &v[(i + 1) % n] - &v[(i + n - 1) % n];
        let nds = VecN::from_vec_unchecked(vec![-d[1] * T::half(), d[0] * T::half()]);
        formula = formula - field[i].dot(&nds);
    }
    Ok((numeric, formula))
}

fn check_field<T: Real>(curve: &PolyCurve<T>, field: &[VecN<T>]) -> Result<()> {
    if !curve.closed() {
        return Err(precondition("first variation checks need a closed polygon"));
    }
    if field.len() != curve.len() || field.iter().any(|f| f.dim() != curve.dim()) {
        return Err(invalid("variation field must have one vector per vertex"));
    }
    Ok(())
}

/// `sqrt(1 - 2t)`, the shrinker homothety factor.
pub fn homothety_scale<T: Real>(t: T) -> Result<T> {
    let x = T::one() - T::two() * t;
    if !(x > T::zero()) {
        return Err(Error::Domain {
            t: t.to_f64_lossy(),
            defect: x.to_f64_lossy(),
        });
    }
    Ok(x.sqrt())
}

/// `1 / sqrt(1 - 2t)`, the rescaling that freezes a shrinker.
pub fn homothety_rescaling<T: Real>(t: T) -> Result<T> {
    Ok(T::one() / homothety_scale(t)?)
}

/// `(t, c(t)^2 A(t))` over the accepted steps of a closed planar run.
pub fn rescaled_flow_area<T: Real>(run: &FlowRun<T>, c: impl Fn(T) -> Result<T>) -> Result<Vec<(T, T)>> {
    let areas = run
        .areas
        .as_ref()
        .ok_or_else(|| precondition("rescaled areas need a closed planar run"))?;
    run.step_times
        .iter()
        .zip(areas)
        .map(|(&t, &a)| {
            let k = c(t)?;
            Ok((t, k * k * a))
        })
        .collect()
}

/// Symmetric Hausdorff distance between two polygons, measured from vertices to edges.
pub fn hausdorff<T: Real>(a: &PolyCurve<T>, b: &PolyCurve<T>) -> T {
    one_sided(a, b).max(one_sided(b, a))
}

fn one_sided<T: Real>(from: &PolyCurve<T>, to: &PolyCurve<T>) -> T {
    let v = to.vertices();
    let n = v.len();
    from.vertices().iter().fold(T::zero(), |worst, p| {
        let best = (0..to.n_edges()).fold(T::infinity(), |m, i| {
            m.min(segment_distance(p, &v[i], &v[(i + 1) % n]))
        });
        worst.max(best)
    })
}

fn segment_distance<T: Real>(p: &VecN<T>, a: &VecN<T>, b: &VecN<T>) -> T {
    let ab = b - a;
    let l2 = ab.norm_squared();
    let f = if l2 > T::zero() {
        ((p - a).dot(&ab) / l2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    p.distance(&a.add_scaled(f, &ab))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn circle(n: usize, r: f64) -> PolyCurve<f64> {
        let v = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                VecN::from_slice(&[r * t.cos(), r * t.sin()]).unwrap()
            })
            .collect();
        PolyCurve::new(v, true).unwrap()
    }

    fn mean_radius(c: &PolyCurve<f64>) -> f64 {
        let o = c.centroid();
        c.vertices().iter().map(|p| p.distance(&o)).sum::<f64>() / c.len() as f64
    }

    #[test]
    fn polygon_validation() {
        let p = |x: f64, y: f64| VecN::from_slice(&[x, y]).unwrap();
        assert!(PolyCurve::new(vec![p(0.0, 0.0), p(1.0, 0.0)], true).is_err());
        assert!(PolyCurve::new(vec![p(0.0, 0.0), p(0.0, 0.0), p(1.0, 1.0)], true).is_err());
        assert!(PolyCurve::new(vec![p(0.0, 0.0), p(1.0, 0.0)], false).is_ok());
    }

    #[test]
    fn square_area_and_length() {
        let p = |x: f64, y: f64| VecN::from_slice(&[x, y]).unwrap();
        let sq = PolyCurve::new(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)], true).unwrap();
        assert_eq!(sq.signed_area(), Some(1.0));
        assert_eq!(sq.length(), 4.0);
    }

    #[test]
    fn circle_shrinks_like_sqrt() {
        let run = evolve(
            &circle(256, 1.0),
            0.4,
            &FlowSettings {
                snapshot_interval: Some(0.1),
                ..FlowSettings::default()
            },
        )
        .unwrap();
        assert_eq!(run.status, FlowStatus::Completed);
        assert_eq!(run.snapshots.len(), 5);
        for s in &run.snapshots {
            let exact = (1.0 - 2.0 * s.time).sqrt();
            assert!((mean_radius(&s.curve) - exact).abs() / exact <= 1e-3, "t = {}", s.time);
        }
        assert!(run.lengths.windows(2).all(|w| w[1] < w[0]));
        assert!(run.step_times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn open_segment_is_stationary() {
        let pts = (0..20).map(|i| VecN::from_slice(&[i as f64 * 0.1, 0.5 * i as f64 * 0.1]).unwrap()).collect();
        let seg = PolyCurve::new(pts, false).unwrap();
        let run = evolve(&seg, 0.1, &FlowSettings::default()).unwrap();
        let l0 = run.lengths[0];
        assert!(run.lengths.iter().all(|l| (l - l0).abs() <= 1e-10));
    }

    #[test]
    fn circle_extinction() {
        let run = evolve(&circle(128, 1.0), 1.0, &FlowSettings::default()).unwrap();
        assert_eq!(run.status, FlowStatus::Extinct);
        assert!((run.final_time() - 0.5).abs() <= 0.02);
    }

    #[test]
    fn resample_circle_preserves_shape() {
        let c = circle(64, 2.0);
        let r = c.resample(100).unwrap();
        assert_eq!(r.len(), 100);
        for p in r.vertices() {
            assert!((p.norm() - 2.0).abs() <= 1e-5);
        }
        let e = r.edge_lengths();
        let (lo, hi) = (e.iter().cloned().fold(f64::INFINITY, f64::min), e.iter().cloned().fold(0.0, f64::max));
        assert!(hi / lo < 1.0 + 1e-6);
    }

    #[test]
    fn length_variation_on_circle() {
        let c = circle(512, 1.0);
        let inward: Vec<_> = c.vertices().iter().map(|p| -p).collect();
        let (num, form) = length_variation_check(&c, &inward).unwrap();
        assert!((num - form).abs() <= 1e-3 * num.abs());
        assert!((form + TAU).abs() <= 1e-3 * TAU);
        let tangent: Vec<_> = c.vertices().iter().map(|p| VecN::from_slice(&[-p[1], p[0]]).unwrap()).collect();
        let (num, form) = length_variation_check(&c, &tangent).unwrap();
        assert!(num.abs() <= 1e-6 * TAU && form.abs() <= 1e-6 * TAU);
        let shift = vec![VecN::from_slice(&[0.3, -0.7]).unwrap(); 512];
        let (num, form) = length_variation_check(&c, &shift).unwrap();
        assert!(num.abs() <= 1e-6 * TAU && form.abs() <= 1e-6 * TAU);
    }

    #[test]
    fn area_variation_on_circle() {
        let c = circle(512, 1.0);
        let outward: Vec<_> = c.vertices().to_vec();
        let (num, form) = area_variation_check(&c, &outward).unwrap();
        assert!((form - 2.0 * PI).abs() <= 1e-3);
        assert!((num - form).abs() <= 1e-6);
        let rot: Vec<_> = c.vertices().iter().map(|p| VecN::from_slice(&[-p[1], p[0]]).unwrap()).collect();
        let (num, form) = area_variation_check(&c, &rot).unwrap();
        assert!(num.abs() <= 1e-6 && form.abs() <= 1e-12);
    }

    #[test]
    fn rescaling_laws() {
        let run = evolve(&circle(128, 1.0), 0.1, &FlowSettings::default()).unwrap();
        let raw = run.areas.clone().unwrap();
        let one = rescaled_flow_area(&run, |_| Ok(1.0)).unwrap();
        let two = rescaled_flow_area(&run, |_| Ok(2.0)).unwrap();
        for ((a, (_, b)), (_, c)) in raw.iter().zip(&one).zip(&two) {
            assert_eq!(a, b);
            assert_eq!(4.0 * a, *c);
        }
        assert!(matches!(homothety_scale(0.5), Err(Error::Domain { .. })));
        assert!(homothety_rescaling(0.3).is_ok());
    }

    #[test]
    fn hausdorff_of_concentric_circles() {
        let d = hausdorff(&circle(400, 1.0), &circle(400, 1.1));
        assert!((d - 0.1).abs() <= 1e-4);
        assert_eq!(hausdorff(&circle(10, 1.0), &circle(10, 1.0)), 0.0);
    }
}
