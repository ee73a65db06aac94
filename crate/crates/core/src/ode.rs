//! Explicit initial value problem integrators.
//!
//! [`integrate`] is the Dormand–Prince 5(4) embedded pair with its fourth-order continuous
//! extension and zero-crossing event location. [`integrate_fixed`] is the classical
//! fixed-step fourth-order Runge–Kutta method, kept as an independent cross-check.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Default relative tolerance for adaptive integration.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Default absolute tolerance for adaptive integration.
pub const DEFAULT_ABS_TOL: f64 = 1e-12;

type Rhs<'a, T> = Box<dyn Fn(T, &[T], &mut [T]) + 'a>;
type EventFn<'a, T> = Box<dyn Fn(T, &[T]) -> T + 'a>;

/// `y' = f(t, y)`, `y(t0) = y0`, integrated towards `t_end`.
pub struct IvpProblem<'a, T> {
    rhs: Rhs<'a, T>,
    t0: T,
    y0: Vec<T>,
    t_end: T,
}

impl<'a, T: Real> IvpProblem<'a, T> {
    pub fn new(
        t0: T,
        y0: Vec<T>,
        t_end: T,
        rhs: impl Fn(T, &[T], &mut [T]) + 'a,
    ) -> Result<Self> {
        if y0.is_empty() {
            return Err(invalid("initial state is empty"));
        }
        if !(t_end != t0) || !t0.is_finite() || !t_end.is_finite() {
            return Err(invalid("integration span must be finite and non-empty"));
        }
        if y0.iter().any(|y| !y.is_finite()) {
            return Err(invalid("initial state is not finite"));
        }
        Ok(Self {
            rhs: Box::new(rhs),
            t0,
            y0,
            t_end,
        })
    }

    pub fn dimension(&self) -> usize {
        self.y0.len()
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn y0(&self) -> &[T] {
        &self.y0
    }

    fn eval(&self, t: T, y: &[T], out: &mut [T]) -> Result<()> {
        (self.rhs)(t, y, out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                t: t.to_f64_lossy(),
                state: y.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }
        Ok(())
    }
}

/// Adaptive step settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(DEFAULT_REL_TOL),
            abs_tol: T::lit(DEFAULT_ABS_TOL),
            max_steps: 2_000_000,
        }
    }
}

impl<T: Real> Tolerances<T> {
    pub fn new(rel_tol: T, abs_tol: T) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    /// Both tolerances multiplied by `factor`, floored at `100 eps`.
    pub fn scaled(&self, factor: T) -> Self {
        let floor = T::epsilon() * T::lit(100.0);
        Self {
            rel_tol: (self.rel_tol * factor).max(floor),
            abs_tol: (self.abs_tol * factor).max(floor),
            max_steps: self.max_steps,
        }
    }

    fn validate(&self) -> Result<()> {
        let cap = T::lit(1e-2);
        let ok = |x: T| x > T::zero() && x <= cap;
        if !ok(self.rel_tol) || !ok(self.abs_tol) {
            return Err(invalid(format!(
                "tolerances must lie in (0, 1e-2], got rel={} abs={}",
                self.rel_tol, self.abs_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Any,
}

/// Zero crossing of a scalar function of the state.
pub struct EventSpec<'a, T> {
    event_fn: EventFn<'a, T>,
    pub direction: Direction,
    pub terminal: bool,
}

impl<'a, T: Real> EventSpec<'a, T> {
    pub fn new(direction: Direction, terminal: bool, f: impl Fn(T, &[T]) -> T + 'a) -> Self {
        Self {
            event_fn: Box::new(f),
            direction,
            terminal,
        }
    }

    fn crosses(&self, g_old: T, g_new: T) -> bool {
        let z = T::zero();
        let rising = g_old < z && g_new >= z;
        let falling = g_old > z && g_new <= z;
        match self.direction {
            Direction::Rising => rising,
            Direction::Falling => falling,
            Direction::Any => rising || falling,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventHit<T> {
    /// Position of the event in the list passed to [`integrate`].
    pub index: usize,
    pub t: T,
    pub state: Vec<T>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone)]
enum Segment<T> {
    /// Dormand–Prince continuous extension coefficients.
    Dopri { t_old: T, h: T, r: [Vec<T>; 5] },
    /// Cubic Hermite interpolant from endpoint states and slopes.
    Hermite {
        t_old: T,
        h: T,
        y0: Vec<T>,
        y1: Vec<T>,
        f0: Vec<T>,
        f1: Vec<T>,
    },
}

impl<T: Real> Segment<T> {
    fn eval(&self, t: T, out: &mut [T]) {
        match self {
            Segment::Dopri { t_old, h, r } => {
                let s = (t - *t_old) / *h;
                let s1 = T::one() - s;
                for i in 0..out.len() {
                    out[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
                }
            }
            Segment::Hermite {
                t_old,
                h,
                y0,
                y1,
                f0,
                f1,
            } => {
                let s = (t - *t_old) / *h;
                let (s2, s3) = (s * s, s * s * s);
                let two = T::two();
                let three = T::lit(3.0);
                let h00 = two * s3 - three * s2 + T::one();
                let h10 = s3 - two * s2 + s;
                let h01 = -two * s3 + three * s2;
                let h11 = s3 - s2;
                for i in 0..out.len() {
                    out[i] = h00 * y0[i] + *h * h10 * f0[i] + h01 * y1[i] + *h * h11 * f1[i];
                }
            }
        }
    }
}

/// Accepted steps plus a continuous interpolant.
#[derive(Debug, Clone)]
pub struct IvpSolution<T> {
    times: Vec<T>,
    states: Vec<Vec<T>>,
    segments: Vec<Segment<T>>,
    pub step_stats: StepStats,
}

impl<T: Real> IvpSolution<T> {
    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<T>] {
        &self.states
    }

    pub fn t_start(&self) -> T {
        self.times[0]
    }

    pub fn t_final(&self) -> T {
        *self.times.last().expect("solution has at least one node")
    }

    pub fn final_state(&self) -> &[T] {
        self.states.last().expect("solution has at least one node")
    }

    pub fn dimension(&self) -> usize {
        self.states[0].len()
    }

    fn forward(&self) -> bool {
        self.t_final() >= self.t_start()
    }

    /// True when `t` lies inside the covered span.
    pub fn covers(&self, t: T) -> bool {
        let (lo, hi) = self.bounds();
        t >= lo && t <= hi
    }

    /// `(min, max)` of the covered span.
    pub fn bounds(&self) -> (T, T) {
        let (a, b) = (self.t_start(), self.t_final());
        (a.min(b), a.max(b))
    }

    /// State at time `t`. Returns the stored state bit-for-bit at accepted nodes.
    pub fn interpolate(&self, t: T) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.dimension()];
        self.interpolate_into(t, &mut out)?;
        Ok(out)
    }

    pub fn interpolate_into(&self, t: T, out: &mut [T]) -> Result<()> {
        if !self.covers(t) {
            let (lo, hi) = self.bounds();
            return Err(Error::OutOfRange {
                t: t.to_f64_lossy(),
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        let forward = self.forward();
        let search = self.times.binary_search_by(|p| {
            let ord = p.partial_cmp(&t).expect("finite times");
            if forward {
                ord
            } else {
                ord.reverse()
            }
        });
        match search {
            Ok(i) => out.copy_from_slice(&self.states[i]),
            Err(i) => {
                let seg = i.clamp(1, self.segments.len()) - 1;
                self.segments[seg].eval(t, out);
            }
        }
        Ok(())
    }
}

/// Solution on both sides of an initial time `t0`: a forward piece on `[t0, hi]` and a
/// backward piece on `[lo, t0]`, either of which may be absent.
#[derive(Debug, Clone)]
pub struct TwoSided<T> {
    pub t0: T,
    pub forward: Option<IvpSolution<T>>,
    pub backward: Option<IvpSolution<T>>,
}

impl<T: Real> TwoSided<T> {
    pub fn bounds(&self) -> (T, T) {
        let lo = self.backward.as_ref().map_or(self.t0, |b| b.t_final());
        let hi = self.forward.as_ref().map_or(self.t0, |f| f.t_final());
        (lo, hi)
    }

    pub fn interpolate(&self, t: T) -> Result<Vec<T>> {
        let (first, second) = if t >= self.t0 {
            (&self.forward, &self.backward)
        } else {
            (&self.backward, &self.forward)
        };
        first
            .as_ref()
            .or(second.as_ref())
            .ok_or_else(|| invalid("empty trajectory"))?
            .interpolate(t)
    }

    /// Accepted nodes in increasing time order.
    pub fn nodes(&self) -> Vec<(T, &[T])> {
        let mut out: Vec<(T, &[T])> = Vec::new();
        if let Some(b) = &self.backward {
            for (t, y) in b.times().iter().zip(b.states()).rev() {
                out.push((*t, y.as_slice()));
            }
        }
        if let Some(f) = &self.forward {
            let skip = usize::from(self.backward.is_some());
            for (t, y) in f.times().iter().zip(f.states()).skip(skip) {
                out.push((*t, y.as_slice()));
            }
        }
        out
    }

    pub fn step_stats(&self) -> StepStats {
        let mut s = StepStats::default();
        for sol in self.forward.iter().chain(&self.backward) {
            s.accepted += sol.step_stats.accepted;
            s.rejected += sol.step_stats.rejected;
            s.rhs_evals += sol.step_stats.rhs_evals;
        }
        s
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combine<T: Real>(out: &mut [T], y: &[T], h: T, terms: &[(f64, &[T])]) {
    for i in 0..out.len() {
        let mut acc = T::zero();
        for &(c, k) in terms {
            acc = acc + T::lit(c) * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn scaled_norm<T: Real>(v: &[T], y: &[T], tol: &Tolerances<T>) -> T {
    let n = T::from_usize_lossy(v.len());
    (v.iter()
        .zip(y)
        .fold(T::zero(), |s, (&e, &yi)| {
            let sk = tol.abs_tol + tol.rel_tol * yi.abs();
            s + (e / sk) * (e / sk)
        })
        / n)
        .sqrt()
}

fn initial_step<T: Real>(
    problem: &IvpProblem<'_, T>,
    f0: &[T],
    tol: &Tolerances<T>,
    span: T,
    stats: &mut StepStats,
) -> Result<T> {
    let y0 = &problem.y0;
    let d0 = scaled_norm(y0, y0, tol);
    let d1 = scaled_norm(f0, y0, tol);
    let tiny = T::lit(1e-5);
    let mut h0 = if d0 < tiny || d1 < tiny {
        T::lit(1e-6)
    } else {
        T::lit(0.01) * d0 / d1
    };
    h0 = h0.min(span.abs());
    let dir = span.signum();
    let y1: Vec<T> = y0.iter().zip(f0).map(|(&y, &f)| y + dir * h0 * f).collect();
    let mut f1 = vec![T::zero(); y0.len()];
    problem.eval(problem.t0 + dir * h0, &y1, &mut f1)?;
    stats.rhs_evals += 1;
    let diff: Vec<T> = f1.iter().zip(f0).map(|(&a, &b)| a - b).collect();
    let d2 = scaled_norm(&diff, y0, tol) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= T::lit(1e-15) {
        (h0 * T::lit(1e-3)).max(T::lit(1e-6))
    } else {
        (T::lit(0.01) / dmax).powf(T::lit(0.2))
    };
    Ok((T::lit(100.0) * h0).min(h1).min(span.abs()))
}

/// Adaptive integration with optional event detection.
///
/// Events are located by bisection on the dense output to `1e-12 * |t_end - t0|`. A terminal
/// event ends the integration at the event time; the returned solution then covers
/// `[t0, t_event]`.
pub fn integrate<T: Real>(
    problem: &IvpProblem<'_, T>,
    tol: &Tolerances<T>,
    events: &[EventSpec<'_, T>],
) -> Result<(IvpSolution<T>, Vec<EventHit<T>>)> {
    tol.validate()?;
    let n = problem.dimension();
    let span = problem.t_end - problem.t0;
    let dir = span.signum();
    let event_tol = T::lit(1e-12) * span.abs();
    let mut stats = StepStats::default();

    let mut t = problem.t0;
    let mut y = problem.y0.clone();
    let mut k1 = vec![T::zero(); n];
    problem.eval(t, &y, &mut k1)?;
    stats.rhs_evals += 1;
    let mut h = initial_step(problem, &k1, tol, span, &mut stats)? * dir;

    let mut ks: Vec<Vec<T>> = (0..6).map(|_| vec![T::zero(); n]).collect();
    let mut ytmp = vec![T::zero(); n];
    let mut ynew = vec![T::zero(); n];
    let mut err = vec![T::zero(); n];
    let mut solution = IvpSolution {
        times: vec![t],
        states: vec![y.clone()],
        segments: Vec::new(),
        step_stats: stats,
    };
    let mut g_old: Vec<T> = events.iter().map(|e| (e.event_fn)(t, &y)).collect();
    let mut hits = Vec::new();
    let mut last_rejected = false;

    loop {
        if (problem.t_end - t) * dir <= T::zero() {
            break;
        }
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::TooManySteps {
                t: t.to_f64_lossy(),
                max_steps: tol.max_steps,
            });
        }
        let remaining = problem.t_end - t;
        let mut last = false;
        if (h - remaining) * dir >= T::zero() {
            h = remaining;
            last = true;
        }
        if h.abs() <= T::lit(16.0) * T::epsilon() * t.abs().max(T::one()) {
            return Err(Error::StepSizeUnderflow {
                t: t.to_f64_lossy(),
                state: y.iter().map(|v| v.to_f64_lossy()).collect(),
            });
        }

        let (k2, rest) = ks.split_at_mut(1);
        let k2 = &mut k2[0];
        let (k3, rest) = rest.split_at_mut(1);
        let k3 = &mut k3[0];
        let (k4, rest) = rest.split_at_mut(1);
        let k4 = &mut k4[0];
        let (k5, rest) = rest.split_at_mut(1);
        let k5 = &mut k5[0];
        let (k6, k7) = rest.split_at_mut(1);
        let k6 = &mut k6[0];
        let k7 = &mut k7[0];

        combine(&mut ytmp, &y, h, &[(A21, &k1)]);
        problem.eval(t + T::lit(C2) * h, &ytmp, k2)?;
        combine(&mut ytmp, &y, h, &[(A31, &k1), (A32, k2)]);
        problem.eval(t + T::lit(C3) * h, &ytmp, k3)?;
        combine(&mut ytmp, &y, h, &[(A41, &k1), (A42, k2), (A43, k3)]);
        problem.eval(t + T::lit(C4) * h, &ytmp, k4)?;
        combine(&mut ytmp, &y, h, &[(A51, &k1), (A52, k2), (A53, k3), (A54, k4)]);
        problem.eval(t + T::lit(C5) * h, &ytmp, k5)?;
        combine(
            &mut ytmp,
            &y,
            h,
            &[(A61, &k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
        );
        let t_new = if last { problem.t_end } else { t + h };
        problem.eval(t_new, &ytmp, k6)?;
        combine(
            &mut ynew,
            &y,
            h,
            &[(A71, &k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)],
        );
        problem.eval(t_new, &ynew, k7)?;
        stats.rhs_evals += 6;

        for i in 0..n {
            err[i] = h
                * (T::lit(E1) * k1[i]
                    + T::lit(E3) * k3[i]
                    + T::lit(E4) * k4[i]
                    + T::lit(E5) * k5[i]
                    + T::lit(E6) * k6[i]
                    + T::lit(E7) * k7[i]);
        }
        let mut sum = T::zero();
        for i in 0..n {
            let sk = tol.abs_tol + tol.rel_tol * y[i].abs().max(ynew[i].abs());
            sum = sum + (err[i] / sk) * (err[i] / sk);
        }
        let err_norm = (sum / T::from_usize_lossy(n)).sqrt();

        if !(err_norm <= T::one()) {
            stats.rejected += 1;
            let fac = (T::lit(0.9) * err_norm.powf(T::lit(-0.2))).max(T::lit(0.2));
            h = h * fac.min(T::one());
            last_rejected = true;
            continue;
        }

        // Accepted.
        stats.accepted += 1;
        let mut r: [Vec<T>; 5] = std::array::from_fn(|_| vec![T::zero(); n]);
        for i in 0..n {
            let ydiff = ynew[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            r[0][i] = y[i];
            r[1][i] = ydiff;
            r[2][i] = bspl;
            r[3][i] = ydiff - h * k7[i] - bspl;
            r[4][i] = h
                * (T::lit(D1) * k1[i]
                    + T::lit(D3) * k3[i]
                    + T::lit(D4) * k4[i]
                    + T::lit(D5) * k5[i]
                    + T::lit(D6) * k6[i]
                    + T::lit(D7) * k7[i]);
        }
        let segment = Segment::Dopri { t_old: t, h, r };

        // Events on [t, t_new].
        let mut terminal_at: Option<(T, Vec<T>)> = None;
        let mut step_hits = Vec::new();
        for (idx, ev) in events.iter().enumerate() {
            let g_new = (ev.event_fn)(t_new, &ynew);
            if ev.crosses(g_old[idx], g_new) {
                let (te, ye) = bisect_event(ev, &segment, t, g_old[idx], t_new, g_new, event_tol, n);
                if ev.terminal {
                    let earlier = terminal_at
                        .as_ref()
                        .is_none_or(|(tt, _)| (te - *tt) * dir < T::zero());
                    if earlier {
                        terminal_at = Some((te, ye.clone()));
                    }
                }
                step_hits.push(EventHit {
                    index: idx,
                    t: te,
                    state: ye,
                });
            }
            g_old[idx] = g_new;
        }
        step_hits.sort_by(|a, b| {
            let o = a.t.partial_cmp(&b.t).expect("finite event times");
            if dir > T::zero() {
                o
            } else {
                o.reverse()
            }
        });

        solution.segments.push(segment);
        if let Some((te, ye)) = terminal_at {
            hits.extend(step_hits.into_iter().filter(|hit| (hit.t - te) * dir <= T::zero()));
            if te != t {
                solution.times.push(te);
                solution.states.push(ye);
            } else {
                solution.segments.pop();
            }
            solution.step_stats = stats;
            return Ok((solution, hits));
        }
        hits.extend(step_hits);

        solution.times.push(t_new);
        solution.states.push(ynew.clone());
        t = t_new;
        std::mem::swap(&mut y, &mut ynew);
        std::mem::swap(&mut k1, k7);

        let mut fac = T::lit(0.9) * err_norm.max(T::lit(1e-10)).powf(T::lit(-0.2));
        fac = fac.clamp(T::lit(0.2), T::lit(5.0));
        if last_rejected {
            fac = fac.min(T::one());
        }
        last_rejected = false;
        h = h * fac;
    }
    solution.step_stats = stats;
    Ok((solution, hits))
}

#[allow(clippy::too_many_arguments)]
fn bisect_event<T: Real>(
    ev: &EventSpec<'_, T>,
    segment: &Segment<T>,
    mut ta: T,
    mut ga: T,
    mut tb: T,
    gb: T,
    time_tol: T,
    n: usize,
) -> (T, Vec<T>) {
    let mut y = vec![T::zero(); n];
    let mut yb = vec![T::zero(); n];
    segment.eval(tb, &mut yb);
    let mut gb = gb;
    for _ in 0..200 {
        if (tb - ta).abs() <= time_tol {
            break;
        }
        let tm = ta + (tb - ta) * T::half();
        if tm == ta || tm == tb {
            break;
        }
        segment.eval(tm, &mut y);
        let gm = (ev.event_fn)(tm, &y);
        if ev.crosses(ga, gm) {
            tb = tm;
            gb = gm;
            yb.copy_from_slice(&y);
        } else {
            ta = tm;
            ga = gm;
        }
    }
    let _ = gb;
    (tb, yb)
}

/// Classical fourth-order Runge–Kutta with `n_steps` equal steps. The interpolant is the
/// cubic Hermite spline through the nodes.
pub fn integrate_fixed<T: Real>(problem: &IvpProblem<'_, T>, n_steps: usize) -> Result<IvpSolution<T>> {
    if n_steps == 0 {
        return Err(invalid("n_steps must be positive"));
    }
    let n = problem.dimension();
    let h = (problem.t_end - problem.t0) / T::from_usize_lossy(n_steps);
    let mut stats = StepStats::default();
    let mut y = problem.y0.clone();
    let mut f0 = vec![T::zero(); n];
    problem.eval(problem.t0, &y, &mut f0)?;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut slopes = Vec::with_capacity(n_steps + 1);
    times.push(problem.t0);
    states.push(y.clone());
    let (mut k2, mut k3, mut k4) = (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    let mut ytmp = vec![T::zero(); n];
    // Kahan compensation for the accumulated state.
    let mut carry = vec![T::zero(); n];
    let half = T::half();
    let sixth = T::one() / T::lit(6.0);
    for step in 0..n_steps {
        let t = problem.t0 + h * T::from_usize_lossy(step);
        for i in 0..n {
            ytmp[i] = y[i] + half * h * f0[i];
        }
        problem.eval(t + half * h, &ytmp, &mut k2)?;
        for i in 0..n {
            ytmp[i] = y[i] + half * h * k2[i];
        }
        problem.eval(t + half * h, &ytmp, &mut k3)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * k3[i];
        }
        let t_next = if step + 1 == n_steps {
            problem.t_end
        } else {
            problem.t0 + h * T::from_usize_lossy(step + 1)
        };
        problem.eval(t_next, &ytmp, &mut k4)?;
        for i in 0..n {
            let incr = h * sixth * (f0[i] + T::two() * (k2[i] + k3[i]) + k4[i]) - carry[i];
            let sum = y[i] + incr;
            carry[i] = (sum - y[i]) - incr;
            y[i] = sum;
        }
        slopes.push(f0.clone());
        problem.eval(t_next, &y, &mut f0)?;
        stats.rhs_evals += 4;
        stats.accepted += 1;
        times.push(t_next);
        states.push(y.clone());
    }
    slopes.push(f0);
    let segments = (0..n_steps)
        .map(|i| Segment::Hermite {
            t_old: times[i],
            h: times[i + 1] - times[i],
            y0: states[i].clone(),
            y1: states[i + 1].clone(),
            f0: slopes[i].clone(),
            f1: slopes[i + 1].clone(),
        })
        .collect();
    Ok(IvpSolution {
        times,
        states,
        segments,
        step_stats: stats,
    })
}
