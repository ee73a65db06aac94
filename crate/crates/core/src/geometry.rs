//! Ambient-space vectors, sampled curves, perpendicular components and plane fitting.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::Serialize;

use crate::error::{invalid, precondition, Result};
use crate::scalar::Real;

/// Default tolerance on `|tangent| = 1`.
pub const UNIT_TANGENT_TOL: f64 = 1e-12;

/// Point or direction in `R^n`, `n >= 2`. The dimension is a run-time property.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct VecN<T> {
    components: Vec<T>,
}

impl<T: Real> VecN<T> {
    /// Validating constructor: at least two finite components.
    pub fn new(components: Vec<T>) -> Result<Self> {
        if components.len() < 2 {
            return Err(invalid(format!(
                "vector needs at least 2 components, got {}",
                components.len()
            )));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(invalid("vector has non-finite components"));
        }
        Ok(Self { components })
    }

    /// Builds a vector without validation. Used on hot paths where the inputs are known finite.
    pub(crate) fn from_vec_unchecked(components: Vec<T>) -> Self {
        debug_assert!(components.len() >= 2);
        Self { components }
    }

    pub fn from_slice(components: &[T]) -> Result<Self> {
        Self::new(components.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            components: vec![T::zero(); dim.max(2)],
        }
    }

    /// `k`-th standard basis vector of `R^dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.components[k] = T::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.components
    }

    pub fn into_vec(self) -> Vec<T> {
        self.components
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.components
            .iter()
            .zip(&other.components)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &Self) -> T {
        self.components
            .iter()
            .zip(&other.components)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
            .sqrt()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(&a, &b)| a + s * b)
            .collect();
        Self { components }
    }

    /// Pads with zeros (or truncates) to `dim` components.
    pub fn embed(&self, dim: usize) -> Self {
        let mut components = self.components.clone();
        components.resize(dim.max(2), T::zero());
        Self { components }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(|c| c.is_finite())
    }
}

impl<T> Index<usize> for VecN<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.components[i]
    }
}

impl<T> IndexMut<usize> for VecN<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.components[i]
    }
}

impl<T: Real> Add for &VecN<T> {
    type Output = VecN<T>;
    fn add(self, rhs: &VecN<T>) -> VecN<T> {
        self.add_scaled(T::one(), rhs)
    }
}

impl<T: Real> Sub for &VecN<T> {
    type Output = VecN<T>;
    fn sub(self, rhs: &VecN<T>) -> VecN<T> {
        self.add_scaled(-T::one(), rhs)
    }
}

impl<T: Real> Add for VecN<T> {
    type Output = VecN<T>;
    fn add(self, rhs: VecN<T>) -> VecN<T> {
        &self + &rhs
    }
}

impl<T: Real> Sub for VecN<T> {
    type Output = VecN<T>;
    fn sub(self, rhs: VecN<T>) -> VecN<T> {
        &self - &rhs
    }
}

impl<T: Real> AddAssign<&VecN<T>> for VecN<T> {
    fn add_assign(&mut self, rhs: &VecN<T>) {
        for (a, &b) in self.components.iter_mut().zip(&rhs.components) {
            *a = *a + b;
        }
    }
}

impl<T: Real> SubAssign<&VecN<T>> for VecN<T> {
    fn sub_assign(&mut self, rhs: &VecN<T>) {
        for (a, &b) in self.components.iter_mut().zip(&rhs.components) {
            *a = *a - b;
        }
    }
}

impl<T: Real> Mul<T> for &VecN<T> {
    type Output = VecN<T>;
    fn mul(self, s: T) -> VecN<T> {
        VecN {
            components: self.components.iter().map(|&a| a * s).collect(),
        }
    }
}

impl<T: Real> Mul<T> for VecN<T> {
    type Output = VecN<T>;
    fn mul(self, s: T) -> VecN<T> {
        &self * s
    }
}

impl<T: Real> Neg for &VecN<T> {
    type Output = VecN<T>;
    fn neg(self) -> VecN<T> {
        self * (-T::one())
    }
}

/// Discretized curve: parameter values with position, first and second derivative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSample<T> {
    params: Vec<T>,
    positions: Vec<VecN<T>>,
    d1: Vec<VecN<T>>,
    d2: Vec<VecN<T>>,
}

impl<T: Real> CurveSample<T> {
    pub fn new(
        params: Vec<T>,
        positions: Vec<VecN<T>>,
        d1: Vec<VecN<T>>,
        d2: Vec<VecN<T>>,
    ) -> Result<Self> {
        let n = params.len();
        if n < 2 {
            return Err(invalid(format!("curve needs at least 2 samples, got {n}")));
        }
        if positions.len() != n || d1.len() != n || d2.len() != n {
            return Err(invalid("curve sample lists have unequal lengths"));
        }
        if params.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("curve parameters must be strictly increasing"));
        }
        let dim = positions[0].dim();
        if positions
            .iter()
            .chain(&d1)
            .chain(&d2)
            .any(|v| v.dim() != dim || !v.is_finite())
        {
            return Err(invalid("curve samples must share one dimension and be finite"));
        }
        Ok(Self {
            params,
            positions,
            d1,
            d2,
        })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.positions[0].dim()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn positions(&self) -> &[VecN<T>] {
        &self.positions
    }

    pub fn d1(&self) -> &[VecN<T>] {
        &self.d1
    }

    pub fn d2(&self) -> &[VecN<T>] {
        &self.d2
    }

    /// Lifts every sample into `R^dim` by zero padding.
    pub fn embed(&self, dim: usize) -> Self {
        let lift = |vs: &[VecN<T>]| vs.iter().map(|v| v.embed(dim)).collect();
        Self {
            params: self.params.clone(),
            positions: lift(&self.positions),
            d1: lift(&self.d1),
            d2: lift(&self.d2),
        }
    }

    /// Applies a linear map (given as rows) to every position and derivative.
    pub fn map_linear(&self, rows: &[VecN<T>]) -> Self {
        let apply = |vs: &[VecN<T>]| {
            vs.iter()
                .map(|v| VecN::from_vec_unchecked(rows.iter().map(|r| r.dot(v)).collect()))
                .collect()
        };
        Self {
            params: self.params.clone(),
            positions: apply(&self.positions),
            d1: apply(&self.d1),
            d2: apply(&self.d2),
        }
    }

    /// Largest pairwise distance between samples, computed against the bounding box diagonal
    /// when the sample is large.
    pub fn diameter(&self) -> T {
        diameter(&self.positions)
    }

    /// Uniform spacing of the parameter grid, if the grid is uniform to `rel_tol`.
    pub fn uniform_spacing(&self, rel_tol: T) -> Option<T> {
        let n = self.len();
        let h = (self.params[n - 1] - self.params[0]) / T::from_usize_lossy(n - 1);
        let ok = self
            .params
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= rel_tol * h.abs());
        ok.then_some(h)
    }

    /// Quintic Hermite interpolation of position and first derivative at `t`, using the
    /// stored position, first and second derivative at the bracketing samples.
    pub fn interpolate(&self, t: T) -> (VecN<T>, VecN<T>) {
        let n = self.len();
        let k = match self
            .params
            .binary_search_by(|p| p.partial_cmp(&t).expect("finite parameter"))
        {
            Ok(i) => return (self.positions[i].clone(), self.d1[i].clone()),
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.params[k], self.params[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let c = T::lit;
        let h0 = T::one() - c(10.0) * s3 + c(15.0) * s4 - c(6.0) * s5;
        let h1 = s - c(6.0) * s3 + c(8.0) * s4 - c(3.0) * s5;
        let h2 = c(0.5) * s2 - c(1.5) * s3 + c(1.5) * s4 - c(0.5) * s5;
        let h3 = c(0.5) * s3 - s4 + c(0.5) * s5;
        let h4 = -c(4.0) * s3 + c(7.0) * s4 - c(3.0) * s5;
        let h5 = c(10.0) * s3 - c(15.0) * s4 + c(6.0) * s5;
        let g0 = -c(30.0) * s2 + c(60.0) * s3 - c(30.0) * s4;
        let g1 = T::one() - c(18.0) * s2 + c(32.0) * s3 - c(15.0) * s4;
        let g2 = s - c(4.5) * s2 + c(6.0) * s3 - c(2.5) * s4;
        let g3 = c(1.5) * s2 - c(4.0) * s3 + c(2.5) * s4;
        let g4 = -c(12.0) * s2 + c(28.0) * s3 - c(15.0) * s4;
        let g5 = -g0;
        let (p0, p1) = (&self.positions[k], &self.positions[k + 1]);
        let (v0, v1) = (&self.d1[k], &self.d1[k + 1]);
        let (a0, a1) = (&self.d2[k], &self.d2[k + 1]);
        let dim = self.dim();
        let mut pos = Vec::with_capacity(dim);
        let mut vel = Vec::with_capacity(dim);
        for j in 0..dim {
            pos.push(
                h0 * p0[j]
                    + h * h1 * v0[j]
                    + h * h * (h2 * a0[j] + h3 * a1[j])
                    + h * h4 * v1[j]
                    + h5 * p1[j],
            );
            vel.push(
                (g0 * p0[j] + g5 * p1[j]) / h
                    + g1 * v0[j]
                    + g4 * v1[j]
                    + h * (g2 * a0[j] + g3 * a1[j]),
            );
        }
        (VecN::from_vec_unchecked(pos), VecN::from_vec_unchecked(vel))
    }
}

pub(crate) fn diameter<T: Real>(points: &[VecN<T>]) -> T {
    if points.len() <= 2048 {
        let mut best = T::zero();
        for (i, p) in points.iter().enumerate() {
            for q in &points[i + 1..] {
                best = best.max(p.distance(q));
            }
        }
        return best;
    }
    // Bounding-box diagonal: within a factor sqrt(n) of the true diameter.
    let dim = points[0].dim();
    let mut sum = T::zero();
    for j in 0..dim {
        let (lo, hi) = points.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), p| (lo.min(p[j]), hi.max(p[j])),
        );
        sum = sum + (hi - lo) * (hi - lo);
    }
    sum.sqrt()
}

/// Best-fit 2-plane through a point cloud.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneFit<T> {
    pub basepoint: VecN<T>,
    pub basis1: VecN<T>,
    pub basis2: VecN<T>,
    pub max_residual: T,
    pub rms_residual: T,
}

impl<T: Real> PlaneFit<T> {
    /// Distance of `p` from the fitted plane.
    pub fn distance(&self, p: &VecN<T>) -> T {
        let d = p - &self.basepoint;
        let a = d.dot(&self.basis1);
        let b = d.dot(&self.basis2);
        d.add_scaled(-a, &self.basis1).add_scaled(-b, &self.basis2).norm()
    }

    /// Coordinates of `p` in the plane basis.
    pub fn project(&self, p: &VecN<T>) -> (T, T) {
        let d = p - &self.basepoint;
        (d.dot(&self.basis1), d.dot(&self.basis2))
    }
}

/// Per-sample and summary residuals of a named equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport<T> {
    pub equation: String,
    pub per_sample: Vec<T>,
    pub max: T,
    pub rms: T,
}

impl<T: Real> ResidualReport<T> {
    pub fn from_samples(equation: impl Into<String>, per_sample: Vec<T>) -> Self {
        let max = per_sample.iter().fold(T::zero(), |m, &r| m.max(r));
        let rms = if per_sample.is_empty() {
            T::zero()
        } else {
            (per_sample.iter().fold(T::zero(), |s, &r| s + r * r)
                / T::from_usize_lossy(per_sample.len()))
            .sqrt()
        };
        Self {
            equation: equation.into(),
            per_sample,
            max,
            rms,
        }
    }
}

/// Component of `p` orthogonal to the unit vector `tangent`: `p - <p, t> t`.
pub fn perp_component<T: Real>(p: &VecN<T>, tangent: &VecN<T>) -> Result<VecN<T>> {
    perp_component_with_tol(p, tangent, T::lit(UNIT_TANGENT_TOL))
}

pub fn perp_component_with_tol<T: Real>(p: &VecN<T>, tangent: &VecN<T>, tol: T) -> Result<VecN<T>> {
    if p.dim() != tangent.dim() {
        return Err(invalid("dimension mismatch"));
    }
    let defect = (tangent.norm() - T::one()).abs();
    if defect > tol {
        return Err(precondition(format!(
            "tangent is not unit length (| |t| - 1 | = {defect:e})"
        )));
    }
    Ok(p.add_scaled(-p.dot(tangent), tangent))
}

/// Max over samples of `| |d1| - 1 |`.
pub fn arc_length_defect<T: Real>(curve: &CurveSample<T>) -> T {
    curve
        .d1()
        .iter()
        .fold(T::zero(), |m, v| m.max((v.norm() - T::one()).abs()))
}

/// Least-squares plane through the positions of `curve`.
pub fn fit_plane<T: Real>(curve: &CurveSample<T>) -> Result<PlaneFit<T>> {
    fit_plane_points(curve.positions())
}

/// Least-squares plane through a point cloud: centroid plus the two leading principal
/// directions of the second-moment matrix.
pub fn fit_plane_points<T: Real>(points: &[VecN<T>]) -> Result<PlaneFit<T>> {
    if points.len() < 3 {
        return Err(invalid(format!(
            "plane fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let dim = points[0].dim();
    let inv_n = T::one() / T::from_usize_lossy(points.len());
    let mut centroid = VecN::zeros(dim);
    for p in points {
        centroid += p;
    }
    let centroid = &centroid * inv_n;

    let mut moment = vec![vec![T::zero(); dim]; dim];
    for p in points {
        let d = p - &centroid;
        for i in 0..dim {
            for j in i..dim {
                moment[i][j] = moment[i][j] + d[i] * d[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            moment[i][j] = moment[j][i];
        }
    }

    let (values, vectors) = symmetric_eigen(moment);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite eigenvalues"));
    let column = |k: usize| VecN::from_vec_unchecked((0..dim).map(|i| vectors[i][k]).collect());
    let basis1 = column(order[0]);
    let basis2 = column(order[1]);

    let mut fit = PlaneFit {
        basepoint: centroid,
        basis1,
        basis2,
        max_residual: T::zero(),
        rms_residual: T::zero(),
    };
    let mut sum_sq = T::zero();
    for p in points {
        let r = fit.distance(p);
        fit.max_residual = fit.max_residual.max(r);
        sum_sq = sum_sq + r * r;
    }
    fit.rms_residual = (sum_sq * inv_n).sqrt();
    Ok(fit)
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns eigenvalues and the
/// eigenvector matrix (eigenvectors are columns).
pub(crate) fn symmetric_eigen<T: Real>(mut a: Vec<Vec<T>>) -> (Vec<T>, Vec<Vec<T>>) {
    let n = a.len();
    let mut v = vec![vec![T::zero(); n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let scale = a
        .iter()
        .flatten()
        .fold(T::zero(), |m, &x| m.max(x.abs()))
        .max(T::min_positive_value());
    for _sweep in 0..64 {
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |s, (i, j)| s + a[i][j] * a[i][j]);
        if off.sqrt() <= T::epsilon() * T::lit(1e-3) * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (T::two() * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vkp, vkq) = (row[p], row[q]);
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}
