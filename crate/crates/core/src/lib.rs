//! Self-similar solutions of the curve shortening flow.
//!
//! The crate builds planar self-shrinkers and self-expanders from the scalar ODE satisfied by
//! `alpha = <gamma, gamma>`, integrates the soliton equations directly in `R^n`, checks
//! planarity through constant combinations of `gamma'` and `gamma''`, and evolves polygons
//! under a discrete curve shortening flow to cross-check self-similarity.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); `f64` aliases are
//! exported at the crate root.

// `!(x > 0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod expander;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod nd;
pub mod ode;
pub mod planar;
pub mod scalar;
pub mod shrinker;

pub use error::{Error, Result};
pub use flow::{
    area_variation_check, curvature_vectors, evolve, hausdorff, homothety_rescaling, homothety_scale,
    length_variation_check, rescaled_flow_area, FlowRun, FlowSettings, FlowStatus, PolyCurve, Snapshot,
};
pub use geometry::{
    arc_length_defect, fit_plane, fit_plane_points, perp_component, CurveSample, PlaneFit,
    ResidualReport, VecN,
};
pub use planar::{
    alpha_second_derivative, reconstruct, soliton_residual, solve_alpha, theta_from_alpha,
    unit_speed_polar_residual, AlphaSolution, Orientation, PlanarSettings, PolarCurve,
    SolitonKind, StraightLine, ThetaFunction,
};
pub use expander::{expander_residual, reconstruct_expander, solve_alpha_expander, solve_alpha_expander_one_sided};
pub use nd::{
    integrate_soliton, soliton_acceleration, spherical_jet, spherical_residuals, triple_derivative_check,
    verify_planarity, PlanarityReport, RsTrajectory, SolitonSpec, SphericalJet, SphericalResiduals,
};
pub use scalar::Real;
pub use shrinker::{
    closure_report, closure_scan, closed_shrinker, find_alpha0_for_ratio, reconstruct_shrinker,
    rotation_over_period, shrinker_residual, solve_alpha_shrinker, solve_alpha_shrinker_period,
    ClosureReport, ClosureScan, ClosureSettings,
};

pub type Vector = VecN<f64>;
pub type Curve = CurveSample<f64>;
