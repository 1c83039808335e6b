//! Synthetic MAV navigation stack.
//!
//! Localization ([`vo`]), mapping ([`mapping`]), delayed-measurement state
//! estimation ([`estimator`]), control ([`control`]) and roadmap planning
//! ([`planner`]) on a deterministic hexacopter simulation ([`sim`]), plus the
//! evaluation protocols and scenario runner in [`eval`] and [`scenario`].
//!
//! Geometry, splines, pole placement and the collision statistics are
//! generic over the scalar type ([`num::Real`], implemented for `f32` and
//! `f64`); the aliases below fix the scalar to `f64`, which is what the
//! pipelines use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod geom;
pub mod mapping;
pub mod num;
pub mod planner;
pub mod scenario;
pub mod sim;
pub mod textio;
pub mod vo;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Quat = geom::Quat<f64>;
pub type Pose = geom::Pose<f64>;
pub type Twist = geom::Twist<f64>;
pub type QuinticSpline = control::QuinticSpline<f64>;
pub type RefPoint = control::RefPoint<f64>;
pub type ControllerGains = control::ControllerGains<f64>;

pub type Quatf32 = geom::Quat<f32>;
pub type Posef32 = geom::Pose<f32>;
pub type QuinticSplinef32 = control::QuinticSpline<f32>;

/// Standard gravity magnitude, m/s².
pub const GRAVITY: f64 = 9.81;
