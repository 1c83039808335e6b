use nalgebra::{Matrix4, Vector3};

use super::Quat;
use crate::num::Real;

/// Timestamped rigid transform (body to world).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose<T: Real> {
    pub position: Vector3<T>,
    pub orientation: Quat<T>,
    /// Seconds.
    pub stamp: T,
}

impl<T: Real> Default for Pose<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Pose<T> {
    pub fn new(position: Vector3<T>, orientation: Quat<T>, stamp: T) -> Self {
        Pose {
            position,
            orientation,
            stamp,
        }
    }

    pub fn identity() -> Self {
        Pose {
            position: Vector3::zeros(),
            orientation: Quat::identity(),
            stamp: T::zero(),
        }
    }

    pub fn from_translation(t: Vector3<T>) -> Self {
        Pose {
            position: t,
            ..Self::identity()
        }
    }

    pub fn with_stamp(mut self, stamp: T) -> Self {
        self.stamp = stamp;
        self
    }

    /// `self ∘ b`: applies `b` first, then `self`. The stamp is taken from `b`.
    pub fn compose(&self, b: &Pose<T>) -> Pose<T> {
        Pose {
            position: self.position + self.orientation.rotate(&b.position),
            orientation: self.orientation * b.orientation,
            stamp: b.stamp,
        }
    }

    pub fn inverse(&self) -> Pose<T> {
        let qi = self.orientation.inverse();
        Pose {
            position: -qi.rotate(&self.position),
            orientation: qi,
            stamp: self.stamp,
        }
    }

    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.position + self.orientation.rotate(p)
    }

    pub fn to_homogeneous(&self) -> Matrix4<T> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.orientation.to_rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.position);
        m
    }

    pub fn is_valid(&self) -> bool {
        self.position.iter().all(|c| c.is_finite()) && self.stamp.is_finite() && self.stamp >= T::zero()
    }
}

/// Body-frame linear and angular velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Twist<T: Real> {
    pub linear: Vector3<T>,
    pub angular: Vector3<T>,
}

impl<T: Real> Default for Twist<T> {
    fn default() -> Self {
        Twist {
            linear: Vector3::zeros(),
            angular: Vector3::zeros(),
        }
    }
}

impl<T: Real> Twist<T> {
    pub fn is_finite(&self) -> bool {
        self.linear.iter().chain(self.angular.iter()).all(|c| c.is_finite())
    }
}
