use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::num::{abs, Real};

/// Unit quaternion in Hamilton convention, scalar first.
///
/// Represents the body-to-world rotation: `q.rotate(v_body) == v_world`.
/// Every constructor and operation returns a normalized quaternion in the
/// canonical hemisphere `w >= 0`. When `w == 0` the sign is chosen so that
/// the vector component with the largest magnitude is positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat<T: Real> {
    w: T,
    x: T,
    y: T,
    z: T,
}

impl<T: Real> Default for Quat<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Quat<T> {
    pub fn identity() -> Self {
        Quat {
            w: T::one(),
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
        }
    }

    /// Normalizes and canonicalizes the given components.
    ///
    /// A zero or non-finite input yields the identity.
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Self::identity();
        }
        Self::canonical(w / n, x / n, y / n, z / n)
    }

    fn canonical(w: T, x: T, y: T, z: T) -> Self {
        let flip = if w < T::zero() {
            true
        } else if w > T::zero() {
            false
        } else {
            let (ax, ay, az) = (abs(x), abs(y), abs(z));
            let lead = if ax >= ay && ax >= az {
                x
            } else if ay >= az {
                y
            } else {
                z
            };
            lead < T::zero()
        };
        if flip {
            Quat {
                w: -w,
                x: -x,
                y: -y,
                z: -z,
            }
        } else {
            Quat { w, x, y, z }
        }
    }

    pub fn w(&self) -> T {
        self.w
    }
    pub fn x(&self) -> T {
        self.x
    }
    pub fn y(&self) -> T {
        self.y
    }
    pub fn z(&self) -> T {
        self.z
    }

    pub fn vector(&self) -> Vector3<T> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn from_axis_angle(axis: &Vector3<T>, angle: T) -> Self {
        let n = axis.norm();
        if !(n > T::zero()) {
            return Self::identity();
        }
        let half = angle * T::lit(0.5);
        let s = half.sin() / n;
        Self::new(half.cos(), axis.x * s, axis.y * s, axis.z * s)
    }

    /// Exponential map of a rotation vector (axis times angle).
    pub fn from_rotation_vector(v: &Vector3<T>) -> Self {
        let theta = v.norm();
        let half = theta * T::lit(0.5);
        let k = if theta < T::lit(1e-4) {
            // sin(theta/2)/theta by series
            T::lit(0.5) - theta * theta / T::lit(48.0)
        } else {
            half.sin() / theta
        };
        Self::new(half.cos(), v.x * k, v.y * k, v.z * k)
    }

    /// Logarithm map: rotation vector with angle in [0, pi].
    pub fn to_rotation_vector(&self) -> Vector3<T> {
        let v = self.vector();
        let s = v.norm();
        if s < T::lit(1e-6) * self.w {
            // 2 atan(s/w)/s by series about s/w = 0
            let w = self.w;
            let r = s / w;
            return v * (T::lit(2.0) / w * (T::one() - r * r / T::lit(3.0)));
        }
        let angle = T::lit(2.0) * s.atan2(self.w);
        v * (angle / s)
    }

    /// Rotation angle in [0, pi].
    pub fn angle(&self) -> T {
        T::lit(2.0) * self.vector().norm().atan2(self.w)
    }

    pub fn conjugate(&self) -> Self {
        Self::canonical(self.w, -self.x, -self.y, -self.z)
    }

    pub fn inverse(&self) -> Self {
        self.conjugate()
    }

    pub fn dot(&self, o: &Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Geodesic angle between two orientations, in [0, pi].
    pub fn angle_to(&self, o: &Self) -> T {
        (self.inverse() * *o).angle()
    }

    pub fn rotate(&self, v: &Vector3<T>) -> Vector3<T> {
        let u = self.vector();
        let two = T::lit(2.0);
        let t = u.cross(v) * two;
        v + t * self.w + u.cross(&t)
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<T> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = T::one();
        let two = T::lit(2.0);
        Matrix3::new(
            one - two * (y * y + z * z),
            two * (x * y - w * z),
            two * (x * z + w * y),
            two * (x * y + w * z),
            one - two * (x * x + z * z),
            two * (y * z - w * x),
            two * (x * z - w * y),
            two * (y * z + w * x),
            one - two * (x * x + y * y),
        )
    }

    /// Converts a proper rotation matrix (Shepperd's method).
    pub fn from_rotation_matrix(m: &Matrix3<T>) -> Self {
        let one = T::one();
        let quarter = T::lit(0.25);
        let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        if tr > m[(0, 0)] && tr > m[(1, 1)] && tr > m[(2, 2)] {
            let s = (one + tr).sqrt() * T::lit(2.0);
            Self::new(
                quarter * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (one + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * T::lit(2.0);
            Self::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                quarter * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (one + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * T::lit(2.0);
            Self::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                quarter * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (one + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * T::lit(2.0);
            Self::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                quarter * s,
            )
        }
    }

    /// Heading angle (rotation of the body x axis about world z).
    pub fn yaw(&self) -> T {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        (T::lit(2.0) * (w * z + x * y)).atan2(T::one() - T::lit(2.0) * (y * y + z * z))
    }

    pub fn from_yaw(yaw: T) -> Self {
        Self::from_axis_angle(&Vector3::z(), yaw)
    }

    /// Turns `from` by the fraction `weight` of the relative rotation towards
    /// `to`, along the shorter arc.
    ///
    /// For antipodal inputs (relative angle exactly pi) the axis is the one
    /// produced by the canonical sign rule, so the result is deterministic.
    pub fn partial_rotation(from: &Self, to: &Self, weight: T) -> Result<Self> {
        if !(weight >= T::zero() && weight <= T::one()) {
            return Err(Error::Parameter(format!(
                "partial rotation weight {} outside [0, 1]",
                weight.to_f64_lossy()
            )));
        }
        if weight == T::zero() {
            return Ok(*from);
        }
        let rel = from.inverse() * *to;
        let step = Self::from_rotation_vector(&(rel.to_rotation_vector() * weight));
        Ok(*from * step)
    }

    pub fn cast<U: Real>(&self) -> Quat<U> {
        Quat::new(
            U::lit(self.w.to_f64_lossy()),
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
    }
}

impl<T: Real> Mul for Quat<T> {
    type Output = Quat<T>;

    fn mul(self, b: Quat<T>) -> Quat<T> {
        let a = self;
        Quat::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}
