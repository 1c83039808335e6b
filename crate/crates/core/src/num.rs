//! Scalar abstraction shared by the generic geometry, spline, pole-placement
//! and collision-statistics code.

use nalgebra as na;
use num_traits as nt;

/// Floating point scalar usable by the generic parts of the crate.
///
/// Implemented for `f32` and `f64`. The simulation, mapping, planning and
/// odometry pipelines are instantiated with `f64` only.
pub trait Real: na::RealField + Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive {
    /// Converts an `f64` literal into this scalar type.
    fn lit(v: f64) -> Self;

    fn to_f64_lossy(self) -> f64;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

#[inline]
pub fn abs<T: Real>(x: T) -> T {
    if x < T::zero() {
        -x
    } else {
        x
    }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut r = a % two_pi;
    if r <= -T::pi() {
        r += two_pi;
    } else if r > T::pi() {
        r -= two_pi;
    }
    r
}
