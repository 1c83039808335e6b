//! Exact orientation and in-sphere tests on top of `robust`.

use robust::Coord3D;

use crate::Vec3;

#[inline]
fn c(p: &Vec3) -> Coord3D<f64> {
    Coord3D { x: p.x, y: p.y, z: p.z }
}

/// Sign of `det[b - a, c - a, d - a]`: positive when `d` lies on the side
/// of plane `abc` that `(b - a) × (c - a)` points to.
#[inline]
pub fn orient(a: &Vec3, b: &Vec3, c_: &Vec3, d: &Vec3) -> f64 {
    -robust::orient3d(c(a), c(b), c(c_), c(d))
}

/// Positive when `e` is strictly inside the circumsphere of the positively
/// oriented tetrahedron `abcd`, zero when cospherical.
#[inline]
pub fn insphere(a: &Vec3, b: &Vec3, c_: &Vec3, d: &Vec3, e: &Vec3) -> f64 {
    // robust expects the opposite orientation sign
    -robust::insphere(c(a), c(b), c(c_), c(d), c(e))
}
