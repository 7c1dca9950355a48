//! Planar vector helpers.
//!
//! Body and world frames follow the occupancy grid: x runs along columns and
//! y along rows (downward when the grid is drawn as an image). Angles turn
//! +x toward -y, which is counter-clockwise as drawn. With that orientation
//! the planar product `cross(a, b) = a.x * b.y - a.y * b.x` of a force `a`
//! with its lever arm `b` is the torque it produces, and a body spinning at
//! rate `w` moves the point at offset `r` with velocity `spin(w, r)`.

use nalgebra::{Matrix2, Vector2};

pub type Vec2 = Vector2<f64>;

/// Planar cross product `a ⊗ b`.
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Velocity of the point at offset `r` on a body spinning at rate `w`.
#[inline]
pub fn spin(w: f64, r: &Vec2) -> Vec2 {
    Vec2::new(w * r.y, -w * r.x)
}

/// Rotation by `angle` under the frame convention above.
#[inline]
pub fn rotation(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Unit vector at `angle` from +x, in the same rotational sense as [`rotation`].
#[inline]
pub fn direction(angle: f64) -> Vec2 {
    rotation(angle) * Vec2::x()
}
