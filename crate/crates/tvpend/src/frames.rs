//! Frame-tagged 3-vectors and rotations.
//!
//! Four right-handed coordinate frames appear in the model:
//!
//! * [`World`] — inertial; `z` up.
//! * [`Pendulum`] — attached to the pendulum rod; `x` along the rod from the
//!   universal joint toward the gimbal mount.
//! * [`Gimbal`] — the gimbal base frame, rigidly attached to the rod and
//!   coincident with [`Pendulum`] for the rigid mount used here.
//! * [`Copter`] — body frame of the quadcopter; `z` along the nominal thrust
//!   axis.
//!
//! The frame tag is a zero-sized type parameter: combining vectors from
//! different frames is a compile error at the call site, and a rotation can
//! only be applied to a vector expressed in its source frame. No per-element
//! runtime cost is incurred.

use std::marker::PhantomData;
use std::ops::{Add, Mul, Neg, Sub};

/// Marker trait for coordinate frames.
pub trait Frame: Copy + Clone + std::fmt::Debug + PartialEq + 'static {
    /// Short name used in Debug output.
    const NAME: &'static str;
}

macro_rules! frames {
    ($($(#[$doc:meta])* $name:ident => $label:literal),+ $(,)?) => {
        $(
            $(#[$doc])*
            #[derive(Debug, Clone, Copy, PartialEq, Eq)]
            pub struct $name;
            impl Frame for $name {
                const NAME: &'static str = $label;
            }
        )+
    };
}

frames! {
    /// Inertial frame, `z` up.
    World => "W",
    /// Rod-fixed frame, `x` along the rod.
    Pendulum => "P",
    /// Gimbal base frame (coincident with the rod frame).
    Gimbal => "G",
    /// Quadcopter body frame, `z` along nominal thrust.
    Copter => "C",
}

/// A 3-vector expressed in frame `F`. The physical unit (N, N·m, rad/s, m)
/// is documented at each producing interface; the frame is enforced by the
/// type system.
#[derive(Clone, Copy, PartialEq)]
pub struct Vec3<F: Frame> {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    _frame: PhantomData<F>,
}

impl<F: Frame> Vec3<F> {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z, _frame: PhantomData }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn dot(self, rhs: Self) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Self) -> Self {
        Self::new(
            self.y * rhs.z - self.z * rhs.y,
            self.z * rhs.x - self.x * rhs.z,
            self.x * rhs.y - self.y * rhs.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl<F: Frame> std::fmt::Debug for Vec3<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{:?}]({}, {}, {})", F::NAME, self.x, self.y, self.z)
    }
}

impl<F: Frame> Add for Vec3<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<F: Frame> Sub for Vec3<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<F: Frame> Neg for Vec3<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<F: Frame> Mul<f64> for Vec3<F> {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

/// A rotation carrying frame `From` onto frame `To`.
///
/// As a coordinate map it takes components expressed in `From` to components
/// expressed in `To`: columns are the `From` basis vectors written in `To`
/// coordinates. Stored row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct Rotation<From: Frame, To: Frame> {
    rows: [[f64; 3]; 3],
    _from: PhantomData<From>,
    _to: PhantomData<To>,
}

impl<From: Frame, To: Frame> Rotation<From, To> {
    /// Wraps a raw row-major matrix. The caller asserts it is a proper
    /// rotation; use [`Rotation::orthonormality_error`] to verify.
    pub const fn from_rows(rows: [[f64; 3]; 3]) -> Self {
        Self { rows, _from: PhantomData, _to: PhantomData }
    }

    pub const fn identity() -> Self {
        Self::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.rows
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.rows[r][c]
    }

    /// Applies the rotation to a vector expressed in the source frame.
    pub fn apply(&self, v: Vec3<From>) -> Vec3<To> {
        let m = &self.rows;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// The inverse map. For a rotation the inverse is the transpose.
    pub fn transpose(&self) -> Rotation<To, From> {
        let m = &self.rows;
        Rotation::from_rows([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    /// Composition: `other ∘ self`, mapping the source of `self` to the
    /// target of `other`.
    pub fn then<Next: Frame>(&self, other: &Rotation<To, Next>) -> Rotation<From, Next> {
        let a = &other.rows;
        let b = &self.rows;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Rotation::from_rows(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.rows;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max-abs deviation of `RᵀR` from the identity; 0 for an exact rotation.
    pub fn orthonormality_error(&self) -> f64 {
        let m = &self.rows;
        let mut err: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                // (RᵀR)_{ij} = column i · column j
                let dot = m[0][i] * m[0][j] + m[1][i] * m[1][j] + m[2][i] * m[2][j];
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((dot - target).abs());
            }
        }
        err
    }
}

impl<From: Frame, To: Frame> std::fmt::Debug for Rotation<From, To> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Rotation[{}->{}]{:?}",
            From::NAME,
            To::NAME,
            self.rows
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_algebra_basics() {
        let a: Vec3<World> = Vec3::new(1.0, 2.0, 3.0);
        let b: Vec3<World> = Vec3::new(-2.0, 0.5, 4.0);
        assert_eq!(a.dot(b), -2.0 + 1.0 + 12.0);
        let c = a.cross(b);
        // cross product is perpendicular to both factors
        assert_eq!(c.dot(a), 0.0);
        assert_eq!(c.dot(b), 0.0);
        assert_eq!((a + b).as_array(), [-1.0, 2.5, 7.0]);
        assert_eq!((a - b).as_array(), [3.0, 1.5, -1.0]);
        assert_eq!((-a).as_array(), [-1.0, -2.0, -3.0]);
        assert_eq!((a * 2.0).as_array(), [2.0, 4.0, 6.0]);
    }

    #[test]
    fn identity_rotation_is_exact() {
        let r: Rotation<Pendulum, World> = Rotation::identity();
        let v = Vec3::new(0.3, -0.7, 1.1);
        assert_eq!(r.apply(v).as_array(), v.as_array());
        assert_eq!(r.orthonormality_error(), 0.0);
        assert_eq!(r.determinant(), 1.0);
    }

    #[test]
    fn transpose_inverts_the_map() {
        // quarter turn about z
        let r: Rotation<Copter, Gimbal> =
            Rotation::from_rows([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        let v: Vec3<Copter> = Vec3::new(1.0, 0.0, 0.0);
        let w = r.apply(v);
        assert_eq!(w.as_array(), [0.0, 1.0, 0.0]);
        let back = r.transpose().apply(w);
        assert_eq!(back.as_array(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn composition_chains_coordinate_maps() {
        let quarter_z: Rotation<Copter, Gimbal> =
            Rotation::from_rows([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        let quarter_x: Rotation<Gimbal, World> =
            Rotation::from_rows([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]);
        let chained = quarter_z.then(&quarter_x);
        let v: Vec3<Copter> = Vec3::new(1.0, 0.0, 0.0);
        // x -> y (about z), then y -> z (about x)
        assert_eq!(chained.apply(v).as_array(), [0.0, 0.0, 1.0]);
    }
}
