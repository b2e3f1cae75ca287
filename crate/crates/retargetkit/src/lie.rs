//! Rotation and rigid-body transform math on SO(3) / SE(3).
//!
//! Everything downstream (forward kinematics, the retargeting objective, the
//! curvature analysis) is built on the exponential and logarithm maps
//! implemented here, so the branch handling is strict rather than forgiving:
//!
//! * axis-angle vectors live on the principal branch, angle in `[0, pi)`;
//! * the log map and the inverse left Jacobian refuse inputs within
//!   [`PI_BRANCH_MARGIN`] of the branch boundary at pi instead of silently
//!   returning a garbage axis;
//! * every coefficient function switches to a 4th-order Taylor series below
//!   [`SMALL_ANGLE`] so the identity neighborhood is exact to machine
//!   precision.
//!
//! The SE(3) tangent convention is rotation-first: `xi = (omega, v)`. Note
//! `v` is the body-line translation coordinate `Jl(omega)^-1 * t`, which is
//! not the Euclidean translation difference unless the rotation part is the
//! identity.

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

/// Angle below which coefficient functions use their Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-4;

/// Rejection margin around the branch boundary at pi for `so3_log`,
/// `so3_left_jacobian_inv` and `se3_log`.
pub const PI_BRANCH_MARGIN: f64 = 1e-6;

/// Orthonormality / determinant tolerance for validated rotation matrices.
pub const ROTATION_TOL: f64 = 1e-9;

/// A validated rotation matrix: orthonormal to [`ROTATION_TOL`] with
/// determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Validates orthonormality (`R^T R = I` to [`ROTATION_TOL`]) and
    /// `det R = +1` before accepting the matrix.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let gram = m.transpose() * m;
        let defect = (gram - Matrix3::identity()).abs().max();
        if defect > ROTATION_TOL {
            return Err(Error::InvalidRotation(format!(
                "orthonormality defect {defect:.3e} exceeds {ROTATION_TOL:.0e}"
            )));
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidRotation(format!(
                "determinant {det} is not +1"
            )));
        }
        Ok(Rotation(m))
    }

    /// Wraps a matrix that is already known to be a rotation (e.g. a product
    /// of validated rotations). No check is performed.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// Rotation composition `self * other`.
    pub fn compose(&self, other: &Rotation) -> Rotation {
        Rotation(self.0 * other.0)
    }

    pub fn rotate(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.0 * p
    }

    /// Builds a rotation from a `(w, x, y, z)` quaternion, normalizing first.
    /// Used at file-format boundaries where stored quaternions carry rounding.
    pub fn from_quaternion_wxyz(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = Quaternion::new(w, x, y, z);
        if q.norm() < 1e-12 {
            return Err(Error::InvalidRotation(
                "zero-norm quaternion".to_string(),
            ));
        }
        let uq = UnitQuaternion::from_quaternion(q);
        Ok(Rotation(uq.to_rotation_matrix().into_inner()))
    }

    /// Returns the `(w, x, y, z)` quaternion with non-negative `w`.
    pub fn to_quaternion_wxyz(&self) -> [f64; 4] {
        let uq = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.0));
        let q = uq.into_inner();
        let sign = if q.w < 0.0 { -1.0 } else { 1.0 };
        [sign * q.w, sign * q.i, sign * q.j, sign * q.k]
    }
}

impl std::ops::Mul for &Rotation {
    type Output = Rotation;
    fn mul(self, rhs: &Rotation) -> Rotation {
        self.compose(rhs)
    }
}

/// A rigid-body transform: rotation plus translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Rotation,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Rotation, translation: Vector3<f64>) -> Self {
        Pose {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Pose {
            rotation: Rotation::identity(),
            translation,
        }
    }

    /// Transform composition `self * other` (apply `other` first in the
    /// frame of `self`).
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.rotate(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            translation: -rt.rotate(&self.translation),
            rotation: rt,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }
}

impl std::ops::Mul for &Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

/// An axis-angle vector on the principal branch: `omega = phi * n_hat` with
/// `phi = |omega|` in `[0, pi)`. Construction rejects `phi >= pi`, where the
/// factorization into angle and axis stops being unique.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    omega: Vector3<f64>,
}

impl AxisAngle {
    pub fn from_vector(omega: Vector3<f64>) -> Result<Self> {
        let phi = omega.norm();
        if phi >= std::f64::consts::PI {
            return Err(Error::AngleOutOfRange {
                phi,
                limit: std::f64::consts::PI,
            });
        }
        Ok(AxisAngle { omega })
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.omega
    }

    pub fn angle(&self) -> f64 {
        self.omega.norm()
    }

    /// Unit axis, or `None` at the identity where the axis is undefined.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        let phi = self.angle();
        if phi == 0.0 {
            None
        } else {
            Some(self.omega / phi)
        }
    }
}

/// An SE(3) tangent vector, rotation coordinates first: `xi = (omega, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub omega: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl TangentVector {
    pub fn new(omega: Vector3<f64>, v: Vector3<f64>) -> Self {
        TangentVector { omega, v }
    }

    /// Stacks into a 6-vector `(omega, v)`.
    pub fn stacked(&self) -> [f64; 6] {
        [
            self.omega.x,
            self.omega.y,
            self.omega.z,
            self.v.x,
            self.v.y,
            self.v.z,
        ]
    }

    pub fn norm_squared(&self) -> f64 {
        self.omega.norm_squared() + self.v.norm_squared()
    }
}

/// Skew-symmetric (hat) matrix of a 3-vector: `hat(w) * p = w x p`.
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -w.z, w.y, //
        w.z, 0.0, -w.x, //
        -w.y, w.x, 0.0,
    )
}

/// Inverse of [`hat`] on skew-symmetric matrices.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// `sin(phi)/phi`, series below [`SMALL_ANGLE`].
fn sinc(phi: f64) -> f64 {
    if phi < SMALL_ANGLE {
        let p2 = phi * phi;
        1.0 - p2 / 6.0 + p2 * p2 / 120.0
    } else {
        phi.sin() / phi
    }
}

/// `(1 - cos(phi))/phi^2`, series below [`SMALL_ANGLE`]. The closed form
/// uses the half-angle identity `2 sin^2(phi/2) / phi^2`, which avoids the
/// cancellation in `1 - cos` for moderate angles.
fn cosc(phi: f64) -> f64 {
    if phi < SMALL_ANGLE {
        let p2 = phi * phi;
        0.5 - p2 / 24.0 + p2 * p2 / 720.0
    } else {
        let s = (0.5 * phi).sin();
        2.0 * s * s / (phi * phi)
    }
}

/// `(phi - sin(phi))/phi^3`, series below [`SMALL_ANGLE`].
fn sinc3(phi: f64) -> f64 {
    if phi < SMALL_ANGLE {
        let p2 = phi * phi;
        1.0 / 6.0 - p2 / 120.0 + p2 * p2 / 5040.0
    } else {
        (phi - phi.sin()) / (phi * phi * phi)
    }
}

/// `(1 - alpha(phi))/phi^2` where `alpha` is [`alpha_coefficient`].
/// Series below [`SMALL_ANGLE`].
fn one_minus_alpha_over_phi2(phi: f64) -> f64 {
    if phi < SMALL_ANGLE {
        let p2 = phi * phi;
        1.0 / 12.0 + p2 / 720.0 + p2 * p2 / 30240.0
    } else {
        let half = 0.5 * phi;
        (1.0 - half / half.tan()) / (phi * phi)
    }
}

/// The scalar coefficient `alpha(phi) = (phi/2) / tan(phi/2)` appearing in
/// the inverse left Jacobian. Strictly decreasing on `(0, pi)`, `alpha(0)=1`.
/// Domain `[0, pi)`.
pub fn alpha_coefficient(phi: f64) -> Result<f64> {
    if !(0.0..std::f64::consts::PI).contains(&phi) {
        return Err(Error::AngleOutOfRange {
            phi,
            limit: std::f64::consts::PI,
        });
    }
    if phi < SMALL_ANGLE {
        let p2 = phi * phi;
        Ok(1.0 - p2 / 12.0 - p2 * p2 / 720.0)
    } else {
        let half = 0.5 * phi;
        Ok(half / half.tan())
    }
}

/// SO(3) exponential map. Accepts axis-angle vectors on the principal
/// branch (`|omega| < pi`).
///
/// `exp(omega) = I + sinc(phi) [omega]x + cosc(phi) [omega]x^2`.
pub fn so3_exp(omega: &Vector3<f64>) -> Result<Rotation> {
    let phi = omega.norm();
    if phi >= std::f64::consts::PI {
        return Err(Error::AngleOutOfRange {
            phi,
            limit: std::f64::consts::PI,
        });
    }
    let k = hat(omega);
    let m = Matrix3::identity() + sinc(phi) * k + cosc(phi) * (k * k);
    Ok(Rotation(m))
}

/// SO(3) logarithm on the principal branch.
///
/// The angle comes from `acos` of the clamped trace, the axis from the
/// skew-symmetric part. Rotations within [`PI_BRANCH_MARGIN`] of pi are
/// rejected: there the skew part vanishes and the axis sign is ambiguous.
pub fn so3_log(r: &Rotation) -> Result<Vector3<f64>> {
    let m = r.matrix();
    let cos_phi = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let phi = cos_phi.acos();
    if phi >= std::f64::consts::PI - PI_BRANCH_MARGIN {
        return Err(Error::NearPiSingularity {
            phi,
            margin: PI_BRANCH_MARGIN,
        });
    }
    // vee(R - R^T) = 2 sin(phi) * axis, so omega = vee(R - R^T) / (2 sinc(phi)).
    let skew = vee(&(m - m.transpose()));
    Ok(skew / (2.0 * sinc(phi)))
}

/// Left Jacobian of SO(3):
/// `J(omega) = sinc(phi) I + (1 - sinc(phi)) n n^T + cosc(phi)*phi [n]x`,
/// implemented in the equivalent polynomial form
/// `I + cosc(phi) [omega]x + sinc3(phi) [omega]x^2`.
pub fn so3_left_jacobian(omega: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let phi = omega.norm();
    if phi >= std::f64::consts::PI {
        return Err(Error::AngleOutOfRange {
            phi,
            limit: std::f64::consts::PI,
        });
    }
    let k = hat(omega);
    Ok(Matrix3::identity() + cosc(phi) * k + sinc3(phi) * (k * k))
}

/// Inverse left Jacobian of SO(3):
/// `J^-1(omega) = alpha(phi) I + (1 - alpha(phi)) n n^T - (phi/2) [n]x`
/// with `alpha` from [`alpha_coefficient`], implemented as
/// `I - 1/2 [omega]x + (1 - alpha)/phi^2 [omega]x^2`.
///
/// Rejects angles within [`PI_BRANCH_MARGIN`] of pi, where `alpha -> 0` and
/// the inverse becomes ill-conditioned along the branch boundary.
pub fn so3_left_jacobian_inv(omega: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let phi = omega.norm();
    if phi >= std::f64::consts::PI - PI_BRANCH_MARGIN {
        return Err(Error::NearPiSingularity {
            phi,
            margin: PI_BRANCH_MARGIN,
        });
    }
    let k = hat(omega);
    Ok(Matrix3::identity() - 0.5 * k + one_minus_alpha_over_phi2(phi) * (k * k))
}

/// SE(3) exponential map: `R = exp(omega)`, `t = J(omega) v`.
pub fn se3_exp(xi: &TangentVector) -> Result<Pose> {
    let rotation = so3_exp(&xi.omega)?;
    let translation = so3_left_jacobian(&xi.omega)? * xi.v;
    Ok(Pose {
        rotation,
        translation,
    })
}

/// SE(3) logarithm: `omega = log(R)`, `v = J(omega)^-1 t`.
///
/// `v` equals the Euclidean translation only at identity rotation; in
/// general it is the constant body-velocity coordinate that reproduces the
/// transform through [`se3_exp`].
pub fn se3_log(pose: &Pose) -> Result<TangentVector> {
    let omega = so3_log(&pose.rotation)?;
    let v = so3_left_jacobian_inv(&omega)? * pose.translation;
    Ok(TangentVector { omega, v })
}
