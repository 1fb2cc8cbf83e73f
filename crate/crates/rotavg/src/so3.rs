//! Primitives on the rotation group SO(3) and the unit sphere S³.
//!
//! Rotations are stored as 3×3 direction-cosine matrices and validated on
//! construction: `‖RᵀR − I‖_F ≤ 1e-9` and `|det R − 1| ≤ 1e-9`. Tangent
//! vectors use the axis-angle form (direction = axis, magnitude = angle in
//! radians, restricted to `[0, π]`), so `exp`/`log` are mutually inverse on
//! their whole domain.
//!
//! Two metrics are provided:
//!   - chordal: `d_F(R₁, R₂) = ‖R₁ − R₂‖_F`, range `[0, 2√2]`,
//!   - geodesic: `d_R(R₁, R₂) = (1/√2)·‖Log(R₁ᵀR₂)‖_F`, i.e. the relative
//!     rotation angle, range `[0, π]`.
//!
//! They are related by `d_F = 2√2·sin(d_R/2)`.
//!
//! The logarithm extracts the axis through the quaternion representation
//! (largest-pivot branch selection), which stays well conditioned at the
//! angle-π boundary where the skew part `R − Rᵀ` vanishes.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Tolerance for manifold membership at construction.
pub const ROTATION_TOLERANCE: f64 = 1e-9;
/// Tolerance for the unit-norm check at quaternion construction.
pub const QUATERNION_TOLERANCE: f64 = 1e-9;
/// Relative singular-value threshold below which the SO(3) projection is
/// treated as non-unique.
pub const PROJECTION_DEGENERACY_TOLERANCE: f64 = 1e-9;

// Rounding slack allowed on top of the angle ≤ π bound.
const ANGLE_SLACK: f64 = 1e-12;
// Below this angle the Rodrigues coefficients switch to series form.
const SMALL_ANGLE: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So3Error {
    #[error(
        "matrix is not a rotation (orthogonality defect {orthogonality:.3e}, \
         determinant defect {determinant:.3e}, tolerance {tolerance:.1e})"
    )]
    NotARotation {
        orthogonality: f64,
        determinant: f64,
        tolerance: f64,
    },
    #[error("quaternion norm {norm} differs from 1 by more than {tolerance:.1e}")]
    NonUnitQuaternion { norm: f64, tolerance: f64 },
    #[error("rotation vector angle {angle} exceeds \u{3c0}")]
    AngleOutOfRange { angle: f64 },
    #[error("projection onto SO(3) is not unique (singular values {sigma:?})")]
    DegenerateProjection { sigma: [f64; 3] },
}

/// A proper rotation: 3×3 orthogonal matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    matrix: Matrix3<f64>,
}

/// Axis-angle tangent vector: direction is the rotation axis, norm is the
/// rotation angle in `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationVector {
    omega: Vector3<f64>,
}

/// Unit quaternion `(w, x, y, z)` on S³. Sign is kept as constructed;
/// [`UnitQuaternion::canonicalized`] selects the double-cover sheet with
/// `w ≥ 0` (ties broken by the first nonzero component being positive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

/// Frobenius defects of `M` from the rotation manifold:
/// `(‖MᵀM − I‖_F, |det M − 1|)`.
pub fn rotation_defect(matrix: &Matrix3<f64>) -> (f64, f64) {
    let orthogonality = (matrix.transpose() * matrix - Matrix3::identity()).norm();
    let determinant = (matrix.determinant() - 1.0).abs();
    (orthogonality, determinant)
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation {
            matrix: Matrix3::identity(),
        }
    }

    /// Validates manifold membership at tolerance [`ROTATION_TOLERANCE`] and
    /// stores the matrix as given (no silent repair; see
    /// [`Rotation::from_matrix_repaired`] and [`project_to_so3`]).
    pub fn from_matrix(matrix: Matrix3<f64>) -> Result<Self, So3Error> {
        let (orthogonality, determinant) = rotation_defect(&matrix);
        if orthogonality > ROTATION_TOLERANCE || determinant > ROTATION_TOLERANCE {
            return Err(So3Error::NotARotation {
                orthogonality,
                determinant,
                tolerance: ROTATION_TOLERANCE,
            });
        }
        Ok(Rotation { matrix })
    }

    /// Accepts a matrix within `max_defect` of the manifold and projects it
    /// onto SO(3); rejects anything farther.
    pub fn from_matrix_repaired(matrix: Matrix3<f64>, max_defect: f64) -> Result<Self, So3Error> {
        let (orthogonality, determinant) = rotation_defect(&matrix);
        if orthogonality > max_defect || determinant > max_defect {
            return Err(So3Error::NotARotation {
                orthogonality,
                determinant,
                tolerance: max_defect,
            });
        }
        project_to_so3(&matrix)
    }

    /// For matrices already known to lie on the manifold (projection output,
    /// products of valid rotations).
    pub(crate) fn from_matrix_unchecked(matrix: Matrix3<f64>) -> Self {
        Rotation { matrix }
    }

    /// Rotation by `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let theta = angle.rem_euclid(2.0 * std::f64::consts::PI);
        let theta = if theta > std::f64::consts::PI {
            theta - 2.0 * std::f64::consts::PI
        } else {
            theta
        };
        let unit = axis / axis.norm();
        RotationVector::new(unit * theta.abs())
            .expect("wrapped angle is within [0, pi]")
            .exp()
            .powi_sign(theta)
    }

    // Flips to the inverse rotation when the wrapped angle was negative.
    fn powi_sign(self, theta: f64) -> Self {
        if theta < 0.0 {
            self.transposed()
        } else {
            self
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    /// The inverse rotation (transpose).
    pub fn transposed(&self) -> Self {
        Rotation {
            matrix: self.matrix.transpose(),
        }
    }

    /// Relative rotation carrying `self` to `other`: `selfᵀ·other`.
    pub fn relative_to(&self, other: &Rotation) -> Rotation {
        Rotation {
            matrix: self.matrix.transpose() * other.matrix,
        }
    }

    /// Rotation angle in `[0, π]` (geodesic distance to the identity).
    pub fn angle(&self) -> f64 {
        let q = self.to_quaternion();
        let s = (q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
        2.0 * s.atan2(q.w)
    }

    /// Matrix logarithm in axis-angle form, angle in `[0, π]`.
    ///
    /// The axis comes from the quaternion representation, which keeps the
    /// θ = π branch (where `R − Rᵀ = 0`) well defined.
    pub fn log(&self) -> RotationVector {
        let q = self.to_quaternion();
        let v = Vector3::new(q.x, q.y, q.z);
        let s = v.norm();
        // ω = θ·axis with θ = 2·atan2(s, w); as s → 0 the coefficient
        // 2·atan2(s, w)/s → 2/w.
        let coeff = if s > 1e-9 {
            2.0 * s.atan2(q.w) / s
        } else {
            2.0 / q.w
        };
        RotationVector { omega: v * coeff }
    }

    /// Frobenius (chordal) distance `‖R₁ − R₂‖_F`, in `[0, 2√2]`.
    pub fn chordal_distance(&self, other: &Rotation) -> f64 {
        (self.matrix - other.matrix).norm()
    }

    /// Geodesic distance: the angle of the relative rotation, in `[0, π]`.
    pub fn geodesic_distance(&self, other: &Rotation) -> f64 {
        self.relative_to(other).angle()
    }

    /// Canonical-sheet unit quaternion for this rotation (Shepperd's
    /// largest-pivot branch selection).
    pub fn to_quaternion(&self) -> UnitQuaternion {
        let m = &self.matrix;
        let trace = m.trace();
        let (w, x, y, z);
        if trace >= m[(0, 0)] && trace >= m[(1, 1)] && trace >= m[(2, 2)] {
            let r = (1.0 + trace).sqrt();
            let inv = 0.5 / r;
            w = 0.5 * r;
            x = (m[(2, 1)] - m[(1, 2)]) * inv;
            y = (m[(0, 2)] - m[(2, 0)]) * inv;
            z = (m[(1, 0)] - m[(0, 1)]) * inv;
        } else if m[(0, 0)] >= m[(1, 1)] && m[(0, 0)] >= m[(2, 2)] {
            let r = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt();
            let inv = 0.5 / r;
            x = 0.5 * r;
            w = (m[(2, 1)] - m[(1, 2)]) * inv;
            y = (m[(0, 1)] + m[(1, 0)]) * inv;
            z = (m[(0, 2)] + m[(2, 0)]) * inv;
        } else if m[(1, 1)] >= m[(2, 2)] {
            let r = (1.0 - m[(0, 0)] + m[(1, 1)] - m[(2, 2)]).sqrt();
            let inv = 0.5 / r;
            y = 0.5 * r;
            w = (m[(0, 2)] - m[(2, 0)]) * inv;
            x = (m[(0, 1)] + m[(1, 0)]) * inv;
            z = (m[(1, 2)] + m[(2, 1)]) * inv;
        } else {
            let r = (1.0 - m[(0, 0)] - m[(1, 1)] + m[(2, 2)]).sqrt();
            let inv = 0.5 / r;
            z = 0.5 * r;
            w = (m[(1, 0)] - m[(0, 1)]) * inv;
            x = (m[(0, 2)] + m[(2, 0)]) * inv;
            y = (m[(1, 2)] + m[(2, 1)]) * inv;
        }
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        UnitQuaternion {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        }
        .canonicalized()
    }

    /// Images of the canonical basis vectors on the unit sphere: the three
    /// columns of the matrix.
    pub fn sphere_points(&self) -> [Vector3<f64>; 3] {
        [
            self.matrix.column(0).into(),
            self.matrix.column(1).into(),
            self.matrix.column(2).into(),
        ]
    }
}

impl std::ops::Mul for &Rotation {
    type Output = Rotation;

    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation {
            matrix: self.matrix * rhs.matrix,
        }
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        &self * &rhs
    }
}

impl RotationVector {
    /// Validates `‖ω‖ ≤ π` (with rounding slack).
    pub fn new(omega: Vector3<f64>) -> Result<Self, So3Error> {
        let angle = omega.norm();
        if angle > std::f64::consts::PI + ANGLE_SLACK {
            return Err(So3Error::AngleOutOfRange { angle });
        }
        Ok(RotationVector { omega })
    }

    pub fn zero() -> Self {
        RotationVector {
            omega: Vector3::zeros(),
        }
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.omega
    }

    pub fn angle(&self) -> f64 {
        self.omega.norm()
    }

    /// Exponential map (Rodrigues' formula); the zero vector maps to the
    /// identity.
    pub fn exp(&self) -> Rotation {
        let theta = self.omega.norm();
        let k = skew(&self.omega);
        let theta2 = theta * theta;
        // sin θ / θ and (1 − cos θ)/θ² with series fallbacks near zero.
        let (a, b) = if theta < SMALL_ANGLE {
            (
                1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
                0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
            )
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
        };
        Rotation {
            matrix: Matrix3::identity() + a * k + b * (k * k),
        }
    }
}

impl UnitQuaternion {
    /// Validates the unit norm at tolerance [`QUATERNION_TOLERANCE`] and
    /// normalizes. The sign is kept as given. Components already unit to a
    /// few ulps are stored untouched, making normalization idempotent and
    /// file round trips bitwise exact.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, So3Error> {
        Self::validated(w, x, y, z, QUATERNION_TOLERANCE)
    }

    /// Like [`UnitQuaternion::new`] but with a caller-chosen norm tolerance
    /// (repair path for rounded input data).
    pub fn new_repaired(w: f64, x: f64, y: f64, z: f64, max_defect: f64) -> Result<Self, So3Error> {
        Self::validated(w, x, y, z, max_defect)
    }

    fn validated(w: f64, x: f64, y: f64, z: f64, tolerance: f64) -> Result<Self, So3Error> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > tolerance {
            return Err(So3Error::NonUnitQuaternion { norm, tolerance });
        }
        if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(UnitQuaternion { w, x, y, z });
        }
        Ok(UnitQuaternion {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn identity() -> Self {
        UnitQuaternion {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &UnitQuaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Representative with `w ≥ 0`; when `w = 0`, the first nonzero of
    /// `(x, y, z)` is made positive. Both sheets map to the same rotation.
    pub fn canonicalized(&self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        if flip {
            -*self
        } else {
            *self
        }
    }

    /// The double cover S³ → SO(3); `q` and `−q` give the same matrix.
    pub fn to_rotation(&self) -> Rotation {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let matrix = Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
        Rotation { matrix }
    }
}

impl std::ops::Neg for UnitQuaternion {
    type Output = UnitQuaternion;

    fn neg(self) -> UnitQuaternion {
        UnitQuaternion {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// Nearest rotation to `m` in the Frobenius norm, via SVD with the
/// determinant sign correction applied to the smallest singular direction.
///
/// Fails with [`So3Error::DegenerateProjection`] when the minimizer is not
/// unique: rank-deficient input, or tied smallest singular values under a
/// negative determinant.
pub fn project_to_so3(m: &Matrix3<f64>) -> Result<Rotation, So3Error> {
    let svd = m.svd(true, true);
    let sigma = svd.singular_values;
    let u = svd.u.ok_or(So3Error::DegenerateProjection {
        sigma: [sigma[0], sigma[1], sigma[2]],
    })?;
    let v_t = svd.v_t.ok_or(So3Error::DegenerateProjection {
        sigma: [sigma[0], sigma[1], sigma[2]],
    })?;

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    let (largest, middle, smallest) = (sigma[order[0]], sigma[order[1]], sigma[order[2]]);
    let sigma_out = [largest, middle, smallest];

    if largest <= 0.0 || smallest <= PROJECTION_DEGENERACY_TOLERANCE * largest {
        return Err(So3Error::DegenerateProjection { sigma: sigma_out });
    }

    let flip = u.determinant() * v_t.determinant() < 0.0;
    if flip && (middle - smallest) <= PROJECTION_DEGENERACY_TOLERANCE * largest {
        return Err(So3Error::DegenerateProjection { sigma: sigma_out });
    }

    let mut d = Vector3::new(1.0, 1.0, 1.0);
    if flip {
        d[order[2]] = -1.0;
    }
    let rotation = u * Matrix3::from_diagonal(&d) * v_t;
    Ok(Rotation::from_matrix_unchecked(rotation))
}
