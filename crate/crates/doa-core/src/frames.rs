//! Coordinate-frame algebra: proper rotations, global ↔ INS transforms, the
//! azimuth/elevation parametrisation of DOA unit vectors, and the geodesic
//! metric on SO(3).

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position / displacement vector. Metres for positions and translations,
/// dimensionless for unit vectors.
pub type Vec3 = Vector3<f64>;

/// Orthogonality / determinant tolerance for [`Rotation3`].
pub const ROTATION_TOL: f64 = 1e-9;

/// A proper rotation matrix in SO(3), stored as its nine entries.
///
/// Entries are kept explicit (rather than a quaternion) because the SDP
/// unknowns are the entries `r_ij` themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation3(Matrix3<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3(Matrix3::identity())
    }

    /// Wraps a matrix, checking orthogonality and `det = +1` to `1e-9`.
    pub fn from_matrix(m: Matrix3<f64>) -> Option<Self> {
        let ortho = (m * m.transpose() - Matrix3::identity()).norm();
        let det = m.determinant();
        if ortho < ROTATION_TOL && (det - 1.0).abs() < ROTATION_TOL {
            Some(Rotation3(m))
        } else {
            None
        }
    }

    /// Wraps a matrix without validation. Caller guarantees the invariants.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation3(m)
    }

    /// Rotation by `angle` radians about a (non-zero) axis, via Rodrigues.
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let u = axis.normalize();
        let k = skew(&u);
        let m = Matrix3::identity() + angle.sin() * k + (1.0 - angle.cos()) * (k * k);
        Rotation3(m)
    }

    /// Rotation from a unit quaternion `(w, x, y, z)`.
    pub fn from_unit_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let m = Matrix3::new(
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
        Rotation3(m)
    }

    /// Haar-uniform random rotation: four standard normals normalised to a
    /// unit quaternion, then converted.
    pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        use rand_distr::StandardNormal;
        loop {
            let q: [f64; 4] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
            if n > 1e-6 {
                return Self::from_unit_quaternion(q[0] / n, q[1] / n, q[2] / n, q[3] / n);
            }
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation3(self.0.transpose())
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Frobenius distance of `R·Rᵀ` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.0 * self.0.transpose() - Matrix3::identity()).norm()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Geodesic distance on SO(3): the magnitude of the relative rotation angle
/// `arccos((tr(R₁ᵀR₂) − 1)/2)`, in `[0, π]`.
///
/// Evaluated as `atan2(‖skew(E)‖, (tr(E) − 1)/2)` with `E = R₁ᵀR₂`, which is
/// the same angle but stays accurate near 0 and π, where the raw arccos loses
/// half the available precision to cancellation in the trace.
pub fn geodesic_distance(r1: &Rotation3, r2: &Rotation3) -> f64 {
    let e = r1.matrix().transpose() * r2.matrix();
    // sinθ·axis = vee((E − Eᵀ)/2); cosθ = (tr(E) − 1)/2.
    let s = Vec3::new(
        e[(2, 1)] - e[(1, 2)],
        e[(0, 2)] - e[(2, 0)],
        e[(1, 0)] - e[(0, 1)],
    )
    .norm()
        * 0.5;
    let c = ((e.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    s.atan2(c)
}

/// Rigid map from the global frame into Agent B's INS frame:
/// `p_ins = R · p_global + T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTransform {
    pub rotation: Rotation3,
    /// Metres.
    pub translation: Vec3,
}

impl FrameTransform {
    pub fn identity() -> Self {
        FrameTransform {
            rotation: Rotation3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: Rotation3, translation: Vec3) -> Self {
        FrameTransform {
            rotation,
            translation,
        }
    }

    /// `R · p + T`.
    pub fn apply(&self, p_global: &Vec3) -> Vec3 {
        self.rotation.rotate(p_global) + self.translation
    }

    /// The inverse map `(Rᵀ, −Rᵀ·T)`, taking INS coordinates back to global.
    pub fn inverse(&self) -> FrameTransform {
        let rt = self.rotation.transpose();
        FrameTransform {
            translation: -rt.rotate(&self.translation),
            rotation: rt,
        }
    }
}

/// Direction of arrival expressed in B's INS-aligned frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoaAngles {
    /// Azimuth θ, radians in `(−π, π]`: angle from the +x axis to the xy-plane
    /// projection of the B→A vector.
    pub azimuth: f64,
    /// Elevation φ, radians in `[−π/2, π/2]`: angle between the B→A unit
    /// vector and the xy plane, positive for positive z.
    pub elevation: f64,
}

impl DoaAngles {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        DoaAngles { azimuth, elevation }
    }

    /// Unit vector `(cosθcosφ, sinθcosφ, sinφ)` pointing from B towards A.
    pub fn unit_vector(&self) -> Vec3 {
        let (st, ct) = self.azimuth.sin_cos();
        let (sp, cp) = self.elevation.sin_cos();
        Vec3::new(ct * cp, st * cp, sp)
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a % two_pi;
    if w <= -std::f64::consts::PI {
        w += two_pi;
    } else if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Azimuth/elevation of a displacement vector.
///
/// At the poles (`φ = ±π/2`) azimuth is unobservable and is reported as 0.
pub fn angles_from_vector(d: &Vec3) -> Result<DoaAngles> {
    let norm = d.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateDisplacement);
    }
    let azimuth = if d.x == 0.0 && d.y == 0.0 {
        0.0
    } else {
        d.y.atan2(d.x)
    };
    let elevation = (d.z / norm).clamp(-1.0, 1.0).asin();
    Ok(DoaAngles { azimuth, elevation })
}
