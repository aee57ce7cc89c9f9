//! Orthogonal Procrustes projection: the nearest orthogonal matrix in
//! Frobenius norm, and the proper-rotation (det = +1) special case used to
//! repair the rotation block extracted from the relaxed SDP.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::frames::Rotation3;

/// Result of the det = +1 projection.
#[derive(Debug, Clone, Copy)]
pub struct NearestRotation {
    pub rotation: Rotation3,
    /// Set when a determinant flip was required while the two smallest
    /// singular values are (near-)equal, so the minimiser is not unique.
    pub non_unique: bool,
}

fn svd3(m: &Matrix3<f64>) -> Result<(Matrix3<f64>, [f64; 3], Matrix3<f64>)> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let s = svd.singular_values;
    // nalgebra returns singular values in descending order.
    if s[1] < 1e-12 * s[0].max(1.0) {
        return Err(Error::IllDefinedProjection);
    }
    Ok((u, [s[0], s[1], s[2]], v_t))
}

/// Closest orthogonal matrix `UVᵀ` from the SVD `m = UΣVᵀ`. May be a
/// reflection (det = −1).
pub fn nearest_orthogonal(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let (u, _, v_t) = svd3(m)?;
    Ok(u * v_t)
}

/// Closest proper rotation `U·diag(1, 1, det(UVᵀ))·Vᵀ`; always det = +1.
pub fn nearest_rotation(m: &Matrix3<f64>) -> Result<NearestRotation> {
    let (u, s, v_t) = svd3(m)?;
    let det = (u * v_t).determinant();
    let sign = if det < 0.0 { -1.0 } else { 1.0 };
    let rotation = u * Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, sign)) * v_t;
    let non_unique = sign < 0.0 && (s[1] - s[2]) < 1e-8 * s[0].max(1.0);
    Ok(NearestRotation {
        rotation: Rotation3::from_matrix_unchecked(rotation),
        non_unique,
    })
}
