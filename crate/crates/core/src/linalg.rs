//! Small fixed-size helpers on top of nalgebra.

use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Eigenvalues of a symmetric 3x3 matrix in descending order (trigonometric closed form).
pub fn symmetric_eigenvalues(m: &Mat3) -> [f64; 3] {
    let p1 = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
    let q = m.trace() / 3.0;
    let p2 = (m[(0, 0)] - q).powi(2) + (m[(1, 1)] - q).powi(2) + (m[(2, 2)] - q).powi(2) + 2.0 * p1;
    if p2 <= f64::MIN_POSITIVE {
        return [q, q, q];
    }
    let p = (p2 / 6.0).sqrt();
    let b = (m - Mat3::identity() * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e1, e2, e3]
}

/// Spectral norm `‖m‖_{l²→l²}`.
///
/// Symmetric inputs use their eigenvalues directly, anything else goes through `mᵀm`.
pub fn spectral_norm(m: &Mat3) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    if (m - m.transpose()).amax() <= 1e-14 * scale {
        let e = symmetric_eigenvalues(m);
        e[0].abs().max(e[2].abs())
    } else {
        let e = symmetric_eigenvalues(&(m.transpose() * m));
        e[0].max(0.0).sqrt()
    }
}

/// Orthogonal projector `I - n nᵀ` for a unit vector `n`.
pub fn tangent_projector(n: &Vec3) -> Mat3 {
    Mat3::identity() - n * n.transpose()
}
