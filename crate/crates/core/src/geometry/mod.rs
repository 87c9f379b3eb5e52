//! Implicit surfaces and the geometric quantities that lift functions from the
//! polyhedral surface `Γ_h` onto the smooth surface `Γ`.
//!
//! All lifted quantities are evaluated at points `x` of `Γ_h` through the closest-point
//! map `ξ(x) = x - d(x) ν(ξ(x))`.

mod field;
mod surfaces;

use std::fmt;
use std::sync::Arc;

pub use field::{surface_forcing, tangential_gradient, AmbientField, ClosureField};
pub use surfaces::{ClosureLevelSet, Dziuk, EnzensbergerStern, ImplicitFunction, UnitSphere};

use crate::linalg::tangent_projector;
use crate::{Mat3, Vec3};

const MAX_PROJECTION_ITERATIONS: usize = 100;
const MIN_GRADIENT: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("closest-point projection of {point:?} did not converge")]
    NoConvergence { point: Vec3 },
    #[error("level-set gradient vanishes near {point:?}")]
    DegenerateGradient { point: Vec3 },
    #[error("point {point:?} lies outside the one-to-one band (1 + d kappa = {factor:.3e})")]
    FoldedGeometry { point: Vec3, factor: f64 },
    #[error("discrete normal opposes the surface normal at {point:?} (nu . nu_h = {dot:.3e})")]
    OrientationFlip { point: Vec3, dot: f64 },
    #[error("lifted edge tangent degenerates at {point:?}")]
    DegenerateEdge { point: Vec3 },
    #[error("non-finite value at {point:?}")]
    NonFinite { point: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    Sphere,
    Dziuk,
    EnzensbergerStern,
    User,
}

/// Closed surface given as the zero level set of a smooth function.
#[derive(Clone)]
pub struct LevelSetSurface {
    kind: SurfaceKind,
    function: Arc<dyn ImplicitFunction>,
    bounding_radius: f64,
}

impl fmt::Debug for LevelSetSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelSetSurface")
            .field("kind", &self.kind)
            .field("bounding_radius", &self.bounding_radius)
            .finish()
    }
}

/// Lifted geometry at a point `x` of a planar triangle with unit normal `nu_h`.
#[derive(Debug, Clone, Copy)]
pub struct LiftData {
    pub x: Vec3,
    pub xi: Vec3,
    pub d: f64,
    pub nu: Vec3,
    pub nu_h: Vec3,
    /// Weingarten map at `x`: the Hessian of the signed distance.
    pub h: Mat3,
    pub p: Mat3,
    pub p_h: Mat3,
    pub delta_h: f64,
    pub a_h: Mat3,
    pub f_h: Mat3,
    pub b_h: Mat3,
    /// `∇ξ = P - dH`.
    pub grad_xi: Mat3,
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeLiftData {
    pub delta_e: f64,
    pub n_h: Vec3,
    /// Conormal of the lifted edge at `ξ(x)`, oriented to agree with `n_h`.
    pub n_inv_lift: Vec3,
}

/// Part of the lift that does not depend on the host triangle.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    pub x: Vec3,
    pub xi: Vec3,
    pub d: f64,
    pub nu: Vec3,
    /// Shape operator at `ξ`.
    pub shape: Mat3,
}

impl LevelSetSurface {
    pub fn new(kind: SurfaceKind, function: Arc<dyn ImplicitFunction>, bounding_radius: f64) -> Self {
        Self { kind, function, bounding_radius }
    }

    pub fn sphere() -> Self {
        Self::new(SurfaceKind::Sphere, Arc::new(UnitSphere), 1.0)
    }

    pub fn dziuk() -> Self {
        Self::new(SurfaceKind::Dziuk, Arc::new(Dziuk), 1.5)
    }

    pub fn enzensberger_stern() -> Self {
        Self::new(SurfaceKind::EnzensbergerStern, Arc::new(EnzensbergerStern::default()), 2.2)
    }

    /// Surface from user callbacks `(φ, ∇φ, D²φ)`.
    pub fn user<F, G, H>(phi: F, gradient: G, hessian: H, bounding_radius: f64) -> Self
    where
        F: Fn(&Vec3) -> f64 + Send + Sync + 'static,
        G: Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
        H: Fn(&Vec3) -> Mat3 + Send + Sync + 'static,
    {
        let function = ClosureLevelSet {
            phi: Box::new(phi),
            gradient: Box::new(gradient),
            hessian: Box::new(hessian),
        };
        Self::new(SurfaceKind::User, Arc::new(function), bounding_radius)
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    pub fn phi(&self, x: &Vec3) -> f64 {
        self.function.value(x)
    }

    pub fn grad_phi(&self, x: &Vec3) -> Vec3 {
        self.function.gradient(x)
    }

    pub fn hess_phi(&self, x: &Vec3) -> Mat3 {
        self.function.hessian(x)
    }

    fn checked_gradient(&self, x: &Vec3) -> Result<Vec3, GeometryError> {
        let g = self.function.gradient(x);
        let n = g.norm();
        if !n.is_finite() {
            return Err(GeometryError::NonFinite { point: *x });
        }
        if n < MIN_GRADIENT {
            return Err(GeometryError::DegenerateGradient { point: *x });
        }
        Ok(g)
    }

    /// Outward unit normal of the level set through `x`.
    pub fn normal(&self, x: &Vec3) -> Result<Vec3, GeometryError> {
        Ok(self.checked_gradient(x)?.normalize())
    }

    /// Distance of `x` to the surface estimated to first order, `|φ| / |∇φ|`.
    pub fn first_order_distance(&self, x: &Vec3) -> Result<f64, GeometryError> {
        Ok(self.phi(x).abs() / self.checked_gradient(x)?.norm())
    }

    /// Closest point `ξ` on the surface and signed distance `d` (positive outside).
    ///
    /// The iterate is kept on the surface by Newton steps along `∇φ`. It then moves by
    /// Riemannian Newton steps for `½|x - ξ|²`, whose Hessian on the tangent plane is
    /// `P (I + dS) P`, falling back to steepest descent where that Hessian is not positive.
    /// Every accepted step decreases the distance to `x`.
    pub fn closest_point(&self, x: &Vec3) -> Result<(Vec3, f64), GeometryError> {
        let tol = 1e-12 * self.bounding_radius;
        let mut xi = self.retract(x, x)?;
        let mut dist = (x - xi).norm();

        for _ in 0..MAX_PROJECTION_ITERATIONS {
            let g = self.checked_gradient(&xi)?;
            let n = g.normalize();
            let r = x - xi;
            let d = r.dot(&n);
            let tangential = r - n * d;
            if tangential.norm() <= tol {
                if !d.is_finite() {
                    return Err(GeometryError::NonFinite { point: *x });
                }
                return Ok((xi, d));
            }

            let p = tangent_projector(&n);
            let shape = p * self.hess_phi(&xi) * p / g.norm();
            let hess = p * (Mat3::identity() + shape * d) * p + n * n.transpose();
            let newton = hess.try_inverse().map(|inv| p * (inv * tangential));
            let step = match newton {
                Some(s) if s.dot(&tangential) > 0.1 * s.norm() * tangential.norm() => s,
                _ => self.escape_direction(&hess, &tangential, d),
            };

            let mut t = 1.0;
            loop {
                let candidate = self.retract(&(xi + step * t), x)?;
                let cand_dist = (x - candidate).norm();
                // near the solution distances stop resolving progress; the tangential
                // residual still does
                if cand_dist < dist || self.tangential_residual(x, &candidate)? < 0.5 * tangential.norm() {
                    xi = candidate;
                    dist = cand_dist;
                    break;
                }
                t *= 0.5;
                if step.norm() * t < 1e-3 * tol {
                    // no further decrease is representable
                    if tangential.norm() <= 1e3 * tol {
                        return Ok((xi, d));
                    }
                    return Err(GeometryError::NoConvergence { point: *x });
                }
            }
        }
        Err(GeometryError::NoConvergence { point: *x })
    }

    /// Descent step where the Newton step is unusable. Close to a saddle of the distance
    /// the residual is tiny, so a step along the most negative curvature direction (of
    /// length comparable to `|d|`) leaves it much faster than the residual itself.
    fn escape_direction(&self, hess: &Mat3, tangential: &Vec3, d: f64) -> Vec3 {
        let eigen = hess.symmetric_eigen();
        let (k, lowest) = eigen
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &l)| if l < acc.1 { (i, l) } else { acc });
        if lowest >= 0.0 {
            return *tangential;
        }
        let v: Vec3 = eigen.eigenvectors.column(k).into_owned();
        let v = if v.dot(tangential) < 0.0 { -v } else { v };
        v * (0.5 * d.abs()).max(tangential.norm()) + tangential
    }

    fn tangential_residual(&self, x: &Vec3, xi: &Vec3) -> Result<f64, GeometryError> {
        let n = self.normal(xi)?;
        let r = x - xi;
        Ok((r - n * r.dot(&n)).norm())
    }

    /// Newton iteration for `φ = 0` along the gradient, starting from `y`.
    fn retract(&self, y: &Vec3, origin: &Vec3) -> Result<Vec3, GeometryError> {
        let tol = 1e-15 * self.bounding_radius;
        let mut z = *y;
        for _ in 0..MAX_PROJECTION_ITERATIONS {
            let g = self.checked_gradient(&z)?;
            let step = g * (self.phi(&z) / g.norm_squared());
            z -= step;
            if !z[0].is_finite() || !z[1].is_finite() || !z[2].is_finite() {
                return Err(GeometryError::NonFinite { point: *origin });
            }
            if step.norm() <= tol {
                return Ok(z);
            }
        }
        // converged to round-off level without meeting the strict step test
        let g = self.checked_gradient(&z)?;
        if self.phi(&z).abs() / g.norm() <= 1e3 * tol {
            Ok(z)
        } else {
            Err(GeometryError::NoConvergence { point: *origin })
        }
    }

    /// Shape operator `S = P (D²φ / |∇φ|) P` at a surface point; its non-zero eigenvalues
    /// are the principal curvatures.
    pub fn shape_operator(&self, xi: &Vec3) -> Result<Mat3, GeometryError> {
        let g = self.checked_gradient(xi)?;
        let gn = g.norm();
        let p = tangent_projector(&(g / gn));
        Ok(p * self.hess_phi(xi) * p / gn)
    }

    pub fn project(&self, x: &Vec3) -> Result<Projection, GeometryError> {
        let (xi, d) = self.closest_point(x)?;
        let nu = self.normal(&xi)?;
        let shape = self.shape_operator(&xi)?;
        Ok(Projection { x: *x, xi, d, nu, shape })
    }

    pub fn lift_data(&self, x: &Vec3, nu_h: &Vec3) -> Result<LiftData, GeometryError> {
        self.project(x)?.lift(nu_h)
    }

    pub fn edge_lift_data(
        &self,
        lift: &LiftData,
        tau_h: &Vec3,
        n_h: &Vec3,
    ) -> Result<EdgeLiftData, GeometryError> {
        lift.edge(tau_h, n_h)
    }
}

impl Projection {
    /// Principal curvatures at `ξ` (larger first).
    pub fn principal_curvatures(&self) -> (f64, f64) {
        let s = &self.shape;
        let tr = s.trace();
        let second = 0.5 * (tr * tr - (s * s).trace());
        let disc = (0.25 * tr * tr - second).max(0.0).sqrt();
        (0.5 * tr + disc, 0.5 * tr - disc)
    }

    /// Completes the lift for a host triangle with unit normal `nu_h`.
    pub fn lift(&self, nu_h: &Vec3) -> Result<LiftData, GeometryError> {
        let (k1, k2) = self.principal_curvatures();
        // Along the normal the level sets of d have curvatures κ/(1 + dκ).
        let (f1, f2) = (1.0 + self.d * k1, 1.0 + self.d * k2);
        if f1 <= 0.0 || f2 <= 0.0 {
            return Err(GeometryError::FoldedGeometry { point: self.x, factor: f1.min(f2) });
        }
        let dot = self.nu.dot(nu_h);
        if dot <= 0.0 {
            return Err(GeometryError::OrientationFlip { point: self.x, dot });
        }

        let identity = Mat3::identity();
        let p = tangent_projector(&self.nu);
        let p_h = tangent_projector(nu_h);
        // (I - dH)⁻¹ = I + dS and H = S (I + dS)⁻¹
        let inv_id_h = identity + self.shape * self.d;
        let id_h = inv_id_h
            .try_inverse()
            .ok_or(GeometryError::FoldedGeometry { point: self.x, factor: f1.min(f2) })?;
        let h = self.shape * id_h;
        let delta_h = dot / (f1 * f2);
        let a_h = p * id_h * p_h * id_h * p / delta_h;
        let f_h = inv_id_h * (identity - nu_h * self.nu.transpose() / dot);
        let b_h = (p - a_h) * f_h * delta_h.sqrt();
        let grad_xi = p - h * self.d;

        Ok(LiftData {
            x: self.x,
            xi: self.xi,
            d: self.d,
            nu: self.nu,
            nu_h: *nu_h,
            h,
            p,
            p_h,
            delta_h,
            a_h,
            f_h,
            b_h,
            grad_xi,
        })
    }
}

impl LiftData {
    /// `P_h (I - dH) P`, the map taking lifted gradients back to `Γ_h`.
    pub fn pullback(&self) -> Mat3 {
        self.p_h * (Mat3::identity() - self.h * self.d) * self.p
    }

    pub fn edge(&self, tau_h: &Vec3, n_h: &Vec3) -> Result<EdgeLiftData, GeometryError> {
        let lifted = self.grad_xi * tau_h;
        let delta_e = lifted.norm();
        if delta_e < MIN_GRADIENT {
            return Err(GeometryError::DegenerateEdge { point: self.x });
        }
        let mut n = self.nu.cross(&(lifted / delta_e));
        let len = n.norm();
        if len < MIN_GRADIENT {
            return Err(GeometryError::DegenerateEdge { point: self.x });
        }
        n /= len;
        if n.dot(n_h) < 0.0 {
            n = -n;
        }
        Ok(EdgeLiftData { delta_e, n_h: *n_h, n_inv_lift: n })
    }
}

#[cfg(test)]
mod tests;
