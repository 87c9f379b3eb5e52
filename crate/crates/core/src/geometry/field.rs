use super::{GeometryError, LevelSetSurface};
use crate::{Mat3, Vec3};

/// Smooth scalar field on a neighbourhood of the surface.
pub trait AmbientField: Send + Sync {
    fn value(&self, x: &Vec3) -> f64;
    fn gradient(&self, x: &Vec3) -> Vec3;
    fn hessian(&self, x: &Vec3) -> Mat3;
}

type ScalarFn = dyn Fn(&Vec3) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&Vec3) -> Vec3 + Send + Sync;
type MatrixFn = dyn Fn(&Vec3) -> Mat3 + Send + Sync;

pub struct ClosureField {
    pub value: Box<ScalarFn>,
    pub gradient: Box<VectorFn>,
    pub hessian: Box<MatrixFn>,
}

impl ClosureField {
    pub fn new<F, G, H>(value: F, gradient: G, hessian: H) -> Self
    where
        F: Fn(&Vec3) -> f64 + Send + Sync + 'static,
        G: Fn(&Vec3) -> Vec3 + Send + Sync + 'static,
        H: Fn(&Vec3) -> Mat3 + Send + Sync + 'static,
    {
        Self { value: Box::new(value), gradient: Box::new(gradient), hessian: Box::new(hessian) }
    }
}

impl AmbientField for ClosureField {
    fn value(&self, x: &Vec3) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        (self.gradient)(x)
    }

    fn hessian(&self, x: &Vec3) -> Mat3 {
        (self.hessian)(x)
    }
}

/// `P ∇u` at a surface point.
pub fn tangential_gradient(
    surface: &LevelSetSurface,
    u: &dyn AmbientField,
    xi: &Vec3,
) -> Result<Vec3, GeometryError> {
    let nu = surface.normal(xi)?;
    let g = u.gradient(xi);
    Ok(g - nu * g.dot(&nu))
}

/// `f = -Δ_Γ u + u` at a surface point, using
/// `Δ_Γ u = Δu - νᵀ D²u ν - tr(S) ∇u·ν` for the ambient extension `u`.
pub fn surface_forcing(
    surface: &LevelSetSurface,
    u: &dyn AmbientField,
    xi: &Vec3,
) -> Result<f64, GeometryError> {
    let nu = surface.normal(xi)?;
    let mean_curvature = surface.shape_operator(xi)?.trace();
    let hess = u.hessian(xi);
    let laplace_beltrami =
        hess.trace() - nu.dot(&(hess * nu)) - mean_curvature * u.gradient(xi).dot(&nu);
    let f = -laplace_beltrami + u.value(xi);
    if f.is_finite() {
        Ok(f)
    } else {
        Err(GeometryError::NonFinite { point: *xi })
    }
}
