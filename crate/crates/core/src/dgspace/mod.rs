//! Broken polynomial space on the polyhedral surface.
//!
//! On each triangle `K` a function is `v̂ ∘ F_K⁻¹` for the affine map
//! `F_K(x̂, ŷ) = v₀ + x̂ (v₁ - v₀) + ŷ (v₂ - v₀)`. Surface gradients use the left
//! pseudo-inverse `(∇F_Kᵀ ∇F_K)⁻¹ ∇F_Kᵀ` of the 3x2 Jacobian.

mod basis;
mod quadrature;

pub use basis::{BasisPoint, ModalBasis};
pub use quadrature::{
    edge_rule, gauss_legendre_rule, triangle_rule, EdgeRule, QuadratureRule, TriangleRule, MAX_EDGE_DEGREE,
    MAX_TRIANGLE_DEGREE,
};

use crate::mesh::SurfaceMesh;
use crate::{Error, Result, Vec3};

/// Affine map of one planar triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub origin: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
    /// Rows of the pseudo-inverse; `∇_Γh v = g₀ rows[0] + g₁ rows[1]` for reference gradient `g`.
    pub pinv_rows: [Vec3; 2],
    pub normal: Vec3,
    pub area: f64,
}

impl ElementMap {
    pub fn new(vertices: &[Vec3; 3]) -> Option<Self> {
        let e1 = vertices[1] - vertices[0];
        let e2 = vertices[2] - vertices[0];
        let cross = e1.cross(&e2);
        let twice_area = cross.norm();
        let h = e1.norm().max(e2.norm()).max((vertices[2] - vertices[1]).norm());
        if !(twice_area > 2e-14 * h * h) {
            return None;
        }
        let (g11, g12, g22) = (e1.dot(&e1), e1.dot(&e2), e2.dot(&e2));
        let det = g11 * g22 - g12 * g12;
        let pinv_rows = [(e1 * g22 - e2 * g12) / det, (e2 * g11 - e1 * g12) / det];
        Some(Self { origin: vertices[0], e1, e2, pinv_rows, normal: cross / twice_area, area: 0.5 * twice_area })
    }

    pub fn point(&self, bary: &[f64; 3]) -> Vec3 {
        self.origin + self.e1 * bary[1] + self.e2 * bary[2]
    }

    /// Factor turning reference-triangle weights into surface measure.
    pub fn jacobian(&self) -> f64 {
        2.0 * self.area
    }

    pub fn surface_gradient(&self, reference: &[f64; 2]) -> Vec3 {
        self.pinv_rows[0] * reference[0] + self.pinv_rows[1] * reference[1]
    }

    /// Tangential Laplacian on the triangle plane from reference second derivatives.
    pub fn surface_laplacian(&self, hessian: &[[f64; 2]; 2]) -> f64 {
        let mut lap = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                lap += hessian[a][b] * self.pinv_rows[a].dot(&self.pinv_rows[b]);
            }
        }
        lap
    }

    /// Barycentric coordinates of a point in the triangle plane.
    pub fn barycentric(&self, x: &Vec3) -> [f64; 3] {
        let r = x - self.origin;
        let s = self.pinv_rows[0].dot(&r);
        let t = self.pinv_rows[1].dot(&r);
        [1.0 - s - t, s, t]
    }
}

/// Discontinuous piecewise-polynomial space of fixed degree.
#[derive(Debug, Clone)]
pub struct DgSpace {
    basis: ModalBasis,
}

/// Element-local modal coefficients of a discrete function.
#[derive(Debug, Clone, PartialEq)]
pub struct DGFunction {
    pub degree: usize,
    pub n_local: usize,
    pub coefficients: Vec<f64>,
}

impl DGFunction {
    pub fn zeros(space: &DgSpace, n_triangles: usize) -> Self {
        Self::from_coefficients(space, vec![0.0; n_triangles * space.n_local()])
    }

    pub fn from_coefficients(space: &DgSpace, coefficients: Vec<f64>) -> Self {
        assert_eq!(coefficients.len() % space.n_local(), 0, "coefficient count must be a multiple of the local dimension");
        Self { degree: space.degree(), n_local: space.n_local(), coefficients }
    }

    pub fn n_triangles(&self) -> usize {
        self.coefficients.len() / self.n_local
    }

    pub fn local(&self, triangle: usize) -> &[f64] {
        &self.coefficients[triangle * self.n_local..(triangle + 1) * self.n_local]
    }

    pub fn local_mut(&mut self, triangle: usize) -> &mut [f64] {
        &mut self.coefficients[triangle * self.n_local..(triangle + 1) * self.n_local]
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients.iter().all(|c| c.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { coefficients: self.coefficients.iter().map(|c| c * factor).collect(), ..self.clone() }
    }

    /// Value from tabulated basis values.
    pub fn value_at(&self, triangle: usize, basis: &BasisPoint) -> f64 {
        self.local(triangle).iter().zip(&basis.values).map(|(c, v)| c * v).sum()
    }

    pub fn reference_gradient_at(&self, triangle: usize, basis: &BasisPoint) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (c, d) in self.local(triangle).iter().zip(&basis.gradients) {
            g[0] += c * d[0];
            g[1] += c * d[1];
        }
        g
    }

    pub fn reference_hessian_at(&self, triangle: usize, basis: &BasisPoint) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for (c, d) in self.local(triangle).iter().zip(&basis.hessians) {
            for a in 0..2 {
                for b in 0..2 {
                    h[a][b] += c * d[a][b];
                }
            }
        }
        h
    }
}

impl DgSpace {
    pub fn new(degree: usize) -> Self {
        Self { basis: ModalBasis::new(degree) }
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn n_local(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &ModalBasis {
        &self.basis
    }

    pub fn dofs(&self, mesh: &SurfaceMesh) -> usize {
        mesh.n_triangles() * self.n_local()
    }

    pub fn element_map(&self, mesh: &SurfaceMesh, triangle: usize) -> Result<ElementMap> {
        let vertices = mesh.triangle_points(triangle);
        ElementMap::new(&vertices).ok_or_else(|| Error::DegenerateTriangle {
            triangle,
            area: 0.5 * (vertices[1] - vertices[0]).cross(&(vertices[2] - vertices[0])).norm(),
        })
    }

    pub fn eval(&self, u: &DGFunction, triangle: usize, bary: &[f64; 3]) -> f64 {
        u.value_at(triangle, &self.basis.evaluate(bary))
    }

    pub fn eval_surface_grad(&self, u: &DGFunction, mesh: &SurfaceMesh, triangle: usize, bary: &[f64; 3]) -> Result<Vec3> {
        let map = self.element_map(mesh, triangle)?;
        Ok(map.surface_gradient(&u.reference_gradient_at(triangle, &self.basis.evaluate(bary))))
    }

    /// Element-wise `L²(K̂)` projection of `f(triangle, bary)`; exact for polynomials of the
    /// space's degree.
    pub fn project<F>(&self, n_triangles: usize, f: F) -> DGFunction
    where
        F: Fn(usize, &[f64; 3]) -> f64,
    {
        let rule = triangle_rule((2 * self.degree()).clamp(1, MAX_TRIANGLE_DEGREE)).expect("supported degree");
        let table = self.basis.tabulate(&rule.points);
        let mut u = DGFunction::zeros(self, n_triangles);
        for t in 0..n_triangles {
            let local = u.local_mut(t);
            for ((p, w), b) in rule.iter().zip(&table) {
                let value = f(t, p);
                for (c, phi) in local.iter_mut().zip(&b.values) {
                    *c += w * value * phi;
                }
            }
        }
        u
    }

    /// Globally continuous piecewise-linear function with the given vertex values.
    pub fn nodal_interpolant(&self, mesh: &SurfaceMesh, vertex_values: &[f64]) -> DGFunction {
        assert!(self.degree() >= 1, "nodal interpolation needs degree >= 1");
        self.project(mesh.n_triangles(), |t, bary| {
            let v = mesh.triangles()[t].vertices;
            (0..3).map(|i| bary[i] * vertex_values[v[i]]).sum()
        })
    }
}
