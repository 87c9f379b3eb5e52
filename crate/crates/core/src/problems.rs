//! Benchmark problems: a surface, an exact solution and the forcing derived from it.

use std::sync::Arc;

use crate::geometry::{surface_forcing, AmbientField, ClosureField, GeometryError, LevelSetSurface};
use crate::mesh::{icosphere, parse_off, SurfaceMesh};
use crate::{Error, Mat3, Result, Vec3};

const DZIUK_OFF: &str = include_str!("../data/dziuk.off");
const ENZENSBERGER_STERN_OFF: &str = include_str!("../data/enzensberger_stern.off");

/// Names accepted by [`by_name`].
pub const PROBLEM_NAMES: [&str; 3] = ["sphere", "dziuk", "enzensberger-stern"];

/// Where the coarsest mesh of a problem comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialMesh {
    Icosphere(u32),
    Bundled(&'static str),
}

/// Forcing evaluated at points of the smooth surface.
pub type ForcingFn = Arc<dyn Fn(&Vec3) -> Result<f64, GeometryError> + Send + Sync>;

/// Surface, optional exact solution and forcing `f = -Δ_Γ u + u`.
#[derive(Clone)]
pub struct BenchmarkProblem {
    pub name: &'static str,
    pub surface: LevelSetSurface,
    pub exact_u: Option<Arc<dyn AmbientField>>,
    pub forcing: ForcingFn,
    pub initial_mesh: InitialMesh,
    /// Triangle quadrature degree recommended for the forcing's smoothness.
    pub quadrature_degree: usize,
}

impl std::fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("name", &self.name)
            .field("surface", &self.surface)
            .field("initial_mesh", &self.initial_mesh)
            .finish()
    }
}

impl BenchmarkProblem {
    /// Builds a problem whose forcing is derived from `exact_u` on `surface`.
    pub fn from_exact(
        name: &'static str,
        surface: LevelSetSurface,
        exact_u: Arc<dyn AmbientField>,
        initial_mesh: InitialMesh,
    ) -> Self {
        let (s, u) = (surface.clone(), exact_u.clone());
        Self {
            name,
            surface,
            exact_u: Some(exact_u),
            forcing: Arc::new(move |xi| surface_forcing(&s, u.as_ref(), xi)),
            initial_mesh,
            quadrature_degree: 4,
        }
    }

    /// `f` at a point of `Γ`.
    pub fn forcing_at(&self, xi: &Vec3) -> Result<f64> {
        (self.forcing)(xi).map_err(|e| match e {
            GeometryError::NonFinite { point } => Error::NonFiniteForcing { point },
            other => Error::Geometry(other),
        })
    }

    pub fn initial_mesh(&self) -> Result<SurfaceMesh> {
        match self.initial_mesh {
            InitialMesh::Icosphere(level) => Ok(icosphere(level)),
            InitialMesh::Bundled("dziuk") => parse_off(DZIUK_OFF),
            InitialMesh::Bundled("enzensberger-stern") => parse_off(ENZENSBERGER_STERN_OFF),
            InitialMesh::Bundled(other) => Err(Error::Usage(format!("no bundled mesh named '{other}'"))),
        }
    }

    /// Checks that the forcing is finite at every quadrature point of `mesh`.
    pub fn check_forcing(&self, mesh: &SurfaceMesh) -> Result<()> {
        let rule = crate::dgspace::triangle_rule(self.quadrature_degree)?;
        for t in 0..mesh.n_triangles() {
            for (p, _) in rule.iter() {
                let (xi, _) = self.surface.closest_point(&mesh.point(t, p))?;
                self.forcing_at(&xi)?;
            }
        }
        Ok(())
    }
}

/// `u = x₁ x₂`.
pub fn product_field() -> ClosureField {
    ClosureField::new(
        |x| x[0] * x[1],
        |x| Vec3::new(x[1], x[0], 0.0),
        |_| Mat3::new(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    )
}

/// `u = exp(1 / (1.85 - (x - 0.2)²)) sin y`.
pub fn dziuk_exact_solution() -> ClosureField {
    fn parts(x: &Vec3) -> (f64, f64, f64, f64) {
        let s = x[0] - 0.2;
        let q = 1.85 - s * s;
        let e = (1.0 / q).exp();
        (s, q, e, x[1])
    }
    ClosureField::new(
        |x| {
            let (_, _, e, y) = parts(x);
            e * y.sin()
        },
        |x| {
            let (s, q, e, y) = parts(x);
            // d/dx e^{1/q} = e^{1/q} · 2s / q²
            let ex = e * 2.0 * s / (q * q);
            Vec3::new(ex * y.sin(), e * y.cos(), 0.0)
        },
        |x| {
            let (s, q, e, y) = parts(x);
            let g = 2.0 * s / (q * q);
            // g' = 2/q² + 8s²/q³
            let g_prime = 2.0 / (q * q) + 8.0 * s * s / (q * q * q);
            let exx = e * (g * g + g_prime);
            let ex = e * g;
            Mat3::new(
                exx * y.sin(),
                ex * y.cos(),
                0.0,
                ex * y.cos(),
                -e * y.sin(),
                0.0,
                0.0,
                0.0,
                0.0,
            )
        },
    )
}

/// Unit sphere with `u = x₁ x₂`, `f = 7 x₁ x₂`.
pub fn sphere_problem() -> BenchmarkProblem {
    BenchmarkProblem::from_exact("sphere", LevelSetSurface::sphere(), Arc::new(product_field()), InitialMesh::Icosphere(1))
}

pub fn dziuk_problem() -> BenchmarkProblem {
    let mut problem = BenchmarkProblem::from_exact(
        "dziuk",
        LevelSetSurface::dziuk(),
        Arc::new(dziuk_exact_solution()),
        InitialMesh::Bundled("dziuk"),
    );
    problem.quadrature_degree = 8;
    problem
}

pub fn enzensberger_stern_problem() -> BenchmarkProblem {
    BenchmarkProblem::from_exact(
        "enzensberger-stern",
        LevelSetSurface::enzensberger_stern(),
        Arc::new(product_field()),
        InitialMesh::Bundled("enzensberger-stern"),
    )
}

pub fn by_name(name: &str) -> Result<BenchmarkProblem> {
    match name {
        "sphere" => Ok(sphere_problem()),
        "dziuk" => Ok(dziuk_problem()),
        "enzensberger-stern" | "enzensberger_stern" | "es" => Ok(enzensberger_stern_problem()),
        other => Err(Error::Usage(format!(
            "unknown problem '{other}' (expected one of {})",
            PROBLEM_NAMES.join(", ")
        ))),
    }
}
