use crate::geometry::GeometryError;
use crate::Vec3;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-manifold mesh: {0}")]
    NonManifold(String),

    #[error("orientation failure: triangle {triangle} has nu_h . nu = {dot:.3e} after projection")]
    OrientationFailure { triangle: usize, dot: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {triangle} (area {area:.3e})")]
    DegenerateTriangle { triangle: usize, area: f64 },

    #[error("unsupported quadrature degree {degree} (maximum {max})")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("singular element matrix: non-positive diagonal at unknown {0}")]
    SingularElement(usize),

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverNoConvergence { iterations: usize, residual: f64 },

    #[error("efficiency index undefined: true error is zero")]
    DivisionByZero,

    #[error("geometric refinement criterion still unmet after {iterations} iterations")]
    NonTermination { iterations: usize },

    #[error("forcing is not finite at {point:?}")]
    NonFiniteForcing { point: Vec3 },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command line front end: 1 for usage errors, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            _ => 2,
        }
    }
}
