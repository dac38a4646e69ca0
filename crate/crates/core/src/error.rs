use crate::manifolds::{Manifold, ManifoldPoint};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("manifold mismatch: {0} vs {1}")]
    ManifoldMismatch(Manifold, Manifold),

    #[error("invalid point on {manifold}: {reason}")]
    InvalidPoint { manifold: Manifold, reason: String },

    #[error("invalid tangent vector on {manifold}: {reason}")]
    InvalidTangent { manifold: Manifold, reason: String },

    #[error("tangent vector is not based at the given point")]
    BaseMismatch,

    #[error("coincident points: a ray needs distinct origin and through point (distance {0:e})")]
    CoincidentPoints(f64),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        last: Option<Box<ManifoldPoint>>,
    },

    #[error("infeasible body: best merit {merit:e}")]
    Infeasible { merit: f64 },

    #[error("size limit exceeded: {what} = {got}, maximum {max}")]
    SizeLimit {
        what: &'static str,
        got: usize,
        max: usize,
    },

    #[error("unregistered function: {0}")]
    Unregistered(String),

    #[error("body is not certified convex: {0}")]
    Uncertified(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn non_convergence(
        what: &'static str,
        iterations: usize,
        residual: f64,
        last: Option<ManifoldPoint>,
    ) -> Self {
        Error::NonConvergence {
            what,
            iterations,
            residual,
            last: last.map(Box::new),
        }
    }
}
