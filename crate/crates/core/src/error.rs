use crate::path::PlannedPath;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate triangle: vertices are collinear")]
    DegenerateTriangle,

    #[error("charge lies on the surface (distance {distance:.3e} m)")]
    ChargeOnSurface { distance: f64 },

    #[error("triangle {index}: {source}")]
    AtTriangle {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("mesh flagged closed has an unpaired edge")]
    OpenMesh,

    #[error("zero charge")]
    ZeroCharge,

    #[error("degenerate leader quad")]
    DegenerateQuad,

    #[error("leader quad is not planar enough: defect {defect:.3} m exceeds {limit:.3} m")]
    NonPlanarQuad { defect: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear system is singular (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },

    #[error("KKT system singular after {retries} damping retries")]
    KktSingular { retries: usize },

    #[error("line search failed to decrease the merit function")]
    LineSearchFailed,

    #[error("feasibility restoration failed (violation {violation:.3e})")]
    RestorationFailed { violation: f64 },

    #[error("planner did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        path: Box<PlannedPath>,
    },

    #[error("target set is empty")]
    EmptyTargetSet,

    #[error("path needs at least two distinct snapshots")]
    PathTooShort,

    #[error("path is infeasible at arc length {arc_length:.3}: zero tangent or curvature beyond limits")]
    InfeasiblePath { arc_length: f64 },

    #[error("tracking diverged: uav {uav} error {error:.2} m at step {step}")]
    Divergence { uav: usize, step: usize, error: f64 },
}

impl Error {
    pub(crate) fn at_triangle(index: usize, source: Error) -> Self {
        Error::AtTriangle {
            index,
            source: Box::new(source),
        }
    }
}
