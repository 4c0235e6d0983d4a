//! Flux-guided path planning for UAV formations.
//!
//! A formation is described by four leader UAVs bounding a flat cap; the
//! remaining UAVs sit on a hemisphere behind the cap and are derived from the
//! leaders. Planning maximises the electric flux of a target charge through
//! the formation's open surface, which by Gauss's law only depends on the
//! leaders. Two planners are provided:
//!
//! - [`ls::plan_ls`]: the iterative Tikhonov least-squares update, with an
//!   optional shape-retention penalty.
//! - [`fg::plan_fg`]: direct flux minimisation under side-length equality
//!   constraints, solved by sequential quadratic programming.
//!
//! Planned paths are turned into synchronised, time-parameterised
//! trajectories by [`trajectory::parameterize`] and tracked by a PID
//! controlled double integrator in [`sim::run_tracking`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fg;
pub mod flux;
pub mod formation;
pub mod ls;
pub mod path;
pub mod sim;
pub mod sqp;
pub mod targets;
pub mod trajectory;

pub use error::{Error, Result};
pub use fg::{plan_fg, FgConfig, ScaleSchedule};
pub use flux::{flux_quad_boundary, flux_surface, solid_angle_triangle, PointCharge, TriMesh, Triangle};
pub use formation::{derive_followers, quad_frame, shape_metrics, HemisphereFormation, LeaderQuad, ShapeMetrics};
pub use ls::{plan_ls, LsConfig, PhiSchedule};
pub use path::{PlannedPath, Snapshot};
pub use sim::{run_tracking, PidGains, SimResult};
pub use targets::{coc_reduce, exact_multi_flux, TargetKind, TargetModel};
pub use trajectory::{filter_path, parameterize, KinematicLimits, SyncPath, Trajectory};

/// 3D position, velocity or acceleration in metres and seconds.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Stacked leader coordinates `p1, p2, p3, p4`, each as `x, y, z`.
pub type Vec12 = nalgebra::SVector<f64, 12>;
