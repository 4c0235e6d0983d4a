//! Least-squares flux planner.
//!
//! Each iteration linearises the flux about the current leader positions
//! and solves the Tikhonov-regularised problem
//!
//! ```text
//! min  dx'dx + alpha (phi_r - J dx)^2 + beta |A dx|^2
//! ```
//!
//! whose normal equations are `(I + alpha J'J + beta A'A) dx = alpha J' phi_r`.
//! `J` is the gradient of the coverage `-Phi1` (positive when the cap faces
//! the target) and `A` penalises differences between the displacements of
//! neighbouring leaders, which holds the formation's shape.

use nalgebra::SMatrix;

use crate::error::{Error, Result};
use crate::flux::{flux_quad_boundary, PointCharge};
use crate::formation::LeaderQuad;
use crate::path::{PlannedPath, Snapshot};
use crate::Vec12;

type Mat12 = SMatrix<f64, 12, 12>;

/// Central-difference step for the flux Jacobian, in metres.
pub const JACOBIAN_STEP: f64 = 1e-5;

/// How the requested flux increase `phi_r` is chosen at each iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiSchedule {
    /// `phi_r` such that the leader moving furthest moves exactly `step_cap`.
    StepMatched,
    /// `phi_r = fraction * |Phi1| + floor`.
    Relative { fraction: f64, floor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsConfig {
    /// Weight of the flux-matching term.
    pub alpha: f64,
    /// Weight of the shape-retention term.
    pub beta: f64,
    pub phi: PhiSchedule,
    pub max_iters: usize,
    /// Largest per-leader displacement in one iteration, in metres.
    pub step_cap: f64,
    /// Centroid-to-target distance that ends the plan. `None` uses the
    /// start formation's circumradius.
    pub stop_radius: Option<f64>,
    /// Relative coverage change over `plateau_window` iterations below which
    /// the plan is considered converged.
    pub plateau_tol: f64,
    pub plateau_window: usize,
}

impl Default for LsConfig {
    fn default() -> Self {
        LsConfig {
            alpha: 1000.0,
            beta: 0.0,
            phi: PhiSchedule::StepMatched,
            max_iters: 2000,
            step_cap: 0.5,
            stop_radius: None,
            plateau_tol: 1e-6,
            plateau_window: 10,
        }
    }
}

impl LsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("ls: {m}")));
        if !(self.alpha > 0.0) {
            return bad("alpha must be > 0");
        }
        if !(self.beta >= 0.0) {
            return bad("beta must be >= 0");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be > 0");
        }
        if !(self.step_cap > 0.0) {
            return bad("step_cap must be > 0");
        }
        if let Some(r) = self.stop_radius {
            if !(r > 0.0) {
                return bad("stop_radius must be > 0");
            }
        }
        if let PhiSchedule::Relative { fraction, floor } = self.phi {
            if !(fraction >= 0.0 && floor >= 0.0 && fraction + floor > 0.0) {
                return bad("phi fraction and floor must be >= 0 and not both zero");
            }
        }
        Ok(())
    }
}

/// Gradient of `Phi1` with respect to the twelve leader coordinates,
/// by central differences.
pub fn flux_jacobian(quad: &LeaderQuad, target: &PointCharge) -> Result<Vec12> {
    let x = quad.to_vector();
    let mut grad = Vec12::zeros();
    for k in 0..12 {
        let mut fwd = x;
        let mut bwd = x;
        fwd[k] += JACOBIAN_STEP;
        bwd[k] -= JACOBIAN_STEP;
        let f = flux_quad_boundary(target, &LeaderQuad::from_vector(&fwd)?)?;
        let b = flux_quad_boundary(target, &LeaderQuad::from_vector(&bwd)?)?;
        grad[k] = (f - b) / (2.0 * JACOBIAN_STEP);
    }
    Ok(grad)
}

/// Cyclic difference operator on leader displacements: row `(i, axis)`
/// yields `dp_i - dp_{i+1}` along `axis`.
pub fn shape_retention_matrix() -> Mat12 {
    let mut a = Mat12::zeros();
    for i in 0..4 {
        let j = (i + 1) % 4;
        for axis in 0..3 {
            a[(3 * i + axis, 3 * i + axis)] = 1.0;
            a[(3 * i + axis, 3 * j + axis)] = -1.0;
        }
    }
    a
}

/// Largest per-leader norm of a stacked displacement.
pub fn max_leader_displacement(dx: &Vec12) -> f64 {
    (0..4)
        .map(|i| dx.fixed_rows::<3>(3 * i).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsStep {
    /// Displacement applied to the leaders, after the step cap.
    pub delta: Vec12,
    /// Exact solution of the normal equations for `phi_r`.
    pub solution: Vec12,
    pub phi_r: f64,
    /// Gradient of the coverage `-Phi1`.
    pub coverage_gradient: Vec12,
    pub quad: LeaderQuad,
}

/// System matrix `I + alpha J J' + beta A'A` for a coverage gradient `J`.
pub fn normal_matrix(coverage_gradient: &Vec12, alpha: f64, beta: f64) -> Mat12 {
    let a = shape_retention_matrix();
    Mat12::identity() + coverage_gradient * coverage_gradient.transpose() * alpha + a.transpose() * a * beta
}

pub fn ls_step(quad: &LeaderQuad, target: &PointCharge, cfg: &LsConfig) -> Result<LsStep> {
    cfg.validate()?;
    let coverage_gradient = -flux_jacobian(quad, target)?;
    let m = normal_matrix(&coverage_gradient, cfg.alpha, cfg.beta);
    let chol = m.cholesky().ok_or_else(|| {
        let sv = m.singular_values();
        Error::SingularSystem {
            condition: sv.max() / sv.min(),
        }
    })?;
    // the solution is linear in phi_r
    let unit = chol.solve(&(coverage_gradient * cfg.alpha));
    let phi_r = match cfg.phi {
        PhiSchedule::StepMatched => {
            let peak = max_leader_displacement(&unit);
            if peak > 0.0 {
                cfg.step_cap / peak
            } else {
                0.0
            }
        }
        PhiSchedule::Relative { fraction, floor } => {
            fraction * flux_quad_boundary(target, quad)?.abs() + floor
        }
    };
    let solution = unit * phi_r;
    let peak = max_leader_displacement(&solution);
    let delta = if peak > cfg.step_cap {
        solution * (cfg.step_cap / peak)
    } else {
        solution
    };
    let quad = LeaderQuad::from_vector(&(quad.to_vector() + delta))?;
    Ok(LsStep {
        delta,
        solution,
        phi_r,
        coverage_gradient,
        quad,
    })
}

/// Iterates [`ls_step`] from `start`, recording every accepted pose.
///
/// The plan converges when the centroid comes within the stop radius of the
/// target, when the coverage reaches its maximum (the next step would lower
/// it), or when the coverage plateaus. Running out of iterations returns
/// [`Error::NotConverged`] carrying the partial path.
pub fn plan_ls(start: &LeaderQuad, target: &PointCharge, cfg: &LsConfig) -> Result<PlannedPath> {
    cfg.validate()?;
    let stop_radius = cfg.stop_radius.unwrap_or_else(|| start.circumradius());
    let mut quad = *start;
    let mut coverage = -flux_quad_boundary(target, &quad)?;
    let mut history = vec![coverage];
    let mut snapshots = vec![Snapshot { iteration: 0, quad }];
    let mut converged = false;

    for iteration in 1..=cfg.max_iters {
        let step = ls_step(&quad, target, cfg)?;
        let next = match flux_quad_boundary(target, &step.quad) {
            Ok(f) => -f,
            // stepping onto the target: the maximum lies before it
            Err(Error::ChargeOnSurface { .. }) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        if next < coverage {
            converged = true;
            break;
        }
        quad = step.quad;
        coverage = next;
        history.push(coverage);
        snapshots.push(Snapshot { iteration, quad });

        if (quad.centroid() - target.position).norm() <= stop_radius {
            converged = true;
            break;
        }
        if history.len() > cfg.plateau_window {
            let past = history[history.len() - 1 - cfg.plateau_window];
            if (coverage - past).abs() <= cfg.plateau_tol * coverage.abs() {
                converged = true;
                break;
            }
        }
    }

    let path = PlannedPath::new(snapshots, converged);
    if converged {
        Ok(path)
    } else {
        Err(Error::NotConverged {
            iterations: cfg.max_iters,
            path: Box::new(path),
        })
    }
}
