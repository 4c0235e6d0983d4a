//! Double-integrator simulation with PID tracking.
//!
//! Each UAV is a point mass with state `(x, v)` updated exactly for a
//! control acceleration `u` held over the step:
//!
//! ```text
//! x(n+1) = x(n) + dt v(n) + dt^2/2 u(n)
//! v(n+1) = v(n) + dt u(n)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{KinematicLimits, Trajectory};
use crate::Vec3;

/// Position error beyond which a run is declared diverged, in metres.
pub const DIVERGENCE_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub pos: Vec3,
    pub vel: Vec3,
}

pub fn step_dynamics(state: &ParticleState, u: &Vec3, dt: f64) -> ParticleState {
    ParticleState {
        pos: state.pos + state.vel * dt + u * (0.5 * dt * dt),
        vel: state.vel + u * dt,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    /// s^-2
    pub kp: f64,
    /// s^-3
    pub ki: f64,
    /// s^-1
    pub kd: f64,
    /// Per-axis bound on the error integral, m s.
    pub integral_clamp: f64,
    /// Add the reference acceleration to the PID output before the clamp.
    #[serde(default = "enabled")]
    pub feedforward: bool,
}

fn enabled() -> bool {
    true
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains {
            kp: 8.0,
            ki: 0.5,
            kd: 4.0,
            integral_clamp: 2.0,
            feedforward: true,
        }
    }
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        let gains = [self.kp, self.ki, self.kd];
        if gains.iter().any(|g| !(g.is_finite() && *g >= 0.0)) || gains.iter().all(|g| *g == 0.0) {
            return Err(Error::InvalidConfig("pid: gains must be >= 0 and not all zero".into()));
        }
        if !(self.integral_clamp >= 0.0) {
            return Err(Error::InvalidConfig("pid: integral_clamp must be >= 0".into()));
        }
        Ok(())
    }
}

/// `kp e + ki I + kd d` with the integral clamped per axis, then scaled
/// down to norm `a_max` if needed.
pub fn pid_control(error: &Vec3, error_integral: &Vec3, error_derivative: &Vec3, gains: &PidGains, a_max: f64) -> Vec3 {
    clamp_norm(pid_raw(error, error_integral, error_derivative, gains), a_max)
}

fn pid_raw(error: &Vec3, error_integral: &Vec3, error_derivative: &Vec3, gains: &PidGains) -> Vec3 {
    let integral = error_integral.map(|v| v.clamp(-gains.integral_clamp, gains.integral_clamp));
    error * gains.kp + integral * gains.ki + error_derivative * gains.kd
}

fn clamp_norm(u: Vec3, a_max: f64) -> Vec3 {
    let norm = u.norm();
    if norm > a_max {
        u * (a_max / norm)
    } else {
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub max_error: f64,
    pub mean_error: f64,
    pub max_speed: f64,
    pub max_control: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub times: Vec<f64>,
    /// `states[uav][k]` at `times[k]`.
    pub states: Vec<Vec<ParticleState>>,
    /// Control applied from `times[k]` on; the last one is never applied.
    pub controls: Vec<Vec<Vec3>>,
    /// Reference minus simulated position.
    pub errors: Vec<Vec<Vec3>>,
    /// Leader side lengths `|p2-p1|, .., |p1-p4|` per step, when there are
    /// at least four UAVs.
    pub side_lengths: Vec<[f64; 4]>,
    pub metrics: SimMetrics,
}

/// Simulates every UAV of `traj` from its initial reference state.
pub fn run_tracking(traj: &Trajectory, gains: &PidGains, limits: &KinematicLimits) -> Result<SimResult> {
    gains.validate()?;
    limits.validate()?;
    let n = traj.len();
    let mut states = Vec::with_capacity(traj.uav_count());
    let mut controls = Vec::with_capacity(traj.uav_count());
    let mut errors = Vec::with_capacity(traj.uav_count());

    for (id, track) in traj.tracks.iter().enumerate() {
        let mut state = ParticleState {
            pos: track[0].pos,
            vel: track[0].vel,
        };
        let mut integral = Vec3::zeros();
        let (mut xs, mut us, mut es) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for (k, reference) in track.iter().enumerate() {
            let e = reference.pos - state.pos;
            if !(e.norm() <= DIVERGENCE_LIMIT) {
                return Err(Error::Divergence {
                    uav: id,
                    step: k,
                    error: e.norm(),
                });
            }
            let mut u = pid_raw(&e, &integral, &(reference.vel - state.vel), gains);
            if gains.feedforward {
                u += reference.acc;
            }
            let u = clamp_norm(u, limits.a_max);
            xs.push(state);
            us.push(u);
            es.push(e);
            if k + 1 < n {
                let dt = traj.times[k + 1] - traj.times[k];
                integral = (integral + e * dt).map(|v| v.clamp(-gains.integral_clamp, gains.integral_clamp));
                state = step_dynamics(&state, &u, dt);
            }
        }
        states.push(xs);
        controls.push(us);
        errors.push(es);
    }

    let side_lengths = if states.len() >= 4 {
        (0..n)
            .map(|k| std::array::from_fn(|i| (states[(i + 1) % 4][k].pos - states[i][k].pos).norm()))
            .collect()
    } else {
        Vec::new()
    };
    let norms = |v: &Vec<Vec<Vec3>>| v.iter().flatten().map(|x| x.norm()).collect::<Vec<_>>();
    let err_norms = norms(&errors);
    let metrics = SimMetrics {
        max_error: err_norms.iter().copied().fold(0.0, f64::max),
        mean_error: err_norms.iter().sum::<f64>() / err_norms.len().max(1) as f64,
        max_speed: states.iter().flatten().map(|s| s.vel.norm()).fold(0.0, f64::max),
        max_control: norms(&controls).into_iter().fold(0.0, f64::max),
    };
    Ok(SimResult {
        times: traj.times.clone(),
        states,
        controls,
        errors,
        side_lengths,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Sample;
    use approx::assert_abs_diff_eq;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn coasting_and_constant_push() {
        let s = ParticleState { pos: Vec3::zeros(), vel: v(1., 0., 0.) };
        let n = step_dynamics(&s, &Vec3::zeros(), 0.1);
        assert_abs_diff_eq!(n.pos, v(0.1, 0., 0.), epsilon = 1e-15);
        assert_eq!(n.vel, s.vel);
        let rest = ParticleState { pos: Vec3::zeros(), vel: Vec3::zeros() };
        let n = step_dynamics(&rest, &v(0., 0., 2.), 1.0);
        assert_eq!(n.pos, v(0., 0., 1.));
        assert_eq!(n.vel, v(0., 0., 2.));
    }

    #[test]
    fn pid_arithmetic_and_clamp() {
        let g = PidGains { kp: 1.0, ki: 0.0, kd: 0.0, ..PidGains::default() };
        let z = Vec3::zeros();
        assert_eq!(pid_control(&z, &z, &z, &PidGains::default(), 5.0), z);
        assert_eq!(pid_control(&v(3., 4., 0.), &z, &z, &g, 5.0), v(3., 4., 0.));
        assert_abs_diff_eq!(pid_control(&v(30., 40., 0.), &z, &z, &g, 5.0), v(3., 4., 0.), epsilon = 1e-12);
        let gi = PidGains { kp: 0.0, ki: 1.0, kd: 0.0, ..PidGains::default() };
        assert_eq!(pid_control(&z, &v(9., -9., 1.), &z, &gi, 100.0), v(2., -2., 1.));
    }

    #[test]
    fn invalid_gains_rejected() {
        assert!(PidGains { kp: 0.0, ki: 0.0, kd: 0.0, ..PidGains::default() }.validate().is_err());
        assert!(PidGains { kp: -1.0, ..PidGains::default() }.validate().is_err());
    }

    fn hold(p: Vec3, n: usize) -> Trajectory {
        let times: Vec<f64> = (0..n).map(|k| k as f64 * 0.02).collect();
        let track = times
            .iter()
            .map(|&t| Sample { t, pos: p, vel: Vec3::zeros(), acc: Vec3::zeros() })
            .collect();
        Trajectory {
            dt: 0.02,
            progress: vec![0.0; n],
            times,
            tracks: vec![track],
            length: 0.0,
        }
    }

    #[test]
    fn stationary_reference_stays_put() {
        let r = run_tracking(&hold(v(1., 2., 3.), 100), &PidGains::default(), &KinematicLimits::default()).unwrap();
        assert_eq!(r.metrics.max_error, 0.0);
        assert_eq!(r.states[0].len(), 100);
        assert!(r.side_lengths.is_empty());
    }

    #[test]
    fn jump_beyond_limit_diverges() {
        let mut traj = hold(Vec3::zeros(), 10);
        traj.tracks[0][5].pos = v(20., 0., 0.);
        let r = run_tracking(&traj, &PidGains::default(), &KinematicLimits::default());
        assert!(matches!(r, Err(Error::Divergence { uav: 0, step: 5, .. })));
    }
}
