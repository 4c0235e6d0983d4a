//! Time parameterisation of planned paths.
//!
//! All UAVs share one path parameter `s`: the snapshots are stacked into
//! points of `R^{3n}` and joined by a chordal Catmull-Rom spline, so `s` is
//! close to arc length in that space. A speed profile `u(s) = sdot^2` is then
//! found in two passes over a grid in `s`: a backward pass computes the
//! largest `u` in each cell from which the end is still reachable at rest,
//! and a forward pass accelerates as hard as that set allows. Both respect
//! the per-UAV limits
//!
//! ```text
//! |x_i'| sdot <= v_max        |x_i'' sdot^2 + x_i' sddot| <= a_max
//! ```
//!
//! The profile is sampled every `dt` seconds, plus once at the final time.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::derive_followers;
use crate::path::{PlannedPath, Snapshot};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicLimits {
    /// m/s
    pub v_max: f64,
    /// m/s^2
    pub a_max: f64,
}

impl Default for KinematicLimits {
    fn default() -> Self {
        KinematicLimits { v_max: 10.0, a_max: 5.0 }
    }
}

impl KinematicLimits {
    pub fn validate(&self) -> Result<()> {
        if self.v_max > 0.0 && self.a_max > 0.0 && self.v_max.is_finite() && self.a_max.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig("limits: v_max and a_max must be finite and > 0".into()))
        }
    }
}

/// Synchronised positions of any number of UAVs, one frame per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncPath {
    pub frames: Vec<Vec<Vec3>>,
}

impl From<&PlannedPath> for SyncPath {
    fn from(path: &PlannedPath) -> Self {
        SyncPath {
            frames: path.quads().map(|q| q.points().to_vec()).collect(),
        }
    }
}

impl SyncPath {
    /// Leaders followed by the five derived followers at every snapshot.
    pub fn with_followers(path: &PlannedPath) -> Result<Self> {
        let frames = path
            .quads()
            .map(|q| derive_followers(q).map(|h| h.positions().to_vec()))
            .collect::<Result<_>>()?;
        Ok(SyncPath { frames })
    }

    pub fn uav_count(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    fn stacked(&self, k: usize) -> DVector<f64> {
        DVector::from_iterator(3 * self.uav_count(), self.frames[k].iter().flat_map(|p| p.iter().copied()))
    }
}

fn max_displacement(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

/// Keeps a snapshot only once some leader has moved at least `min_spacing`
/// since the last kept one. The first and last snapshots are always kept.
pub fn filter_path(path: &PlannedPath, min_spacing: f64) -> Result<PlannedPath> {
    if !(min_spacing > 0.0) {
        return Err(Error::InvalidConfig("min_spacing must be > 0".into()));
    }
    let snaps = &path.snapshots;
    if snaps.len() <= 2 {
        return Ok(path.clone());
    }
    let mut kept: Vec<Snapshot> = vec![snaps[0]];
    for s in &snaps[1..snaps.len() - 1] {
        let last = kept.last().expect("non-empty").quad;
        if max_displacement(last.points(), s.quad.points()) >= min_spacing {
            kept.push(*s);
        }
    }
    kept.push(*snaps.last().expect("non-empty"));
    Ok(PlannedPath::new(kept, path.converged))
}

/// Chordal Catmull-Rom spline through stacked frames.
#[derive(Debug, Clone)]
struct Spline {
    knots: Vec<f64>,
    points: Vec<DVector<f64>>,
    tangents: Vec<DVector<f64>>,
}

/// Position, first and second derivative with respect to `s`.
struct Jet {
    x: DVector<f64>,
    d1: DVector<f64>,
    d2: DVector<f64>,
}

impl Spline {
    fn new(path: &SyncPath) -> Result<Self> {
        let mut points: Vec<DVector<f64>> = Vec::new();
        for k in 0..path.frames.len() {
            let p = path.stacked(k);
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("path frame"));
            }
            if points.last().is_none_or(|q| (&p - q).norm() > 1e-12) {
                points.push(p);
            }
        }
        if points.len() < 2 {
            return Err(Error::PathTooShort);
        }
        let mut knots = vec![0.0];
        for w in points.windows(2) {
            knots.push(knots.last().expect("non-empty") + (&w[1] - &w[0]).norm());
        }
        let n = points.len();
        let slope = |j: usize| (&points[j + 1] - &points[j]) / (knots[j + 1] - knots[j]);
        let tangents = (0..n)
            .map(|k| {
                if k == 0 {
                    slope(0)
                } else if k == n - 1 {
                    slope(n - 2)
                } else {
                    let (h0, h1) = (knots[k] - knots[k - 1], knots[k + 1] - knots[k]);
                    (slope(k - 1) * h1 + slope(k) * h0) / (h0 + h1)
                }
            })
            .collect();
        Ok(Spline { knots, points, tangents })
    }

    fn length(&self) -> f64 {
        *self.knots.last().expect("non-empty")
    }

    fn segments(&self) -> usize {
        self.points.len() - 1
    }

    fn eval(&self, seg: usize, s: f64) -> Jet {
        let (t0, t1) = (self.knots[seg], self.knots[seg + 1]);
        let h = t1 - t0;
        let r = ((s - t0) / h).clamp(0.0, 1.0);
        let (r2, r3) = (r * r, r * r * r);
        let (p0, p1) = (&self.points[seg], &self.points[seg + 1]);
        let m0 = &self.tangents[seg] * h;
        let m1 = &self.tangents[seg + 1] * h;
        let b = [2.0 * r3 - 3.0 * r2 + 1.0, r3 - 2.0 * r2 + r, -2.0 * r3 + 3.0 * r2, r3 - r2];
        let db = [6.0 * r2 - 6.0 * r, 3.0 * r2 - 4.0 * r + 1.0, -6.0 * r2 + 6.0 * r, 3.0 * r2 - 2.0 * r];
        let ddb = [12.0 * r - 6.0, 6.0 * r - 4.0, -12.0 * r + 6.0, 6.0 * r - 2.0];
        let comb = |c: [f64; 4]| p0 * c[0] + &m0 * c[1] + p1 * c[2] + &m1 * c[3];
        Jet {
            x: comb(b),
            d1: comb(db) / h,
            d2: comb(ddb) / (h * h),
        }
    }

    #[cfg(test)]
    fn segment_of(&self, s: f64) -> usize {
        let k = self.knots.partition_point(|&t| t <= s);
        k.saturating_sub(1).min(self.segments() - 1)
    }
}

fn uav(v: &DVector<f64>, i: usize) -> Vec3 {
    Vec3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2])
}

/// Path derivatives at one grid node, seen from one adjacent cell.
struct Local {
    d1: Vec<Vec3>,
    d2: Vec<Vec3>,
}

impl Local {
    fn from_jet(jet: &Jet, n: usize) -> Self {
        Local {
            d1: (0..n).map(|i| uav(&jet.d1, i)).collect(),
            d2: (0..n).map(|i| uav(&jet.d2, i)).collect(),
        }
    }

    fn velocity_cap(&self, v: f64) -> f64 {
        let fastest = self.d1.iter().map(|d| d.norm_squared()).fold(0.0, f64::max);
        if fastest > 0.0 {
            v * v / fastest
        } else {
            f64::INFINITY
        }
    }
}

/// Values of `w` with `|a_i + b_i w| <= limit` for every pair, if any.
fn norm_interval(pairs: impl Iterator<Item = (Vec3, Vec3)>, limit: f64) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (a, b) in pairs {
        let q = b.norm_squared();
        let lin = a.dot(&b);
        let c = a.norm_squared() - limit * limit;
        if q < 1e-24 {
            if c > 0.0 {
                return None;
            }
            continue;
        }
        let disc = lin * lin - q * c;
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        lo = lo.max((-lin - root) / q);
        hi = hi.min((-lin + root) / q);
    }
    (lo <= hi).then_some((lo, hi))
}

/// One grid cell `[s_k, s_k + ds]` with constant path acceleration `w`.
struct Cell<'a> {
    ds: f64,
    start: &'a Local,
    end: &'a Local,
}

impl Cell<'_> {
    /// Path accelerations keeping every UAV within `a_max` at both ends of
    /// the cell when entering it at `u = sdot^2`.
    fn interval(&self, u: f64, a_max: f64) -> Option<(f64, f64)> {
        let at_start = self.start.d1.iter().zip(&self.start.d2).map(|(d1, d2)| (d2 * u, *d1));
        let (lo0, hi0) = norm_interval(at_start, a_max)?;
        let two_ds = 2.0 * self.ds;
        let at_end = self.end.d1.iter().zip(&self.end.d2).map(|(d1, d2)| (d2 * u, d2 * two_ds + d1));
        let (lo1, hi1) = norm_interval(at_end, a_max)?;
        let (lo, hi) = (lo0.max(lo1), hi0.min(hi1));
        (lo <= hi).then_some((lo, hi))
    }

    /// Whether some admissible `w` leads from `u` into `[0, reach]`.
    fn controllable(&self, u: f64, reach: f64, a_max: f64) -> bool {
        let two_ds = 2.0 * self.ds;
        match self.interval(u, a_max) {
            Some((lo, hi)) => lo <= (reach - u) / two_ds && hi >= -u / two_ds,
            None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub pos: Vec3,
    pub vel: Vec3,
    pub acc: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    /// Shared sample times.
    pub times: Vec<f64>,
    /// Path parameter at each sample time.
    pub progress: Vec<f64>,
    /// `tracks[uav][k]`.
    pub tracks: Vec<Vec<Sample>>,
    /// Total path parameter length.
    pub length: f64,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn uav_count(&self) -> usize {
        self.tracks.len()
    }

    pub fn max_speed(&self) -> f64 {
        self.samples().map(|s| s.vel.norm()).fold(0.0, f64::max)
    }

    pub fn max_accel(&self) -> f64 {
        self.samples().map(|s| s.acc.norm()).fold(0.0, f64::max)
    }

    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.tracks.iter().flatten()
    }
}

/// Time-optimal parameterisation of the leader path.
pub fn parameterize(path: &PlannedPath, limits: &KinematicLimits, dt: f64) -> Result<Trajectory> {
    parameterize_sync(&SyncPath::from(path), limits, dt)
}

/// Safety factors on the limits tried in turn until every sample checks out.
const MARGINS: [f64; 6] = [1.0, 0.999, 0.99, 0.97, 0.9, 0.75];

/// Time-optimal parameterisation of any synchronised path.
pub fn parameterize_sync(path: &SyncPath, limits: &KinematicLimits, dt: f64) -> Result<Trajectory> {
    limits.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig("dt must be > 0".into()));
    }
    let spline = Spline::new(path)?;
    let tol = 1e-6;
    let mut last_err = None;
    for (attempt, margin) in MARGINS.iter().enumerate() {
        let scaled = KinematicLimits {
            v_max: limits.v_max * margin,
            a_max: limits.a_max * margin,
        };
        let cells = 8 << attempt.min(3);
        let profile = Profile::build(&spline, path.uav_count(), &scaled, cells)?;
        let traj = profile.sample(&spline, path.uav_count(), dt);
        if traj.max_speed() <= limits.v_max + tol && traj.max_accel() <= limits.a_max + tol {
            return Ok(traj);
        }
        last_err = Some(Error::InfeasiblePath {
            arc_length: worst_progress(&traj, limits),
        });
    }
    Err(last_err.expect("at least one attempt"))
}

fn worst_progress(traj: &Trajectory, limits: &KinematicLimits) -> f64 {
    let mut worst = (0.0, 0.0);
    for track in &traj.tracks {
        for (k, s) in track.iter().enumerate() {
            let excess = (s.vel.norm() / limits.v_max).max(s.acc.norm() / limits.a_max);
            if excess > worst.0 {
                worst = (excess, traj.progress[k]);
            }
        }
    }
    worst.1
}

/// Speed profile on a grid of path parameter values.
struct Profile {
    grid: Vec<f64>,
    /// Segment of the cell starting at each node.
    cell_segment: Vec<usize>,
    u: Vec<f64>,
    /// Cumulative time at each node.
    time: Vec<f64>,
}

impl Profile {
    fn build(spline: &Spline, n: usize, limits: &KinematicLimits, min_cells: usize) -> Result<Self> {
        let mut grid = Vec::new();
        let mut cell_segment = Vec::new();
        for seg in 0..spline.segments() {
            let (t0, t1) = (spline.knots[seg], spline.knots[seg + 1]);
            let cells = min_cells.max(((t1 - t0) / 0.05).ceil() as usize);
            for c in 0..cells {
                grid.push(t0 + (t1 - t0) * c as f64 / cells as f64);
                cell_segment.push(seg);
            }
        }
        grid.push(spline.length());
        let nodes = grid.len();

        // derivatives at both ends of every cell, from that cell's segment
        let starts: Vec<Local> = (0..nodes - 1)
            .map(|k| Local::from_jet(&spline.eval(cell_segment[k], grid[k]), n))
            .collect();
        let ends: Vec<Local> = (0..nodes - 1)
            .map(|k| Local::from_jet(&spline.eval(cell_segment[k], grid[k + 1]), n))
            .collect();
        for k in 0..nodes - 1 {
            if starts[k].d1.iter().all(|d| d.norm() < 1e-9) {
                return Err(Error::InfeasiblePath { arc_length: grid[k] });
            }
        }
        let cell = |k: usize| Cell {
            ds: grid[k + 1] - grid[k],
            start: &starts[k],
            end: &ends[k],
        };

        // backward: largest controllable u at every node, ending at rest
        let mut reach = vec![0.0; nodes];
        for k in (0..nodes - 1).rev() {
            let c = cell(k);
            let cap = c.start.velocity_cap(limits.v_max);
            let ok = |u: f64| c.controllable(u, reach[k + 1], limits.a_max);
            reach[k] = if ok(cap) {
                cap
            } else {
                let (mut lo, mut hi) = (0.0, cap.min(reach[k + 1] + 2.0 * c.ds * limits.a_max * 1e6));
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if ok(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            };
            if k > 0 && !(reach[k] > 1e-12) {
                return Err(Error::InfeasiblePath { arc_length: grid[k] });
            }
        }

        // forward: fastest admissible choice, staying controllable
        let mut u = vec![0.0; nodes];
        for k in 0..nodes - 1 {
            let c = cell(k);
            let two_ds = 2.0 * c.ds;
            let w = match c.interval(u[k], limits.a_max) {
                Some((_, hi)) => hi.min((reach[k + 1] - u[k]) / two_ds),
                None => (reach[k + 1] - u[k]) / two_ds,
            };
            u[k + 1] = (u[k] + two_ds * w).clamp(0.0, reach[k + 1]);
        }
        u[nodes - 1] = 0.0;

        let mut time = vec![0.0; nodes];
        for k in 0..nodes - 1 {
            let ds = grid[k + 1] - grid[k];
            let mean = u[k].sqrt() + u[k + 1].sqrt();
            if !(mean > 0.0) {
                return Err(Error::InfeasiblePath { arc_length: grid[k] });
            }
            time[k + 1] = time[k] + 2.0 * ds / mean;
        }
        Ok(Profile {
            grid,
            cell_segment,
            u,
            time,
        })
    }

    /// Path parameter, its rate and acceleration at time `t`.
    fn state_at(&self, t: f64) -> (usize, f64, f64, f64) {
        let last = self.grid.len() - 1;
        let k = self.time.partition_point(|&x| x <= t).saturating_sub(1).min(last - 1);
        let ds = self.grid[k + 1] - self.grid[k];
        let w = (self.u[k + 1] - self.u[k]) / (2.0 * ds);
        let v0 = self.u[k].sqrt();
        let tau = (t - self.time[k]).clamp(0.0, self.time[k + 1] - self.time[k]);
        let s = (self.grid[k] + v0 * tau + 0.5 * w * tau * tau).clamp(self.grid[k], self.grid[k + 1]);
        let sdot = (v0 + w * tau).max(0.0);
        (k, s, sdot, w)
    }

    fn sample(&self, spline: &Spline, n: usize, dt: f64) -> Trajectory {
        let total = *self.time.last().expect("non-empty");
        let mut times: Vec<f64> = (0..).map(|i| i as f64 * dt).take_while(|&t| t < total).collect();
        if times.last().is_none_or(|&t| total - t > 1e-9 * dt) {
            times.push(total);
        }
        let mut tracks = vec![Vec::with_capacity(times.len()); n];
        let mut progress = Vec::with_capacity(times.len());
        let last = times.len() - 1;
        for (idx, &t) in times.iter().enumerate() {
            let (cell, mut s, mut sdot, mut sddot) = self.state_at(t);
            if idx == 0 {
                s = 0.0;
                sdot = 0.0;
            }
            if idx == last {
                s = spline.length();
                sdot = 0.0;
            }
            if idx == 0 || idx == last {
                // rest: only the path acceleration of the adjacent cell remains
                sddot = if idx == 0 {
                    (self.u[1] - self.u[0]) / (2.0 * (self.grid[1] - self.grid[0]))
                } else {
                    let m = self.grid.len() - 1;
                    (self.u[m] - self.u[m - 1]) / (2.0 * (self.grid[m] - self.grid[m - 1]))
                };
            }
            let jet = spline.eval(self.cell_segment[cell], s);
            progress.push(s);
            for (i, track) in tracks.iter_mut().enumerate() {
                let (x, d1, d2) = (uav(&jet.x, i), uav(&jet.d1, i), uav(&jet.d2, i));
                track.push(Sample {
                    t,
                    pos: x,
                    vel: d1 * sdot,
                    acc: d2 * (sdot * sdot) + d1 * sddot,
                });
            }
        }
        Trajectory {
            dt,
            times,
            progress,
            tracks,
            length: spline.length(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formation::LeaderQuad;
    use crate::path::Snapshot;
    use approx::assert_abs_diff_eq;

    fn straight(len: f64, steps: usize) -> PlannedPath {
        let q0 = LeaderQuad::square_yz(Vec3::zeros(), 5.0).unwrap();
        let snaps = (0..=steps)
            .map(|k| Snapshot {
                iteration: k,
                quad: q0.map(|p| p + Vec3::new(len * k as f64 / steps as f64, 0., 0.)).unwrap(),
            })
            .collect();
        PlannedPath::new(snaps, true)
    }

    fn arc(radius: f64, sweep: f64, steps: usize) -> PlannedPath {
        let q0 = LeaderQuad::square_yz(Vec3::new(0., -2.5, -2.5), 5.0).unwrap();
        let snaps = (0..=steps)
            .map(|k| {
                let a = sweep * k as f64 / steps as f64;
                let shift = Vec3::new(radius * a.sin(), radius * (1.0 - a.cos()), 0.0);
                Snapshot {
                    iteration: k,
                    quad: q0.map(|p| p + shift).unwrap(),
                }
            })
            .collect();
        PlannedPath::new(snaps, true)
    }

    const LIMITS: KinematicLimits = KinematicLimits { v_max: 10.0, a_max: 5.0 };

    #[test]
    fn trapezoid_duration() {
        let traj = parameterize(&straight(100.0, 1), &LIMITS, 0.02).unwrap();
        assert!((traj.duration() - 12.0).abs() <= 0.02, "{}", traj.duration());
        assert_abs_diff_eq!(traj.max_speed(), 10.0, epsilon = 1e-6);
    }

    #[test]
    fn triangle_duration() {
        let traj = parameterize(&straight(5.0, 1), &LIMITS, 0.02).unwrap();
        assert!((traj.duration() - 2.0).abs() <= 0.02, "{}", traj.duration());
    }

    #[test]
    fn many_collinear_snapshots_match_single_segment() {
        let one = parameterize(&straight(60.0, 1), &LIMITS, 0.02).unwrap();
        let many = parameterize(&straight(60.0, 240), &LIMITS, 0.02).unwrap();
        assert!((one.duration() - many.duration()).abs() <= 0.02);
    }

    #[test]
    fn curved_path_respects_limits_and_rests_at_ends() {
        let traj = parameterize(&arc(15.0, 2.0, 80), &LIMITS, 0.02).unwrap();
        for s in traj.samples() {
            assert!(s.vel.norm() <= 10.0 + 1e-6);
            assert!(s.acc.norm() <= 5.0 + 1e-6);
        }
        for track in &traj.tracks {
            assert!(track[0].vel.norm() <= 1e-9);
            assert!(track.last().unwrap().vel.norm() <= 1e-9);
        }
        for w in traj.progress.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for w in traj.times.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn profile_hugs_a_limit() {
        let traj = parameterize(&arc(15.0, 2.0, 80), &LIMITS, 0.02).unwrap();
        let active = (0..traj.len())
            .filter(|&k| {
                traj.tracks.iter().any(|t| t[k].vel.norm() >= 0.95 * 10.0 || t[k].acc.norm() >= 0.95 * 5.0)
            })
            .count();
        assert!(active as f64 >= 0.8 * traj.len() as f64, "{active}/{}", traj.len());
    }

    #[test]
    fn samples_lie_on_the_spline() {
        let path = arc(15.0, 1.0, 20);
        let traj = parameterize(&path, &LIMITS, 0.05).unwrap();
        let spline = Spline::new(&SyncPath::from(&path)).unwrap();
        for (k, &s) in traj.progress.iter().enumerate() {
            let jet = spline.eval(spline.segment_of(s), s);
            for (i, track) in traj.tracks.iter().enumerate() {
                assert!((uav(&jet.x, i) - track[k].pos).norm() <= 1e-6);
            }
        }
        // and the spline interpolates the snapshots
        for (k, q) in path.quads().enumerate() {
            let s = spline.knots[k];
            let jet = spline.eval(spline.segment_of(s).min(spline.segments() - 1), s);
            assert_abs_diff_eq!(uav(&jet.x, 0), q.points()[0], epsilon = 1e-9);
        }
    }

    #[test]
    fn stationary_path_is_too_short() {
        let q = LeaderQuad::square_yz(Vec3::zeros(), 5.0).unwrap();
        let snaps = (0..3).map(|k| Snapshot { iteration: k, quad: q }).collect();
        let path = PlannedPath::new(snaps, true);
        assert!(matches!(parameterize(&path, &LIMITS, 0.02), Err(Error::PathTooShort)));
        assert_eq!(filter_path(&path, 0.25).unwrap().len(), 2);
    }

    #[test]
    fn cusp_is_reported() {
        let q = LeaderQuad::square_yz(Vec3::zeros(), 5.0).unwrap();
        let shifts = [0.0, 10.0, 0.0];
        let snaps = shifts
            .iter()
            .enumerate()
            .map(|(k, &x)| Snapshot {
                iteration: k,
                quad: q.map(|p| p + Vec3::new(x, 0., 0.)).unwrap(),
            })
            .collect();
        let r = parameterize(&PlannedPath::new(snaps, true), &LIMITS, 0.02);
        assert!(matches!(r, Err(Error::InfeasiblePath { .. })), "{r:?}");
    }

    #[test]
    fn filter_keeps_well_spaced_paths() {
        let path = straight(10.0, 20);
        assert_eq!(filter_path(&path, 0.25).unwrap(), path);
        let thinned = filter_path(&straight(10.0, 200), 0.25).unwrap();
        assert_eq!(thinned.len(), 41);
    }

    #[test]
    fn invalid_inputs() {
        let path = straight(10.0, 2);
        assert!(parameterize(&path, &KinematicLimits { v_max: 0.0, a_max: 5.0 }, 0.02).is_err());
        assert!(parameterize(&path, &LIMITS, 0.0).is_err());
        assert!(filter_path(&path, 0.0).is_err());
    }
}
