//! Artifact files. Every file is written to a temporary sibling and renamed
//! into place.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use fluxguide::sim::SimResult;
use fluxguide::{derive_followers, LeaderQuad, PlannedPath, Snapshot, Trajectory, Vec3};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const PATH_CSV: &str = "path.csv";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const SIM_CSV: &str = "sim.csv";
pub const FOLLOWERS_CSV: &str = "followers.csv";
pub const METRICS_JSON: &str = "metrics.json";
/// Run timings, kept apart from the deterministic metrics.
pub const TIMING_JSON: &str = "timing.json";

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut file = std::fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    file.write_all(bytes).and_then(|_| file.sync_all()).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Nine significant digits.
fn sig(x: f64) -> String {
    format!("{x:.8e}")
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Invalid(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Invalid(format!("csv: {e}")))
}

/// Leader snapshots of every planner run, at full precision so they can be
/// read back exactly.
pub fn path_csv(paths: &[(String, PlannedPath)]) -> Result<Vec<u8>> {
    let rows = paths.iter().flat_map(|(method, path)| {
        path.snapshots.iter().flat_map(move |s| {
            s.quad.points().iter().enumerate().map(move |(id, p)| {
                vec![
                    method.clone(),
                    s.iteration.to_string(),
                    id.to_string(),
                    p.x.to_string(),
                    p.y.to_string(),
                    p.z.to_string(),
                ]
            })
        })
    });
    csv_bytes(&["method", "iteration", "uav_id", "px", "py", "pz"], rows)
}

#[derive(Debug, Deserialize)]
struct PathRow {
    method: String,
    iteration: usize,
    uav_id: usize,
    px: f64,
    py: f64,
    pz: f64,
}

/// Reads back the snapshots of `method` written by [`path_csv`].
pub fn read_path_csv(file: &Path, method: &str, converged: bool) -> Result<PlannedPath> {
    let bad = |m: String| CliError::parse(file, m);
    let mut reader = csv::Reader::from_path(file).map_err(|e| bad(e.to_string()))?;
    let mut frames: BTreeMap<usize, [Option<Vec3>; 4]> = BTreeMap::new();
    for row in reader.deserialize::<PathRow>() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        if row.method != method {
            continue;
        }
        if row.uav_id >= 4 {
            return Err(bad(format!("uav_id {} out of range", row.uav_id)));
        }
        frames.entry(row.iteration).or_default()[row.uav_id] = Some(Vec3::new(row.px, row.py, row.pz));
    }
    if frames.is_empty() {
        return Err(bad(format!("no snapshots for method {method}")));
    }
    let snapshots = frames
        .into_iter()
        .map(|(iteration, points)| {
            let points = points.map(|p| p.ok_or_else(|| bad(format!("iteration {iteration}: missing leader"))));
            let [a, b, c, d] = points;
            let quad = LeaderQuad::new(a?, b?, c?, d?)?;
            Ok(Snapshot { iteration, quad })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PlannedPath::new(snapshots, converged))
}

fn vec_cells(v: &Vec3) -> [String; 3] {
    [sig(v.x), sig(v.y), sig(v.z)]
}

const TRAJECTORY_HEADER: [&str; 11] = ["t", "uav_id", "px", "py", "pz", "vx", "vy", "vz", "ax", "ay", "az"];

pub fn trajectory_csv(traj: &Trajectory) -> Result<Vec<u8>> {
    let rows = (0..traj.len()).flat_map(|k| {
        traj.tracks.iter().enumerate().map(move |(id, track)| {
            let s = &track[k];
            let mut row = vec![sig(s.t), id.to_string()];
            row.extend(vec_cells(&s.pos));
            row.extend(vec_cells(&s.vel));
            row.extend(vec_cells(&s.acc));
            row
        })
    });
    csv_bytes(&TRAJECTORY_HEADER, rows)
}

/// Simulated states; `a` is the applied control, repeated as `u`.
pub fn sim_csv(sim: &SimResult) -> Result<Vec<u8>> {
    let mut header = TRAJECTORY_HEADER.to_vec();
    header.extend(["err_x", "err_y", "err_z", "ux", "uy", "uz"]);
    let rows = (0..sim.times.len()).flat_map(|k| {
        (0..sim.states.len()).map(move |id| {
            let (s, u, e) = (&sim.states[id][k], &sim.controls[id][k], &sim.errors[id][k]);
            let mut row = vec![sig(sim.times[k]), id.to_string()];
            row.extend(vec_cells(&s.pos));
            row.extend(vec_cells(&s.vel));
            row.extend(vec_cells(u));
            row.extend(vec_cells(e));
            row.extend(vec_cells(u));
            row
        })
    });
    csv_bytes(&header, rows)
}

/// Derived followers `f1..f5` (ids 4 to 8) at every snapshot.
pub fn followers_csv(path: &PlannedPath) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for s in &path.snapshots {
        let h = derive_followers(&s.quad)?;
        for (i, f) in h.followers.iter().enumerate() {
            let mut row = vec![s.iteration.to_string(), (4 + i).to_string()];
            row.extend(vec_cells(f));
            row.push(sig(h.radius));
            rows.push(row);
        }
    }
    csv_bytes(&["iteration", "uav_id", "px", "py", "pz", "radius"], rows.into_iter())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub combined_length_m: Option<f64>,
    pub iterations: usize,
    pub snapshots: usize,
    pub converged: bool,
    pub final_side_lengths_m: [f64; 4],
    pub final_centroid: [f64; 3],
    /// Flux of the reduced target charge through the final cap.
    pub final_flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub kind: String,
    pub center: [f64; 3],
    pub effective_radius_m: f64,
    pub members: usize,
}

/// How well the reduced charge stands in for the cluster at the final pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMetrics {
    pub required_side_m: f64,
    pub stop_radius_m: f64,
    pub final_distance_m: f64,
    pub exact_flux: f64,
    pub coc_flux: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: String,
    pub planner: String,
    pub primary_method: String,
    pub seed: Option<u64>,
    pub target: TargetSummary,
    /// Combined leader path length of the primary method.
    pub combined_length_m: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_side_lengths_m: [f64; 4],
    pub per_method: BTreeMap<String, MethodMetrics>,
    pub cluster: Option<ClusterMetrics>,
    pub uav_count: Option<usize>,
    pub duration_s: Option<f64>,
    /// Largest speed over the reference and the simulation.
    pub max_speed_mps: Option<f64>,
    /// Largest reference acceleration or applied control.
    pub max_accel_mps2: Option<f64>,
    pub max_tracking_error_m: Option<f64>,
    /// Largest relative deviation of a simulated leader side from the
    /// reference side at the same instant.
    pub max_side_deviation: Option<f64>,
}

pub fn metrics_json(metrics: &Metrics) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(metrics).map_err(|e| CliError::Invalid(format!("json: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn read_metrics(file: &Path) -> Result<Metrics> {
    let text = std::fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(file, e))
}

pub fn artifact(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
