//! Scenario execution: plan, parameterise, simulate, write artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fluxguide::sim::SimResult;
use fluxguide::trajectory::parameterize_sync;
use fluxguide::{
    exact_multi_flux, filter_path, flux_quad_boundary, plan_fg, plan_ls, run_tracking, shape_metrics, Error,
    LeaderQuad, PlannedPath, SyncPath, TargetKind, TargetModel, Trajectory,
};

use crate::error::{CliError, Result};
use crate::output::*;
use crate::scenario::{PlannerChoice, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Planners only: `path.csv` and `metrics.json`.
    Plan,
    /// Parameterise and track a previously planned path found in the
    /// output directory.
    Simulate,
    /// Both of the above in one go.
    Run,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub metrics: Metrics,
    pub out_dir: PathBuf,
    pub wall_time_s: f64,
}

impl Outcome {
    /// Every planner run reached its stopping rule.
    pub fn converged(&self) -> bool {
        self.metrics.per_method.values().all(|m| m.converged)
    }
}

/// Key of an LS run in the per-method metrics, e.g. `ls_beta400`.
pub fn ls_key(beta: f64) -> String {
    format!("ls_beta{beta}")
}

pub const FG_KEY: &str = "fg";

/// Runs `stage` of `scenario`, writing into `out` (or the scenario's own
/// output directory).
///
/// A planner that stops without converging is not an error here: its
/// partial path and metrics are written and flagged, and the simulation is
/// skipped. Check [`Outcome::converged`].
pub fn run_scenario(scenario: &Scenario, stage: Stage, out: Option<&Path>) -> Result<Outcome> {
    let clock = Instant::now();
    let out_dir = out.map_or_else(|| scenario.output_dir.clone(), Path::to_path_buf);
    let (mut metrics, primary) = match stage {
        Stage::Plan | Stage::Run => {
            let (metrics, paths) = plan(scenario)?;
            write_atomic(&artifact(&out_dir, PATH_CSV), &path_csv(&paths)?)?;
            let primary = paths.into_iter().find(|(k, _)| *k == metrics.primary_method).map(|(_, p)| p);
            (metrics, primary)
        }
        Stage::Simulate => {
            let metrics = read_metrics(&artifact(&out_dir, METRICS_JSON))?;
            let converged = metrics.per_method.get(&metrics.primary_method).is_some_and(|m| m.converged);
            let path = read_path_csv(&artifact(&out_dir, PATH_CSV), &metrics.primary_method, converged)?;
            (metrics, Some(path))
        }
    };
    if stage != Stage::Plan {
        if let Some(path) = primary.filter(|p| p.converged) {
            simulate(scenario, &path, &out_dir, &mut metrics)?;
        }
    }
    write_atomic(&artifact(&out_dir, METRICS_JSON), &metrics_json(&metrics)?)?;
    let wall_time_s = clock.elapsed().as_secs_f64();
    let timing = serde_json::json!({ "wall_time_s": wall_time_s });
    write_atomic(&artifact(&out_dir, TIMING_JSON), format!("{timing}\n").as_bytes())?;
    Ok(Outcome {
        metrics,
        out_dir,
        wall_time_s,
    })
}

fn unwrap_partial(result: fluxguide::Result<PlannedPath>) -> Result<PlannedPath> {
    match result {
        Ok(path) => Ok(path),
        Err(Error::NotConverged { path, .. }) => Ok(*path),
        Err(e) => Err(e.into()),
    }
}

fn arr(v: &fluxguide::Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn final_quad(path: &PlannedPath) -> Result<&LeaderQuad> {
    path.last().ok_or_else(|| CliError::Invalid("planner returned an empty path".into()))
}

fn method_metrics(path: &PlannedPath, target: &TargetModel) -> Result<MethodMetrics> {
    let last = final_quad(path)?;
    Ok(MethodMetrics {
        combined_length_m: Some(path.combined_length),
        iterations: path.snapshots.last().map_or(0, |s| s.iteration),
        snapshots: path.len(),
        converged: path.converged,
        final_side_lengths_m: shape_metrics(last).side_lengths,
        final_centroid: arr(&last.centroid()),
        final_flux: flux_quad_boundary(&target.point_charge()?, last)?,
    })
}

fn plan(scenario: &Scenario) -> Result<(Metrics, Vec<(String, PlannedPath)>)> {
    let start = scenario.start_quad()?;
    let target = scenario.target_model()?;
    let charge = target.point_charge()?;
    let fg_cfg = scenario.fg_config();

    let mut paths = Vec::new();
    if scenario.planner != PlannerChoice::Fg {
        for cfg in scenario.ls_configs() {
            paths.push((ls_key(cfg.beta), unwrap_partial(plan_ls(&start, &charge, &cfg))?));
        }
    }
    if scenario.planner != PlannerChoice::Ls {
        paths.push((FG_KEY.to_string(), unwrap_partial(plan_fg(&start, &target, &fg_cfg))?));
    }
    let primary = match scenario.planner {
        PlannerChoice::Ls => ls_key(scenario.ls_betas()[0]),
        _ => FG_KEY.to_string(),
    };

    let per_method = paths
        .iter()
        .map(|(k, p)| Ok((k.clone(), method_metrics(p, &target)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let main = &per_method[&primary];
    let main_path = &paths.iter().find(|(k, _)| *k == primary).expect("primary was planned").1;

    let cluster = if target.kind == TargetKind::Cluster {
        let last = final_quad(main_path)?;
        let exact = exact_multi_flux(&target.members, last)?;
        let coc = flux_quad_boundary(&charge, last)?;
        let stop_radius = if primary == FG_KEY {
            fg_cfg.stop_radius_for(&start, &target)
        } else {
            scenario.ls_configs()[0].stop_radius.unwrap_or_else(|| start.circumradius())
        };
        Some(ClusterMetrics {
            required_side_m: fg_cfg.final_side_for(&start, &target),
            stop_radius_m: stop_radius,
            final_distance_m: (last.centroid() - target.center).norm(),
            exact_flux: exact,
            coc_flux: coc,
            relative_error: ((exact - coc) / exact).abs(),
        })
    } else {
        None
    };

    let metrics = Metrics {
        scenario: scenario.name.clone(),
        planner: format!("{:?}", scenario.planner).to_lowercase(),
        primary_method: primary.clone(),
        seed: scenario.seed(),
        target: TargetSummary {
            kind: format!("{:?}", target.kind).to_lowercase(),
            center: arr(&target.center),
            effective_radius_m: target.effective_radius,
            members: target.members.len().max(1),
        },
        combined_length_m: main.combined_length_m,
        iterations: main.iterations,
        converged: per_method.values().all(|m| m.converged),
        final_side_lengths_m: main.final_side_lengths_m,
        per_method,
        cluster,
        uav_count: None,
        duration_s: None,
        max_speed_mps: None,
        max_accel_mps2: None,
        max_tracking_error_m: None,
        max_side_deviation: None,
    };
    Ok((metrics, paths))
}

/// Filtered, synchronised and time-parameterised primary path.
pub fn build_trajectory(scenario: &Scenario, path: &PlannedPath) -> Result<Trajectory> {
    let filtered = filter_path(path, scenario.min_spacing())?;
    let sync = if scenario.emit_followers {
        SyncPath::with_followers(&filtered)?
    } else {
        SyncPath::from(&filtered)
    };
    Ok(parameterize_sync(&sync, &scenario.limits(), scenario.dt())?)
}

/// Largest relative difference between simulated and reference leader sides.
pub fn side_deviation(traj: &Trajectory, sim: &SimResult) -> f64 {
    let mut worst: f64 = 0.0;
    if traj.uav_count() < 4 {
        return worst;
    }
    for (k, sides) in sim.side_lengths.iter().enumerate() {
        for (i, side) in sides.iter().enumerate() {
            let reference = (traj.tracks[(i + 1) % 4][k].pos - traj.tracks[i][k].pos).norm();
            worst = worst.max((side - reference).abs() / reference);
        }
    }
    worst
}

fn simulate(scenario: &Scenario, path: &PlannedPath, out_dir: &Path, metrics: &mut Metrics) -> Result<()> {
    let limits = scenario.limits();
    let traj = build_trajectory(scenario, path)?;
    let sim = run_tracking(&traj, &scenario.pid(), &limits)?;

    write_atomic(&artifact(out_dir, TRAJECTORY_CSV), &trajectory_csv(&traj)?)?;
    write_atomic(&artifact(out_dir, SIM_CSV), &sim_csv(&sim)?)?;
    if scenario.emit_followers {
        write_atomic(&artifact(out_dir, FOLLOWERS_CSV), &followers_csv(path)?)?;
    }

    metrics.uav_count = Some(traj.uav_count());
    metrics.duration_s = Some(traj.duration());
    metrics.max_speed_mps = Some(traj.max_speed().max(sim.metrics.max_speed));
    metrics.max_accel_mps2 = Some(traj.max_accel().max(sim.metrics.max_control));
    metrics.max_tracking_error_m = Some(sim.metrics.max_error);
    metrics.max_side_deviation = Some(side_deviation(&traj, &sim));
    Ok(())
}
