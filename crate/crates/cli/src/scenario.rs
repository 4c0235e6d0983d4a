//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "compare_rear"
//! planner = "both"            # "ls", "fg" or "both"
//! output_dir = "out/compare_rear"
//! emit_followers = false
//!
//! [start]
//! p1 = [0.0, 0.0, 0.0]
//! p2 = [0.0, 5.0, 0.0]
//! p3 = [0.0, 5.0, 5.0]
//! p4 = [0.0, 0.0, 5.0]
//!
//! [target]                    # exactly one of the three forms
//! position = [-40.0, 40.0, 40.0]
//! # members = [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]
//! # distribution = { mean = 200.0, sigma = 100.0, count = 10, seed = 42 }
//!
//! [ls]                        # every key optional
//! betas = [0.0, 400.0]
//!
//! [fg]
//! side_length = 5.0
//!
//! [limits]
//! [pid]
//! [trajectory]
//! ```
//!
//! Omitted keys take the library defaults. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use fluxguide::ls::PhiSchedule;
use fluxguide::sqp::HessianModel;
use fluxguide::{coc_reduce, FgConfig, KinematicLimits, LeaderQuad, LsConfig, PidGains, TargetModel, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerChoice {
    Ls,
    Fg,
    Both,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub planner: PlannerChoice,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit_followers: bool,
    pub start: StartQuad,
    pub target: TargetSpec,
    #[serde(default)]
    pub ls: LsSection,
    #[serde(default)]
    pub fg: FgSection,
    #[serde(default)]
    pub limits: LimitsSection,
    #[serde(default)]
    pub pid: PidSection,
    #[serde(default)]
    pub trajectory: TrajectorySection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartQuad {
    pub p1: [f64; 3],
    pub p2: [f64; 3],
    pub p3: [f64; 3],
    pub p4: [f64; 3],
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub position: Option<[f64; 3]>,
    pub members: Option<Vec<[f64; 3]>>,
    pub distribution: Option<TargetDistribution>,
}

/// Members drawn i.i.d. per axis from `N(mean, sigma^2)`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDistribution {
    pub mean: Mean,
    pub sigma: f64,
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Mean {
    Scalar(f64),
    Vector([f64; 3]),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsSection {
    pub alpha: Option<f64>,
    /// One LS run per entry; defaults to `[0.0]`.
    pub betas: Option<Vec<f64>>,
    /// Set to use a fixed fraction of the current coverage as the
    /// requested increase instead of matching the step cap.
    pub phi_fraction: Option<f64>,
    pub phi_floor: Option<f64>,
    pub max_iters: Option<usize>,
    pub step_cap: Option<f64>,
    pub stop_radius: Option<f64>,
    pub plateau_tol: Option<f64>,
    pub plateau_window: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HessianChoice {
    Exact,
    Bfgs,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FgSection {
    pub side_length: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub step_cap: Option<f64>,
    pub constraint_tol: Option<f64>,
    pub optimality_tol: Option<f64>,
    pub stop_radius: Option<f64>,
    pub hessian: Option<HessianChoice>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    pub v_max: Option<f64>,
    pub a_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidSection {
    pub kp: Option<f64>,
    pub ki: Option<f64>,
    pub kd: Option<f64>,
    pub integral_clamp: Option<f64>,
    pub feedforward: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// s
    pub dt: Option<f64>,
    /// m
    pub min_spacing: Option<f64>,
}

pub const DEFAULT_DT: f64 = 0.02;
pub const DEFAULT_MIN_SPACING: f64 = 0.25;

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let scenario = Self::parse(&text).map_err(|e| match e {
            CliError::Parse { message, .. } => CliError::parse(path, message),
            other => other,
        })?;
        Ok(scenario)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| CliError::parse("<scenario>", e))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.target;
        let forms = [t.position.is_some(), t.members.is_some(), t.distribution.is_some()];
        if forms.iter().filter(|&&f| f).count() != 1 {
            return Err(CliError::Invalid(
                "target: give exactly one of position, members or distribution".into(),
            ));
        }
        if let Some(d) = &t.distribution {
            if d.count == 0 || !(d.sigma >= 0.0 && d.sigma.is_finite()) {
                return Err(CliError::Invalid("target.distribution: count must be > 0 and sigma >= 0".into()));
            }
        }
        if self.ls_betas().is_empty() {
            return Err(CliError::Invalid("ls.betas must not be empty".into()));
        }
        self.start_quad()?;
        for cfg in self.ls_configs() {
            cfg.validate()?;
        }
        self.fg_config().validate()?;
        self.limits().validate()?;
        self.pid().validate()?;
        let (dt, spacing) = (self.dt(), self.min_spacing());
        if !(dt > 0.0 && dt.is_finite() && spacing > 0.0 && spacing.is_finite()) {
            return Err(CliError::Invalid("trajectory: dt and min_spacing must be > 0".into()));
        }
        Ok(())
    }

    pub fn start_quad(&self) -> Result<LeaderQuad> {
        let s = &self.start;
        Ok(LeaderQuad::new(v3(s.p1), v3(s.p2), v3(s.p3), v3(s.p4))?)
    }

    /// The seed behind a sampled target set.
    pub fn seed(&self) -> Option<u64> {
        self.target.distribution.map(|d| d.seed)
    }

    pub fn target_model(&self) -> Result<TargetModel> {
        let t = &self.target;
        if let Some(p) = t.position {
            return Ok(TargetModel::single(v3(p))?);
        }
        if let Some(members) = &t.members {
            return Ok(coc_reduce(&members.iter().copied().map(v3).collect::<Vec<_>>())?);
        }
        let d = t.distribution.as_ref().ok_or_else(|| CliError::Invalid("target: missing".into()))?;
        Ok(coc_reduce(&sample_members(d)?)?)
    }

    pub fn ls_betas(&self) -> Vec<f64> {
        self.ls.betas.clone().unwrap_or_else(|| vec![0.0])
    }

    /// One configuration per entry of `betas`.
    pub fn ls_configs(&self) -> Vec<LsConfig> {
        let d = LsConfig::default();
        let s = &self.ls;
        let phi = match s.phi_fraction {
            Some(fraction) => PhiSchedule::Relative {
                fraction,
                floor: s.phi_floor.unwrap_or(0.0),
            },
            None => d.phi,
        };
        self.ls_betas()
            .into_iter()
            .map(|beta| LsConfig {
                alpha: s.alpha.unwrap_or(d.alpha),
                beta,
                phi,
                max_iters: s.max_iters.unwrap_or(d.max_iters),
                step_cap: s.step_cap.unwrap_or(d.step_cap),
                stop_radius: s.stop_radius.or(d.stop_radius),
                plateau_tol: s.plateau_tol.unwrap_or(d.plateau_tol),
                plateau_window: s.plateau_window.unwrap_or(d.plateau_window),
            })
            .collect()
    }

    pub fn fg_config(&self) -> FgConfig {
        let d = FgConfig::default();
        let s = &self.fg;
        FgConfig {
            side_length: s.side_length.unwrap_or(d.side_length),
            max_outer_iters: s.max_outer_iters.unwrap_or(d.max_outer_iters),
            step_cap: s.step_cap.unwrap_or(d.step_cap),
            constraint_tol: s.constraint_tol.unwrap_or(d.constraint_tol),
            optimality_tol: s.optimality_tol.unwrap_or(d.optimality_tol),
            stop_radius: s.stop_radius.or(d.stop_radius),
            scale_schedule: d.scale_schedule,
            hessian: match s.hessian {
                Some(HessianChoice::Bfgs) => HessianModel::Bfgs,
                Some(HessianChoice::Exact) => HessianModel::Exact,
                None => d.hessian,
            },
        }
    }

    pub fn limits(&self) -> KinematicLimits {
        let d = KinematicLimits::default();
        KinematicLimits {
            v_max: self.limits.v_max.unwrap_or(d.v_max),
            a_max: self.limits.a_max.unwrap_or(d.a_max),
        }
    }

    pub fn pid(&self) -> PidGains {
        let d = PidGains::default();
        let s = &self.pid;
        PidGains {
            kp: s.kp.unwrap_or(d.kp),
            ki: s.ki.unwrap_or(d.ki),
            kd: s.kd.unwrap_or(d.kd),
            integral_clamp: s.integral_clamp.unwrap_or(d.integral_clamp),
            feedforward: s.feedforward.unwrap_or(d.feedforward),
        }
    }

    pub fn dt(&self) -> f64 {
        self.trajectory.dt.unwrap_or(DEFAULT_DT)
    }

    pub fn min_spacing(&self) -> f64 {
        self.trajectory.min_spacing.unwrap_or(DEFAULT_MIN_SPACING)
    }
}

/// Draws the members of a sampled target set. The same distribution always
/// yields the same members.
pub fn sample_members(d: &TargetDistribution) -> Result<Vec<Vec3>> {
    let mean = match d.mean {
        Mean::Scalar(m) => [m; 3],
        Mean::Vector(m) => m,
    };
    let normals = mean
        .map(|m| Normal::new(m, d.sigma).map_err(|e| CliError::Invalid(format!("target.distribution: {e}"))));
    let [nx, ny, nz] = normals;
    let (nx, ny, nz) = (nx?, ny?, nz?);
    let mut rng = ChaCha8Rng::seed_from_u64(d.seed);
    Ok((0..d.count)
        .map(|_| Vec3::new(nx.sample(&mut rng), ny.sample(&mut rng), nz.sample(&mut rng)))
        .collect())
}
