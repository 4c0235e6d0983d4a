//! Single targets and target clusters.
//!
//! A cluster is reduced to its centre of charge (the mean member position)
//! carrying the whole unit charge, plus an effective radius: the largest
//! member distance from that centre.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{check_finite, flux_quad_boundary, PointCharge};
use crate::formation::LeaderQuad;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Single,
    Cluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetModel {
    pub kind: TargetKind,
    pub center: Vec3,
    pub charge: f64,
    /// Metres; zero for a single target.
    pub effective_radius: f64,
    /// Empty for a single target.
    pub members: Vec<Vec3>,
}

impl TargetModel {
    pub fn single(position: Vec3) -> Result<Self> {
        check_finite(&position, "target position")?;
        Ok(TargetModel {
            kind: TargetKind::Single,
            center: position,
            charge: 1.0,
            effective_radius: 0.0,
            members: Vec::new(),
        })
    }

    /// The reduced single charge the planners consume.
    pub fn point_charge(&self) -> Result<PointCharge> {
        PointCharge::new(self.center, self.charge)
    }
}

/// Reduces a target set to its centre of charge and effective radius.
pub fn coc_reduce(members: &[Vec3]) -> Result<TargetModel> {
    if members.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    for m in members {
        check_finite(m, "target member")?;
    }
    let center = members.iter().sum::<Vec3>() / members.len() as f64;
    let effective_radius = members.iter().map(|m| (m - center).norm()).fold(0.0, f64::max);
    Ok(TargetModel {
        kind: TargetKind::Cluster,
        center,
        charge: 1.0,
        effective_radius,
        members: members.to_vec(),
    })
}

/// Flux through the leader cap of the whole set, each member carrying an
/// equal share of a unit total charge.
pub fn exact_multi_flux(members: &[Vec3], quad: &LeaderQuad) -> Result<f64> {
    if members.is_empty() {
        return Err(Error::EmptyTargetSet);
    }
    let mut total = 0.0;
    for m in members {
        total += flux_quad_boundary(&PointCharge::unit(*m)?, quad)?;
    }
    Ok(total / members.len() as f64)
}
