//! Synthetic experiments, metrics and report files.

mod experiment;
mod source;

pub use experiment::{
    baseline_training_actions, evaluate_report, held_out_actions, held_out_mpd, replay_stable,
    report_file_name, reserve_pivots, run_cell, run_experiment, run_method, write_absdiff_grid,
    write_experiment, write_metric_table, write_results_csv, CellOutcome, ExperimentConfig,
    ExperimentResult, Method, REPLAY_AMPLIFICATION_LIMIT,
};
pub use source::{SweepConfig, SyntheticSource};

use serde::{Deserialize, Serialize};

use crate::dynamics::{world_kinematics, Trajectory};
use crate::error::{Error, Result};
use crate::object_model::{GroupMaps, ParticleModel};

/// Standard deviations of the simulated sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Per force channel (N).
    pub wrench_force: f64,
    /// Torque channel (N·m).
    pub wrench_torque: f64,
    /// Per position channel (m).
    pub pose_position: f64,
    /// Orientation (rad).
    pub pose_angle: f64,
    /// Weighing error (kg).
    pub scale: f64,
}

impl NoiseModel {
    pub const NONE: Self = Self {
        wrench_force: 0.0,
        wrench_torque: 0.0,
        pose_position: 0.0,
        pose_angle: 0.0,
        scale: 0.0,
    };

    /// Wrist force/torque sensor plus motion capture.
    pub fn bench() -> Self {
        Self {
            wrench_force: 0.05,
            wrench_torque: 0.005,
            pose_position: 1e-3,
            pose_angle: 0.2f64.to_radians(),
            scale: 1e-3,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "none" => Ok(Self::NONE),
            "bench" => Ok(Self::bench()),
            other => Err(Error::InvalidConfig(format!(
                "unknown noise preset `{other}` (expected none or bench)"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.wrench_force,
            self.wrench_torque,
            self.pose_position,
            self.pose_angle,
            self.scale,
        ];
        if all.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "noise sigmas must be non-negative: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Particle-weighted absolute mass error over the true total mass.
pub fn nad(m_est: &[f64], m_true: &[f64], maps: &GroupMaps) -> Result<f64> {
    if m_est.len() != maps.n_mass || m_true.len() != maps.n_mass {
        return Err(Error::InconsistentGrouping(format!(
            "{} estimated and {} true groups for {} mass groups",
            m_est.len(),
            m_true.len(),
            maps.n_mass
        )));
    }
    let sizes = maps.mass_group_sizes();
    let (mut num, mut den) = (0.0, 0.0);
    for g in 0..maps.n_mass {
        num += sizes[g] as f64 * (m_est[g] - m_true[g]).abs();
        den += sizes[g] as f64 * m_true[g];
    }
    if !(den > 0.0) {
        return Err(Error::Evaluation("true total mass is zero".into()));
    }
    Ok(num / den)
}

/// Mean distance between corresponding particles at the final step.
pub fn mpd(traj_sim: &Trajectory, traj_true: &Trajectory, model: &ParticleModel) -> Result<f64> {
    if traj_sim.states.len() != traj_true.states.len()
        || (traj_sim.config.dt - traj_true.config.dt).abs() > 1e-12
    {
        return Err(Error::IncompatibleTrajectories(format!(
            "{} vs {} states, dt {} vs {}",
            traj_sim.states.len(),
            traj_true.states.len(),
            traj_sim.config.dt,
            traj_true.config.dt
        )));
    }
    let a = world_kinematics(model, traj_sim.final_state());
    let b = world_kinematics(model, traj_true.final_state());
    Ok(a.iter()
        .zip(&b)
        .map(|((p, _), (q, _))| (p - q).norm())
        .sum::<f64>()
        / model.len() as f64)
}
