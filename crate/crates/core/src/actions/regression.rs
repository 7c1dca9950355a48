//! Velocity-change regression `v_{t+1} - v_t = A s + B` and the rank test
//! that decides whether an action set identifies `s`.

use nalgebra::{DMatrix, Vector3};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{kinematic_trajectory, ActionSpec};
use crate::dynamics::{
    sliding_direction, world_kinematics, ObjectState, SimConfig, StepFeatures, WrenchInput,
};
use crate::error::{Error, Result};
use crate::geometry::{cross, rotation, Vec2};
use crate::linalg::rank;
use crate::object_model::{GroupMaps, ObjectLevel, ParticleModel};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionBlock {
    /// 3×n_s, maps friction magnitudes to the velocity change.
    pub a: DMatrix<f64>,
    /// Velocity change due to the applied wrench and the centripetal transfer.
    pub b: Vector3<f64>,
}

impl RegressionBlock {
    pub fn predict(&self, s: &[f64]) -> Vector3<f64> {
        let mut out = self.b;
        for (k, sk) in s.iter().enumerate() {
            out += self.a.column(k) * *sk;
        }
        out
    }
}

/// Map a center-of-mass acceleration `(a_c, α)` to the origin, without the centripetal term.
#[inline]
fn transfer(lin: Vec2, ang: f64, c: &Vec2) -> Vector3<f64> {
    Vector3::new(lin.x - ang * c.y, lin.y + ang * c.x, ang)
}

/// Per-particle friction columns before folding into contact groups.
pub fn particle_block(
    state: &ObjectState,
    model: &ParticleModel,
    level: &ObjectLevel,
    config: &SimConfig,
) -> DMatrix<f64> {
    let kin = world_kinematics(model, state);
    let c = rotation(state.angle()) * level.com;
    let com = state.position() + c;
    let mut a = DMatrix::zeros(3, model.len());
    for (i, (p, v)) in kin.iter().enumerate() {
        if let Some(dir) = sliding_direction(v, config.velocity_epsilon) {
            let col = transfer(
                -dir / level.total_mass,
                -cross(&dir, &(p - com)) / level.inertia_cm,
                &c,
            ) * config.dt;
            a.set_column(i, &col);
        }
    }
    a
}

/// Regression block at one step, summed particle by particle.
pub fn regression_block(
    state: &ObjectState,
    input: &WrenchInput,
    model: &ParticleModel,
    maps: &GroupMaps,
    level: &ObjectLevel,
    config: &SimConfig,
) -> Result<RegressionBlock> {
    let p = input.particle;
    if p >= model.len() {
        return Err(Error::InvalidAction(format!(
            "grasp particle {p} out of range"
        )));
    }
    let a = particle_block(state, model, level, config) * maps.contact_matrix().transpose();
    let c = rotation(state.angle()) * level.com;
    let arm = rotation(state.angle()) * model.positions[p] - c;
    let force = input.force();
    let w2 = state.angular_velocity().powi(2);
    let b = (transfer(
        force / level.total_mass,
        (input.u.z + cross(&force, &arm)) / level.inertia_cm,
        &c,
    ) + Vector3::new(w2 * c.x, w2 * c.y, 0.0))
        * config.dt;
    Ok(RegressionBlock { a, b })
}

/// Same block from precomputed step features.
pub fn block_from_features(f: &StepFeatures, level: &ObjectLevel, dt: f64) -> RegressionBlock {
    let c = f.rotation * level.com;
    let n = f.n_contact();
    let mut a = DMatrix::zeros(3, n);
    for k in 0..n {
        let col = transfer(
            -f.v_sum[k] / level.total_mass,
            -(f.torque_sum[k] - cross(&f.v_sum[k], &c)) / level.inertia_cm,
            &c,
        ) * dt;
        a.set_column(k, &col);
    }
    let force = f.u.xy();
    let w2 = f.omega * f.omega;
    let b = (transfer(
        force / level.total_mass,
        (f.u.z + cross(&force, &(f.grasp_offset - c))) / level.inertia_cm,
        &c,
    ) + Vector3::new(w2 * c.x, w2 * c.y, 0.0))
        * dt;
    RegressionBlock { a, b }
}

/// One 3×n_s block of Q for an action, evaluated mid-trajectory.
///
/// Rows are the center-of-mass force rows scaled by `1/M` and the raw torque
/// row; the column rank does not depend on the inertia, which is not needed.
pub fn q_block(
    action: &ActionSpec,
    model: &ParticleModel,
    maps: &GroupMaps,
    total_mass: f64,
    com: &Vec2,
    config: &SimConfig,
) -> Result<DMatrix<f64>> {
    let traj = kinematic_trajectory(action, model, &Vector3::zeros(), config)?;
    let state = traj[traj.len() / 2];
    let f = StepFeatures::new(
        model,
        maps,
        &state,
        &WrenchInput::zero(action.grasp_particle),
        config,
    )?;
    let c = f.rotation * com;
    let n = f.n_contact();
    Ok(DMatrix::from_fn(3, n, |r, k| match r {
        0 => -f.v_sum[k].x / total_mass,
        1 => -f.v_sum[k].y / total_mass,
        _ => -(f.torque_sum[k] - cross(&f.v_sum[k], &c)),
    }))
}

/// Stack one block per action into Q (3k × n_s).
pub fn build_q(
    actions: &[ActionSpec],
    model: &ParticleModel,
    maps: &GroupMaps,
    total_mass: f64,
    com: &Vec2,
    config: &SimConfig,
) -> Result<DMatrix<f64>> {
    let blocks = actions
        .iter()
        .map(|a| q_block(a, model, maps, total_mass, com, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(stack(&blocks, maps.n_contact))
}

fn stack(blocks: &[DMatrix<f64>], n_s: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(3 * blocks.len(), n_s);
    for (i, b) in blocks.iter().enumerate() {
        q.view_mut((3 * i, 0), (3, n_s)).copy_from(b);
    }
    q
}

/// Column rank with singular values below `tol · σ_max` counted as zero.
pub fn rank_q(q: &DMatrix<f64>, tol: f64) -> usize {
    rank(q, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Actions added after the initial rotate sample before giving up.
    pub max_extra: usize,
    /// Relative sampling weight of rotate over slide actions.
    pub rotate_weight: f64,
    pub rank_tol: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            max_extra: 24,
            rotate_weight: 4.0,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

/// Rank-guided action selection.
///
/// Starts from `⌈n_s/3⌉` rotate actions, then adds one action at a time
/// (rotations favoured) until the stacked blocks reach rank `n_s`.
pub fn sample_actions<F>(
    set: &[ActionSpec],
    n_s: usize,
    seed: u64,
    config: &SamplingConfig,
    mut block_of: F,
) -> Result<Vec<ActionSpec>>
where
    F: FnMut(&ActionSpec) -> Result<DMatrix<f64>>,
{
    if set.is_empty() {
        return Err(Error::EmptyActionSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotates: Vec<usize> = (0..set.len()).filter(|&i| set[i].is_rotate()).collect();
    let mut chosen: Vec<usize> = rotates
        .choose_multiple(&mut rng, n_s.div_ceil(3))
        .copied()
        .collect();
    let mut blocks = chosen
        .iter()
        .map(|&i| block_of(&set[i]))
        .collect::<Result<Vec<_>>>()?;
    let current_rank = |blocks: &[DMatrix<f64>]| {
        if blocks.is_empty() {
            0
        } else {
            rank_q(&stack(blocks, n_s), config.rank_tol)
        }
    };
    let mut achieved = current_rank(&blocks);
    let mut extra = 0;
    while achieved < n_s {
        let remaining: Vec<usize> = (0..set.len()).filter(|i| !chosen.contains(i)).collect();
        if extra >= config.max_extra || remaining.is_empty() {
            return Err(Error::RankDeficient {
                achieved,
                required: n_s,
            });
        }
        let weights: Vec<f64> = remaining
            .iter()
            .map(|&i| {
                if set[i].is_rotate() {
                    config.rotate_weight
                } else {
                    1.0
                }
            })
            .collect();
        let pick = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .sample(&mut rng);
        let i = remaining[pick];
        blocks.push(block_of(&set[i])?);
        chosen.push(i);
        extra += 1;
        achieved = current_rank(&blocks);
    }
    Ok(chosen.into_iter().map(|i| set[i]).collect())
}
