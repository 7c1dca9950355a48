//! Multi-stage estimation: pivot inertias, then center of mass and central
//! inertia, then friction magnitudes, then per-group masses.

mod friction;
mod inertia;
mod masses;

pub use friction::{
    estimate_s_gd, estimate_s_lsq, loss_and_grad, FrictionData, GdConfig, GdEstimate, LsqEstimate,
    Preconditioner,
};
pub use inertia::{
    fit_pivot_inertia, solve_com_inertia, ComInertiaFit, PivotInertiaSample, PivotSweep,
};
pub use masses::{recover_m, MassRecovery};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::actions::{
    enumerate_actions, q_block, sample_actions, ActionSpec, SamplingConfig, DEFAULT_RANK_TOL,
    DEFAULT_SLIDE_DIRECTIONS,
};
use crate::dynamics::{SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::linalg::rank;
use crate::object_model::{GroupMaps, HiddenStates, ObjectLevel, ParticleModel};

/// What the estimator can ask of the robot and its sensors.
pub trait ObservationSource {
    fn sim_config(&self) -> SimConfig;
    /// Total mass from a scale (kg).
    fn weigh(&self) -> Result<f64>;
    /// Execute `action`; returns the observed states and the filtered wrench readings.
    fn observe(&self, action: &ActionSpec) -> Result<Trajectory>;
    /// Hold particle `pivot` and apply a constant torque meant to produce
    /// angular acceleration `target_accel`; returns the recorded sweep.
    fn pivot_sweep(&self, pivot: usize, target_accel: f64) -> Result<PivotSweep>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub gd: GdConfig,
    pub rank_tol: f64,
    /// Number of pivots used for the inertia stage.
    pub k_inertia: usize,
    /// Distinct torques applied per pivot.
    pub torque_levels: usize,
    /// Center of the requested pivot accelerations (rad/s²); levels span ±50 %.
    pub nominal_pivot_accel: f64,
    pub slide_directions: usize,
    pub sampling: SamplingConfig,
    /// Particles whose actions are kept out of training (held out for evaluation).
    pub reserved_pivots: Vec<usize>,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            gd: GdConfig::default(),
            rank_tol: DEFAULT_RANK_TOL,
            k_inertia: 4,
            torque_levels: 3,
            nominal_pivot_accel: 0.5,
            slide_directions: DEFAULT_SLIDE_DIRECTIONS,
            sampling: SamplingConfig::default(),
            reserved_pivots: Vec::new(),
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.k_inertia < 3 {
            return bad("k_inertia must be at least 3");
        }
        if self.torque_levels < 2 {
            return bad("torque_levels must be at least 2");
        }
        if self.gd.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if matches!(self.gd.learning_rate, Some(r) if !(r > 0.0)) {
            return bad("learning rate must be positive");
        }
        if !(self.nominal_pivot_accel > 0.0) {
            return bad("nominal pivot acceleration must be positive");
        }
        Ok(())
    }

    /// Requested angular accelerations for each pivot sweep.
    pub fn pivot_targets(&self) -> Vec<f64> {
        let n = self.torque_levels.max(2);
        (0..n)
            .map(|i| self.nominal_pivot_accel * (0.5 + i as f64 / (n - 1) as f64))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingActions {
    /// Pivots held for the inertia sweeps.
    pub inertia_pivots: Vec<usize>,
    /// Actions whose trajectories feed the friction stage.
    pub friction: Vec<ActionSpec>,
}

impl TrainingActions {
    /// Every particle used as a grasp or pivot during training.
    pub fn used_particles(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .inertia_pivots
            .iter()
            .copied()
            .chain(self.friction.iter().map(|a| a.grasp_particle))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageResiduals {
    pub pivot_fits: Vec<PivotInertiaSample>,
    pub com_inertia: Option<f64>,
    pub friction_loss: Option<f64>,
    pub mass: Option<f64>,
    pub mass_condition_number: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub method: String,
    pub object: String,
    pub seed: u64,
    pub noise: String,
    pub hidden_states: HiddenStates,
    /// Per mass group (kg).
    pub masses: Vec<f64>,
    /// Per friction group.
    pub mus: Vec<f64>,
    pub residuals: StageResiduals,
    pub actions: TrainingActions,
    pub loss_trace: Vec<f64>,
    pub s_closed_form: Option<Vec<f64>>,
    pub learning_rate: Option<f64>,
    pub step_halvings: Option<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
    /// Optimizer or sampler variant behind the result.
    #[serde(default)]
    pub variant: Option<String>,
    /// Actions kept out of training for evaluation.
    #[serde(default)]
    pub held_out: Vec<ActionSpec>,
}

impl EstimationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Friction coefficients implied by `s` and the group masses, averaged over
/// contact groups of each material.
pub fn mus_from_s(s: &[f64], masses: &[f64], maps: &GroupMaps, gravity: f64) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; maps.n_friction];
    let mut count = vec![0usize; maps.n_friction];
    for (k, sk) in s.iter().enumerate() {
        let m = masses[maps.contact_mass_group(k)?];
        if m > 0.0 && gravity > 0.0 {
            let f = maps.contact_friction_group(k)?;
            sum[f] += sk / (m * gravity);
            count[f] += 1;
        }
    }
    Ok(sum
        .iter()
        .zip(&count)
        .map(|(s, c)| if *c > 0 { s / *c as f64 } else { 0.0 })
        .collect())
}

/// Candidate actions with reserved particles removed.
pub fn candidate_actions(
    model: &ParticleModel,
    config: &EstimatorConfig,
) -> Result<Vec<ActionSpec>> {
    let set: Vec<ActionSpec> = enumerate_actions(model, config.slide_directions)?
        .into_iter()
        .filter(|a| !config.reserved_pivots.contains(&a.grasp_particle))
        .collect();
    if set.is_empty() {
        return Err(Error::EmptyActionSet);
    }
    Ok(set)
}

fn collinear(model: &ParticleModel, pivots: &[usize]) -> bool {
    let g = DMatrix::from_fn(pivots.len(), 3, |r, k| match k {
        0 => 1.0,
        1 => model.positions[pivots[r]].x,
        _ => model.positions[pivots[r]].y,
    });
    rank(&g, 1e-9) < 3
}

/// Draw `k` distinct, non-collinear pivots among the rotate actions.
pub fn sample_inertia_pivots(
    actions: &[ActionSpec],
    model: &ParticleModel,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let mut pivots: Vec<usize> = actions
        .iter()
        .filter(|a| a.is_rotate())
        .map(|a| a.grasp_particle)
        .collect();
    pivots.sort_unstable();
    pivots.dedup();
    if pivots.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} distinct rotate pivots available, need 3",
            pivots.len()
        )));
    }
    let k = k.min(pivots.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        pivots.shuffle(&mut rng);
        let pick = &pivots[..k];
        if !collinear(model, pick) {
            return Ok(pick.to_vec());
        }
    }
    Err(Error::DegenerateGeometry(
        "every sampled pivot set is collinear".into(),
    ))
}

/// Rank-guided friction actions using the current estimates of `M` and `c`.
pub fn sample_friction_actions(
    actions: &[ActionSpec],
    model: &ParticleModel,
    maps: &GroupMaps,
    total_mass: f64,
    com: &Vec2,
    sim: &SimConfig,
    config: &EstimatorConfig,
) -> Result<Vec<ActionSpec>> {
    let sampling = SamplingConfig {
        rank_tol: config.rank_tol,
        ..config.sampling
    };
    sample_actions(
        actions,
        maps.n_contact,
        config.seed ^ 0x5eed,
        &sampling,
        |a| q_block(a, model, maps, total_mass, com, sim),
    )
}

/// Run every estimation stage against `source`.
pub fn run_pipeline<S: ObservationSource + ?Sized>(
    model: &ParticleModel,
    maps: &GroupMaps,
    source: &S,
    config: &EstimatorConfig,
) -> Result<EstimationReport> {
    config.validate()?;
    maps.validate(model)?;
    let sim = source.sim_config();
    let tag = |stage: &'static str, line: u32| move |e: Error| e.at_stage(stage, line);

    // uniform masses and no friction until estimated
    let total_mass = source.weigh().map_err(tag("weigh", 1))?;
    if !(total_mass > 0.0) {
        return Err(Error::InvalidConfig(format!("weighed mass {total_mass}")).at_stage("weigh", 1));
    }
    let mut warnings = Vec::new();

    let set = candidate_actions(model, config).map_err(tag("action_set", 2))?;
    let pivots = sample_inertia_pivots(&set, model, config.k_inertia, config.seed)
        .map_err(tag("inertia_actions", 3))?;

    let mut pivot_fits = Vec::with_capacity(pivots.len());
    for &j in &pivots {
        let samples = config
            .pivot_targets()
            .into_iter()
            .map(|target| {
                source
                    .pivot_sweep(j, target)?
                    .torque_and_accel()
                    .map(|(u, a, _)| (u, a))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(tag("pivot_sweeps", 6))?;
        pivot_fits.push(
            fit_pivot_inertia(j, model.positions[j], &samples).map_err(tag("pivot_inertia", 7))?,
        );
    }
    let com_fit = solve_com_inertia(&pivot_fits, total_mass).map_err(tag("com_inertia", 8))?;
    let level = ObjectLevel {
        total_mass,
        inertia_cm: com_fit.inertia_cm,
        com: com_fit.com,
    };

    let friction_actions =
        sample_friction_actions(&set, model, maps, total_mass, &level.com, &sim, config)
            .map_err(tag("friction_actions", 9))?;
    let observed = friction_actions
        .iter()
        .map(|a| source.observe(a))
        .collect::<Result<Vec<_>>>()
        .map_err(tag("friction_observations", 17))?;
    let data = FrictionData::from_trajectories(&observed, model, maps, &level)
        .map_err(tag("friction_observations", 17))?;
    let closed_form = match estimate_s_lsq(&data, config.rank_tol) {
        Ok(est) => {
            warnings.extend(est.warnings.iter().cloned());
            Some(est.s)
        }
        Err(e) => {
            warnings.push(format!("closed-form friction estimate unavailable: {e}"));
            None
        }
    };
    let gd = estimate_s_gd(&vec![0.0; maps.n_contact], &data, &config.gd)
        .map_err(tag("friction_descent", 18))?;
    if !gd.converged {
        warnings.push(format!(
            "gradient descent stopped after {} iterations without meeting the tolerance",
            gd.iterations
        ));
    }
    let mut s = gd.s.clone();
    for (k, v) in s.iter_mut().enumerate() {
        if *v < 0.0 {
            warnings.push(format!(
                "friction group {k} descended to {v:.3e} N; clamped to 0"
            ));
            *v = 0.0;
        }
    }
    let hidden = level.with_s(s);

    let recovery = recover_m(&hidden, model, maps).map_err(tag("masses", 21))?;
    if !recovery.clamped.is_empty() {
        warnings.push(format!(
            "mass groups {:?} clamped to zero",
            recovery.clamped
        ));
    }
    let mus =
        mus_from_s(&hidden.s, &recovery.masses, maps, sim.gravity).map_err(tag("masses", 21))?;

    Ok(EstimationReport {
        method: "pipeline".into(),
        object: String::new(),
        seed: config.seed,
        noise: String::new(),
        masses: recovery.masses.clone(),
        mus,
        residuals: StageResiduals {
            pivot_fits,
            com_inertia: Some(com_fit.residual),
            friction_loss: gd.trace.last().copied(),
            mass: Some(recovery.residual),
            mass_condition_number: Some(recovery.condition_number),
        },
        actions: TrainingActions {
            inertia_pivots: pivots,
            friction: friction_actions,
        },
        hidden_states: hidden,
        loss_trace: gd.trace,
        s_closed_form: closed_form,
        learning_rate: Some(gd.learning_rate),
        step_halvings: Some(gd.halvings),
        iterations: gd.iterations,
        converged: gd.converged,
        warnings,
        variant: None,
        held_out: Vec::new(),
    })
}
