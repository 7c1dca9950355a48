//! Comparison methods that search the joint (mass, friction) space directly
//! on the one-step velocity prediction loss.

mod explicit;
mod search;

pub use explicit::{explicit_state_gd, ExplicitConfig, Optimizer};
pub use search::{random_search, weighted_sampling_search};

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{StepFeatures, Trajectory};
use crate::error::{Error, Result};
use crate::object_model::{
    hidden_jacobian, hidden_states_of, GroupMaps, ObjectParams, ParticleModel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Per mass group (kg).
    pub mass_bounds: (f64, f64),
    /// Per friction group.
    pub mu_bounds: (f64, f64),
    pub iters: usize,
    pub seed: u64,
    /// Multiplicative σ decay per weighted-sampling iteration.
    pub gaussian_decay: f64,
    /// Samples drawn per weighted-sampling iteration.
    pub population: usize,
    /// Grid points for the weighted-sampling start; `None` uses `⌈iters/10⌉`.
    pub grid_points: Option<usize>,
    /// Initial σ as a fraction of each bound width.
    pub initial_sigma: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            mass_bounds: (0.01, 5.0),
            mu_bounds: (0.0, 1.0),
            iters: 500,
            seed: 0,
            gaussian_decay: 0.99,
            population: 8,
            grid_points: None,
            initial_sigma: 0.25,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = |(lo, hi): (f64, f64)| lo >= 0.0 && hi > lo && hi.is_finite();
        if !ordered(self.mass_bounds) || self.mass_bounds.0 <= 0.0 || !ordered(self.mu_bounds) {
            return Err(Error::InvalidConfig(format!(
                "bounds must be ordered and non-negative (masses positive): {:?} {:?}",
                self.mass_bounds, self.mu_bounds
            )));
        }
        if !(self.gaussian_decay > 0.0 && self.gaussian_decay <= 1.0) {
            return Err(Error::InvalidConfig(
                "gaussian_decay must lie in (0, 1]".into(),
            ));
        }
        if self.iters == 0 || self.population == 0 {
            return Err(Error::InvalidConfig(
                "iters and population must be positive".into(),
            ));
        }
        if !(self.initial_sigma > 0.0) {
            return Err(Error::InvalidConfig(
                "initial_sigma must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn bounds(&self, n_mass: usize, n_friction: usize) -> Bounds {
        let (lower, upper) = std::iter::repeat_n(self.mass_bounds, n_mass)
            .chain(std::iter::repeat_n(self.mu_bounds, n_friction))
            .unzip();
        Bounds { lower, upper }
    }
}

/// Box constraints on `[m..., mu...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[k], self.upper[k]);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(k, v)| *v >= self.lower[k] && *v <= self.upper[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    /// `[m..., mu...]`.
    pub theta: Vec<f64>,
    pub loss: f64,
    /// Incumbent loss after each iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    /// Variant that produced the result, when several were tried.
    pub variant: Option<String>,
}

/// One-step velocity prediction loss over observed trajectories, as a
/// function of group masses and friction coefficients.
#[derive(Debug, Clone)]
pub struct JointLoss {
    model: ParticleModel,
    maps: GroupMaps,
    gravity: f64,
    steps: Vec<(StepFeatures, f64, Vector3<f64>)>,
}

impl JointLoss {
    pub fn new(
        trajectories: &[Trajectory],
        model: &ParticleModel,
        maps: &GroupMaps,
    ) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::InsufficientData("no trajectories".into()));
        }
        maps.validate(model)?;
        let mut steps = Vec::new();
        for traj in trajectories {
            traj.validate()?;
            for (t, input) in traj.inputs.iter().enumerate() {
                let f = StepFeatures::new(model, maps, &traj.states[t], input, &traj.config)?;
                let dv = traj.states[t + 1].velocity - traj.states[t].velocity;
                steps.push((f, traj.config.dt, dv));
            }
        }
        Ok(Self {
            model: model.clone(),
            maps: maps.clone(),
            gravity: trajectories[0].config.gravity,
            steps,
        })
    }

    pub fn dim(&self) -> usize {
        self.maps.n_mass + self.maps.n_friction
    }

    pub fn maps(&self) -> &GroupMaps {
        &self.maps
    }

    pub fn params(&self, theta: &[f64]) -> ObjectParams {
        ObjectParams::from_slice(theta, self.maps.n_mass)
    }

    pub fn loss(&self, theta: &[f64]) -> Result<f64> {
        let h = hidden_states_of(&self.model, &self.maps, &self.params(theta), self.gravity)?;
        let mut total = 0.0;
        for (f, dt, dv) in &self.steps {
            total += (f.accel(&h)? * *dt - dv).norm_squared();
        }
        Ok(total)
    }

    /// Loss and its exact gradient through the Hidden States.
    pub fn loss_and_grad(&self, theta: &[f64]) -> Result<(f64, DVector<f64>)> {
        let params = self.params(theta);
        let h = hidden_states_of(&self.model, &self.maps, &params, self.gravity)?;
        let dh = hidden_jacobian(&self.model, &self.maps, &params, self.gravity)?;
        let mut total = 0.0;
        let mut g_hidden = DVector::zeros(dh.nrows());
        for (f, dt, dv) in &self.steps {
            let (acc, jac) = f.accel_jacobian(&h)?;
            let r = acc * *dt - dv;
            total += r.norm_squared();
            g_hidden += jac.transpose() * r * (2.0 * dt);
        }
        Ok((total, dh.transpose() * g_hidden))
    }

    /// Gauss-Newton curvature `Σ JᵀJ` of the residuals at `theta`.
    pub(crate) fn curvature(&self, theta: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let params = self.params(theta);
        let h = hidden_states_of(&self.model, &self.maps, &params, self.gravity)?;
        let dh = hidden_jacobian(&self.model, &self.maps, &params, self.gravity)?;
        let mut acc_jtj = nalgebra::DMatrix::zeros(dh.nrows(), dh.nrows());
        for (f, dt, _) in &self.steps {
            let (_, jac) = f.accel_jacobian(&h)?;
            acc_jtj += jac.transpose() * &jac * (dt * dt);
        }
        Ok(dh.transpose() * acc_jtj * dh)
    }
}

/// Evaluate a batch of candidates, in parallel when available; output order matches input.
pub(crate) fn eval_batch<F>(points: &[Vec<f64>], loss: &F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        points.par_iter().map(|p| loss(p)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        points.iter().map(|p| loss(p)).collect()
    }
}
