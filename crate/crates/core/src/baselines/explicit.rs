use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{BaselineResult, Bounds, JointLoss, SearchConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Plain,
    Momentum,
    Adam,
}

impl Optimizer {
    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Plain => "plain",
            Optimizer::Momentum => "momentum",
            Optimizer::Adam => "adam",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplicitConfig {
    pub optimizers: Vec<Optimizer>,
    /// Starting point `[m..., mu...]`; `None` uses uniform masses at the
    /// geometric mean of the mass bounds and the middle of the friction bounds.
    pub initial: Option<Vec<f64>>,
    pub momentum: f64,
    /// Adam step as a fraction of each bound width.
    pub adam_step: f64,
}

impl Default for ExplicitConfig {
    fn default() -> Self {
        Self {
            optimizers: vec![Optimizer::Plain, Optimizer::Momentum, Optimizer::Adam],
            initial: None,
            momentum: 0.9,
            adam_step: 0.01,
        }
    }
}

fn initial_point(loss: &JointLoss, config: &SearchConfig, explicit: &ExplicitConfig) -> Vec<f64> {
    if let Some(x) = &explicit.initial {
        return x.clone();
    }
    let maps = loss.maps();
    let (mlo, mhi) = config.mass_bounds;
    let (flo, fhi) = config.mu_bounds;
    std::iter::repeat_n((mlo * mhi).sqrt(), maps.n_mass)
        .chain(std::iter::repeat_n(0.5 * (flo + fhi), maps.n_friction))
        .collect()
}

fn run(
    loss: &JointLoss,
    bounds: &Bounds,
    start: &[f64],
    iters: usize,
    opt: Optimizer,
    explicit: &ExplicitConfig,
) -> Result<BaselineResult> {
    let n = start.len();
    let mut x = start.to_vec();
    bounds.clamp(&mut x);
    // fixed step from the initial Gauss-Newton curvature
    let curvature = loss.curvature(&x)? * 2.0;
    let lambda = curvature.symmetric_eigen().eigenvalues.max();
    let rate = if lambda > 0.0 { 1.0 / lambda } else { 1.0 };
    let mut velocity = DVector::zeros(n);
    let (mut m1, mut m2) = (DVector::zeros(n), DVector::zeros(n));
    let (b1, b2) = (0.9f64, 0.999f64);
    let (mut value, mut grad) = loss.loss_and_grad(&x)?;
    let (mut best, mut best_loss) = (x.clone(), value);
    let mut trace = Vec::with_capacity(iters);
    for it in 1..=iters {
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::GradientDivergence { iteration: it });
        }
        let step: DVector<f64> = match opt {
            Optimizer::Plain => &grad * rate,
            Optimizer::Momentum => {
                velocity = &velocity * explicit.momentum + &grad;
                &velocity * (rate * (1.0 - explicit.momentum))
            }
            Optimizer::Adam => {
                m1 = &m1 * b1 + &grad * (1.0 - b1);
                m2 = &m2 * b2 + grad.component_mul(&grad) * (1.0 - b2);
                let c1 = 1.0 - b1.powi(it as i32);
                let c2 = 1.0 - b2.powi(it as i32);
                DVector::from_fn(n, |k, _| {
                    explicit.adam_step * bounds.width(k) * (m1[k] / c1)
                        / ((m2[k] / c2).sqrt() + 1e-12)
                })
            }
        };
        for k in 0..n {
            x[k] -= step[k];
        }
        bounds.clamp(&mut x);
        (value, grad) = loss.loss_and_grad(&x)?;
        if value < best_loss {
            best_loss = value;
            best = x.clone();
        }
        trace.push(best_loss);
    }
    Ok(BaselineResult {
        theta: best,
        loss: best_loss,
        trace,
        evaluations: iters + 1,
        variant: Some(opt.name().into()),
    })
}

/// Projected gradient descent on `(m, μ)` with several optimizers; the run
/// with the lowest loss is returned.
pub fn explicit_state_gd(
    loss: &JointLoss,
    config: &SearchConfig,
    explicit: &ExplicitConfig,
) -> Result<BaselineResult> {
    config.validate()?;
    if explicit.optimizers.is_empty() {
        return Err(Error::InvalidConfig("no optimizer selected".into()));
    }
    let bounds = config.bounds(loss.maps().n_mass, loss.maps().n_friction);
    let start = initial_point(loss, config, explicit);
    if start.len() != bounds.dim() {
        return Err(Error::InvalidConfig(format!(
            "initial point has {} entries, expected {}",
            start.len(),
            bounds.dim()
        )));
    }
    let mut best: Option<BaselineResult> = None;
    for opt in &explicit.optimizers {
        let r = run(loss, &bounds, &start, config.iters, *opt, explicit)?;
        if best.as_ref().is_none_or(|b| r.loss < b.loss) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one optimizer ran"))
}
