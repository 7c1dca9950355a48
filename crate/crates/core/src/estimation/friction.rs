//! Friction magnitudes `s` from observed velocity changes, with the
//! object-level Hidden States held fixed.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::actions::{block_from_features, RegressionBlock};
use crate::dynamics::{StepFeatures, Trajectory};
use crate::error::{Error, Result};
use crate::object_model::{GroupMaps, ObjectLevel, ParticleModel};

/// Stacked regression blocks and the matching observed velocity changes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrictionData {
    pub blocks: Vec<RegressionBlock>,
    /// `v_{t+1} − v_t` per step.
    pub deltas: Vec<Vector3<f64>>,
}

impl FrictionData {
    pub fn from_trajectories(
        trajectories: &[Trajectory],
        model: &ParticleModel,
        maps: &GroupMaps,
        level: &ObjectLevel,
    ) -> Result<Self> {
        let mut data = Self::default();
        for traj in trajectories {
            traj.validate()?;
            for (t, input) in traj.inputs.iter().enumerate() {
                let f = StepFeatures::new(model, maps, &traj.states[t], input, &traj.config)?;
                data.blocks
                    .push(block_from_features(&f, level, traj.config.dt));
                data.deltas
                    .push(traj.states[t + 1].velocity - traj.states[t].velocity);
            }
        }
        Ok(data)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    fn n_s(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.a.ncols())
    }

    /// Normal equations: `Σ AᵀA` and `Σ Aᵀ(Δv − B)`.
    fn normal_equations(&self, n_s: usize) -> (DMatrix<f64>, DVector<f64>) {
        let mut h = DMatrix::zeros(n_s, n_s);
        let mut g = DVector::zeros(n_s);
        for (blk, dv) in self.blocks.iter().zip(&self.deltas) {
            h += blk.a.transpose() * &blk.a;
            g += blk.a.transpose() * (dv - blk.b);
        }
        (h, g)
    }
}

/// `L(s) = Σ ‖A s + B + v_t − v_{t+1}‖²` and its exact gradient `2 Σ Aᵀ r`.
pub fn loss_and_grad(s: &[f64], data: &FrictionData) -> (f64, DVector<f64>) {
    let mut loss = 0.0;
    let mut grad = DVector::zeros(s.len());
    for (blk, dv) in data.blocks.iter().zip(&data.deltas) {
        let r = blk.predict(s) - dv;
        loss += r.norm_squared();
        grad += blk.a.transpose() * r * 2.0;
    }
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsqEstimate {
    pub s: Vec<f64>,
    pub loss: f64,
    pub warnings: Vec<String>,
}

/// Closed-form minimizer of the friction loss.
pub fn estimate_s_lsq(data: &FrictionData, rank_tol: f64) -> Result<LsqEstimate> {
    let n_s = data.n_s();
    if data.is_empty() || n_s == 0 {
        return Err(Error::InsufficientData("no friction observations".into()));
    }
    let (h, g) = data.normal_equations(n_s);
    // Singular values of the stack are square roots of the normal-matrix eigenvalues.
    let eig = h.clone().symmetric_eigen().eigenvalues;
    let max = eig.max().max(0.0);
    let achieved = eig
        .iter()
        .filter(|l| l.max(0.0).sqrt() > rank_tol * max.sqrt())
        .count();
    if achieved < n_s || max == 0.0 {
        return Err(Error::RankDeficient {
            achieved,
            required: n_s,
        });
    }
    let chol = h.cholesky().ok_or(Error::RankDeficient {
        achieved: n_s - 1,
        required: n_s,
    })?;
    let mut s: Vec<f64> = chol.solve(&g).iter().copied().collect();
    let scale = s.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let mut warnings = Vec::new();
    for (k, v) in s.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v >= -1e-9 * scale {
                *v = 0.0;
            } else {
                warnings.push(format!(
                    "friction group {k} estimated negative ({v:.3e} N); model mismatch"
                ));
            }
        }
    }
    let (loss, _) = loss_and_grad(&s, data);
    Ok(LsqEstimate { s, loss, warnings })
}

/// Metric in which the descent steps are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    /// Plain gradient steps.
    Identity,
    /// Each coordinate scaled by the inverse of its Hessian diagonal.
    Diagonal,
    /// Steps scaled by the inverse normal matrix (Gauss-Newton metric).
    GaussNewton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    /// Step size; `None` picks `1/λ_max` of the preconditioned Hessian.
    pub learning_rate: Option<f64>,
    pub max_iters: usize,
    /// Stop once an update moves `s` by less than this (N).
    pub convergence_tol: f64,
    pub preconditioner: Preconditioner,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            learning_rate: None,
            max_iters: 500,
            convergence_tol: 1e-10,
            preconditioner: Preconditioner::GaussNewton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdEstimate {
    pub s: Vec<f64>,
    /// Loss before the first update and after each update.
    pub trace: Vec<f64>,
    pub learning_rate: f64,
    /// Times the requested step size was halved to stay below `2/λ_max`.
    pub halvings: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Gradient descent on the friction loss.
pub fn estimate_s_gd(
    initial: &[f64],
    data: &FrictionData,
    config: &GdConfig,
) -> Result<GdEstimate> {
    let n_s = initial.len();
    if config.max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
    }
    if data.n_s() != n_s && !data.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "initial s has {n_s} entries, data has {}",
            data.n_s()
        )));
    }
    let (h, _) = data.normal_equations(n_s);
    let precond = preconditioner(&h, config.preconditioner);
    // Eigenvalues of P·∇²L, through the congruent symmetric form Lᵀ ∇²L L with P = L Lᵀ.
    let factor = precond
        .clone()
        .cholesky()
        .map(|c| c.l())
        .unwrap_or_else(|| DMatrix::identity(n_s, n_s));
    let lambda_max = (factor.transpose() * &h * &factor * 2.0)
        .symmetric_eigen()
        .eigenvalues
        .max()
        .max(0.0);
    let limit = if lambda_max > 0.0 {
        2.0 / lambda_max
    } else {
        f64::INFINITY
    };
    let mut rate = match config.learning_rate {
        Some(r) if !(r > 0.0) => {
            return Err(Error::InvalidConfig(format!(
                "learning rate {r} must be positive"
            )))
        }
        Some(r) => r,
        None if lambda_max > 0.0 => 1.0 / lambda_max,
        None => 1.0,
    };
    let mut halvings = 0;
    while rate >= limit {
        rate *= 0.5;
        halvings += 1;
    }
    let mut s = initial.to_vec();
    let (mut loss, mut grad) = loss_and_grad(&s, data);
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let step = &precond * &grad * rate;
        for (sk, dk) in s.iter_mut().zip(step.iter()) {
            *sk -= dk;
        }
        let step_sq = step.norm_squared();
        (loss, grad) = loss_and_grad(&s, data);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::GradientDivergence {
                iteration: iterations,
            });
        }
        trace.push(loss);
        if step_sq.sqrt() < config.convergence_tol {
            converged = true;
            break;
        }
    }
    Ok(GdEstimate {
        s,
        trace,
        learning_rate: rate,
        halvings,
        iterations,
        converged,
    })
}

fn preconditioner(h: &DMatrix<f64>, kind: Preconditioner) -> DMatrix<f64> {
    let n = h.nrows();
    let diagonal = || {
        DMatrix::from_fn(n, n, |r, c| {
            if r == c && h[(r, r)] > 0.0 {
                1.0 / h[(r, r)]
            } else if r == c {
                1.0
            } else {
                0.0
            }
        })
    };
    match kind {
        Preconditioner::Identity => DMatrix::identity(n, n),
        Preconditioner::Diagonal => diagonal(),
        Preconditioner::GaussNewton => h
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .unwrap_or_else(diagonal),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(rng: &mut ChaCha8Rng, n: usize, n_s: usize) -> FrictionData {
        let mut data = FrictionData::default();
        for _ in 0..n {
            data.blocks.push(RegressionBlock {
                a: DMatrix::from_fn(3, n_s, |_, _| rng.random_range(-1.0..1.0)),
                b: Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
            });
            data.deltas
                .push(Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
        }
        data
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_data(&mut rng, 7, 3);
        let s = [0.3, -0.2, 1.1];
        let (_, g) = loss_and_grad(&s, &data);
        let h = 1e-6;
        for k in 0..3 {
            let mut p = s;
            p[k] += h;
            let mut m = s;
            m[k] -= h;
            let fd = (loss_and_grad(&p, &data).0 - loss_and_grad(&m, &data).0) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0));
        }
    }

    #[test]
    fn empty_data_zero_loss() {
        let (l, g) = loss_and_grad(&[0.5, 0.5], &FrictionData::default());
        assert_eq!(l, 0.0);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn lsq_is_stationary_and_gd_stops_there() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = random_data(&mut rng, 20, 3);
        // make the optimum non-negative: shift deltas so s* = (1, 2, 3)
        let truth = [1.0, 2.0, 3.0];
        let data = FrictionData {
            deltas: data.blocks.iter().map(|b| b.predict(&truth)).collect(),
            blocks: data.blocks,
        };
        let est = estimate_s_lsq(&data, 1e-8).unwrap();
        for (a, b) in est.s.iter().zip(truth) {
            assert!((a - b).abs() < 1e-10);
        }
        let (_, g) = loss_and_grad(&est.s, &data);
        assert!(g.norm() < 1e-10);
        let gd = estimate_s_gd(&est.s, &data, &GdConfig::default()).unwrap();
        assert_eq!(gd.iterations, 1);
        assert!(gd.converged);
    }

    #[test]
    fn oversized_rate_is_halved_and_trace_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = random_data(&mut rng, 10, 2);
        let cfg = GdConfig {
            learning_rate: Some(1e3),
            max_iters: 50,
            preconditioner: Preconditioner::Identity,
            ..GdConfig::default()
        };
        let gd = estimate_s_gd(&[0.0, 0.0], &data, &cfg).unwrap();
        assert!(gd.halvings > 0);
        for w in gd.trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn every_metric_descends_to_the_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = random_data(&mut rng, 30, 3);
        let best = estimate_s_lsq(&data, 1e-8);
        // unconstrained optimum (may be negative for random data)
        let (h, g) = data.normal_equations(3);
        let opt = h.cholesky().unwrap().solve(&g);
        drop(best);
        for p in [
            Preconditioner::Identity,
            Preconditioner::Diagonal,
            Preconditioner::GaussNewton,
        ] {
            let cfg = GdConfig {
                preconditioner: p,
                max_iters: 5000,
                convergence_tol: 1e-13,
                ..GdConfig::default()
            };
            let gd = estimate_s_gd(&[0.0; 3], &data, &cfg).unwrap();
            assert!(gd.converged, "{p:?}");
            for (a, b) in gd.s.iter().zip(opt.iter()) {
                assert!((a - b).abs() < 1e-9, "{p:?}: {a} vs {b}");
            }
            for w in gd.trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
            if p == Preconditioner::GaussNewton {
                assert!(gd.iterations <= 2);
            }
        }
    }

    #[test]
    fn rank_deficient_stack() {
        let mut data = FrictionData::default();
        for _ in 0..5 {
            data.blocks.push(RegressionBlock {
                a: DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.5, 1.0, 0.0, 0.0]),
                b: Vector3::zeros(),
            });
            data.deltas.push(Vector3::zeros());
        }
        assert!(matches!(
            estimate_s_lsq(&data, 1e-8),
            Err(Error::RankDeficient {
                achieved: 1,
                required: 2
            })
        ));
    }
}
