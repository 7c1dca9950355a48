use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{eval_batch, BaselineResult, Bounds, SearchConfig};
use crate::error::Result;

fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v < values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Uniform samples inside the bounds; keeps the best.
pub fn random_search<F>(loss: F, bounds: &Bounds, config: &SearchConfig) -> Result<BaselineResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let points: Vec<Vec<f64>> = (0..config.iters)
        .map(|_| {
            (0..bounds.dim())
                .map(|k| bounds.lower[k] + rng.random::<f64>() * bounds.width(k))
                .collect()
        })
        .collect();
    let values = eval_batch(&points, &loss);
    let mut trace = Vec::with_capacity(values.len());
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
        trace.push(values[best]);
    }
    Ok(BaselineResult {
        theta: points[best].clone(),
        loss: values[best],
        trace,
        evaluations: points.len(),
        variant: None,
    })
}

/// Cell-centred grid with about `n` points.
fn grid(bounds: &Bounds, n: usize) -> Vec<Vec<f64>> {
    let d = bounds.dim();
    let mut per_dim = 2usize;
    while (per_dim + 1).pow(d as u32) <= n {
        per_dim += 1;
    }
    let total = per_dim.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|k| {
                    let i = idx % per_dim;
                    idx /= per_dim;
                    bounds.lower[k] + (i as f64 + 0.5) / per_dim as f64 * bounds.width(k)
                })
                .collect()
        })
        .collect()
}

/// Grid start, then Gaussian resampling around the incumbent with shrinking σ.
pub fn weighted_sampling_search<F>(
    loss: F,
    bounds: &Bounds,
    config: &SearchConfig,
) -> Result<BaselineResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let start = grid(
        bounds,
        config.grid_points.unwrap_or(config.iters.div_ceil(10)),
    );
    let values = eval_batch(&start, &loss);
    let mut evaluations = start.len();
    let i = argmin(&values).expect("grid is never empty");
    let (mut best, mut best_loss) = (start[i].clone(), values[i]);
    let mut trace = vec![best_loss];
    let mut sigma: Vec<f64> = (0..bounds.dim())
        .map(|k| config.initial_sigma * bounds.width(k))
        .collect();
    for _ in 1..config.iters {
        let population: Vec<Vec<f64>> = (0..config.population)
            .map(|_| {
                let mut x: Vec<f64> = best
                    .iter()
                    .zip(&sigma)
                    .map(|(c, s)| c + s * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                bounds.clamp(&mut x);
                x
            })
            .collect();
        let values = eval_batch(&population, &loss);
        evaluations += population.len();
        if let Some(i) = argmin(&values) {
            if values[i] < best_loss {
                best_loss = values[i];
                best = population[i].clone();
            }
        }
        trace.push(best_loss);
        sigma.iter_mut().for_each(|s| *s *= config.gaussian_decay);
    }
    Ok(BaselineResult {
        theta: best,
        loss: best_loss,
        trace,
        evaluations,
        variant: None,
    })
}
