//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; the page parses it with `JSON.parse`.

use massdist::actions::{build_q, rank_q, ActionSpec, DEFAULT_RANK_TOL, DEFAULT_SLIDE_SPEED};
use massdist::estimation::ObservationSource;
use massdist::harness::{nad, run_method, ExperimentConfig, Method, NoiseModel, SyntheticSource};
use massdist::object_model::{builtin_object, Object, CATALOG};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(js_err)
}

fn object(name: &str) -> Result<Object, JsError> {
    builtin_object(name).map_err(js_err)
}

#[derive(Serialize)]
struct ObjectView {
    name: String,
    spacing: f64,
    positions: Vec<[f64; 2]>,
    graspable: Vec<bool>,
    /// Ground-truth mass per particle.
    masses: Vec<f64>,
    mass_group: Vec<usize>,
    friction_group: Vec<Option<usize>>,
}

/// Names of the built-in objects.
#[wasm_bindgen]
pub fn catalog() -> Result<String, JsError> {
    to_json(&CATALOG)
}

/// Geometry and ground-truth parameters of a catalog object.
#[wasm_bindgen]
pub fn describe(name: &str) -> Result<String, JsError> {
    let obj = object(name)?;
    let view = ObjectView {
        name: obj.name.clone(),
        spacing: obj.model.spacing,
        positions: obj.model.positions.iter().map(|p| [p.x, p.y]).collect(),
        graspable: obj.model.graspable.clone(),
        masses: obj.params.particle_masses(&obj.maps),
        mass_group: obj.maps.mass.clone(),
        friction_group: obj.maps.friction.clone(),
    };
    to_json(&view)
}

#[derive(Serialize)]
struct SimulationView {
    dt: f64,
    /// `[x, y, theta]` per step.
    poses: Vec<[f64; 3]>,
    /// Observed `[fx, fy, tau]` per step.
    wrench: Vec<[f64; 3]>,
}

/// Executes one action on the synthetic robot.
///
/// `kind` is `rotate` (value: rate in deg/s) or `slide` (value: heading in deg).
#[wasm_bindgen]
pub fn simulate(
    name: &str,
    grasp: usize,
    kind: &str,
    value: f64,
    duration: f64,
    noise: &str,
    seed: u64,
) -> Result<String, JsError> {
    let obj = object(name)?;
    let action = match kind {
        "rotate" => ActionSpec::rotate(grasp, value.to_radians(), duration),
        "slide" => ActionSpec::slide(grasp, value.to_radians(), DEFAULT_SLIDE_SPEED, duration),
        other => return Err(JsError::new(&format!("unknown action kind `{other}`"))),
    };
    let noise = NoiseModel::preset(noise).map_err(js_err)?;
    let source = SyntheticSource::new(obj, noise, seed, Default::default()).map_err(js_err)?;
    let traj = source.observe(&action).map_err(js_err)?;
    let view = SimulationView {
        dt: traj.config.dt,
        poses: traj
            .states
            .iter()
            .map(|s| [s.pose.x, s.pose.y, s.pose.z])
            .collect(),
        wrench: traj.inputs.iter().map(|w| [w.u.x, w.u.y, w.u.z]).collect(),
    };
    to_json(&view)
}

#[derive(Serialize)]
struct EstimateView {
    method: String,
    /// Estimated mass per particle.
    masses: Vec<f64>,
    mus: Vec<f64>,
    nad: f64,
    iterations: usize,
    loss_trace: Vec<f64>,
    warnings: Vec<String>,
}

/// Runs one estimator (`pipeline`, `random`, `weighted` or `explicit`) end to end.
#[wasm_bindgen]
pub fn estimate(
    name: &str,
    method: &str,
    noise: &str,
    seed: u64,
    iters: usize,
) -> Result<String, JsError> {
    let obj = object(name)?;
    let method: Method = method.parse().map_err(js_err)?;
    let mut config = ExperimentConfig {
        noise: noise.to_string(),
        ..Default::default()
    };
    config.search.iters = iters;
    config.estimator.gd.max_iters = iters;
    let report = run_method(&obj, method, seed, &config).map_err(js_err)?;
    let view = EstimateView {
        method: method.name().to_string(),
        masses: massdist::object_model::ObjectParams {
            masses: report.masses.clone(),
            mus: report.mus.clone(),
        }
        .particle_masses(&obj.maps),
        nad: nad(&report.masses, &obj.params.masses, &obj.maps).map_err(js_err)?,
        mus: report.mus,
        iterations: report.iterations,
        loss_trace: report.loss_trace,
        warnings: report.warnings,
    };
    to_json(&view)
}

#[derive(Serialize)]
struct RankStep {
    label: String,
    rank: usize,
}

/// Rank of the stacked friction regressor as slides from each graspable
/// particle are added one at a time, with the object's true mass and com.
#[wasm_bindgen]
pub fn rank_profile(name: &str, heading_deg: f64) -> Result<String, JsError> {
    let obj = object(name)?;
    let sim = Default::default();
    let h = obj
        .hidden_states(massdist::object_model::DEFAULT_GRAVITY)
        .map_err(js_err)?;
    let mut actions = Vec::new();
    let mut steps = Vec::new();
    for p in obj.model.graspable_indices() {
        let a = ActionSpec::slide(p, heading_deg.to_radians(), DEFAULT_SLIDE_SPEED, 1.0);
        actions.push(a);
        let q =
            build_q(&actions, &obj.model, &obj.maps, h.total_mass, &h.com, &sim).map_err(js_err)?;
        steps.push(RankStep {
            label: a.label(),
            rank: rank_q(&q, DEFAULT_RANK_TOL),
        });
    }
    to_json(&serde_json::json!({ "n_contact": obj.maps.n_contact, "steps": steps }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_profile_saturates_at_contact_count() {
        let v: serde_json::Value =
            serde_json::from_str(&rank_profile("F1", 30.0).unwrap()).unwrap();
        let n = v["n_contact"].as_u64().unwrap();
        let last = v["steps"].as_array().unwrap().last().unwrap()["rank"]
            .as_u64()
            .unwrap();
        assert_eq!(last, n);
    }

    #[test]
    fn noiseless_pipeline_is_exact() {
        let v: serde_json::Value =
            serde_json::from_str(&estimate("L1", "pipeline", "none", 1, 500).unwrap()).unwrap();
        assert!(v["nad"].as_f64().unwrap() < 1e-9);
    }
}
