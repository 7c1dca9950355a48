use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mpd, nad, NoiseModel, SyntheticSource};
use crate::actions::{ActionSpec, DEFAULT_ROTATE_DURATION, DEFAULT_ROTATE_RATE};
use crate::baselines::{
    explicit_state_gd, random_search, weighted_sampling_search, BaselineResult, ExplicitConfig,
    JointLoss, SearchConfig,
};
use crate::dynamics::{simulate, step_amplification, SimConfig, Trajectory};
use crate::error::{Error, Result};
use crate::estimation::{
    candidate_actions, run_pipeline, sample_friction_actions, sample_inertia_pivots,
    EstimationReport, EstimatorConfig, ObservationSource, StageResiduals, TrainingActions,
};
use crate::linalg::rank;
use crate::object_model::{hidden_states_of, Object, ObjectDescriptor, ObjectParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pipeline,
    Random,
    Weighted,
    Explicit,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Pipeline,
        Method::Random,
        Method::Weighted,
        Method::Explicit,
    ];
    pub const BASELINES: [Method; 3] = [Method::Random, Method::Weighted, Method::Explicit];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Pipeline => "pipeline",
            Method::Random => "random",
            Method::Weighted => "weighted",
            Method::Explicit => "explicit",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Noise preset name (`none` or `bench`).
    pub noise: String,
    pub sim: SimConfig,
    pub estimator: EstimatorConfig,
    pub search: SearchConfig,
    pub explicit: ExplicitConfig,
    /// Pivots whose rotate actions are reserved for held-out evaluation.
    pub held_out_pivots: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            noise: "none".into(),
            sim: SimConfig::default(),
            estimator: EstimatorConfig::default(),
            search: SearchConfig::default(),
            explicit: ExplicitConfig::default(),
            held_out_pivots: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn noise_model(&self) -> Result<NoiseModel> {
        NoiseModel::preset(&self.noise)
    }

    pub fn validate(&self) -> Result<()> {
        self.noise_model()?;
        self.sim.validate()?;
        self.estimator.validate()?;
        self.search.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub object: String,
    pub method: String,
    pub seed: u64,
    pub noise: String,
    pub nad: Option<f64>,
    /// Meters.
    pub mpd: Option<f64>,
    /// Wall-clock seconds; not written to the result tables.
    #[serde(skip)]
    pub runtime: f64,
    pub error: Option<String>,
}

/// One experiment cell: its metrics plus the report it produced, if any.
#[derive(Debug)]
pub struct CellOutcome {
    pub result: ExperimentResult,
    pub report: Option<EstimationReport>,
    pub estimate_error: Option<Error>,
}

fn non_collinear(object: &Object, pivots: &[usize]) -> bool {
    let p = &object.model.positions;
    let g = nalgebra::DMatrix::from_fn(pivots.len(), 3, |r, k| match k {
        0 => 1.0,
        1 => p[pivots[r]].x,
        _ => p[pivots[r]].y,
    });
    rank(&g, 1e-9) == 3
}

/// Largest step amplification tolerated for an evaluation action.
pub const REPLAY_AMPLIFICATION_LIMIT: f64 = 1.02;

/// True when replaying `action`'s exact wrench under the true parameters stays
/// on the commanded trajectory, judged by the step amplification at the first
/// and middle steps.
pub fn replay_stable(source: &SyntheticSource, action: &ActionSpec) -> Result<bool> {
    let traj = source.ground_truth(action)?;
    let obj = &source.object;
    for t in [1.min(traj.steps() - 1), traj.steps() / 2] {
        let rho = step_amplification(
            &obj.model,
            &obj.maps,
            &source.truth,
            &traj.states[t],
            &traj.inputs[t],
            &source.config,
        )?;
        if rho > REPLAY_AMPLIFICATION_LIMIT {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Pick `count` graspable particles to hold out. Candidates are pivots whose
/// rotations replay stably; the remaining graspable particles must still hold
/// three non-collinear pivots for the inertia stage.
pub fn reserve_pivots(source: &SyntheticSource, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let object = &source.object;
    let graspable: Vec<usize> = object.model.graspable_indices().collect();
    let mut candidates = Vec::new();
    for &p in &graspable {
        if held_out_actions(&[p])
            .iter()
            .map(|a| replay_stable(source, a))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .all(|&ok| ok)
        {
            candidates.push(p);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x000d_e1d0_u64);
    if candidates.len() >= count && graspable.len() >= count + 3 {
        for _ in 0..64 {
            candidates.shuffle(&mut rng);
            let held = &candidates[..count];
            let rest: Vec<usize> = graspable
                .iter()
                .copied()
                .filter(|p| !held.contains(p))
                .collect();
            if non_collinear(object, &rest) {
                let mut held = held.to_vec();
                held.sort_unstable();
                return Ok(held);
            }
        }
    }
    Err(Error::InsufficientData(format!(
        "cannot hold out {count} of {} stably replayable pivots ({} graspable) and keep three non-collinear pivots",
        candidates.len(),
        graspable.len()
    )))
}

/// Rotate actions (both senses) about each held-out pivot.
pub fn held_out_actions(pivots: &[usize]) -> Vec<ActionSpec> {
    pivots
        .iter()
        .flat_map(|&p| {
            [DEFAULT_ROTATE_RATE, -DEFAULT_ROTATE_RATE]
                .map(|w| ActionSpec::rotate(p, w, DEFAULT_ROTATE_DURATION))
        })
        .collect()
}

/// Training actions for the baselines: full rotations about sampled pivots plus
/// rank-guided slides and rotations chosen without any mass knowledge.
pub fn baseline_training_actions(
    object: &Object,
    config: &EstimatorConfig,
    sim: &SimConfig,
) -> Result<TrainingActions> {
    let set = candidate_actions(&object.model, config)?;
    let pivots = sample_inertia_pivots(&set, &object.model, config.k_inertia, config.seed)?;
    let centroid = object.model.centroid();
    let friction = sample_friction_actions(
        &set,
        &object.model,
        &object.maps,
        1.0,
        &centroid,
        sim,
        config,
    )?;
    Ok(TrainingActions {
        inertia_pivots: pivots,
        friction,
    })
}

fn training_trajectories(
    source: &SyntheticSource,
    actions: &TrainingActions,
) -> Result<Vec<Trajectory>> {
    let mut specs: Vec<ActionSpec> = held_out_actions(&actions.inertia_pivots);
    specs.extend(actions.friction.iter().copied());
    specs.iter().map(|a| source.observe(a)).collect()
}

fn baseline_report(
    method: Method,
    object: &Object,
    result: BaselineResult,
    actions: TrainingActions,
    gravity: f64,
) -> Result<EstimationReport> {
    let params = ObjectParams::from_slice(&result.theta, object.maps.n_mass);
    let hidden = hidden_states_of(&object.model, &object.maps, &params, gravity)?;
    Ok(EstimationReport {
        method: method.name().into(),
        object: object.name.clone(),
        seed: 0,
        noise: String::new(),
        hidden_states: hidden,
        masses: params.masses,
        mus: params.mus,
        residuals: StageResiduals {
            friction_loss: Some(result.loss),
            ..StageResiduals::default()
        },
        actions,
        iterations: result.trace.len(),
        loss_trace: result.trace,
        s_closed_form: None,
        learning_rate: None,
        step_halvings: None,
        converged: false,
        warnings: Vec::new(),
        variant: result.variant,
        held_out: Vec::new(),
    })
}

/// Estimate `object` with `method` against a synthetic source, holding out
/// `config.held_out_pivots` pivots.
pub fn run_method(
    object: &Object,
    method: Method,
    seed: u64,
    config: &ExperimentConfig,
) -> Result<EstimationReport> {
    config.validate()?;
    let source = SyntheticSource::new(object.clone(), config.noise_model()?, seed, config.sim)?;
    let reserved = reserve_pivots(&source, config.held_out_pivots, seed)?;
    let estimator = EstimatorConfig {
        seed,
        reserved_pivots: reserved.clone(),
        ..config.estimator.clone()
    };
    let mut report = match method {
        Method::Pipeline => run_pipeline(&object.model, &object.maps, &source, &estimator)?,
        _ => {
            let actions = baseline_training_actions(object, &estimator, &config.sim)?;
            let trajs = training_trajectories(&source, &actions)?;
            let loss = JointLoss::new(&trajs, &object.model, &object.maps)?;
            let search = SearchConfig {
                seed,
                ..config.search.clone()
            };
            let bounds = search.bounds(object.maps.n_mass, object.maps.n_friction);
            let f = |x: &[f64]| loss.loss(x).unwrap_or(f64::INFINITY);
            let result = match method {
                Method::Random => random_search(f, &bounds, &search)?,
                Method::Weighted => weighted_sampling_search(f, &bounds, &search)?,
                _ => explicit_state_gd(&loss, &search, &config.explicit)?,
            };
            baseline_report(method, object, result, actions, config.sim.gravity)?
        }
    };
    report.object = object.name.clone();
    report.seed = seed;
    report.noise = config.noise.clone();
    report.held_out = held_out_actions(&reserved);
    Ok(report)
}

/// Mean final-step particle distance over the held-out actions, simulating the
/// observed wrench with the estimated parameters.
pub fn held_out_mpd(report: &EstimationReport, truth: &Object, sim: &SimConfig) -> Result<f64> {
    if report.held_out.is_empty() {
        return Err(Error::Evaluation("no held-out actions to evaluate".into()));
    }
    let noise = NoiseModel::preset(&report.noise)?;
    let source = SyntheticSource::new(truth.clone(), noise, report.seed, *sim)?;
    let params = ObjectParams {
        masses: report.masses.clone(),
        mus: report.mus.clone(),
    };
    let h = hidden_states_of(&truth.model, &truth.maps, &params, sim.gravity)?;
    let mut total = 0.0;
    for action in &report.held_out {
        let observed = source.observe(action)?;
        let reference = source.ground_truth(action)?;
        let replay = simulate(
            &truth.model,
            &truth.maps,
            &h,
            reference.states[0],
            &observed.inputs,
            sim,
        )?;
        total += mpd(&replay, &reference, &truth.model)?;
    }
    Ok(total / report.held_out.len() as f64)
}

/// NAD and held-out MPD of `report` against the true object.
pub fn evaluate_report(
    report: &EstimationReport,
    truth: &Object,
    sim: &SimConfig,
) -> (Result<f64>, Result<f64>) {
    (
        nad(&report.masses, &truth.params.masses, &truth.maps),
        held_out_mpd(report, truth, sim),
    )
}

fn join_errors(errors: impl IntoIterator<Item = Option<String>>) -> Option<String> {
    let v: Vec<String> = errors.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.join("; "))
}

pub fn run_cell(
    object: &Object,
    method: Method,
    seed: u64,
    config: &ExperimentConfig,
) -> CellOutcome {
    let start = Instant::now();
    let mut result = ExperimentResult {
        object: object.name.clone(),
        method: method.name().into(),
        seed,
        noise: config.noise.clone(),
        nad: None,
        mpd: None,
        runtime: 0.0,
        error: None,
    };
    let outcome = run_method(object, method, seed, config);
    let (report, estimate_error) = match outcome {
        Ok(report) => {
            let (n, m) = evaluate_report(&report, object, &config.sim);
            result.error = join_errors([
                n.as_ref().err().map(|e| format!("nad: {e}")),
                m.as_ref().err().map(|e| format!("mpd: {e}")),
            ]);
            result.nad = n.ok();
            result.mpd = m.ok();
            (Some(report), None)
        }
        Err(e) => {
            result.error = Some(e.to_string());
            (None, Some(e))
        }
    };
    result.runtime = start.elapsed().as_secs_f64();
    CellOutcome {
        result,
        report,
        estimate_error,
    }
}

/// Every (object, method, seed) cell, in that nesting order.
pub fn run_experiment(
    objects: &[Object],
    methods: &[Method],
    seeds: &[u64],
    config: &ExperimentConfig,
) -> Result<Vec<CellOutcome>> {
    if objects.is_empty() || methods.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "experiment needs objects, methods and seeds".into(),
        ));
    }
    config.validate()?;
    let cells: Vec<(&Object, Method, u64)> = objects
        .iter()
        .flat_map(|o| {
            methods
                .iter()
                .flat_map(move |&m| seeds.iter().map(move |&s| (o, m, s)))
        })
        .collect();
    #[cfg(feature = "parallel")]
    let out = {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|&(o, m, s)| run_cell(o, m, s, config))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let out = cells
        .iter()
        .map(|&(o, m, s)| run_cell(o, m, s, config))
        .collect();
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9e}")).unwrap_or_default()
}

/// Per-cell rows: `object,method,seed,noise,nad,mpd,error`.
pub fn write_results_csv<W: std::io::Write>(out: W, results: &[ExperimentResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["object", "method", "seed", "noise", "nad", "mpd", "error"])?;
    for r in results {
        w.write_record([
            r.object.as_str(),
            r.method.as_str(),
            &r.seed.to_string(),
            r.noise.as_str(),
            &fmt_opt(r.nad),
            &fmt_opt(r.mpd),
            r.error.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Method rows by object columns, averaging the metric over seeds; blank when
/// no seed produced a value.
pub fn write_metric_table<W: std::io::Write>(
    out: W,
    results: &[ExperimentResult],
    metric: impl Fn(&ExperimentResult) -> Option<f64>,
) -> Result<()> {
    let mut objects: Vec<&str> = Vec::new();
    let mut methods: Vec<&str> = Vec::new();
    for r in results {
        if !objects.contains(&r.object.as_str()) {
            objects.push(&r.object);
        }
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("method").chain(objects.iter().copied()))?;
    for m in &methods {
        let mut row = vec![m.to_string()];
        for o in &objects {
            let vals: Vec<f64> = results
                .iter()
                .filter(|r| r.method == *m && r.object == *o)
                .filter_map(&metric)
                .collect();
            row.push(if vals.is_empty() {
                String::new()
            } else {
                format!("{:.6e}", vals.iter().sum::<f64>() / vals.len() as f64)
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-particle `|m_est − m_true|` laid out on the object grid; empty cells blank.
pub fn write_absdiff_grid<W: std::io::Write>(
    out: W,
    report: &EstimationReport,
    truth: &Object,
) -> Result<()> {
    let (rows, cols) = truth.model.grid_shape;
    let mut grid = vec![vec![String::new(); cols]; rows];
    if report.masses.len() != truth.maps.n_mass {
        return Err(Error::InconsistentGrouping(format!(
            "report has {} mass groups, object has {}",
            report.masses.len(),
            truth.maps.n_mass
        )));
    }
    for (i, &(r, c)) in truth.model.cells.iter().enumerate() {
        let g = truth.maps.mass[i];
        grid[r][c] = format!("{:.6e}", (report.masses[g] - truth.params.masses[g]).abs());
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for row in &grid {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn report_file_name(object: &str, method: &str, seed: u64) -> String {
    format!("{object}_{method}_seed{seed}")
}

/// Write tables, reports, grids, true objects and the config snapshot under `dir`.
pub fn write_experiment(
    dir: &Path,
    outcomes: &[CellOutcome],
    objects: &[Object],
    config: &ExperimentConfig,
) -> Result<()> {
    for sub in ["reports", "grids", "truth"] {
        fs::create_dir_all(dir.join(sub))?;
    }
    let results: Vec<ExperimentResult> = outcomes.iter().map(|o| o.result.clone()).collect();
    write_results_csv(fs::File::create(dir.join("results.csv"))?, &results)?;
    write_metric_table(
        fs::File::create(dir.join("table_nad.csv"))?,
        &results,
        |r| r.nad,
    )?;
    write_metric_table(
        fs::File::create(dir.join("table_mpd.csv"))?,
        &results,
        |r| r.mpd,
    )?;
    fs::write(
        dir.join("config.json"),
        serde_json::to_string_pretty(config)?,
    )?;
    for obj in objects {
        let desc = ObjectDescriptor::from_object(obj);
        fs::write(
            dir.join("truth").join(format!("{}.json", obj.name)),
            desc.to_json()?,
        )?;
    }
    for o in outcomes {
        let Some(report) = &o.report else { continue };
        let stem = report_file_name(&report.object, &report.method, report.seed);
        fs::write(
            dir.join("reports").join(format!("{stem}.json")),
            report.to_json()?,
        )?;
        if let Some(truth) = objects.iter().find(|t| t.name == report.object) {
            write_absdiff_grid(
                fs::File::create(dir.join("grids").join(format!("{stem}.csv")))?,
                report,
                truth,
            )?;
        }
    }
    Ok(())
}
