//! Acceptance criteria AC1-AC10, one PASS/FAIL line each.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use massdist::actions::{
    build_q, enumerate_actions, inverse_dynamics_wrench, kinematic_trajectory, q_block, rank_q,
    regression_block, ActionSpec, DEFAULT_RANK_TOL,
};
use massdist::baselines::JointLoss;
use massdist::dynamics::{
    simulate, state_accel, step, ObjectState, SimConfig, Trajectory, WrenchInput,
};
use massdist::estimation::{
    estimate_s_lsq, loss_and_grad, recover_m, run_pipeline, solve_com_inertia, EstimatorConfig,
    FrictionData, PivotInertiaSample,
};
use massdist::geometry::Vec2;
use massdist::harness::{
    mpd, nad, replay_stable, run_experiment, ExperimentConfig, Method, NoiseModel, SyntheticSource,
};
use massdist::object_model::{
    builtin_object, hidden_states_of, GroupMaps, Object, ObjectParams, ParticleModel, CATALOG,
};
use massdist::Error;
use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const AC1_NAD: f64 = 0.01;
const AC1_S_REL: f64 = 1e-6;
const AC1_SECONDS: f64 = 60.0;
const AC2_REL: f64 = 1e-9;
const AC3_REL: f64 = 1e-5;
const AC3_INSTANCES: usize = 100;
const AC4_TRIALS: usize = 100;
const AC5_ABS: f64 = 1e-12;
const AC6_POSE: f64 = 1e-9;
const AC6_STEPS: usize = 1800;
const AC7_ITERS: usize = 500;
const AC7_SEEDS: [u64; 3] = [1, 2, 3];
const AC7_BENCH_NAD: f64 = 0.15;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn catalog() -> Vec<Object> {
    CATALOG.iter().map(|n| builtin_object(n).unwrap()).collect()
}

fn ac1() -> Outcome {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut ok = true;
    let mut checked = 0;
    for obj in catalog() {
        let src =
            SyntheticSource::new(obj.clone(), NoiseModel::NONE, 1, SimConfig::default()).unwrap();
        let cfg = EstimatorConfig {
            seed: 1,
            ..Default::default()
        };
        let start = Instant::now();
        let report = run_pipeline(&obj.model, &obj.maps, &src, &cfg).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let h = &report.hidden_states;
        let q = build_q(
            &report.actions.friction,
            &obj.model,
            &obj.maps,
            h.total_mass,
            &h.com,
            &src.config,
        )
        .unwrap();
        if rank_q(&q, DEFAULT_RANK_TOL) != obj.maps.n_contact {
            continue;
        }
        checked += 1;
        let n = nad(&report.masses, &obj.params.masses, &obj.maps).unwrap();
        let s =
            h.s.iter()
                .zip(&src.truth.s)
                .map(|(a, b)| ((a - b) / b).abs())
                .fold(0.0, f64::max);
        worst = (worst.0.max(n), worst.1.max(s), worst.2.max(secs));
        ok &= n < AC1_NAD && s < AC1_S_REL && secs < AC1_SECONDS;
    }
    ok &= checked == CATALOG.len();
    outcome(
        ok,
        format!(
            "{checked}/{} full-rank objects; max NAD {:.2e} (< {AC1_NAD}), max s rel err {:.2e} (< {AC1_S_REL:e}), max time {:.3}s (< {AC1_SECONDS}s)",
            CATALOG.len(),
            worst.0,
            worst.1,
            worst.2
        ),
    )
}

fn ac2() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for obj in catalog() {
        let h = obj.hidden_states(9.81).unwrap();
        let m = obj.params.particle_masses(&obj.maps);
        for pj in &obj.model.positions {
            let lhs: f64 = obj
                .model
                .positions
                .iter()
                .zip(&m)
                .map(|(p, mi)| mi * (p - pj).norm_squared())
                .sum();
            let rhs = h.inertia_cm + h.total_mass * (pj - h.com).norm_squared();
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE));
            count += 1;
        }
    }
    outcome(
        worst < AC2_REL,
        format!("{count} pivots; max rel err {worst:.2e} (< {AC2_REL:e})"),
    )
}

fn random_instance(rng: &mut ChaCha8Rng) -> Object {
    let n = rng.random_range(3..=5);
    let mut cells = vec![(0i32, 0i32)];
    while cells.len() < n {
        let &(r, c) = &cells[rng.random_range(0..cells.len())];
        let next = match rng.random_range(0..4) {
            0 => (r + 1, c),
            1 => (r - 1, c),
            2 => (r, c + 1),
            _ => (r, c - 1),
        };
        if !cells.contains(&next) {
            cells.push(next);
        }
    }
    let spacing = 0.05;
    let model = ParticleModel::from_positions(
        cells
            .iter()
            .map(|&(r, c)| Vec2::new(c as f64 * spacing, r as f64 * spacing))
            .collect(),
        spacing,
    )
    .unwrap();
    let n_mass = rng.random_range(1..=n.min(3));
    let n_fric = rng.random_range(1..=2);
    let mut mass: Vec<usize> = (0..n)
        .map(|i| {
            if i < n_mass {
                i
            } else {
                rng.random_range(0..n_mass)
            }
        })
        .collect();
    mass.rotate_left(rng.random_range(0..n));
    let mut fric: Vec<usize> = (0..n)
        .map(|i| {
            if i < n_fric {
                i
            } else {
                rng.random_range(0..n_fric)
            }
        })
        .collect();
    fric.rotate_left(rng.random_range(0..n));
    let maps = GroupMaps::new(mass, fric.into_iter().map(Some).collect()).unwrap();
    let params = ObjectParams {
        masses: (0..n_mass).map(|_| rng.random_range(0.2..1.5)).collect(),
        mus: (0..n_fric).map(|_| rng.random_range(0.1..0.8)).collect(),
    };
    Object {
        name: "random".into(),
        model,
        maps,
        params,
    }
}

fn instance_trajectories(obj: &Object, rng: &mut ChaCha8Rng) -> Vec<Trajectory> {
    let src = SyntheticSource::new(obj.clone(), NoiseModel::NONE, 0, SimConfig::default()).unwrap();
    let n = obj.model.len();
    let actions = [
        ActionSpec::rotate(
            rng.random_range(0..n),
            0.17 * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
            0.5,
        ),
        ActionSpec::slide(
            rng.random_range(0..n),
            rng.random_range(0.0..std::f64::consts::TAU),
            0.05,
            0.3,
        ),
    ];
    actions
        .iter()
        .map(|a| src.ground_truth(a).unwrap())
        .collect()
}

fn rel_components(fd: &[f64], g: &[f64]) -> f64 {
    fd.iter()
        .zip(g)
        .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn ac3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_s, mut worst_joint) = (0.0f64, 0.0f64);
    for _ in 0..AC3_INSTANCES {
        let obj = random_instance(&mut rng);
        let trajs = instance_trajectories(&obj, &mut rng);
        let level = obj.hidden_states(9.81).unwrap().object_level();

        let data = FrictionData::from_trajectories(&trajs, &obj.model, &obj.maps, &level).unwrap();
        let s: Vec<f64> = (0..obj.maps.n_contact)
            .map(|_| rng.random_range(0.0..5.0))
            .collect();
        let (_, g) = loss_and_grad(&s, &data);
        let fd: Vec<f64> = (0..s.len())
            .map(|k| {
                let h = 1e-5 * s[k].abs().max(1.0);
                let (mut p, mut m) = (s.clone(), s.clone());
                p[k] += h;
                m[k] -= h;
                (loss_and_grad(&p, &data).0 - loss_and_grad(&m, &data).0) / (2.0 * h)
            })
            .collect();
        worst_s = worst_s.max(rel_components(&fd, g.as_slice()));

        let loss = JointLoss::new(&trajs, &obj.model, &obj.maps).unwrap();
        let theta: Vec<f64> = obj
            .params
            .to_vec()
            .iter()
            .map(|v| v * rng.random_range(0.7..1.3))
            .collect();
        let (_, g) = loss.loss_and_grad(&theta).unwrap();
        let fd: Vec<f64> = (0..theta.len())
            .map(|k| {
                let h = 1e-6 * theta[k].abs();
                let (mut p, mut m) = (theta.clone(), theta.clone());
                p[k] += h;
                m[k] -= h;
                (loss.loss(&p).unwrap() - loss.loss(&m).unwrap()) / (2.0 * h)
            })
            .collect();
        worst_joint = worst_joint.max(rel_components(&fd, g.as_slice()));
    }
    outcome(
        worst_s < AC3_REL && worst_joint < AC3_REL,
        format!(
            "{AC3_INSTANCES} instances; max rel err dL/ds {worst_s:.2e}, d(joint)/d(m,mu) {worst_joint:.2e} (< {AC3_REL:e})"
        ),
    )
}

fn ac4() -> Outcome {
    let objects: Vec<Object> = catalog()
        .into_iter()
        .filter(|o| o.maps.n_contact >= 2)
        .collect();
    let sim = SimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut bounded, mut equal) = (true, 0);
    for _ in 0..AC4_TRIALS {
        let obj = &objects[rng.random_range(0..objects.len())];
        let h = obj.hidden_states(sim.gravity).unwrap();
        let k = rng.random_range(1..obj.maps.n_contact);
        let grasp: Vec<usize> = obj.model.graspable_indices().collect();
        let slides: Vec<ActionSpec> = (0..k)
            .map(|_| {
                ActionSpec::slide(
                    grasp[rng.random_range(0..grasp.len())],
                    rng.random_range(0.0..std::f64::consts::TAU),
                    0.05,
                    4.0,
                )
            })
            .collect();
        let q = build_q(&slides, &obj.model, &obj.maps, h.total_mass, &h.com, &sim).unwrap();
        let r = rank_q(&q, DEFAULT_RANK_TOL);
        bounded &= r <= k + 1;
        equal += (r == k + 1) as usize;
    }
    let (mut pairs, mut independent) = (0, 0);
    for obj in catalog() {
        let h = obj.hidden_states(sim.gravity).unwrap();
        let grasp: Vec<usize> = obj.model.graspable_indices().collect();
        let force_rows = |p: usize| {
            let b = q_block(
                &ActionSpec::rotate(p, 0.17, 18.0),
                &obj.model,
                &obj.maps,
                h.total_mass,
                &h.com,
                &sim,
            )
            .unwrap();
            b.rows(0, 2).iter().copied().collect::<Vec<f64>>()
        };
        let rows: Vec<Vec<f64>> = grasp.iter().map(|&p| force_rows(p)).collect();
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let m = DMatrix::from_fn(2, rows[i].len(), |r, c| {
                    if r == 0 {
                        rows[i][c]
                    } else {
                        rows[j][c]
                    }
                });
                pairs += 1;
                independent += (rank_q(&m, DEFAULT_RANK_TOL) == 2) as usize;
            }
        }
    }
    outcome(
        bounded && equal >= 1 && independent == pairs,
        format!(
            "{AC4_TRIALS} slide trials: rank <= k+1 in all: {bounded}, equality in {equal}; rotate pivot pairs independent: {independent}/{pairs}"
        ),
    )
}

fn ac5() -> Outcome {
    let sim = SimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut steps = 0;
    for obj in catalog() {
        let h = obj.hidden_states(sim.gravity).unwrap();
        let level = h.object_level();
        let mut state = ObjectState::new(
            Vector3::new(0.1, -0.2, rng.random_range(-3.0..3.0)),
            Vector3::new(
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.2..0.2),
                rng.random_range(-0.5..0.5),
            ),
        );
        for _ in 0..200 {
            let u = WrenchInput::new(
                rng.random_range(0..obj.model.len()),
                Vector3::new(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-0.3..0.3),
                ),
            );
            let acc = state_accel(&obj.model, &obj.maps, &h, &state, &u, &sim).unwrap();
            let next = step(&state, &acc, sim.dt);
            let block = regression_block(&state, &u, &obj.model, &obj.maps, &level, &sim).unwrap();
            let resid = (next.velocity - state.velocity) - block.predict(&h.s);
            worst = worst.max(resid.amax());
            steps += 1;
            state = next;
        }
    }
    outcome(
        worst < AC5_ABS,
        format!("{steps} simulated steps; max |dv - A s - B| {worst:.2e} (< {AC5_ABS:e})"),
    )
}

fn ac6() -> Outcome {
    let sim = SimConfig::default();
    let (mut worst_stable, mut worst_unstable) = (0.0f64, 0.0f64);
    let (mut stable, mut unstable, mut long) = (0, 0, 0);
    let mut unstable_over = 0;
    for obj in catalog() {
        let src = SyntheticSource::new(obj.clone(), NoiseModel::NONE, 0, sim).unwrap();
        for action in enumerate_actions(&obj.model, 4).unwrap() {
            let states =
                kinematic_trajectory(&action, &obj.model, &Vector3::zeros(), &sim).unwrap();
            let inputs = inverse_dynamics_wrench(
                &states,
                &obj.model,
                &obj.maps,
                &src.truth,
                action.grasp_particle,
                &sim,
            )
            .unwrap();
            long += (inputs.len() == AC6_STEPS) as usize;
            let replay =
                simulate(&obj.model, &obj.maps, &src.truth, states[0], &inputs, &sim).unwrap();
            let err = replay
                .states
                .iter()
                .zip(&states)
                .map(|(a, b)| (a.pose - b.pose).amax())
                .fold(0.0, f64::max);
            if replay_stable(&src, &action).unwrap() {
                stable += 1;
                worst_stable = worst_stable.max(err);
            } else {
                unstable += 1;
                worst_unstable = worst_unstable.max(err);
                unstable_over += (err >= AC6_POSE) as usize;
            }
        }
    }
    outcome(
        worst_stable < AC6_POSE && long > 0,
        format!(
            "{stable} replay-stable actions ({long} of all actions span {AC6_STEPS} steps): max pose err {worst_stable:.2e} (< {AC6_POSE:e}); \
             {unstable} actions with step amplification above the stability limit excluded ({unstable_over} exceed the tolerance, worst {worst_unstable:.1e})"
        ),
    )
}

fn ac7() -> Outcome {
    let objects = catalog();
    let mut cfg = ExperimentConfig::default();
    cfg.search.iters = AC7_ITERS;
    let cells = run_experiment(&objects, &Method::ALL, &AC7_SEEDS, &cfg).unwrap();
    let get = |o: &str, m: Method, s: u64| {
        cells
            .iter()
            .map(|c| &c.result)
            .find(|r| r.object == o && r.method == m.name() && r.seed == s)
            .unwrap()
    };
    let (mut nad_wins, mut mpd_wins, mut total) = (0, 0, 0);
    let mut errors = cells.iter().filter(|c| c.result.error.is_some()).count();
    for obj in &objects {
        for &seed in &AC7_SEEDS {
            let p = get(&obj.name, Method::Pipeline, seed);
            for b in Method::BASELINES {
                let r = get(&obj.name, b, seed);
                total += 1;
                if let (Some(pn), Some(bn)) = (p.nad, r.nad) {
                    nad_wins += (pn < bn) as usize;
                }
                if let (Some(pm), Some(bm)) = (p.mpd, r.mpd) {
                    mpd_wins += (pm <= bm) as usize;
                }
            }
        }
    }
    let bench_cfg = ExperimentConfig {
        noise: "bench".into(),
        ..ExperimentConfig::default()
    };
    let bench = run_experiment(&objects, &[Method::Pipeline], &AC7_SEEDS, &bench_cfg).unwrap();
    errors += bench.iter().filter(|c| c.result.error.is_some()).count();
    let bench_worst = bench
        .iter()
        .map(|c| c.result.nad.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    outcome(
        nad_wins == total && mpd_wins == total && bench_worst < AC7_BENCH_NAD && errors == 0,
        format!(
            "noiseless, {AC7_ITERS} iters, seeds {AC7_SEEDS:?}: pipeline NAD lower in {nad_wins}/{total}, held-out MPD no higher in {mpd_wins}/{total}; \
             bench max pipeline NAD {bench_worst:.3} (< {AC7_BENCH_NAD}); cell errors {errors}"
        ),
    )
}

fn ac8() -> Outcome {
    let mut ok = true;
    for obj in catalog() {
        ok &= nad(&obj.params.masses, &obj.params.masses, &obj.maps).unwrap() == 0.0;
    }
    // binary-exact geometry so the translation distance is representable exactly
    let model = ParticleModel::from_positions(
        vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.5, 0.0),
            Vec2::new(0.5, 0.5),
        ],
        0.5,
    )
    .unwrap();
    let traj = |x: f64| Trajectory {
        config: SimConfig::default(),
        states: vec![
            ObjectState::default(),
            ObjectState::at_rest(Vector3::new(x, 1.0, 0.0)),
        ],
        inputs: vec![WrenchInput::zero(0)],
    };
    let same = mpd(&traj(0.0), &traj(0.0), &model).unwrap();
    let shifted = mpd(&traj(0.0), &traj(0.25), &model).unwrap();
    ok &= same == 0.0 && shifted == 0.25;
    outcome(
        ok,
        format!("nad(m, m) = 0 on catalog; mpd(t, t) = {same}; translation 0.25 -> mpd {shifted}"),
    )
}

fn run_cli(args: &[&str], cwd: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_massdist"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn files_under(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn ac9() -> Outcome {
    let actions = r#"[{"kind": "rotate", "angular_rate": -0.17, "grasp_particle": 2, "duration": 3.0},
                      {"kind": "slide", "direction": [0.0, 1.0], "speed": 0.05, "grasp_particle": 0, "duration": 2.0}]"#;
    let script: Vec<Vec<&str>> = vec![
        vec![
            "simulate",
            "--object",
            "F2",
            "--action",
            "act.json",
            "--out",
            "sim/traj.csv",
            "--seed",
            "4",
            "--noise",
            "bench",
        ],
        vec!["export-object", "--object", "F2", "--out", "truth/F2.json"],
        vec![
            "estimate",
            "--object",
            "F2",
            "--noise",
            "bench",
            "--seed",
            "4",
            "--out",
            "reports/pipeline.json",
        ],
        vec![
            "baseline",
            "--method",
            "random",
            "--object",
            "F2",
            "--iters",
            "100",
            "--seed",
            "4",
            "--out",
            "reports/random.json",
        ],
        vec![
            "baseline",
            "--method",
            "weighted",
            "--object",
            "F2",
            "--iters",
            "100",
            "--seed",
            "4",
            "--out",
            "reports/weighted.json",
        ],
        vec![
            "baseline",
            "--method",
            "explicit",
            "--object",
            "F2",
            "--iters",
            "100",
            "--seed",
            "4",
            "--out",
            "reports/explicit.json",
        ],
        vec![
            "eval",
            "--reports",
            "reports",
            "--truth",
            "truth",
            "--out",
            "eval.csv",
        ],
        vec![
            "sweep",
            "--catalog",
            "I1,hammer",
            "--methods",
            "all",
            "--seeds",
            "1,2",
            "--iters",
            "100",
            "--out",
            "sweep",
        ],
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut ok = true;
    for d in &dirs {
        std::fs::write(d.path().join("act.json"), actions).unwrap();
        for args in &script {
            ok &= run_cli(args, d.path());
        }
    }
    let files = files_under(dirs[0].path());
    ok &= files == files_under(dirs[1].path());
    let mut identical = 0;
    for f in &files {
        identical += (std::fs::read(dirs[0].path().join(f)).unwrap()
            == std::fs::read(dirs[1].path().join(f)).unwrap()) as usize;
    }
    ok &= identical == files.len();
    outcome(
        ok,
        format!(
            "{} commands run twice; {identical}/{} output files byte-identical",
            script.len(),
            files.len()
        ),
    )
}

fn ac10() -> Outcome {
    let sample = |x: f64, y: f64, inertia: f64| PivotInertiaSample {
        pivot: 0,
        position: Vec2::new(x, y),
        inertia,
        residual: 0.0,
    };
    let collinear = matches!(
        solve_com_inertia(
            &[
                sample(0.0, 0.0, 1.0),
                sample(0.05, 0.05, 1.1),
                sample(0.1, 0.1, 1.3)
            ],
            2.0
        ),
        Err(Error::DegenerateGeometry(_))
    );

    // one slide on an object with four contact groups: n_s = 4 > k + 1 = 2
    let obj = catalog()
        .into_iter()
        .find(|o| o.maps.n_contact >= 3)
        .unwrap();
    let src = SyntheticSource::new(obj.clone(), NoiseModel::NONE, 0, SimConfig::default()).unwrap();
    let traj = src
        .ground_truth(&ActionSpec::slide(0, 0.3, 0.05, 4.0))
        .unwrap();
    let data =
        FrictionData::from_trajectories(&[traj], &obj.model, &obj.maps, &src.truth.object_level())
            .unwrap();
    let rank_deficient = matches!(
        estimate_s_lsq(&data, DEFAULT_RANK_TOL),
        Err(Error::RankDeficient { .. })
    );

    // five mass groups, each with its own material
    let model = ParticleModel::from_positions(
        (0..9)
            .map(|i| Vec2::new((i % 3) as f64 * 0.05, (i / 3) as f64 * 0.05))
            .collect(),
        0.05,
    )
    .unwrap();
    let groups = [0, 1, 2, 3, 4, 0, 1, 2, 3];
    let maps = GroupMaps::new(groups.to_vec(), groups.iter().map(|&g| Some(g)).collect()).unwrap();
    let params = ObjectParams {
        masses: vec![0.3, 0.5, 0.7, 0.9, 1.1],
        mus: vec![0.2, 0.3, 0.4, 0.5, 0.6],
    };
    let h = hidden_states_of(&model, &maps, &params, 9.81).unwrap();
    let unidentifiable = matches!(
        recover_m(&h, &model, &maps),
        Err(Error::UnidentifiableMass { .. })
    );

    outcome(
        collinear && rank_deficient && unidentifiable,
        format!(
            "collinear pivots -> degenerate geometry: {collinear}; one slide with n_s = {} -> rank deficient: {rank_deficient}; \
             5 mass groups without ratio rows -> unidentifiable mass: {unidentifiable}",
            obj.maps.n_contact
        ),
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 10] = [
        ("AC1", ac1),
        ("AC2", ac2),
        ("AC3", ac3),
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
        ("AC10", ac10),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let o = check();
        failed += (!o.pass) as usize;
        println!(
            "{name:<5} {}  {}  [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
