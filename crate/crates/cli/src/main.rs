//! `massdist` command-line interface: simulate actions, run the estimator or a
//! baseline, evaluate reports and sweep the catalog.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use massdist::actions::ActionSpec;
use massdist::dynamics::{write_trajectories_csv, SimConfig};
use massdist::estimation::{EstimationReport, ObservationSource};
use massdist::harness::{
    evaluate_report, run_experiment, run_method, write_experiment, write_results_csv,
    ExperimentConfig, ExperimentResult, Method, NoiseModel, SyntheticSource,
};
use massdist::object_model::{builtin_object, Object, ObjectDescriptor, CATALOG};
use massdist::Error;

#[derive(Parser)]
#[command(
    name = "massdist",
    version,
    about = "Planar mass-distribution estimation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMethod {
    Random,
    Weighted,
    Explicit,
}

impl From<BaselineMethod> for Method {
    fn from(m: BaselineMethod) -> Self {
        match m {
            BaselineMethod::Random => Method::Random,
            BaselineMethod::Weighted => Method::Weighted,
            BaselineMethod::Explicit => Method::Explicit,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Execute actions on the synthetic robot and write the observed trajectories.
    Simulate {
        /// Catalog name or object descriptor JSON file.
        #[arg(long)]
        object: String,
        /// JSON list of actions.
        #[arg(long)]
        action: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sensor noise preset.
        #[arg(long, default_value = "none")]
        noise: String,
    },
    /// Run the multi-stage estimator against a synthetic source.
    Estimate {
        #[arg(long)]
        object: String,
        #[arg(long)]
        noise: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Friction descent iterations.
        #[arg(long, default_value_t = 500)]
        iters: usize,
        /// Fixed friction descent learning rate.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Run a comparison method over the joint mass/friction space.
    Baseline {
        #[arg(long, value_enum)]
        method: BaselineMethod,
        #[arg(long)]
        object: String,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "none")]
        noise: String,
    },
    /// Score report files against true objects.
    Eval {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Every object × method × seed, with tables, reports and error grids.
    Sweep {
        /// `all` or a comma-separated list of catalog names / descriptor files.
        #[arg(long, default_value = "all")]
        catalog: String,
        /// `all` or a comma-separated list of pipeline, random, weighted, explicit.
        #[arg(long, default_value = "all")]
        methods: String,
        #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "none")]
        noise: String,
        /// Baseline iteration budget.
        #[arg(long, default_value_t = 500)]
        iters: usize,
    },
    /// Write a catalog object as a descriptor JSON file.
    ExportObject {
        #[arg(long)]
        object: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Lib(e) if e.is_io() => 3,
            CliError::Lib(e) => match e.root() {
                Error::UnknownObject(_)
                | Error::InvalidConfig(_)
                | Error::InvalidDescriptor(_)
                | Error::InvalidAction(_) => 1,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Lib(e) => {
                write!(f, "{e}")?;
                let mut src = std::error::Error::source(e);
                while let Some(s) = src {
                    write!(f, ": {s}")?;
                    src = s.source();
                }
                Ok(())
            }
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn load_object(spec: &str) -> CliResult<Object> {
    let path = Path::new(spec);
    if path.is_file() {
        let desc = ObjectDescriptor::from_json(&fs::read_to_string(path)?)?;
        let mut obj = desc.to_object()?;
        if desc.name.is_none() {
            obj.name = path
                .file_stem()
                .map_or("object".into(), |s| s.to_string_lossy().into_owned());
        }
        return Ok(obj);
    }
    if spec.contains('/') || spec.ends_with(".json") {
        return Err(CliError::Lib(
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("object file `{spec}` not found"),
            )
            .into(),
        ));
    }
    Ok(builtin_object(spec)?)
}

fn write_output(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn experiment_config(noise: &str) -> CliResult<ExperimentConfig> {
    NoiseModel::preset(noise)?;
    Ok(ExperimentConfig {
        noise: noise.into(),
        ..ExperimentConfig::default()
    })
}

fn summarize(report: &EstimationReport) {
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.6}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!(
        "{} on {} (seed {})",
        report.method, report.object, report.seed
    );
    println!("  masses: {}", fmt(&report.masses));
    println!("  mus:    {}", fmt(&report.mus));
    for w in &report.warnings {
        println!("  warning: {w}");
    }
}

fn simulate(
    object: &str,
    action: &Path,
    out: &Path,
    dt: f64,
    seed: u64,
    noise: &str,
) -> CliResult<()> {
    let obj = load_object(object)?;
    let actions: Vec<ActionSpec> =
        serde_json::from_str(&fs::read_to_string(action)?).map_err(Error::from)?;
    if actions.is_empty() {
        return Err(CliError::Usage("action file holds no actions".into()));
    }
    for a in &actions {
        a.validate(&obj.model)?;
    }
    let config = SimConfig {
        dt,
        ..SimConfig::default()
    };
    config.validate()?;
    let source = SyntheticSource::new(obj, NoiseModel::preset(noise)?, seed, config)?;
    let trajs = actions
        .iter()
        .map(|a| source.observe(a))
        .collect::<massdist::Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_trajectories_csv(&mut buf, &trajs)?;
    write_output(out, &buf)?;
    println!(
        "{} trajectories, {} steps",
        trajs.len(),
        trajs.iter().map(|t| t.steps()).sum::<usize>()
    );
    Ok(())
}

fn estimate(
    object: &str,
    noise: &str,
    seed: u64,
    out: &Path,
    iters: usize,
    alpha: Option<f64>,
) -> CliResult<()> {
    let obj = load_object(object)?;
    let mut cfg = experiment_config(noise)?;
    cfg.estimator.gd.max_iters = iters;
    cfg.estimator.gd.learning_rate = alpha;
    let report = run_method(&obj, Method::Pipeline, seed, &cfg)?;
    write_output(out, report.to_json()?.as_bytes())?;
    summarize(&report);
    Ok(())
}

fn baseline(
    method: Method,
    object: &str,
    iters: usize,
    seed: u64,
    out: &Path,
    noise: &str,
) -> CliResult<()> {
    let obj = load_object(object)?;
    let mut cfg = experiment_config(noise)?;
    cfg.search.iters = iters;
    let report = run_method(&obj, method, seed, &cfg)?;
    write_output(out, report.to_json()?.as_bytes())?;
    summarize(&report);
    Ok(())
}

fn json_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn eval(reports: &Path, truth: &Path, out: &Path) -> CliResult<()> {
    let files = json_files(reports)?;
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "no report files in {}",
            reports.display()
        )));
    }
    let sim = ExperimentConfig::default().sim;
    let mut rows = Vec::with_capacity(files.len());
    for f in files {
        let report = EstimationReport::from_json(&fs::read_to_string(&f)?)?;
        let truth_file = truth.join(format!("{}.json", report.object));
        let obj = load_object(truth_file.to_str().unwrap_or_default())?;
        let (nad, mpd) = evaluate_report(&report, &obj, &sim);
        let errors: Vec<String> = [
            nad.as_ref().err().map(|e| format!("nad: {e}")),
            mpd.as_ref().err().map(|e| format!("mpd: {e}")),
        ]
        .into_iter()
        .flatten()
        .collect();
        rows.push(ExperimentResult {
            object: report.object.clone(),
            method: report.method.clone(),
            seed: report.seed,
            noise: report.noise.clone(),
            nad: nad.ok(),
            mpd: mpd.ok(),
            runtime: 0.0,
            error: (!errors.is_empty()).then(|| errors.join("; ")),
        });
    }
    let mut buf = Vec::new();
    write_results_csv(&mut buf, &rows)?;
    write_output(out, &buf)?;
    println!("{} reports evaluated", rows.len());
    Ok(())
}

fn parse_list<T>(
    spec: &str,
    all: impl FnOnce() -> Vec<T>,
    one: impl Fn(&str) -> CliResult<T>,
) -> CliResult<Vec<T>> {
    if spec == "all" {
        return Ok(all());
    }
    let items = spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(one)
        .collect::<CliResult<Vec<_>>>()?;
    if items.is_empty() {
        return Err(CliError::Usage(format!("empty list `{spec}`")));
    }
    Ok(items)
}

fn sweep(
    catalog: &str,
    methods: &str,
    seeds: &[u64],
    out: &Path,
    noise: &str,
    iters: usize,
) -> CliResult<()> {
    let objects = parse_list(
        catalog,
        || {
            CATALOG
                .iter()
                .map(|n| builtin_object(n).expect("catalog entries build"))
                .collect()
        },
        load_object,
    )?;
    let methods = parse_list(
        methods,
        || Method::ALL.to_vec(),
        |s| Ok(s.parse::<Method>()?),
    )?;
    if seeds.is_empty() {
        return Err(CliError::Usage("no seeds given".into()));
    }
    let mut cfg = experiment_config(noise)?;
    cfg.search.iters = iters;
    let outcomes = run_experiment(&objects, &methods, seeds, &cfg)?;
    write_experiment(out, &outcomes, &objects, &cfg)?;
    let stderr = std::io::stderr();
    let mut err = stderr.lock();
    for o in &outcomes {
        let r = &o.result;
        let _ = writeln!(
            err,
            "{:8} {:9} seed {:3}  {:.2}s{}",
            r.object,
            r.method,
            r.seed,
            r.runtime,
            r.error
                .as_deref()
                .map(|e| format!("  error: {e}"))
                .unwrap_or_default()
        );
    }
    let failed = outcomes.iter().filter(|o| o.result.error.is_some()).count();
    println!(
        "{} cells written to {} ({failed} with errors)",
        outcomes.len(),
        out.display()
    );
    Ok(())
}

fn export_object(object: &str, out: &Path) -> CliResult<()> {
    let obj = load_object(object)?;
    write_output(
        out,
        ObjectDescriptor::from_object(&obj).to_json()?.as_bytes(),
    )
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            object,
            action,
            out,
            dt,
            seed,
            noise,
        } => simulate(&object, &action, &out, dt, seed, &noise),
        Command::Estimate {
            object,
            noise,
            seed,
            out,
            iters,
            alpha,
        } => estimate(&object, &noise, seed, &out, iters, alpha),
        Command::Baseline {
            method,
            object,
            iters,
            seed,
            out,
            noise,
        } => baseline(method.into(), &object, iters, seed, &out, &noise),
        Command::Eval {
            reports,
            truth,
            out,
        } => eval(&reports, &truth, &out),
        Command::Sweep {
            catalog,
            methods,
            seeds,
            out,
            noise,
            iters,
        } => sweep(&catalog, &methods, &seeds, &out, &noise, iters),
        Command::ExportObject { object, out } => export_object(&object, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
