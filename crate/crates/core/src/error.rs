use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("unknown catalog object `{0}`")]
    UnknownObject(String),
    #[error("inconsistent grouping: {0}")]
    InconsistentGrouping(String),
    #[error("invalid object descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("singular inertia: mass {mass}, moment of inertia {inertia}")]
    SingularInertia { mass: f64, inertia: f64 },
    #[error("simulation diverged at step {step}")]
    Divergence { step: usize },
    #[error("object has no graspable particle; action set is empty")]
    EmptyActionSet,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("insufficient excitation: {0}")]
    InsufficientExcitation(String),
    #[error("non-physical inertia fit for pivot {pivot}: slope {slope}")]
    NonPhysicalInertia { pivot: usize, slope: f64 },
    #[error("degenerate pivot geometry: {0}")]
    DegenerateGeometry(String),
    #[error("inconsistent inertia samples: I_cm = {0}")]
    InconsistentSamples(f64),
    #[error("rank deficient: achieved rank {achieved}, need {required}")]
    RankDeficient { achieved: usize, required: usize },
    #[error("masses unidentifiable: null space of dimension {null_dim}")]
    UnidentifiableMass { null_dim: usize },
    #[error("incompatible trajectories: {0}")]
    IncompatibleTrajectories(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("non-finite gradient at iteration {iteration}")]
    GradientDivergence { iteration: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Error raised by one stage of the multi-stage estimator, tagged with the
    /// algorithm line that produced it.
    #[error("stage `{stage}` (line {line}) failed: {source}")]
    Stage {
        stage: &'static str,
        line: u32,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str, line: u32) -> Self {
        Error::Stage {
            stage,
            line,
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for file-system and (de)serialization failures.
    pub fn is_io(&self) -> bool {
        matches!(self.root(), Error::Io(_) | Error::Json(_) | Error::Csv(_))
    }
}
