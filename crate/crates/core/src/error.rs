use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{field}` = {value} is outside its domain {domain}")]
    ParameterDomain {
        field: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("horizon n = {n} is too small (need n >= 2)")]
    HorizonTooSmall { n: u64 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("simulation exceeded its step budget of {budget} steps")]
    RunawaySimulation { budget: u64 },

    #[error("time {t} is beyond the covered horizon {covered}")]
    TrajectoryExhausted { t: f64, covered: f64 },

    #[error("level {level} is not reached by the path (max value {max})")]
    PathExhausted { level: f64, max: f64 },

    #[error("time grid must start at 0 and be strictly increasing")]
    InvalidGrid,

    #[error("sample is empty")]
    EmptySample,

    #[error("not enough data: {0}")]
    DataInsufficient(String),

    #[error("step budget exhausted after covering time {covered} of {requested}")]
    PartialResult {
        covered: f64,
        requested: f64,
        prefix: Vec<f64>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
