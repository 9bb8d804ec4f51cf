//! CLI errors and their exit codes.

use lshaped_core::bench::BenchError;
use lshaped_core::bounds::BoundsError;
use lshaped_core::instance::InstanceError;
use lshaped_core::lshaped::SolverError;
use lshaped_core::lp::SecondStageError;
use lshaped_core::oracle::OracleError;
use lshaped_core::smps::SmpsError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NUMERIC: i32 = 70;

#[derive(Debug, Error, PartialEq)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("numeric: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Data(_) => EXIT_DATA,
            Self::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

fn instance_is_numeric(e: &InstanceError) -> bool {
    matches!(e, InstanceError::Lp(_))
}

fn oracle_is_numeric(e: &OracleError) -> bool {
    match e {
        OracleError::SecondStage { source, .. } => matches!(source, SecondStageError::Lp(_)),
        OracleError::Instance(i) => instance_is_numeric(i),
        OracleError::Dimension { .. } => false,
    }
}

fn classify(numeric: bool, msg: String) -> CliError {
    if numeric {
        CliError::Numeric(msg)
    } else {
        CliError::Data(msg)
    }
}

impl From<SmpsError> for CliError {
    fn from(e: SmpsError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<InstanceError> for CliError {
    fn from(e: InstanceError) -> Self {
        match e {
            InstanceError::BadParameter(_) => Self::Usage(e.to_string()),
            _ => classify(instance_is_numeric(&e), e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        let msg = e.to_string();
        match &e {
            SolverError::InvalidConfig(_) | SolverError::MissingParameter(_) => Self::Usage(msg),
            SolverError::Instance(i) => classify(instance_is_numeric(i), msg),
            SolverError::Oracle { source, .. } => classify(oracle_is_numeric(source), msg),
            SolverError::InitialPoint(_) => Self::Data(msg),
            SolverError::Master { .. } | SolverError::Lp(_) => Self::Numeric(msg),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        let msg = e.to_string();
        match &e {
            BoundsError::BadInput(_) | BoundsError::BadParameter(_) => Self::Usage(msg),
            BoundsError::BatchNotOptimal { .. } => Self::Data(msg),
            BoundsError::Batch { source, .. } | BoundsError::Instance(source) => classify(instance_is_numeric(source), msg),
            BoundsError::Oracle(o) => classify(oracle_is_numeric(o), msg),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        let msg = e.to_string();
        let kind = match e {
            BenchError::BadInput(_) => return Self::Usage(msg),
            BenchError::Solver { source, .. } => Self::from(source),
            BenchError::Evaluation { source, .. } => Self::from(source),
        };
        match kind {
            Self::Usage(_) => Self::Usage(msg),
            Self::Data(_) => Self::Data(msg),
            Self::Numeric(_) => Self::Numeric(msg),
        }
    }
}
