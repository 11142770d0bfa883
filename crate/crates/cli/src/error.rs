//! Error classification for exit codes: 2 validation, 3 data, 4 numerical.

use std::fmt;

use eclab_core::complexity::ComplexityError;
use eclab_core::dynamics::DynamicsError;
use eclab_core::econometrics::EconError;
use eclab_core::ingest::IngestError;
use eclab_core::io::IoError;
use eclab_core::relatedness::RelatednessError;
use eclab_core::specialization::SpecializationError;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration; exit code 2.
    Validation(String),
    /// Unreadable or inconsistent input data; exit code 3.
    Data(String),
    /// Degenerate or non-convergent numerical problem; exit code 4.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn in_stage(self, stage: &str) -> CliError {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("stage {stage}: {m}")),
            CliError::Data(m) => CliError::Data(format!("stage {stage}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("stage {stage}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::InvalidParameter(_) => CliError::Validation(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<SpecializationError> for CliError {
    fn from(e: SpecializationError) -> Self {
        match e {
            SpecializationError::InvalidThreshold(_) => CliError::Validation(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ComplexityError> for CliError {
    fn from(e: ComplexityError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<RelatednessError> for CliError {
    fn from(e: RelatednessError) -> Self {
        match e {
            RelatednessError::InvalidThreshold(_) => CliError::Validation(e.to_string()),
            RelatednessError::ZeroUbiquity(_) | RelatednessError::LabelMismatch => {
                CliError::Data(e.to_string())
            }
            RelatednessError::ZeroDenominator(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::WindowOverlap(_) | DynamicsError::EmptyWindow => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EconError> for CliError {
    fn from(e: EconError) -> Self {
        match e {
            EconError::InvalidSpec(_) => CliError::Validation(e.to_string()),
            EconError::RankDeficient { .. }
            | EconError::PerfectSeparation
            | EconError::NoConvergence { .. }
            | EconError::Degenerate(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
