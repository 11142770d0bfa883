//! Regression estimators and diagnostics: OLS with robust and clustered
//! covariance, fixed effects as dummies, logit via iteratively reweighted
//! least squares, two-stage least squares with weak-instrument and
//! endogeneity diagnostics, the similarity instrument, and the grid runner
//! that produces the standard result tables.

use thiserror::Error;

pub mod design;
pub mod grid;
pub mod instrument;
pub mod iv;
pub mod logit;
pub mod ols;
mod solve;
pub mod table;

pub use design::{Covariate, ModelSpec, SeType, Transform};
pub use grid::{
    build_country_table, format_grid_text, format_table_text, run_model_grid, significance_stars,
    transition_table, ColumnFit, FitOutcome, GridOptions, GridResult, TableResult,
};
pub use instrument::{build_similarity_instrument, InstrumentResult, InstrumentValue};
pub use iv::{tsls, IvResult, WEAK_INSTRUMENT_F};
pub use logit::{logit, logit_gradient_norm, LOGIT_MAX_ITER, LOGIT_TOL};
pub use ols::{covariance_psd_gap, ols, RegressionResult};
pub use table::{Column, DataTable};

#[derive(Debug, Error)]
pub enum EconError {
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("column `{column}` is not {expected}")]
    ColumnType { column: String, expected: &'static str },
    #[error("column `{column}` does not match the table length")]
    LengthMismatch { column: String },
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),
    #[error("no observations remain after listwise deletion")]
    EmptySample,
    #[error("design matrix is rank deficient; collinear columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("outcome is perfectly separated; logit estimates diverge")]
    PerfectSeparation,
    #[error("estimation did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("degenerate estimation problem: {0}")]
    Degenerate(String),
}
