//! Ordinary least squares with classical, HC1-robust, or CR1
//! cluster-robust standard errors, fixed effects as dummies, and listwise
//! deletion of incomplete rows.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::design::{build_design, Design, ModelSpec, SeType};
use super::solve::{covariance, least_squares, CovKind};
use super::table::DataTable;
use super::EconError;

/// Estimates and inference for one fitted model. Linear fits populate the
/// R-squared family; logit fits populate the likelihood family.
#[derive(Debug, Clone, Serialize)]
pub struct RegressionResult {
    pub outcome: String,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// t statistics for linear models, z for logit.
    pub statistics: Vec<f64>,
    pub p_values: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub n: usize,
    pub k: usize,
    pub se_type: String,
    pub n_clusters: Option<usize>,
    pub statistic_kind: &'static str,
    pub r_squared: Option<f64>,
    pub adj_r_squared: Option<f64>,
    /// Share of the residual variation left by the fixed effects that the
    /// other covariates explain; only set when fixed effects are present.
    pub within_r_squared: Option<f64>,
    /// Marked when the residuals are structural (two-stage) residuals, so
    /// the R-squared lacks its usual interpretation.
    pub nonstandard_r_squared: bool,
    pub log_likelihood: Option<f64>,
    pub pseudo_r_squared: Option<f64>,
    pub bic: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    /// Fixed-effect groups dropped for lacking outcome variation (logit).
    pub dropped_fe_groups: Vec<String>,
    pub sample: Option<String>,
}

pub(crate) fn p_value_t(stat: f64, df: f64) -> f64 {
    if df <= 0.0 || !stat.is_finite() {
        return if stat.is_infinite() { 0.0 } else { f64::NAN };
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid df");
    2.0 * (1.0 - dist.cdf(stat.abs()))
}

pub(crate) fn p_value_z(stat: f64) -> f64 {
    if !stat.is_finite() {
        return if stat.is_infinite() { 0.0 } else { f64::NAN };
    }
    let dist = Normal::new(0.0, 1.0).expect("unit normal");
    2.0 * (1.0 - dist.cdf(stat.abs()))
}

pub(crate) fn cov_kind<'a>(se: &SeType, design: &'a Design) -> CovKind<'a> {
    match se {
        SeType::Classical => CovKind::Classical,
        SeType::Robust => CovKind::Hc1,
        SeType::Clustered(_) => CovKind::Cr1 {
            clusters: design.clusters.as_ref().expect("clustered design"),
            n_clusters: design.n_clusters,
        },
    }
}

/// Degrees of freedom used for t-based p-values: n - k classically, the
/// cluster count minus one under clustering.
pub(crate) fn t_df(se: &SeType, design: &Design) -> f64 {
    match se {
        SeType::Clustered(_) => design.n_clusters as f64 - 1.0,
        _ => (design.n() - design.k()) as f64,
    }
}

fn centered_r_squared(y: &DVector<f64>, residuals: &DVector<f64>) -> Option<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if sst <= 0.0 {
        return None;
    }
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    Some(1.0 - ssr / sst)
}

/// Core linear fit on a prepared design; shared by `ols` and the
/// two-stage-least-squares stages.
pub(crate) fn ols_on_design(
    outcome_label: String,
    design: &Design,
    se: &SeType,
    sample: Option<String>,
) -> Result<RegressionResult, EconError> {
    let n = design.n();
    let k = design.k();
    if n <= k {
        return Err(EconError::Degenerate(format!(
            "no residual degrees of freedom (n = {n}, k = {k})"
        )));
    }
    let fit = least_squares(&design.x, &design.y)?;
    let residuals = &design.y - &design.x * &fit.beta;
    let cov = covariance(&fit.xtx_inv, &design.x, &residuals, &cov_kind(se, design));
    let df = t_df(se, design);

    let std_errors: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let coefficients: Vec<f64> = fit.beta.iter().copied().collect();
    let statistics: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| if *s > 0.0 { b / s } else { f64::INFINITY * b.signum() })
        .collect();
    let p_values: Vec<f64> = statistics.iter().map(|t| p_value_t(*t, df)).collect();

    let r_squared = centered_r_squared(&design.y, &residuals);
    let adj_r_squared = r_squared.map(|r2| 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - k) as f64);

    Ok(RegressionResult {
        outcome: outcome_label,
        names: design.names.clone(),
        coefficients,
        std_errors,
        statistics,
        p_values,
        covariance: (0..k).map(|a| (0..k).map(|b| cov[(a, b)]).collect()).collect(),
        n,
        k,
        se_type: se.describe(),
        n_clusters: design.clusters.as_ref().map(|_| design.n_clusters),
        statistic_kind: "t",
        r_squared,
        adj_r_squared,
        within_r_squared: None,
        nonstandard_r_squared: false,
        log_likelihood: None,
        pseudo_r_squared: None,
        bic: None,
        converged: None,
        iterations: None,
        dropped_fe_groups: Vec::new(),
        sample,
    })
}

/// OLS per the model spec. With fixed effects present, the overall
/// R-squared of the dummy regression is reported, plus the within
/// R-squared (improvement over the fixed-effects-only fit) as a secondary
/// statistic.
pub fn ols(table: &DataTable, spec: &ModelSpec) -> Result<RegressionResult, EconError> {
    let (design, _) = build_design(table, spec, None, &[], true)?;
    let mut result = ols_on_design(spec.outcome_label(), &design, &spec.se, spec.sample.clone())?;

    if !spec.fixed_effects.is_empty() {
        let fe_only = ModelSpec {
            covariates: Vec::new(),
            ..spec.clone()
        };
        if let Ok((fe_design, _)) = build_design(table, &fe_only, None, &[], true) {
            if fe_design.rows == design.rows {
                if let Ok(fe_fit) = least_squares(&fe_design.x, &fe_design.y) {
                    let fe_resid = &fe_design.y - &fe_design.x * &fe_fit.beta;
                    let ssr_fe: f64 = fe_resid.iter().map(|e| e * e).sum();
                    let full_resid = &design.y - &design.x * DVector::from_vec(result.coefficients.clone());
                    let ssr_full: f64 = full_resid.iter().map(|e| e * e).sum();
                    if ssr_fe > 0.0 {
                        result.within_r_squared = Some(1.0 - ssr_full / ssr_fe);
                    }
                }
            }
        }
    }
    Ok(result)
}

/// Checks the covariance matrix is symmetric PSD within tolerance.
pub fn covariance_psd_gap(result: &RegressionResult) -> f64 {
    let k = result.k;
    let cov = DMatrix::from_fn(k, k, |a, b| result.covariance[a][b]);
    let eigen = cov.symmetric_eigen();
    eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
