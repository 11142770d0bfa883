//! Two-stage least squares for the just-identified case (one endogenous
//! regressor, one excluded instrument), with the robust first-stage F and
//! the control-function endogeneity test.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::design::{build_design, Design, ModelSpec};
use super::ols::{cov_kind, ols_on_design, p_value_t, t_df, RegressionResult};
use super::solve::{covariance, least_squares};
use super::table::DataTable;
use super::EconError;

/// Instruments weaker than this first-stage F trigger a warning.
pub const WEAK_INSTRUMENT_F: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct IvResult {
    pub second_stage: RegressionResult,
    pub first_stage: RegressionResult,
    pub endogenous: String,
    pub instrument: String,
    /// Robust Wald statistic on the excluded instrument in the first
    /// stage; in this just-identified single-endogenous setting it equals
    /// the rank-based weak-instrument statistic.
    pub weak_instrument_f: f64,
    pub weak_instrument_warning: bool,
    /// Control-function test: robust t statistic on the first-stage
    /// residual added to the structural equation, with its p-value.
    pub dwh_statistic: f64,
    pub dwh_p_value: f64,
}

fn design_without_column(design: &Design, col: usize) -> (DMatrix<f64>, Vec<String>) {
    let n = design.n();
    let k = design.k();
    let mut x = DMatrix::zeros(n, k - 1);
    let mut names = Vec::with_capacity(k - 1);
    let mut out = 0;
    for j in 0..k {
        if j == col {
            continue;
        }
        x.set_column(out, &design.x.column(j));
        names.push(design.names[j].clone());
        out += 1;
    }
    (x, names)
}

fn append_column(x: &DMatrix<f64>, col: &DVector<f64>, names: &[String], name: &str) -> (DMatrix<f64>, Vec<String>) {
    let n = x.nrows();
    let k = x.ncols();
    let mut out = DMatrix::zeros(n, k + 1);
    for j in 0..k {
        out.set_column(j, &x.column(j));
    }
    out.set_column(k, col);
    let mut out_names = names.to_vec();
    out_names.push(name.to_string());
    (out, out_names)
}

/// Two-stage least squares. `endogenous` must name one of the spec's
/// covariates; `instrument` is a numeric column excluded from the
/// structural equation. Second-stage standard errors use the structural
/// residuals (actual regressor, 2SLS coefficients), not the fitted-stage
/// residuals.
pub fn tsls(
    table: &DataTable,
    spec: &ModelSpec,
    endogenous: &str,
    instrument: &str,
) -> Result<IvResult, EconError> {
    let endog_pos = spec
        .covariates
        .iter()
        .position(|c| c.name == endogenous)
        .ok_or_else(|| {
            EconError::InvalidSpec(format!("endogenous `{endogenous}` is not among the covariates"))
        })?;
    if spec.covariates.iter().any(|c| c.name == instrument) || spec.outcome == instrument {
        return Err(EconError::InvalidSpec(format!(
            "instrument `{instrument}` must be excluded from the structural equation"
        )));
    }

    let (design, extras) = build_design(table, spec, None, &[instrument], true)?;
    let z = DVector::from_vec(extras.into_iter().next().expect("one extra column"));
    let endog_col = design.covariate_cols[endog_pos];
    let endog = design.x.column(endog_col).into_owned();

    // First stage: endogenous on exogenous design plus the instrument.
    let (exog, exog_names) = design_without_column(&design, endog_col);
    let (x1, names1) = append_column(&exog, &z, &exog_names, &format!("instrument:{instrument}"));
    let first_design = Design {
        y: endog.clone(),
        x: x1,
        names: names1,
        covariate_cols: Vec::new(),
        fe_start: design.fe_start,
        rows: design.rows.clone(),
        clusters: design.clusters.clone(),
        n_clusters: design.n_clusters,
    };
    super::design::rank_check(&first_design.x, &first_design.names)?;
    let first_stage = ols_on_design(
        spec.covariates[endog_pos].label(),
        &first_design,
        &spec.se,
        spec.sample.clone(),
    )?;
    let iv_idx = first_stage.names.len() - 1;
    let f_stat = {
        let t = first_stage.statistics[iv_idx];
        t * t
    };

    // Second stage on the fitted endogenous column.
    let beta1 = DVector::from_vec(first_stage.coefficients.clone());
    let fitted_endog = &first_design.x * &beta1;
    let mut x_hat = design.x.clone();
    x_hat.set_column(endog_col, &fitted_endog);

    let n = design.n();
    let k = design.k();
    if n <= k {
        return Err(EconError::Degenerate(format!(
            "no residual degrees of freedom (n = {n}, k = {k})"
        )));
    }
    let fit = least_squares(&x_hat, &design.y)?;
    // Structural residuals: actual regressors, 2SLS coefficients.
    let residuals = &design.y - &design.x * &fit.beta;
    let cov = covariance(&fit.xtx_inv, &x_hat, &residuals, &cov_kind(&spec.se, &design));
    let df = t_df(&spec.se, &design);
    let std_errors: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let coefficients: Vec<f64> = fit.beta.iter().copied().collect();
    let statistics: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| if *s > 0.0 { b / s } else { f64::INFINITY * b.signum() })
        .collect();
    let p_values: Vec<f64> = statistics.iter().map(|t| p_value_t(*t, df)).collect();

    let mean_y = design.y.iter().sum::<f64>() / n as f64;
    let sst: f64 = design.y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let r_squared = if sst > 0.0 { Some(1.0 - ssr / sst) } else { None };
    let adj_r_squared = r_squared.map(|r2| 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - k) as f64);

    let second_stage = RegressionResult {
        outcome: spec.outcome_label(),
        names: design.names.clone(),
        coefficients,
        std_errors,
        statistics,
        p_values,
        covariance: (0..k).map(|a| (0..k).map(|b| cov[(a, b)]).collect()).collect(),
        n,
        k,
        se_type: spec.se.describe(),
        n_clusters: design.clusters.as_ref().map(|_| design.n_clusters),
        statistic_kind: "t",
        r_squared,
        adj_r_squared,
        within_r_squared: None,
        nonstandard_r_squared: true,
        log_likelihood: None,
        pseudo_r_squared: None,
        bic: None,
        converged: None,
        iterations: None,
        dropped_fe_groups: Vec::new(),
        sample: spec.sample.clone(),
    };

    // Endogeneity test via the control function: add the first-stage
    // residual to the structural OLS and test its coefficient. A
    // numerically zero residual (instrument identical to the regressor)
    // carries no information, so the test trivially does not reject.
    let v_hat = &endog - &fitted_endog;
    let scale = endog.amax().max(1.0);
    let (dwh_statistic, dwh_p_value) = if v_hat.amax() <= scale * 1e-12 {
        (0.0, 1.0)
    } else {
        let (x_cf, names_cf) = append_column(&design.x, &v_hat, &design.names, "first_stage_residual");
        super::design::rank_check(&x_cf, &names_cf)?;
        let cf_design = Design {
            y: design.y.clone(),
            x: x_cf,
            names: names_cf,
            covariate_cols: Vec::new(),
            fe_start: design.fe_start,
            rows: design.rows.clone(),
            clusters: design.clusters.clone(),
            n_clusters: design.n_clusters,
        };
        let cf = ols_on_design(spec.outcome_label(), &cf_design, &spec.se, None)?;
        let idx = cf.names.len() - 1;
        (cf.statistics[idx], cf.p_values[idx])
    };

    Ok(IvResult {
        first_stage,
        endogenous: endogenous.to_string(),
        instrument: instrument.to_string(),
        weak_instrument_f: f_stat,
        weak_instrument_warning: f_stat < WEAK_INSTRUMENT_F,
        dwh_statistic,
        dwh_p_value,
        second_stage,
    })
}
