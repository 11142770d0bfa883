//! Logistic regression by iteratively reweighted least squares, with
//! robust/clustered sandwich errors, McFadden pseudo R-squared, BIC, and
//! the fixed-effect group-dropping rule for groups without outcome
//! variation.

use nalgebra::{DMatrix, DVector};

use super::design::{build_design, Design, ModelSpec};
use super::ols::{cov_kind, p_value_z, RegressionResult};
use super::solve::{cholesky_inverse, cholesky_solve, covariance, CovKind};
use super::table::DataTable;
use super::EconError;

pub const LOGIT_MAX_ITER: usize = 100;
pub const LOGIT_TOL: f64 = 1e-10;

/// Coefficient bound past which the likelihood is treated as divergent.
const SEPARATION_COEF_BOUND: f64 = 1e3;
/// A log-likelihood this close to zero means the data are perfectly fit.
const SEPARATION_LL_BOUND: f64 = -1e-6;

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

/// `ln(1 + exp(eta))` without overflow.
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

fn log_likelihood(y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    let mut ll = 0.0;
    for i in 0..y.len() {
        ll += y[i] * eta[i] - softplus(eta[i]);
    }
    ll
}

struct IrlsFit {
    beta: DVector<f64>,
    mu: DVector<f64>,
    bread: DMatrix<f64>,
    log_likelihood: f64,
    iterations: usize,
}

fn irls(design: &Design) -> Result<IrlsFit, EconError> {
    let n = design.n();
    let k = design.k();
    let x = &design.x;
    let y = &design.y;
    let mut beta = DVector::zeros(k);
    let mut ll_prev = f64::NEG_INFINITY;
    for iteration in 1..=LOGIT_MAX_ITER {
        let eta = x * &beta;
        let mu = eta.map(sigmoid);
        // Information matrix X' W X with W = mu (1 - mu).
        let mut info = DMatrix::zeros(k, k);
        let mut grad = DVector::zeros(k);
        for i in 0..n {
            let w = mu[i] * (1.0 - mu[i]);
            let r = y[i] - mu[i];
            let xi = x.row(i);
            for a in 0..k {
                grad[a] += r * xi[a];
                for b in a..k {
                    info[(a, b)] += w * xi[a] * xi[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                info[(a, b)] = info[(b, a)];
            }
        }
        let step = cholesky_solve(&info, &grad).ok_or(EconError::PerfectSeparation)?;
        beta += &step;

        let ll = log_likelihood(y, &(x * &beta));
        if ll > SEPARATION_LL_BOUND || beta.amax() > SEPARATION_COEF_BOUND {
            return Err(EconError::PerfectSeparation);
        }
        if (ll - ll_prev).abs() < LOGIT_TOL {
            let eta = x * &beta;
            let mu = eta.map(sigmoid);
            let mut info = DMatrix::zeros(k, k);
            for i in 0..n {
                let w = mu[i] * (1.0 - mu[i]);
                let xi = x.row(i);
                for a in 0..k {
                    for b in a..k {
                        info[(a, b)] += w * xi[a] * xi[b];
                    }
                }
            }
            for a in 0..k {
                for b in 0..a {
                    info[(a, b)] = info[(b, a)];
                }
            }
            let bread = cholesky_inverse(&info).ok_or(EconError::PerfectSeparation)?;
            return Ok(IrlsFit {
                beta,
                mu,
                bread,
                log_likelihood: ll,
                iterations: iteration,
            });
        }
        ll_prev = ll;
    }
    Err(EconError::NoConvergence {
        iterations: LOGIT_MAX_ITER,
    })
}

/// Rows to keep after repeatedly removing fixed-effect groups whose
/// remaining outcome has no variation. Returns the keep mask and the
/// dropped group labels as "column=level".
fn drop_invariant_fe_groups(
    table: &DataTable,
    spec: &ModelSpec,
) -> Result<(Option<Vec<bool>>, Vec<String>), EconError> {
    if spec.fixed_effects.is_empty() {
        return Ok((None, Vec::new()));
    }
    let outcome = table.numeric(&spec.outcome)?;
    let fe_keys: Vec<Vec<Option<String>>> = spec
        .fixed_effects
        .iter()
        .map(|name| table.group_keys(name))
        .collect::<Result<_, _>>()?;

    // Probe pass finds the listwise-complete rows without rank checking.
    let (probe, _) = build_design(table, spec, None, &[], false)?;
    let mut keep = vec![false; table.nrows()];
    for &i in &probe.rows {
        keep[i] = true;
    }

    let mut dropped = Vec::new();
    loop {
        let mut changed = false;
        for (fe_name, col) in spec.fixed_effects.iter().zip(&fe_keys) {
            use std::collections::BTreeMap;
            let mut spans: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
            for i in 0..keep.len() {
                if !keep[i] {
                    continue;
                }
                let Some(level) = col[i].as_deref() else { continue };
                let y = outcome[i].unwrap_or(f64::NAN);
                let entry = spans.entry(level).or_insert((false, false));
                if y == 0.0 {
                    entry.0 = true;
                } else {
                    entry.1 = true;
                }
            }
            let invariant: Vec<&str> = spans
                .iter()
                .filter(|(_, (has_zero, has_one))| !(*has_zero && *has_one))
                .map(|(level, _)| *level)
                .collect();
            if invariant.is_empty() {
                continue;
            }
            for level in &invariant {
                dropped.push(format!("{fe_name}={level}"));
            }
            for i in 0..keep.len() {
                if keep[i] && col[i].as_deref().is_some_and(|l| invariant.contains(&l)) {
                    keep[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dropped.sort();
    Ok((Some(keep), dropped))
}

/// Maximum-likelihood logit. Requires a strictly binary outcome with both
/// classes present; perfect separation is detected and reported.
pub fn logit(table: &DataTable, spec: &ModelSpec) -> Result<RegressionResult, EconError> {
    let (keep, dropped_fe_groups) = drop_invariant_fe_groups(table, spec)?;
    let (design, _) = build_design(table, spec, keep.as_deref(), &[], true)?;

    let mut has_zero = false;
    let mut has_one = false;
    for &v in design.y.iter() {
        if v == 0.0 {
            has_zero = true;
        } else if v == 1.0 {
            has_one = true;
        } else {
            return Err(EconError::InvalidSpec(format!(
                "outcome `{}` is not binary (saw {v})",
                spec.outcome
            )));
        }
    }
    if !has_zero || !has_one {
        return Err(EconError::Degenerate(format!(
            "outcome `{}` has no variation in the estimation sample",
            spec.outcome
        )));
    }

    let fit = irls(&design)?;
    let n = design.n();
    let k = design.k();
    let scores = &design.y - &fit.mu;
    let cov = match cov_kind(&spec.se, &design) {
        CovKind::Classical => {
            let t = fit.bread.transpose();
            (&fit.bread + t) * 0.5
        }
        kind => covariance(&fit.bread, &design.x, &scores, &kind),
    };

    let std_errors: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let coefficients: Vec<f64> = fit.beta.iter().copied().collect();
    let statistics: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(b, s)| if *s > 0.0 { b / s } else { f64::INFINITY * b.signum() })
        .collect();
    let p_values: Vec<f64> = statistics.iter().map(|z| p_value_z(*z)).collect();

    // McFadden pseudo R-squared against the intercept-only model.
    let p_bar = design.y.iter().sum::<f64>() / n as f64;
    let ll0 = n as f64 * (p_bar * p_bar.ln() + (1.0 - p_bar) * (1.0 - p_bar).ln());
    let pseudo_r_squared = 1.0 - fit.log_likelihood / ll0;
    let bic = -2.0 * fit.log_likelihood + k as f64 * (n as f64).ln();

    Ok(RegressionResult {
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
        statistic_kind: "z",
        r_squared: None,
        adj_r_squared: None,
        within_r_squared: None,
        nonstandard_r_squared: false,
        log_likelihood: Some(fit.log_likelihood),
        pseudo_r_squared: Some(pseudo_r_squared),
        bic: Some(bic),
        converged: Some(true),
        iterations: Some(fit.iterations),
        dropped_fe_groups,
        sample: spec.sample.clone(),
    })
}

/// Max-norm of the log-likelihood gradient at the reported optimum; used by
/// tests to confirm first-order conditions.
pub fn logit_gradient_norm(table: &DataTable, spec: &ModelSpec, result: &RegressionResult) -> Result<f64, EconError> {
    let (keep, _) = drop_invariant_fe_groups(table, spec)?;
    let (design, _) = build_design(table, spec, keep.as_deref(), &[], true)?;
    let beta = DVector::from_vec(result.coefficients.clone());
    let eta = &design.x * &beta;
    let mu = eta.map(sigmoid);
    let mut grad = DVector::zeros(design.k());
    for i in 0..design.n() {
        let r = design.y[i] - mu[i];
        for a in 0..design.k() {
            grad[a] += r * design.x[(i, a)];
        }
    }
    Ok(grad.amax())
}
