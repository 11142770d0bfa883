//! Country and activity complexity scores.
//!
//! Both methods compute the same object: the standardized coordinates of
//! the second eigenvector of the row-stochastic country-country matrix
//! induced by a specialization matrix. [`compute_complexity_fixed_point`]
//! iterates the mutual-averaging map (re-standardizing each round) until
//! the country scores stop moving; [`compute_complexity_eigen`] solves the
//! eigenproblem directly. Activity scores are one application of the
//! activity map to the final country scores, so the returned pair always
//! satisfies the map.
//!
//! The country-country matrix `D^-1 S` (with `S` the co-specialization
//! Gram matrix weighted by inverse ubiquity and `D` the diagonal of
//! diversities) is similar to the symmetric PSD matrix
//! `B = D^-1/2 S D^-1/2`, so the eigen path works on `B` with the known
//! constant-direction eigenvector deflated away. Dense solves are used up
//! to [`DENSE_EIGEN_LIMIT`] entities, deflated power iteration above.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::specialization::SpecializationMatrix;
use crate::stats;

/// Above this many countries the eigen path switches from a dense solve to
/// deflated power iteration.
pub const DENSE_EIGEN_LIMIT: usize = 2000;

const REPEATED_EIGENVALUE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ComplexityError {
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("second eigenvalue is repeated (gap {gap:.3e}); scores are not identified")]
    RepeatedEigenvalue { gap: f64 },
    #[error("series is constant; cannot rescale")]
    ConstantSeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FixedPoint,
    Eigen,
}

/// Paired country (ECI) and activity (PCI) scores with solver diagnostics.
#[derive(Debug, Clone)]
pub struct ComplexityScores {
    pub countries: Vec<String>,
    pub activities: Vec<String>,
    /// Country coordinate before the final standardization.
    pub eci_raw: Vec<f64>,
    pub eci_z: Vec<f64>,
    /// Activity coordinate before standardization (one activity-map
    /// application to `eci_z`).
    pub pci_raw: Vec<f64>,
    pub pci_z: Vec<f64>,
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
    /// Second eigenvalue of the country-country matrix (eigen method only).
    pub second_eigenvalue: Option<f64>,
    pub warnings: Vec<String>,
}

fn validate_margins(m: &SpecializationMatrix) -> Result<(), ComplexityError> {
    if let Some(idx) = m.diversity().iter().position(|&k| k == 0) {
        return Err(ComplexityError::DegenerateSpectrum(format!(
            "country `{}` has zero diversity",
            m.countries()[idx]
        )));
    }
    if let Some(idx) = m.ubiquity().iter().position(|&k| k == 0) {
        return Err(ComplexityError::DegenerateSpectrum(format!(
            "activity `{}` has zero ubiquity",
            m.activities()[idx]
        )));
    }
    if m.countries().len() < 2 || m.activities().len() < 2 {
        return Err(ComplexityError::DegenerateSpectrum(
            "need at least two countries and two activities".into(),
        ));
    }
    let entries = m.entries();
    let all_rows_identical = (1..entries.nrows())
        .all(|i| (0..entries.ncols()).all(|j| entries[(i, j)] == entries[(0, j)]));
    if all_rows_identical {
        return Err(ComplexityError::DegenerateSpectrum(
            "all country rows are identical; scores have zero variance".into(),
        ));
    }
    Ok(())
}

/// True when every pair of countries is linked through shared
/// specializations. When false the second eigenvector is a component
/// indicator rather than a ranking; callers get a warning and proceed.
fn country_graph_connected(m: &SpecializationMatrix) -> bool {
    let entries = m.entries();
    let n = entries.nrows();
    let mut visited = vec![false; n];
    let mut stack = vec![0usize];
    visited[0] = true;
    let mut seen = 1;
    while let Some(c) = stack.pop() {
        for other in 0..n {
            if visited[other] {
                continue;
            }
            let linked = (0..entries.ncols()).any(|l| entries[(c, l)] == 1 && entries[(other, l)] == 1);
            if linked {
                visited[other] = true;
                seen += 1;
                stack.push(other);
            }
        }
    }
    seen == n
}

fn activity_map(m: &SpecializationMatrix, eci: &[f64]) -> Vec<f64> {
    let entries = m.entries();
    (0..entries.ncols())
        .map(|l| {
            let mut acc = 0.0;
            for c in 0..entries.nrows() {
                if entries[(c, l)] == 1 {
                    acc += eci[c];
                }
            }
            acc / m.ubiquity()[l] as f64
        })
        .collect()
}

fn country_map(m: &SpecializationMatrix, pci: &[f64]) -> Vec<f64> {
    let entries = m.entries();
    (0..entries.nrows())
        .map(|c| {
            let mut acc = 0.0;
            for l in 0..entries.ncols() {
                if entries[(c, l)] == 1 {
                    acc += pci[l];
                }
            }
            acc / m.diversity()[c] as f64
        })
        .collect()
}

fn standardize_or_degenerate(values: &[f64], what: &str) -> Result<Vec<f64>, ComplexityError> {
    stats::standardize(values)
        .ok_or_else(|| ComplexityError::DegenerateSpectrum(format!("{what} has zero variance")))
}

/// Flips the sign of the country scores so they correlate nonnegatively
/// with diversity, then derives the activity scores from the oriented
/// country scores.
fn orient_and_finish(
    m: &SpecializationMatrix,
    mut eci_raw: Vec<f64>,
    mut eci_z: Vec<f64>,
    method: Method,
    iterations: usize,
    residual: f64,
    second_eigenvalue: Option<f64>,
    warnings: Vec<String>,
) -> Result<ComplexityScores, ComplexityError> {
    let diversity: Vec<f64> = m.diversity().iter().map(|&k| k as f64).collect();
    let corr = stats::pearson(&eci_z, &diversity);
    if corr.is_finite() && corr < 0.0 {
        for v in eci_z.iter_mut() {
            *v = -*v;
        }
        for v in eci_raw.iter_mut() {
            *v = -*v;
        }
    }
    let pci_raw = activity_map(m, &eci_z);
    let pci_z = standardize_or_degenerate(&pci_raw, "activity score vector")?;
    Ok(ComplexityScores {
        countries: m.countries().to_vec(),
        activities: m.activities().to_vec(),
        eci_raw,
        eci_z,
        pci_raw,
        pci_z,
        method,
        iterations,
        residual,
        second_eigenvalue,
        warnings,
    })
}

fn base_warnings(m: &SpecializationMatrix) -> Vec<String> {
    if country_graph_connected(m) {
        Vec::new()
    } else {
        vec!["country co-specialization graph is disconnected; scores indicate components".to_string()]
    }
}

/// Iterates the mutual-averaging map from standardized diversity until the
/// country z-scores change by less than `tol` in the max norm.
pub fn compute_complexity_fixed_point(
    m: &SpecializationMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<ComplexityScores, ComplexityError> {
    validate_margins(m)?;
    let warnings = base_warnings(m);

    let diversity: Vec<f64> = m.diversity().iter().map(|&k| k as f64).collect();
    // Standardized diversity seeds the iteration; when diversity is flat
    // (possible on disconnected matrices) fall back to the label-order
    // index vector, which is deterministic and non-constant.
    let mut eci_z = match stats::standardize(&diversity) {
        Some(z) => z,
        None => {
            let index: Vec<f64> = (0..diversity.len()).map(|i| i as f64).collect();
            standardize_or_degenerate(&index, "fallback seed")?
        }
    };
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        let pci_raw = activity_map(m, &eci_z);
        let pci_z = standardize_or_degenerate(&pci_raw, "activity score vector")?;
        let next_raw = country_map(m, &pci_z);
        let next_z = standardize_or_degenerate(&next_raw, "country score vector")?;
        residual = eci_z
            .iter()
            .zip(&next_z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        eci_z = next_z;
        if residual < tol {
            return orient_and_finish(m, next_raw, eci_z, Method::FixedPoint, iteration, residual, None, warnings);
        }
    }
    Err(ComplexityError::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// The symmetric similarity transform of the country-country matrix with
/// the constant direction deflated: `B' = B - u1 u1^T`.
fn deflated_symmetric_matrix(m: &SpecializationMatrix) -> (DMatrix<f64>, DVector<f64>, Vec<f64>) {
    let entries = m.entries();
    let n = entries.nrows();
    let inv_sqrt_div: Vec<f64> = m.diversity().iter().map(|&k| 1.0 / (k as f64).sqrt()).collect();
    let inv_ubiquity: Vec<f64> = m.ubiquity().iter().map(|&k| 1.0 / k as f64).collect();

    let mut s = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let mut acc = 0.0;
            for l in 0..entries.ncols() {
                if entries[(a, l)] == 1 && entries[(b, l)] == 1 {
                    acc += inv_ubiquity[l];
                }
            }
            let value = acc * inv_sqrt_div[a] * inv_sqrt_div[b];
            s[(a, b)] = value;
            s[(b, a)] = value;
        }
    }

    // Known eigenvector of B at eigenvalue 1: D^{1/2} 1, normalized.
    let mut u1 = DVector::from_fn(n, |i, _| (m.diversity()[i] as f64).sqrt());
    u1 /= u1.norm();
    for a in 0..n {
        for b in 0..n {
            s[(a, b)] -= u1[a] * u1[b];
        }
    }
    (s, u1, inv_sqrt_div)
}

fn top_two_eigenpairs_dense(b: &DMatrix<f64>) -> ((f64, DVector<f64>), f64) {
    let eigen = b.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eigen.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eigen.eigenvalues[j]
            .partial_cmp(&eigen.eigenvalues[i])
            .expect("finite eigenvalues")
    });
    let top = order[0];
    let second = eigen.eigenvalues[order[1]];
    ((eigen.eigenvalues[top], eigen.eigenvectors.column(top).into_owned()), second)
}

fn power_iteration(b: &DMatrix<f64>, seed: &DVector<f64>, max_iter: usize) -> (f64, DVector<f64>, usize, f64) {
    let mut v = seed.clone();
    v /= v.norm();
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iter {
        let mut w = b * &v;
        lambda = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return (0.0, v, iteration, 0.0);
        }
        w /= norm;
        if w.dot(&v) < 0.0 {
            w = -w;
        }
        residual = (&w - &v).amax();
        v = w;
        if residual < 1e-13 {
            return (lambda, v, iteration, residual);
        }
    }
    (lambda, v, max_iter, residual)
}

fn top_two_eigenpairs_power(b: &DMatrix<f64>) -> ((f64, DVector<f64>), f64, usize, f64) {
    let n = b.nrows();
    let seed = DVector::from_fn(n, |i, _| i as f64 - (n as f64 - 1.0) / 2.0);
    let (lambda, v, iters, residual) = power_iteration(b, &seed, 10_000);
    // Deflate the found pair to estimate the next eigenvalue for the
    // multiplicity check.
    let deflated = b - lambda * (&v * v.transpose());
    let seed2 = DVector::from_fn(n, |i, _| ((i * 7919 + 13) % n) as f64 - (n as f64 - 1.0) / 2.0);
    let (lambda2, _, _, _) = power_iteration(&deflated, &seed2, 10_000);
    ((lambda, v), lambda2, iters, residual)
}

/// Solves the country-country eigenproblem directly: the country scores are
/// the standardized second eigenvector, and the second eigenvalue is
/// reported. A repeated second eigenvalue is an error rather than an
/// arbitrary basis choice.
pub fn compute_complexity_eigen(m: &SpecializationMatrix) -> Result<ComplexityScores, ComplexityError> {
    validate_margins(m)?;
    let warnings = base_warnings(m);
    let n = m.countries().len();
    let (b, _u1, inv_sqrt_div) = deflated_symmetric_matrix(m);

    let ((lambda, u), next_lambda, iterations, residual) = if n <= DENSE_EIGEN_LIMIT {
        let (top, second) = top_two_eigenpairs_dense(&b);
        (top, second, 0, 0.0)
    } else {
        let (top, second, iters, res) = top_two_eigenpairs_power(&b);
        (top, second, iters, res)
    };

    let gap = (lambda - next_lambda).abs();
    if gap < REPEATED_EIGENVALUE_TOL {
        return Err(ComplexityError::RepeatedEigenvalue { gap });
    }

    // Transform back from the symmetric similarity space.
    let eci_raw: Vec<f64> = (0..n).map(|i| u[i] * inv_sqrt_div[i]).collect();
    let eci_z = standardize_or_degenerate(&eci_raw, "country score vector")?;
    orient_and_finish(m, eci_raw, eci_z, Method::Eigen, iterations, residual, Some(lambda), warnings)
}

/// Scores rescaled onto [-1, 1]: the minimum maps to -1, the maximum to +1.
#[derive(Debug, Clone, Serialize)]
pub struct RescaledScores {
    pub values: Vec<f64>,
    pub source_min: f64,
    pub source_max: f64,
}

pub fn rescale_minmax(values: &[f64]) -> Result<RescaledScores, ComplexityError> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(ComplexityError::ConstantSeries);
    }
    let values = values.iter().map(|v| 2.0 * (v - min) / (max - min) - 1.0).collect();
    Ok(RescaledScores {
        values,
        source_min: min,
        source_max: max,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RankEntry {
    pub rank: usize,
    pub entity: String,
    pub score: f64,
}

/// Ranks entities by descending score, ties broken by entity code; ranks
/// are 1-based positions, not averaged.
pub fn rank_table(entities: &[String], scores: &[f64]) -> Vec<RankEntry> {
    assert_eq!(entities.len(), scores.len());
    let mut order: Vec<usize> = (0..entities.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite scores")
            .then_with(|| entities[a].cmp(&entities[b]))
    });
    order
        .into_iter()
        .enumerate()
        .map(|(pos, idx)| RankEntry {
            rank: pos + 1,
            entity: entities[idx].clone(),
            score: scores[idx],
        })
        .collect()
}
