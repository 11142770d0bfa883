//! Model specifications and design-matrix assembly: transforms, listwise
//! deletion, fixed-effect dummy expansion with one dropped level per group,
//! a single global intercept, and a rank check that names the collinear
//! columns instead of silently dropping them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::table::DataTable;
use super::EconError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    Log,
    Square,
    LogSquare,
}

impl Transform {
    /// Applies the transform; out-of-domain inputs (log of a non-positive
    /// value) become NaN and the row falls to listwise deletion.
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Transform::None => v,
            Transform::Log => {
                if v > 0.0 {
                    v.ln()
                } else {
                    f64::NAN
                }
            }
            Transform::Square => v * v,
            Transform::LogSquare => {
                if v > 0.0 {
                    let l = v.ln();
                    l * l
                } else {
                    f64::NAN
                }
            }
        }
    }

    pub fn label(self, name: &str) -> String {
        match self {
            Transform::None => name.to_string(),
            Transform::Log => format!("log({name})"),
            Transform::Square => format!("{name}^2"),
            Transform::LogSquare => format!("log({name})^2"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    #[serde(default)]
    pub transform: Transform,
}

impl Covariate {
    pub fn raw(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            transform: Transform::None,
        }
    }

    pub fn log(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            transform: Transform::Log,
        }
    }

    pub fn log_square(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            transform: Transform::LogSquare,
        }
    }

    pub fn label(&self) -> String {
        self.transform.label(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeType {
    Classical,
    Robust,
    Clustered(String),
}

impl Default for SeType {
    fn default() -> Self {
        SeType::Robust
    }
}

impl SeType {
    pub fn describe(&self) -> String {
        match self {
            SeType::Classical => "classical".to_string(),
            SeType::Robust => "robust (HC1)".to_string(),
            SeType::Clustered(group) => format!("clustered by {group} (CR1)"),
        }
    }
}

/// Outcome, covariates with transforms, fixed-effect groups, and the
/// standard-error type. `sample` is a free-form tag recorded in results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub outcome: String,
    #[serde(default)]
    pub outcome_transform: Transform,
    pub covariates: Vec<Covariate>,
    #[serde(default)]
    pub fixed_effects: Vec<String>,
    #[serde(default)]
    pub se: SeType,
    #[serde(default)]
    pub sample: Option<String>,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<(), EconError> {
        if self.covariates.iter().any(|c| c.name == self.outcome) {
            return Err(EconError::InvalidSpec(format!(
                "outcome `{}` also appears as a covariate",
                self.outcome
            )));
        }
        if self.covariates.is_empty() {
            // intercept-only models are allowed for the logit null-model
            // identity, so nothing to check here
        }
        Ok(())
    }

    pub fn outcome_label(&self) -> String {
        self.outcome_transform.label(&self.outcome)
    }
}

/// Assembled design: outcome vector, design matrix (intercept first, then
/// covariates in spec order, then fixed-effect dummies), column names,
/// original row indices, and cluster codes when requested.
#[derive(Debug, Clone)]
pub struct Design {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
    /// Index into `names`/columns for each covariate in spec order.
    pub covariate_cols: Vec<usize>,
    /// First column index of the fixed-effect dummy block.
    pub fe_start: usize,
    pub rows: Vec<usize>,
    pub clusters: Option<Vec<usize>>,
    pub n_clusters: usize,
}

impl Design {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }
}

/// Modified Gram-Schmidt rank check with re-orthogonalization; columns that
/// fail to add a direction are reported by name.
pub(crate) fn rank_check(x: &DMatrix<f64>, names: &[String]) -> Result<(), EconError> {
    let k = x.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut dependent = Vec::new();
    for j in 0..k {
        let mut v = x.column(j).into_owned();
        let norm0 = v.norm();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&v);
                v -= b * c;
            }
        }
        if v.norm() <= norm0.max(f64::MIN_POSITIVE) * 1e-10 {
            dependent.push(names[j].clone());
        } else {
            let norm = v.norm();
            basis.push(v / norm);
        }
    }
    if dependent.is_empty() {
        Ok(())
    } else {
        Err(EconError::RankDeficient { columns: dependent })
    }
}

/// Builds the design for `spec` over `table`.
///
/// `keep`, when given, restricts the candidate rows (used by the logit
/// fixed-effect group-dropping loop). `extra_numeric` columns join the
/// listwise deletion and come back aligned to the retained rows (used for
/// instruments). `check_rank` disables the rank check for probe passes.
pub(crate) fn build_design(
    table: &DataTable,
    spec: &ModelSpec,
    keep: Option<&[bool]>,
    extra_numeric: &[&str],
    check_rank: bool,
) -> Result<(Design, Vec<Vec<f64>>), EconError> {
    spec.validate()?;
    let outcome_raw = table.numeric(&spec.outcome)?;
    let covariate_raw: Vec<&[Option<f64>]> = spec
        .covariates
        .iter()
        .map(|c| table.numeric(&c.name))
        .collect::<Result<_, _>>()?;
    let fe_keys: Vec<Vec<Option<String>>> = spec
        .fixed_effects
        .iter()
        .map(|name| table.group_keys(name))
        .collect::<Result<_, _>>()?;
    let cluster_keys: Option<Vec<Option<String>>> = match &spec.se {
        SeType::Clustered(group) => Some(table.group_keys(group)?),
        _ => None,
    };
    let extra_raw: Vec<&[Option<f64>]> = extra_numeric
        .iter()
        .map(|name| table.numeric(name))
        .collect::<Result<_, _>>()?;

    let nrows = table.nrows();
    if let Some(mask) = keep {
        debug_assert_eq!(mask.len(), nrows);
    }

    // Listwise deletion: a row is kept only if every referenced value is
    // present and every transform result is finite.
    let mut rows: Vec<usize> = Vec::new();
    for i in 0..nrows {
        if keep.is_some_and(|mask| !mask[i]) {
            continue;
        }
        let y = outcome_raw[i].map(|v| spec.outcome_transform.apply(v));
        if !y.is_some_and(f64::is_finite) {
            continue;
        }
        let covariates_ok = spec.covariates.iter().zip(&covariate_raw).all(|(c, col)| {
            col[i].map(|v| c.transform.apply(v)).is_some_and(f64::is_finite)
        });
        if !covariates_ok {
            continue;
        }
        if fe_keys.iter().any(|col| col[i].is_none()) {
            continue;
        }
        if cluster_keys.as_ref().is_some_and(|col| col[i].is_none()) {
            continue;
        }
        if extra_raw.iter().any(|col| !col[i].is_some_and(f64::is_finite)) {
            continue;
        }
        rows.push(i);
    }
    if rows.is_empty() {
        return Err(EconError::EmptySample);
    }

    // Fixed-effect dummy columns: levels sorted, first level dropped.
    let mut names = vec!["const".to_string()];
    let mut covariate_cols = Vec::with_capacity(spec.covariates.len());
    for c in &spec.covariates {
        covariate_cols.push(names.len());
        names.push(c.label());
    }
    let fe_start = names.len();
    let mut fe_dummy_levels: Vec<(usize, Vec<String>)> = Vec::new();
    for (fe_idx, (fe_name, col)) in spec.fixed_effects.iter().zip(&fe_keys).enumerate() {
        let mut levels: Vec<String> = rows
            .iter()
            .map(|&i| col[i].clone().expect("filtered above"))
            .collect();
        levels.sort();
        levels.dedup();
        let dummies: Vec<String> = levels.iter().skip(1).cloned().collect();
        for level in &dummies {
            names.push(format!("{fe_name}={level}"));
        }
        fe_dummy_levels.push((fe_idx, dummies));
    }

    let n = rows.len();
    let k = names.len();
    let mut x = DMatrix::zeros(n, k);
    let mut y = DVector::zeros(n);
    for (r, &i) in rows.iter().enumerate() {
        y[r] = spec.outcome_transform.apply(outcome_raw[i].expect("filtered"));
        x[(r, 0)] = 1.0;
        for (c_idx, (c, col)) in spec.covariates.iter().zip(&covariate_raw).enumerate() {
            x[(r, covariate_cols[c_idx])] = c.transform.apply(col[i].expect("filtered"));
        }
        let mut col_offset = fe_start;
        for (fe_idx, dummies) in &fe_dummy_levels {
            let level = fe_keys[*fe_idx][i].as_ref().expect("filtered");
            if let Some(pos) = dummies.iter().position(|d| d == level) {
                x[(r, col_offset + pos)] = 1.0;
            }
            col_offset += dummies.len();
        }
    }

    if check_rank {
        rank_check(&x, &names)?;
    }

    // Cluster codes in first-appearance order over the retained rows.
    let (clusters, n_clusters) = match &cluster_keys {
        Some(col) => {
            let mut codes = Vec::with_capacity(n);
            let mut index: Vec<String> = Vec::new();
            for &i in &rows {
                let key = col[i].as_ref().expect("filtered");
                let code = match index.iter().position(|k| k == key) {
                    Some(pos) => pos,
                    None => {
                        index.push(key.clone());
                        index.len() - 1
                    }
                };
                codes.push(code);
            }
            let count = index.len();
            (Some(codes), count)
        }
        None => (None, 0),
    };

    let extras: Vec<Vec<f64>> = extra_raw
        .iter()
        .map(|col| rows.iter().map(|&i| col[i].expect("filtered")).collect())
        .collect();

    Ok((
        Design {
            y,
            x,
            names,
            covariate_cols,
            fe_start,
            rows,
            clusters,
            n_clusters,
        },
        extras,
    ))
}
