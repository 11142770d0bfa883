//! Count matrices, revealed comparative advantage, and binary
//! specialization matrices with their diversity/ubiquity margins.
//!
//! All reductions run in label order so results are bit-identical across
//! runs regardless of thread count.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::ingest::YearlyCounts;

#[derive(Debug, Error)]
pub enum SpecializationError {
    #[error("year {0} not present in the data")]
    YearNotFound(i32),
    #[error("matrix is empty after dropping zero rows/columns")]
    EmptyMatrix,
    #[error("degenerate specialization matrix: {0}")]
    DegenerateMatrix(String),
    #[error("labels do not match matrix dimensions ({0})")]
    ShapeMismatch(String),
    #[error("matrix entry at ({0}, {1}) is not binary")]
    NonBinaryEntry(usize, usize),
    #[error("invalid threshold {0}: must be positive")]
    InvalidThreshold(f64),
}

/// Countries and activities dropped at construction because their row or
/// column summed to zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DropReport {
    pub countries: Vec<String>,
    pub activities: Vec<String>,
}

impl DropReport {
    pub fn is_empty(&self) -> bool {
        self.countries.is_empty() && self.activities.is_empty()
    }
}

/// Nonnegative country-by-activity counts for one period. Rows and columns
/// are ordered by descending total (ties lexicographic); zero rows and
/// columns are dropped at construction and reported.
#[derive(Debug, Clone)]
pub struct CountMatrix {
    countries: Vec<String>,
    activities: Vec<String>,
    counts: DMatrix<f64>,
    year: i32,
    dropped: DropReport,
}

impl CountMatrix {
    /// Builds directly from labels and raw counts, applying the same
    /// zero-margin drop and label ordering as the pivot path.
    pub fn new(
        countries: Vec<String>,
        activities: Vec<String>,
        counts: DMatrix<f64>,
        year: i32,
    ) -> Result<Self, SpecializationError> {
        if counts.nrows() != countries.len() || counts.ncols() != activities.len() {
            return Err(SpecializationError::ShapeMismatch(format!(
                "{}x{} counts vs {} countries, {} activities",
                counts.nrows(),
                counts.ncols(),
                countries.len(),
                activities.len()
            )));
        }
        if counts.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SpecializationError::DegenerateMatrix(
                "counts must be finite and nonnegative".into(),
            ));
        }

        let mut dropped = DropReport::default();
        let keep_rows: Vec<usize> = (0..counts.nrows())
            .filter(|&i| {
                let keep = (0..counts.ncols()).any(|j| counts[(i, j)] > 0.0);
                if !keep {
                    dropped.countries.push(countries[i].clone());
                }
                keep
            })
            .collect();
        let keep_cols: Vec<usize> = (0..counts.ncols())
            .filter(|&j| {
                let keep = keep_rows.iter().any(|&i| counts[(i, j)] > 0.0);
                if !keep {
                    dropped.activities.push(activities[j].clone());
                }
                keep
            })
            .collect();
        if keep_rows.is_empty() || keep_cols.is_empty() {
            return Err(SpecializationError::EmptyMatrix);
        }

        // Order labels by descending total, ties lexicographic.
        let row_total = |i: usize| keep_cols.iter().map(|&j| counts[(i, j)]).sum::<f64>();
        let col_total = |j: usize| keep_rows.iter().map(|&i| counts[(i, j)]).sum::<f64>();
        let mut row_order = keep_rows.clone();
        row_order.sort_by(|&a, &b| {
            row_total(b)
                .partial_cmp(&row_total(a))
                .expect("finite totals")
                .then_with(|| countries[a].cmp(&countries[b]))
        });
        let mut col_order = keep_cols.clone();
        col_order.sort_by(|&a, &b| {
            col_total(b)
                .partial_cmp(&col_total(a))
                .expect("finite totals")
                .then_with(|| activities[a].cmp(&activities[b]))
        });

        let matrix = DMatrix::from_fn(row_order.len(), col_order.len(), |i, j| {
            counts[(row_order[i], col_order[j])]
        });
        Ok(Self {
            countries: row_order.iter().map(|&i| countries[i].clone()).collect(),
            activities: col_order.iter().map(|&j| activities[j].clone()).collect(),
            counts: matrix,
            year,
            dropped,
        })
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn counts(&self) -> &DMatrix<f64> {
        &self.counts
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn dropped(&self) -> &DropReport {
        &self.dropped
    }

    pub fn get(&self, country: &str, activity: &str) -> Option<f64> {
        let i = self.countries.iter().position(|c| c == country)?;
        let j = self.activities.iter().position(|a| a == activity)?;
        Some(self.counts[(i, j)])
    }
}

/// Pivots yearly counts into a count matrix for one year.
pub fn build_count_matrix(yearly: &YearlyCounts, year: i32) -> Result<CountMatrix, SpecializationError> {
    let mut countries: Vec<String> = Vec::new();
    let mut activities: Vec<String> = Vec::new();
    let mut country_idx: BTreeMap<&str, usize> = BTreeMap::new();
    let mut activity_idx: BTreeMap<&str, usize> = BTreeMap::new();
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    let mut saw_year = false;
    for row in &yearly.rows {
        if row.year != year {
            continue;
        }
        saw_year = true;
        let ci = *country_idx.entry(row.country.as_str()).or_insert_with(|| {
            countries.push(row.country.clone());
            countries.len() - 1
        });
        let ai = *activity_idx.entry(row.language.as_str()).or_insert_with(|| {
            activities.push(row.language.clone());
            activities.len() - 1
        });
        cells.push((ci, ai, row.developers));
    }
    if !saw_year {
        return Err(SpecializationError::YearNotFound(year));
    }
    let mut counts = DMatrix::zeros(countries.len(), activities.len());
    for (i, j, v) in cells {
        counts[(i, j)] += v;
    }
    CountMatrix::new(countries, activities, counts, year)
}

/// Revealed comparative advantage: each entry is the country's share of the
/// activity relative to the activity's share of the total.
#[derive(Debug, Clone)]
pub struct RcaMatrix {
    countries: Vec<String>,
    activities: Vec<String>,
    values: DMatrix<f64>,
    year: Option<i32>,
}

impl RcaMatrix {
    /// Wraps precomputed RCA values (e.g. loaded from a file).
    pub fn from_parts(
        countries: Vec<String>,
        activities: Vec<String>,
        values: DMatrix<f64>,
        year: Option<i32>,
    ) -> Result<Self, SpecializationError> {
        if values.nrows() != countries.len() || values.ncols() != activities.len() {
            return Err(SpecializationError::ShapeMismatch(format!(
                "{}x{} values vs {} countries, {} activities",
                values.nrows(),
                values.ncols(),
                countries.len(),
                activities.len()
            )));
        }
        Ok(Self {
            countries,
            activities,
            values,
            year,
        })
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn year(&self) -> Option<i32> {
        self.year
    }

    /// Checks the weighted identity sum(R * row_total * col_total) / total^2 = 1.
    pub fn weighted_identity_gap(&self, x: &CountMatrix) -> f64 {
        let counts = x.counts();
        let total: f64 = counts.iter().sum();
        let row_totals: Vec<f64> = (0..counts.nrows())
            .map(|i| (0..counts.ncols()).map(|j| counts[(i, j)]).sum())
            .collect();
        let col_totals: Vec<f64> = (0..counts.ncols())
            .map(|j| (0..counts.nrows()).map(|i| counts[(i, j)]).sum())
            .collect();
        let mut acc = 0.0;
        for i in 0..self.values.nrows() {
            for j in 0..self.values.ncols() {
                acc += self.values[(i, j)] * row_totals[i] * col_totals[j];
            }
        }
        (acc / (total * total) - 1.0).abs()
    }
}

/// Computes the RCA matrix. The count matrix guarantees no zero row or
/// column, so every denominator is positive.
pub fn rca(x: &CountMatrix) -> RcaMatrix {
    let counts = x.counts();
    let (n, m) = (counts.nrows(), counts.ncols());
    let total: f64 = counts.iter().sum();
    let row_totals: Vec<f64> = (0..n).map(|i| (0..m).map(|j| counts[(i, j)]).sum()).collect();
    let col_totals: Vec<f64> = (0..m).map(|j| (0..n).map(|i| counts[(i, j)]).sum()).collect();
    let values = DMatrix::from_fn(n, m, |i, j| counts[(i, j)] * total / (row_totals[i] * col_totals[j]));
    RcaMatrix {
        countries: x.countries().to_vec(),
        activities: x.activities().to_vec(),
        values,
        year: Some(x.year()),
    }
}

/// Binary country-by-activity specialization matrix with cached margins.
/// Zero rows or columns are allowed only for panel alignment (absent
/// entities in a given year); matrices produced by [`binarize`] never have
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecializationMatrix {
    countries: Vec<String>,
    activities: Vec<String>,
    entries: DMatrix<u8>,
    diversity: Vec<u32>,
    ubiquity: Vec<u32>,
    year: Option<i32>,
}

impl SpecializationMatrix {
    /// Builds from a binary matrix, validating entries and caching margins.
    pub fn from_binary(
        countries: Vec<String>,
        activities: Vec<String>,
        entries: DMatrix<u8>,
        year: Option<i32>,
    ) -> Result<Self, SpecializationError> {
        if entries.nrows() != countries.len() || entries.ncols() != activities.len() {
            return Err(SpecializationError::ShapeMismatch(format!(
                "{}x{} entries vs {} countries, {} activities",
                entries.nrows(),
                entries.ncols(),
                countries.len(),
                activities.len()
            )));
        }
        for i in 0..entries.nrows() {
            for j in 0..entries.ncols() {
                if entries[(i, j)] > 1 {
                    return Err(SpecializationError::NonBinaryEntry(i, j));
                }
            }
        }
        let diversity = (0..entries.nrows())
            .map(|i| (0..entries.ncols()).map(|j| entries[(i, j)] as u32).sum())
            .collect();
        let ubiquity = (0..entries.ncols())
            .map(|j| (0..entries.nrows()).map(|i| entries[(i, j)] as u32).sum())
            .collect();
        Ok(Self {
            countries,
            activities,
            entries,
            diversity,
            ubiquity,
            year,
        })
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn activities(&self) -> &[String] {
        &self.activities
    }

    pub fn entries(&self) -> &DMatrix<u8> {
        &self.entries
    }

    pub fn year(&self) -> Option<i32> {
        self.year
    }

    pub fn diversity(&self) -> &[u32] {
        &self.diversity
    }

    pub fn ubiquity(&self) -> &[u32] {
        &self.ubiquity
    }

    pub fn is_specialized(&self, i: usize, j: usize) -> bool {
        self.entries[(i, j)] == 1
    }

    pub fn country_index(&self, country: &str) -> Option<usize> {
        self.countries.iter().position(|c| c == country)
    }

    pub fn activity_index(&self, activity: &str) -> Option<usize> {
        self.activities.iter().position(|a| a == activity)
    }
}

/// Thresholds the RCA matrix into a specialization matrix; the comparison
/// is inclusive at the threshold. A resulting all-zero row or column is an
/// error rather than a silent fix.
pub fn binarize(r: &RcaMatrix, threshold: f64) -> Result<SpecializationMatrix, SpecializationError> {
    if !(threshold > 0.0) {
        return Err(SpecializationError::InvalidThreshold(threshold));
    }
    let values = r.values();
    let entries = DMatrix::from_fn(values.nrows(), values.ncols(), |i, j| {
        u8::from(values[(i, j)] >= threshold)
    });
    let m = SpecializationMatrix::from_binary(
        r.countries().to_vec(),
        r.activities().to_vec(),
        entries,
        r.year(),
    )?;
    let empty_rows: Vec<&String> = m
        .diversity
        .iter()
        .zip(&m.countries)
        .filter(|(&k, _)| k == 0)
        .map(|(_, c)| c)
        .collect();
    let empty_cols: Vec<&String> = m
        .ubiquity
        .iter()
        .zip(&m.activities)
        .filter(|(&k, _)| k == 0)
        .map(|(_, a)| a)
        .collect();
    if !empty_rows.is_empty() || !empty_cols.is_empty() {
        return Err(SpecializationError::DegenerateMatrix(format!(
            "threshold {threshold} empties diversity for [{}] and ubiquity for [{}]",
            empty_rows.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
            empty_cols.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
        )));
    }
    Ok(m)
}

/// Exact integer margins: (diversity per country, ubiquity per activity).
pub fn margins(m: &SpecializationMatrix) -> (Vec<u32>, Vec<u32>) {
    (m.diversity.clone(), m.ubiquity.clone())
}

/// A specialization matrix reordered for display, with the permutations
/// that produced it: `row_perm[new] = old`.
#[derive(Debug, Clone)]
pub struct NestedSort {
    pub matrix: SpecializationMatrix,
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
}

/// Reorders rows by descending diversity and columns by descending
/// ubiquity, ties lexicographic by label.
pub fn nested_sort(m: &SpecializationMatrix) -> NestedSort {
    let mut row_perm: Vec<usize> = (0..m.countries.len()).collect();
    row_perm.sort_by(|&a, &b| {
        m.diversity[b]
            .cmp(&m.diversity[a])
            .then_with(|| m.countries[a].cmp(&m.countries[b]))
    });
    let mut col_perm: Vec<usize> = (0..m.activities.len()).collect();
    col_perm.sort_by(|&a, &b| {
        m.ubiquity[b]
            .cmp(&m.ubiquity[a])
            .then_with(|| m.activities[a].cmp(&m.activities[b]))
    });
    let entries = DMatrix::from_fn(m.countries.len(), m.activities.len(), |i, j| {
        m.entries[(row_perm[i], col_perm[j])]
    });
    let matrix = SpecializationMatrix::from_binary(
        row_perm.iter().map(|&i| m.countries[i].clone()).collect(),
        col_perm.iter().map(|&j| m.activities[j].clone()).collect(),
        entries,
        m.year,
    )
    .expect("permutation preserves validity");
    NestedSort {
        matrix,
        row_perm,
        col_perm,
    }
}
