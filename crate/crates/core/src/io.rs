//! File formats shared by the command-line tools: CSV readers and writers
//! for every artifact, a generic table loader with numeric/categorical
//! autodetection, and small JSON helpers.
//!
//! Floats are written with the shortest round-trip representation, so a
//! value survives a write/read cycle bit for bit and identical inputs
//! always produce identical bytes.

use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::complexity::{rank_table, rescale_minmax, ComplexityScores};
use crate::dynamics::{EventKind, EventRecord, EventTable, TransitionDataset, TransitionRow};
use crate::econometrics::{Column, DataTable};
use crate::ingest::{YearlyCounts, YearlyRow};
use crate::relatedness::{NetworkBackbone, ProximityMatrix};
use crate::specialization::{RcaMatrix, SpecializationMatrix};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Matrix(#[from] crate::specialization::SpecializationError),
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn parse_f64(raw: &str, path: &Path, row: usize) -> Result<f64, IoError> {
    raw.trim().parse().map_err(|_| IoError::Parse {
        path: path_str(path),
        row,
        message: format!("cannot parse `{raw}` as a number"),
    })
}

// ---------------------------------------------------------------------------
// yearly counts

pub fn write_yearly_counts(path: &Path, counts: &YearlyCounts) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["year", "country", "language", "developers"])?;
    for row in &counts.rows {
        w.write_record([
            row.year.to_string(),
            row.country.clone(),
            row.language.clone(),
            fmt_f64(row.developers),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_yearly_counts(path: &Path) -> Result<YearlyCounts, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IoError::MissingColumn {
                path: path_str(path),
                column: name.to_string(),
            })
    };
    let (iy, ic, il, id) = (col("year")?, col("country")?, col("language")?, col("developers")?);
    let mut rows = Vec::new();
    for (record_no, record) in reader.records().enumerate() {
        let record = record?;
        let row = record_no + 2;
        rows.push(YearlyRow {
            year: record
                .get(iy)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| IoError::Parse {
                    path: path_str(path),
                    row,
                    message: "bad year".into(),
                })?,
            country: record.get(ic).unwrap_or("").trim().to_string(),
            language: record.get(il).unwrap_or("").trim().to_string(),
            developers: parse_f64(record.get(id).unwrap_or(""), path, row)?,
        });
    }
    Ok(YearlyCounts { rows })
}

// ---------------------------------------------------------------------------
// wide matrices

fn write_wide_matrix<T: Copy>(
    path: &Path,
    row_header: &str,
    row_labels: &[String],
    col_labels: &[String],
    get: impl Fn(usize, usize) -> T,
    fmt: impl Fn(T) -> String,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![row_header.to_string()];
    header.extend(col_labels.iter().cloned());
    w.write_record(&header)?;
    for (i, label) in row_labels.iter().enumerate() {
        let mut record = vec![label.clone()];
        for j in 0..col_labels.len() {
            record.push(fmt(get(i, j)));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn read_wide_matrix(path: &Path) -> Result<(Vec<String>, Vec<String>, DMatrix<f64>), IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 2 {
        return Err(IoError::Format {
            path: path_str(path),
            message: "matrix file needs a label column and at least one value column".into(),
        });
    }
    let col_labels: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut row_labels = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (record_no, record) in reader.records().enumerate() {
        let record = record?;
        let row = record_no + 2;
        row_labels.push(record.get(0).unwrap_or("").trim().to_string());
        for j in 0..col_labels.len() {
            values.push(parse_f64(record.get(j + 1).unwrap_or(""), path, row)?);
        }
    }
    let matrix = DMatrix::from_row_iterator(row_labels.len(), col_labels.len(), values);
    Ok((row_labels, col_labels, matrix))
}

pub fn write_rca_csv(path: &Path, rca: &RcaMatrix) -> Result<(), IoError> {
    write_wide_matrix(
        path,
        "country",
        rca.countries(),
        rca.activities(),
        |i, j| rca.values()[(i, j)],
        fmt_f64,
    )
}

pub fn read_rca_csv(path: &Path) -> Result<RcaMatrix, IoError> {
    let (countries, activities, values) = read_wide_matrix(path)?;
    Ok(RcaMatrix::from_parts(countries, activities, values, None)?)
}

pub fn write_m_csv(path: &Path, m: &SpecializationMatrix) -> Result<(), IoError> {
    write_wide_matrix(
        path,
        "country",
        m.countries(),
        m.activities(),
        |i, j| m.entries()[(i, j)],
        |v| v.to_string(),
    )
}

pub fn read_m_csv(path: &Path, year: Option<i32>) -> Result<SpecializationMatrix, IoError> {
    let (countries, activities, values) = read_wide_matrix(path)?;
    for (idx, v) in values.iter().enumerate() {
        if *v != 0.0 && *v != 1.0 {
            return Err(IoError::Format {
                path: path_str(path),
                message: format!("entry {idx} is {v}, expected 0 or 1"),
            });
        }
    }
    let entries = DMatrix::from_fn(values.nrows(), values.ncols(), |i, j| {
        u8::from(values[(i, j)] != 0.0)
    });
    Ok(SpecializationMatrix::from_binary(countries, activities, entries, year)?)
}

// ---------------------------------------------------------------------------
// complexity scores

/// Writes `entity,raw,z,rescaled,rank`. The rescaled column min-max maps
/// the z-scores onto [-1, 1]; ranks are 1-based descending by z.
pub fn write_scores_csv(path: &Path, entities: &[String], raw: &[f64], z: &[f64]) -> Result<(), IoError> {
    let rescaled = rescale_minmax(z).map_err(|e| IoError::Format {
        path: path_str(path),
        message: e.to_string(),
    })?;
    let ranked = rank_table(entities, z);
    let mut rank_of = vec![0usize; entities.len()];
    for entry in &ranked {
        let idx = entities.iter().position(|e| e == &entry.entity).expect("known entity");
        rank_of[idx] = entry.rank;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["entity", "raw", "z", "rescaled", "rank"])?;
    for (i, entity) in entities.iter().enumerate() {
        w.write_record([
            entity.clone(),
            fmt_f64(raw[i]),
            fmt_f64(z[i]),
            fmt_f64(rescaled.values[i]),
            rank_of[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back `entity,z` pairs from a scores file.
pub fn read_scores_csv(path: &Path) -> Result<Vec<(String, f64)>, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let ie = headers
        .iter()
        .position(|h| h.trim() == "entity")
        .ok_or_else(|| IoError::MissingColumn {
            path: path_str(path),
            column: "entity".into(),
        })?;
    let iz = headers
        .iter()
        .position(|h| h.trim() == "z")
        .ok_or_else(|| IoError::MissingColumn {
            path: path_str(path),
            column: "z".into(),
        })?;
    let mut out = Vec::new();
    for (record_no, record) in reader.records().enumerate() {
        let record = record?;
        out.push((
            record.get(ie).unwrap_or("").trim().to_string(),
            parse_f64(record.get(iz).unwrap_or(""), path, record_no + 2)?,
        ));
    }
    Ok(out)
}

/// Solver metadata written next to the score files.
#[derive(serde::Serialize)]
pub struct ComplexityMeta<'a> {
    pub method: crate::complexity::Method,
    pub iterations: usize,
    pub residual: f64,
    pub second_eigenvalue: Option<f64>,
    pub warnings: &'a [String],
    pub countries: usize,
    pub activities: usize,
}

impl<'a> ComplexityMeta<'a> {
    pub fn from_scores(scores: &'a ComplexityScores) -> Self {
        Self {
            method: scores.method,
            iterations: scores.iterations,
            residual: scores.residual,
            second_eigenvalue: scores.second_eigenvalue,
            warnings: &scores.warnings,
            countries: scores.countries.len(),
            activities: scores.activities.len(),
        }
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// proximity / density

/// Long-form `l1,l2,phi` with one record per unordered off-diagonal pair in
/// matrix order; the unit diagonal is implicit.
pub fn write_phi_csv(path: &Path, phi: &ProximityMatrix) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["l1", "l2", "phi"])?;
    let n = phi.activities().len();
    for a in 0..n {
        for b in (a + 1)..n {
            w.write_record([
                phi.activities()[a].clone(),
                phi.activities()[b].clone(),
                fmt_f64(phi.get(a, b)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds a proximity matrix from the long form. Activities follow first
/// appearance order; absent pairs are zero and the diagonal is one.
pub fn read_phi_csv(path: &Path) -> Result<ProximityMatrix, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IoError::MissingColumn {
                path: path_str(path),
                column: name.to_string(),
            })
    };
    let (i1, i2, ip) = (col("l1")?, col("l2")?, col("phi")?);
    let mut activities: Vec<String> = Vec::new();
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for (record_no, record) in reader.records().enumerate() {
        let record = record?;
        let mut intern = |name: &str| -> usize {
            if let Some(&idx) = index.get(name) {
                return idx;
            }
            activities.push(name.to_string());
            index.insert(name.to_string(), activities.len() - 1);
            activities.len() - 1
        };
        let a = intern(record.get(i1).unwrap_or("").trim());
        let b = intern(record.get(i2).unwrap_or("").trim());
        let value = parse_f64(record.get(ip).unwrap_or(""), path, record_no + 2)?;
        cells.push((a, b, value));
    }
    let n = activities.len();
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        values[(i, i)] = 1.0;
    }
    for (a, b, v) in cells {
        values[(a, b)] = v;
        values[(b, a)] = v;
    }
    Ok(ProximityMatrix::from_parts(activities, values))
}

pub fn write_density_csv(path: &Path, density: &crate::relatedness::DensityMatrix) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["country", "language", "density"])?;
    for (i, country) in density.countries().iter().enumerate() {
        for (j, language) in density.activities().iter().enumerate() {
            w.write_record([country.clone(), language.clone(), fmt_f64(density.values()[(i, j)])])?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// backbone

pub fn write_backbone_csv(path: &Path, backbone: &NetworkBackbone) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["l1", "l2", "phi", "in_spanning_tree"])?;
    for edge in &backbone.edges {
        w.write_record([
            edge.a.clone(),
            edge.b.clone(),
            fmt_f64(edge.phi),
            edge.in_spanning_tree.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Graphviz export; spanning-tree edges are drawn bold.
pub fn write_backbone_dot(path: &Path, backbone: &NetworkBackbone) -> Result<(), IoError> {
    let quote = |s: &str| s.replace('"', "\\\"");
    let mut out = String::from("graph backbone {\n");
    for activity in &backbone.activities {
        out.push_str(&format!("  \"{}\";\n", quote(activity)));
    }
    for edge in &backbone.edges {
        let style = if edge.in_spanning_tree { ",style=bold" } else { "" };
        out.push_str(&format!(
            "  \"{}\" -- \"{}\" [weight={:.6}{style}];\n",
            quote(&edge.a),
            quote(&edge.b),
            edge.phi
        ));
    }
    out.push_str("}\n");
    std::fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// events / transitions

fn years_field(years: &[i32]) -> String {
    years.iter().map(|y| y.to_string()).collect::<Vec<_>>().join("|")
}

fn parse_years_field(raw: &str, path: &Path, row: usize) -> Result<Vec<i32>, IoError> {
    raw.split('|')
        .map(|part| {
            part.trim().parse().map_err(|_| IoError::Parse {
                path: path_str(path),
                row,
                message: format!("bad year list `{raw}`"),
            })
        })
        .collect()
}

pub fn write_events_csv(path: &Path, events: &EventTable) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["country", "language", "event", "base_years", "post_years"])?;
    for record in &events.records {
        w.write_record([
            record.country.clone(),
            record.activity.clone(),
            record.kind.to_string(),
            years_field(&events.base_years),
            years_field(&events.post_years),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events_csv(path: &Path) -> Result<EventTable, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IoError::MissingColumn {
                path: path_str(path),
                column: name.to_string(),
            })
    };
    let (ic, il, ie, ib, ip) = (
        col("country")?,
        col("language")?,
        col("event")?,
        col("base_years")?,
        col("post_years")?,
    );
    let mut base_years = Vec::new();
    let mut post_years = Vec::new();
    let mut records = Vec::new();
    for (record_no, record) in reader.records().enumerate() {
        let record = record?;
        let row = record_no + 2;
        let kind = match record.get(ie).unwrap_or("").trim() {
            "entry" => EventKind::Entry,
            "exit" => EventKind::Exit,
            other => {
                return Err(IoError::Parse {
                    path: path_str(path),
                    row,
                    message: format!("unknown event `{other}`"),
                })
            }
        };
        base_years = parse_years_field(record.get(ib).unwrap_or(""), path, row)?;
        post_years = parse_years_field(record.get(ip).unwrap_or(""), path, row)?;
        records.push(EventRecord {
            country: record.get(ic).unwrap_or("").trim().to_string(),
            activity: record.get(il).unwrap_or("").trim().to_string(),
            kind,
        });
    }
    Ok(EventTable {
        base_years,
        post_years,
        records,
    })
}

pub fn write_transitions_csv(path: &Path, ds: &TransitionDataset) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["country", "language", "outcome", "density", "ubiquity"])?;
    for row in &ds.rows {
        w.write_record([
            row.country.clone(),
            row.activity.clone(),
            row.outcome.to_string(),
            fmt_f64(row.density),
            fmt_f64(row.ubiquity),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_transitions_rows(path: &Path) -> Result<Vec<TransitionRow>, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| IoError::MissingColumn {
                path: path_str(path),
                column: name.to_string(),
            })
    };
    let (ic, il, io_, id, iu) = (
        col("country")?,
        col("language")?,
        col("outcome")?,
        col("density")?,
        col("ubiquity")?,
    );
    let mut rows = Vec::new();
    for (record_no, record) in reader.records().enumerate() {
        let record = record?;
        let row = record_no + 2;
        rows.push(TransitionRow {
            country: record.get(ic).unwrap_or("").trim().to_string(),
            activity: record.get(il).unwrap_or("").trim().to_string(),
            outcome: record
                .get(io_)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| IoError::Parse {
                    path: path_str(path),
                    row,
                    message: "bad outcome".into(),
                })?,
            density: parse_f64(record.get(id).unwrap_or(""), path, row)?,
            ubiquity: parse_f64(record.get(iu).unwrap_or(""), path, row)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// nested sort

pub fn write_nested_csv(path: &Path, sorted: &crate::specialization::NestedSort) -> Result<(), IoError> {
    write_m_csv(path, &sorted.matrix)
}

/// Sidecar permutation file: `axis,position,label,source_index`.
pub fn write_permutations_csv(path: &Path, sorted: &crate::specialization::NestedSort) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["axis", "position", "label", "source_index"])?;
    for (position, &source) in sorted.row_perm.iter().enumerate() {
        w.write_record([
            "row".to_string(),
            position.to_string(),
            sorted.matrix.countries()[position].clone(),
            source.to_string(),
        ])?;
    }
    for (position, &source) in sorted.col_perm.iter().enumerate() {
        w.write_record([
            "column".to_string(),
            position.to_string(),
            sorted.matrix.activities()[position].clone(),
            source.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// generic tables / external scores

/// Loads a CSV into a [`DataTable`]. A column where every non-empty cell
/// parses as a finite number becomes numeric; anything else is
/// categorical. Empty cells are missing values either way.
pub fn read_table_csv(path: &Path) -> Result<DataTable, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for record in reader.records() {
        let record = record?;
        for (j, cell) in cells.iter_mut().enumerate() {
            cell.push(record.get(j).unwrap_or("").trim().to_string());
        }
    }
    let mut table = DataTable::new();
    for (name, column) in names.iter().zip(&cells) {
        let numeric: Option<Vec<Option<f64>>> = column
            .iter()
            .map(|raw| {
                if raw.is_empty() {
                    Some(None)
                } else {
                    raw.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some)
                }
            })
            .collect();
        let col = match numeric {
            Some(values) => Column::Numeric(values),
            None => Column::Categorical(
                column
                    .iter()
                    .map(|raw| if raw.is_empty() { None } else { Some(raw.clone()) })
                    .collect(),
            ),
        };
        table.add_column(name.clone(), col).map_err(|e| IoError::Format {
            path: path_str(path),
            message: e.to_string(),
        })?;
    }
    Ok(table)
}

/// External per-language scores: `language,impact_score`.
pub fn read_external_scores(path: &Path) -> Result<Vec<(String, f64)>, IoError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let il = headers
        .iter()
        .position(|h| h.trim() == "language")
        .ok_or_else(|| IoError::MissingColumn {
            path: path_str(path),
            column: "language".into(),
        })?;
    let is = headers
        .iter()
        .position(|h| h.trim() == "impact_score")
        .ok_or_else(|| IoError::MissingColumn {
            path: path_str(path),
            column: "impact_score".into(),
        })?;
    let mut out = Vec::new();
    for (record_no, record) in reader.records().enumerate() {
        let record = record?;
        out.push((
            record.get(il).unwrap_or("").trim().to_string(),
            parse_f64(record.get(is).unwrap_or(""), path, record_no + 2)?,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relatedness::proximity;
    use tempfile::tempdir;

    fn binary(rows: &[&[u8]]) -> SpecializationMatrix {
        let entries = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
        SpecializationMatrix::from_binary(
            (0..rows.len()).map(|i| format!("c{i}")).collect(),
            (0..rows[0].len()).map(|j| format!("l{j}")).collect(),
            entries,
            None,
        )
        .unwrap()
    }

    #[test]
    fn m_csv_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = binary(&[&[1, 0, 1], &[0, 1, 1]]);
        write_m_csv(&path, &m).unwrap();
        let back = read_m_csv(&path, None).unwrap();
        assert_eq!(back.countries(), m.countries());
        assert_eq!(back.activities(), m.activities());
        assert_eq!(back.entries(), m.entries());
    }

    #[test]
    fn phi_csv_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("phi.csv");
        let m = binary(&[&[1, 1, 1], &[1, 1, 0], &[1, 0, 0]]);
        let phi = proximity(&m).unwrap();
        write_phi_csv(&path, &phi).unwrap();
        let back = read_phi_csv(&path).unwrap();
        assert_eq!(back.activities(), phi.activities());
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(back.get(a, b).to_bits(), phi.get(a, b).to_bits(), "({a},{b})");
            }
        }
    }

    #[test]
    fn scores_csv_has_rescale_and_rank() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("eci.csv");
        let entities = vec!["AAA".to_string(), "BBB".to_string(), "CCC".to_string()];
        write_scores_csv(&path, &entities, &[0.5, 0.0, -0.5], &[1.0, 0.0, -1.0]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("entity,raw,z,rescaled,rank\n"));
        assert!(text.contains("AAA,0.5,1,1,1"));
        assert!(text.contains("CCC,-0.5,-1,-1,3"));
        let back = read_scores_csv(&path).unwrap();
        assert_eq!(back[0], ("AAA".to_string(), 1.0));
    }

    #[test]
    fn table_autodetects_column_types() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "country,value\nAAA,1.5\nBBB,\nCCC,2.25\n").unwrap();
        let table = read_table_csv(&path).unwrap();
        assert!(matches!(table.column("country"), Some(Column::Categorical(_))));
        let values = table.numeric("value").unwrap();
        assert_eq!(values, &[Some(1.5), None, Some(2.25)]);
    }

    #[test]
    fn float_formatting_round_trips_exactly() {
        let values = [0.1, 1.0 / 3.0, 2.0 / 7.0, 1e-17, 123456.789];
        for v in values {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s}");
        }
    }
}
