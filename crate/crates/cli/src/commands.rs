//! Stand-alone subcommands; each one mirrors a single pipeline stage so
//! intermediate artifacts can be produced and inspected independently.

use std::path::{Path, PathBuf};

use eclab_core::complexity::{compute_complexity_eigen, compute_complexity_fixed_point, rank_table};
use eclab_core::dynamics::{
    build_transition_dataset, correlate_ubiquity_external, detect_events, EventKind, SpecializationPanel,
};
use eclab_core::econometrics::{
    format_table_text, logit, ols, tsls, ColumnFit, FitOutcome, ModelSpec, TableResult,
};
use eclab_core::ingest::{clean_filter_aggregate, effective_exclusions, load_exclusion_list, parse_ghig, ColumnMap};
use eclab_core::io;
use eclab_core::relatedness::{backbone, proximity, relatedness_density_with};
use eclab_core::specialization::{binarize, build_count_matrix, nested_sort, rca};

use crate::config::MethodChoice;
use crate::error::CliError;

pub fn clean(
    languages: &Path,
    exclusions_file: Option<&Path>,
    no_default_exclusions: bool,
    top_n: usize,
    columns: &ColumnMap,
    out: &Path,
) -> Result<(), CliError> {
    let quarterly = parse_ghig(languages, columns)?;
    let extra = match exclusions_file {
        Some(path) => load_exclusion_list(path)?,
        None => Vec::new(),
    };
    let exclusions = effective_exclusions(&extra, !no_default_exclusions);
    let yearly = clean_filter_aggregate(&quarterly, &exclusions, top_n)?;
    io::write_yearly_counts(out, &yearly)?;
    eprintln!(
        "clean: {} quarterly rows ({} dropped) -> {} yearly rows",
        quarterly.rows.len(),
        quarterly.dropped_rows,
        yearly.rows.len()
    );
    Ok(())
}

pub fn rca_cmd(counts: &Path, year: i32, out: &Path) -> Result<(), CliError> {
    let yearly = io::read_yearly_counts(counts)?;
    let matrix = build_count_matrix(&yearly, year)?;
    if !matrix.dropped().is_empty() {
        eprintln!(
            "rca: dropped zero countries {:?}, zero activities {:?}",
            matrix.dropped().countries,
            matrix.dropped().activities
        );
    }
    io::write_rca_csv(out, &rca(&matrix))?;
    Ok(())
}

pub fn m_cmd(
    rca_path: &Path,
    threshold: f64,
    out: &Path,
    nested_out: Option<&Path>,
    perm_out: Option<&Path>,
) -> Result<(), CliError> {
    let matrix = io::read_rca_csv(rca_path)?;
    let m = binarize(&matrix, threshold)?;
    io::write_m_csv(out, &m)?;
    if nested_out.is_some() || perm_out.is_some() {
        let sorted = nested_sort(&m);
        if let Some(path) = nested_out {
            io::write_nested_csv(path, &sorted)?;
        }
        if let Some(path) = perm_out {
            io::write_permutations_csv(path, &sorted)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn complexity_cmd(
    m_path: &Path,
    method: MethodChoice,
    tol: f64,
    max_iter: usize,
    out: &Path,
    pci_out: &Path,
    meta_out: Option<&Path>,
) -> Result<(), CliError> {
    let m = io::read_m_csv(m_path, None)?;
    let scores = match method {
        MethodChoice::Eigen => compute_complexity_eigen(&m)?,
        MethodChoice::Iterate => compute_complexity_fixed_point(&m, tol, max_iter)?,
    };
    for warning in &scores.warnings {
        eprintln!("complexity: warning: {warning}");
    }
    io::write_scores_csv(out, &scores.countries, &scores.eci_raw, &scores.eci_z)?;
    io::write_scores_csv(pci_out, &scores.activities, &scores.pci_raw, &scores.pci_z)?;
    let meta_path: PathBuf = match meta_out {
        Some(path) => path.to_path_buf(),
        None => out.with_extension("meta.json"),
    };
    io::write_json(&meta_path, &io::ComplexityMeta::from_scores(&scores))?;
    Ok(())
}

pub fn proximity_cmd(m_path: &Path, out: &Path) -> Result<(), CliError> {
    let m = io::read_m_csv(m_path, None)?;
    let phi = proximity(&m)?;
    io::write_phi_csv(out, &phi)?;
    Ok(())
}

pub fn density_cmd(
    m_path: &Path,
    phi_path: Option<&Path>,
    exclude_diagonal: bool,
    out: &Path,
) -> Result<(), CliError> {
    let m = io::read_m_csv(m_path, None)?;
    let phi = match phi_path {
        Some(path) => io::read_phi_csv(path)?,
        None => proximity(&m)?,
    };
    let density = relatedness_density_with(&m, &phi, !exclude_diagonal)?;
    io::write_density_csv(out, &density)?;
    Ok(())
}

pub fn backbone_cmd(phi_path: &Path, threshold: f64, out: &Path, dot: Option<&Path>) -> Result<(), CliError> {
    let phi = io::read_phi_csv(phi_path)?;
    let bb = backbone(&phi, threshold)?;
    if !bb.is_connected() {
        eprintln!("backbone: proximity graph has {} components; tree is a forest", bb.components);
    }
    io::write_backbone_csv(out, &bb)?;
    if let Some(dot_path) = dot {
        io::write_backbone_dot(dot_path, &bb)?;
    }
    Ok(())
}

/// Loads `m_<year>.csv` files from a panel directory.
fn load_panel(dir: &Path) -> Result<SpecializationPanel, CliError> {
    let mut items = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(year_part) = name.strip_prefix("m_").and_then(|rest| rest.strip_suffix(".csv")) else {
            continue;
        };
        let Ok(year) = year_part.parse::<i32>() else {
            continue;
        };
        items.push((year, io::read_m_csv(&path, Some(year))?));
    }
    if items.is_empty() {
        return Err(CliError::Data(format!(
            "panel directory `{}` contains no m_<year>.csv files",
            dir.display()
        )));
    }
    Ok(SpecializationPanel::from_yearly(items)?)
}

pub fn events_cmd(panel_dir: &Path, base: &[i32], post: &[i32], out: &Path) -> Result<(), CliError> {
    let panel = load_panel(panel_dir)?;
    let events = detect_events(&panel, base, post)?;
    io::write_events_csv(out, &events)?;
    eprintln!("events: {} records", events.records.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn transitions_cmd(
    panel_dir: &Path,
    base: &[i32],
    post: &[i32],
    kind: EventKind,
    counts: Option<&Path>,
    at_risk: eclab_core::dynamics::AtRiskRule,
    ubiquity: eclab_core::dynamics::UbiquityTransform,
    exclude_diagonal: bool,
    out: &Path,
) -> Result<(), CliError> {
    let panel = load_panel(panel_dir)?;
    let events = detect_events(&panel, base, post)?;
    let base_year = *base.iter().min().ok_or_else(|| CliError::Validation("empty base window".into()))?;
    let base_m = io::read_m_csv(&panel_dir.join(format!("m_{base_year}.csv")), Some(base_year))?;
    let phi = proximity(&base_m)?;
    let density = relatedness_density_with(&base_m, &phi, !exclude_diagonal)?;
    let yearly = match counts {
        Some(path) => Some(io::read_yearly_counts(path)?),
        None => None,
    };
    let ds = build_transition_dataset(
        &panel,
        &events,
        kind,
        &density,
        &base_m,
        yearly.as_ref(),
        at_risk,
        ubiquity,
    )?;
    io::write_transitions_csv(out, &ds)?;
    eprintln!(
        "transitions: {} rows, {} with outcome 1, {} skipped without base density",
        ds.rows.len(),
        ds.rows.iter().filter(|r| r.outcome == 1).count(),
        ds.skipped_no_density
    );
    Ok(())
}

fn load_spec(path: &Path) -> Result<ModelSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read spec {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("spec {}: {e}", path.display())))
}

fn single_column_table(name: &str, estimator: &str, fit: FitOutcome, spec: &ModelSpec) -> TableResult {
    TableResult {
        name: name.to_string(),
        outcome: spec.outcome_label(),
        estimator: estimator.to_string(),
        columns: vec![ColumnFit {
            label: "(1)".to_string(),
            fixed_effects: spec.fixed_effects.clone(),
            instrumented: estimator == "2sls",
            fit,
        }],
    }
}

pub fn regress_cmd(
    spec_path: &Path,
    data: &Path,
    estimator: &str,
    out: &Path,
    text_out: Option<&Path>,
) -> Result<(), CliError> {
    let spec = load_spec(spec_path)?;
    let table = io::read_table_csv(data)?;
    let (fit, label) = match estimator {
        "logit" => (FitOutcome::Ok(Box::new(logit(&table, &spec)?)), "logit"),
        _ => (FitOutcome::Ok(Box::new(ols(&table, &spec)?)), "ols"),
    };
    let result = single_column_table("model", label, fit, &spec);
    io::write_json(out, &result)?;
    if let Some(path) = text_out {
        std::fs::write(path, format_table_text(&result))?;
    }
    Ok(())
}

pub fn iv_cmd(
    spec_path: &Path,
    data: &Path,
    endogenous: &str,
    instrument: &str,
    out: &Path,
    text_out: Option<&Path>,
) -> Result<(), CliError> {
    let spec = load_spec(spec_path)?;
    let table = io::read_table_csv(data)?;
    let iv = tsls(&table, &spec, endogenous, instrument)?;
    if iv.weak_instrument_warning {
        eprintln!(
            "iv: warning: first-stage F = {:.2} is below {}",
            iv.weak_instrument_f,
            eclab_core::econometrics::WEAK_INSTRUMENT_F
        );
    }
    let result = single_column_table("model_iv", "2sls", FitOutcome::Iv(Box::new(iv)), &spec);
    io::write_json(out, &result)?;
    if let Some(path) = text_out {
        std::fs::write(path, format_table_text(&result))?;
    }
    Ok(())
}

pub fn correlate_cmd(m_path: &Path, external: &Path, out: &Path) -> Result<(), CliError> {
    let m = io::read_m_csv(m_path, None)?;
    let scores = io::read_external_scores(external)?;
    let report = correlate_ubiquity_external(&m.activities().to_vec(), m.ubiquity(), &scores)?;
    io::write_json(out, &report)?;
    Ok(())
}

pub fn rank_cmd(scores_path: &Path, out: &Path) -> Result<(), CliError> {
    let scores = io::read_scores_csv(scores_path)?;
    let entities: Vec<String> = scores.iter().map(|(e, _)| e.clone()).collect();
    let z: Vec<f64> = scores.iter().map(|(_, v)| *v).collect();
    let ranked = rank_table(&entities, &z);
    let mut w = csv::Writer::from_path(out).map_err(io::IoError::from)?;
    w.write_record(["rank", "entity", "z"]).map_err(io::IoError::from)?;
    for entry in ranked {
        w.write_record([entry.rank.to_string(), entry.entity, format!("{}", entry.score)])
            .map_err(io::IoError::from)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(())
}

