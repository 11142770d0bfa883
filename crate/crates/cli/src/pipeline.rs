//! End-to-end pipeline: cleaning, matrices, complexity, relatedness,
//! events, transitions, regressions, and a manifest that records every
//! knob in effect. Outputs are staged in a scratch directory and promoted
//! only when every stage succeeds, so a failed run leaves nothing behind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use eclab_core::complexity::{compute_complexity_eigen, compute_complexity_fixed_point, ComplexityScores};
use eclab_core::dynamics::{
    build_transition_dataset, correlate_ubiquity_external, detect_events, CorrelationReport, EventKind,
    SpecializationPanel, TransitionDataset,
};
use eclab_core::econometrics::{
    build_country_table, build_similarity_instrument, format_grid_text, run_model_grid, transition_table,
    GridOptions, GridResult, InstrumentResult,
};
use eclab_core::ingest::{
    apply_sample_filters, clean_filter_aggregate, effective_exclusions, load_adjacency, load_exclusion_list,
    load_indicators, parse_ghig, SampleSelection, SampleThresholds, YearlyCounts,
};
use eclab_core::io;
use eclab_core::relatedness::{backbone, proximity, relatedness_density_with};
use eclab_core::specialization::{binarize, build_count_matrix, rca, SpecializationMatrix};

use crate::config::{MethodChoice, PipelineConfig};
use crate::error::CliError;

#[derive(Debug, Default, Serialize)]
pub struct StageSummaries {
    pub clean: CleanSummary,
    pub matrix: MatrixSummary,
    pub complexity: ComplexitySummary,
    pub events: EventsSummary,
    pub transitions: TransitionsSummary,
    pub regression: RegressionSummary,
}

#[derive(Debug, Default, Serialize)]
pub struct CleanSummary {
    pub quarterly_rows: usize,
    pub dropped_rows: usize,
    pub yearly_rows: usize,
    pub languages_kept: usize,
}

#[derive(Debug, Default, Serialize)]
pub struct MatrixSummary {
    pub countries: usize,
    pub activities: usize,
    pub dropped_countries: Vec<String>,
    pub dropped_activities: Vec<String>,
}

#[derive(Debug, Default, Serialize)]
pub struct ComplexitySummary {
    pub method: String,
    pub iterations: usize,
    pub residual: f64,
    pub second_eigenvalue: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Default, Serialize)]
pub struct EventsSummary {
    pub entries: usize,
    pub exits: usize,
    pub zero_filled_cells: usize,
}

#[derive(Debug, Default, Serialize)]
pub struct TransitionsSummary {
    pub entry_at_risk: usize,
    pub exit_at_risk: usize,
    pub entry_events: usize,
    pub exit_events: usize,
}

#[derive(Debug, Default, Serialize)]
pub struct RegressionSummary {
    pub tables: Vec<String>,
    pub sample_included: usize,
    pub sample_excluded: usize,
    pub instrument_dropped: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub config: PipelineConfig,
    pub input_digests: BTreeMap<String, String>,
    pub exclusions_in_effect: Vec<String>,
    pub stages: StageSummaries,
    pub artifacts: Vec<String>,
}

/// Everything regression-shaped that lands in results.json.
#[derive(Debug, Serialize)]
struct ResultsDocument {
    tables: GridResult,
    ubiquity_external_correlation: Option<CorrelationReport>,
    sample: Option<SampleSelection>,
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex_digest(hasher))
}

fn stage<T>(name: &'static str, result: Result<T, CliError>) -> Result<T, CliError> {
    result.map_err(|e| e.in_stage(name))
}

struct Staging {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Staging {
    fn file(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.dir.join(name)
    }
}

fn compute_scores(config: &PipelineConfig, m: &SpecializationMatrix) -> Result<ComplexityScores, CliError> {
    let scores = match config.complexity.method {
        MethodChoice::Eigen => compute_complexity_eigen(m)?,
        MethodChoice::Iterate => {
            compute_complexity_fixed_point(m, config.complexity.tol, config.complexity.max_iter)?
        }
    };
    Ok(scores)
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest, CliError> {
    stage("validate", config.validate())?;

    let final_dir = config.output.dir.clone();
    let staging_dir = final_dir.with_file_name(format!(
        "{}.staging",
        final_dir
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| "out".to_string())
    ));
    if staging_dir.exists() {
        std::fs::remove_dir_all(&staging_dir)?;
    }
    std::fs::create_dir_all(&staging_dir)?;
    let mut staging = Staging {
        dir: staging_dir.clone(),
        artifacts: Vec::new(),
    };

    let result = run_stages(config, &mut staging);
    match result {
        Ok(manifest) => {
            if final_dir.exists() {
                std::fs::remove_dir_all(&final_dir)?;
            }
            std::fs::rename(&staging_dir, &final_dir)?;
            Ok(manifest)
        }
        Err(err) => {
            let _ = std::fs::remove_dir_all(&staging_dir);
            Err(err)
        }
    }
}

fn run_stages(config: &PipelineConfig, staging: &mut Staging) -> Result<Manifest, CliError> {
    let mut summaries = StageSummaries::default();

    // -- clean ------------------------------------------------------------
    let column_map = config.inputs.columns.clone().unwrap_or_default();
    let quarterly = stage("clean", parse_ghig(&config.inputs.languages, &column_map).map_err(Into::into))?;
    let extra_exclusions = match &config.inputs.exclusions {
        Some(path) => stage("clean", load_exclusion_list(path).map_err(Into::into))?,
        None => Vec::new(),
    };
    let exclusions = effective_exclusions(&extra_exclusions, config.cleaning.use_default_exclusions);
    let yearly = stage(
        "clean",
        clean_filter_aggregate(&quarterly, &exclusions, config.cleaning.top_n).map_err(Into::into),
    )?;
    summaries.clean = CleanSummary {
        quarterly_rows: quarterly.rows.len(),
        dropped_rows: quarterly.dropped_rows,
        yearly_rows: yearly.rows.len(),
        languages_kept: {
            let set: std::collections::BTreeSet<&str> = yearly.rows.iter().map(|r| r.language.as_str()).collect();
            set.len()
        },
    };

    // -- cross-section matrices -------------------------------------------
    let year = config.years.complexity_year;
    let counts = stage("count-matrix", build_count_matrix(&yearly, year).map_err(Into::into))?;
    let rca_matrix = rca(&counts);
    stage(
        "count-matrix",
        io::write_rca_csv(&staging.file("rca.csv"), &rca_matrix).map_err(Into::into),
    )?;
    let m = stage("count-matrix", binarize(&rca_matrix, config.thresholds.rca).map_err(Into::into))?;
    stage(
        "count-matrix",
        io::write_m_csv(&staging.file("m.csv"), &m).map_err(Into::into),
    )?;
    let sorted = eclab_core::specialization::nested_sort(&m);
    stage(
        "count-matrix",
        io::write_nested_csv(&staging.file("nested_matrix.csv"), &sorted).map_err(Into::into),
    )?;
    stage(
        "count-matrix",
        io::write_permutations_csv(&staging.file("nested_matrix.perm.csv"), &sorted).map_err(Into::into),
    )?;
    summaries.matrix = MatrixSummary {
        countries: m.countries().len(),
        activities: m.activities().len(),
        dropped_countries: counts.dropped().countries.clone(),
        dropped_activities: counts.dropped().activities.clone(),
    };

    // -- complexity ---------------------------------------------------------
    let scores = stage("complexity", compute_scores(config, &m))?;
    stage(
        "complexity",
        io::write_scores_csv(&staging.file("eci.csv"), &scores.countries, &scores.eci_raw, &scores.eci_z)
            .map_err(Into::into),
    )?;
    stage(
        "complexity",
        io::write_scores_csv(&staging.file("pci.csv"), &scores.activities, &scores.pci_raw, &scores.pci_z)
            .map_err(Into::into),
    )?;
    summaries.complexity = ComplexitySummary {
        method: format!("{:?}", scores.method),
        iterations: scores.iterations,
        residual: scores.residual,
        second_eigenvalue: scores.second_eigenvalue,
        warnings: scores.warnings.clone(),
    };

    // -- relatedness ---------------------------------------------------------
    let phi = stage("relatedness", proximity(&m).map_err(Into::into))?;
    stage(
        "relatedness",
        io::write_phi_csv(&staging.file("phi.csv"), &phi).map_err(Into::into),
    )?;
    let density = stage(
        "relatedness",
        relatedness_density_with(&m, &phi, config.relatedness.include_diagonal).map_err(Into::into),
    )?;
    stage(
        "relatedness",
        io::write_density_csv(&staging.file("density.csv"), &density).map_err(Into::into),
    )?;
    let bb = stage("relatedness", backbone(&phi, config.thresholds.backbone).map_err(Into::into))?;
    stage(
        "relatedness",
        io::write_backbone_csv(&staging.file("backbone.csv"), &bb).map_err(Into::into),
    )?;
    stage(
        "relatedness",
        io::write_backbone_dot(&staging.file("backbone.dot"), &bb).map_err(Into::into),
    )?;

    // -- panel and events ------------------------------------------------
    let panel = stage("events", build_panel(config, &yearly))?;
    let events = stage(
        "events",
        detect_events(&panel, &config.years.base, &config.years.post).map_err(Into::into),
    )?;
    stage(
        "events",
        io::write_events_csv(&staging.file("events.csv"), &events).map_err(Into::into),
    )?;
    summaries.events = EventsSummary {
        entries: events.records.iter().filter(|r| r.kind == EventKind::Entry).count(),
        exits: events.records.iter().filter(|r| r.kind == EventKind::Exit).count(),
        zero_filled_cells: panel.zero_filled().len(),
    };

    // -- transitions ---------------------------------------------------------
    // Base-period relatedness: the first base year's matrix. When it is the
    // complexity year the cross-section objects are reused as-is.
    let base_year = *config.years.base.iter().min().expect("validated nonempty");
    let (base_m, base_density) = if base_year == year {
        (m.clone(), density.clone())
    } else {
        let base_counts = stage("transitions", build_count_matrix(&yearly, base_year).map_err(Into::into))?;
        let base_m = stage(
            "transitions",
            binarize(&rca(&base_counts), config.thresholds.rca).map_err(Into::into),
        )?;
        let base_phi = stage("transitions", proximity(&base_m).map_err(Into::into))?;
        let base_density = stage(
            "transitions",
            relatedness_density_with(&base_m, &base_phi, config.relatedness.include_diagonal).map_err(Into::into),
        )?;
        (base_m, base_density)
    };
    let entry_ds = stage(
        "transitions",
        build_transition_dataset(
            &panel,
            &events,
            EventKind::Entry,
            &base_density,
            &base_m,
            Some(&yearly),
            config.dynamics.at_risk,
            config.dynamics.ubiquity_transform,
        )
        .map_err(Into::into),
    )?;
    let exit_ds = stage(
        "transitions",
        build_transition_dataset(
            &panel,
            &events,
            EventKind::Exit,
            &base_density,
            &base_m,
            Some(&yearly),
            config.dynamics.at_risk,
            config.dynamics.ubiquity_transform,
        )
        .map_err(Into::into),
    )?;
    stage(
        "transitions",
        io::write_transitions_csv(&staging.file("transitions_entry.csv"), &entry_ds).map_err(Into::into),
    )?;
    stage(
        "transitions",
        io::write_transitions_csv(&staging.file("transitions_exit.csv"), &exit_ds).map_err(Into::into),
    )?;
    summaries.transitions = TransitionsSummary {
        entry_at_risk: entry_ds.rows.len(),
        exit_at_risk: exit_ds.rows.len(),
        entry_events: entry_ds.rows.iter().filter(|r| r.outcome == 1).count(),
        exit_events: exit_ds.rows.iter().filter(|r| r.outcome == 1).count(),
    };

    // -- regressions ---------------------------------------------------------
    let results = stage(
        "regress",
        run_regressions(config, &scores, &m, &entry_ds, &exit_ds, &mut summaries.regression),
    )?;
    stage(
        "regress",
        io::write_json(&staging.file("results.json"), &results).map_err(Into::into),
    )?;
    stage(
        "regress",
        std::fs::write(staging.file("results.txt"), format_grid_text(&results.tables)).map_err(Into::into),
    )?;
    summaries.regression.tables = results.tables.tables.iter().map(|t| t.name.clone()).collect();

    // -- manifest ---------------------------------------------------------
    let mut input_digests = BTreeMap::new();
    input_digests.insert("languages".to_string(), sha256_file(&config.inputs.languages)?);
    if let Some(path) = &config.inputs.indicators {
        input_digests.insert("indicators".to_string(), sha256_file(path)?);
    }
    if let Some(path) = &config.inputs.adjacency {
        input_digests.insert("adjacency".to_string(), sha256_file(path)?);
    }
    if let Some(path) = &config.inputs.exclusions {
        input_digests.insert("exclusions".to_string(), sha256_file(path)?);
    }
    if let Some(path) = &config.inputs.external_scores {
        input_digests.insert("external_scores".to_string(), sha256_file(path)?);
    }
    let config_json = serde_json::to_string(config).map_err(|e| CliError::Data(e.to_string()))?;
    let mut hasher = Sha256::new();
    hasher.update(config_json.as_bytes());
    let manifest = Manifest {
        tool: "eclab",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: hex_digest(hasher),
        config: config.clone(),
        input_digests,
        exclusions_in_effect: exclusions,
        stages: summaries,
        artifacts: staging.artifacts.clone(),
    };
    io::write_json(&staging.dir.join("manifest.json"), &manifest).map_err(CliError::from)?;
    Ok(manifest)
}

fn build_panel(config: &PipelineConfig, yearly: &YearlyCounts) -> Result<SpecializationPanel, CliError> {
    let mut items = Vec::new();
    for &year in &config.years.panel {
        let counts = build_count_matrix(yearly, year)?;
        let m = binarize(&rca(&counts), config.thresholds.rca)?;
        items.push((year, m));
    }
    Ok(SpecializationPanel::from_yearly(items)?)
}

fn run_regressions(
    config: &PipelineConfig,
    scores: &ComplexityScores,
    m: &SpecializationMatrix,
    entry_ds: &TransitionDataset,
    exit_ds: &TransitionDataset,
    summary: &mut RegressionSummary,
) -> Result<ResultsDocument, CliError> {
    let entry_table = transition_table(entry_ds);
    let exit_table = transition_table(exit_ds);

    let mut sample = None;
    let mut country_table = None;
    let mut instrument: Option<InstrumentResult> = None;
    if let Some(indicators_path) = &config.inputs.indicators {
        let indicators = load_indicators(indicators_path)?;
        let thresholds = SampleThresholds {
            min_population: config.thresholds.min_population,
            min_exports_usd: config.thresholds.min_exports_usd,
            min_patents: config.thresholds.min_patents,
        };
        let selection = apply_sample_filters(&indicators, &thresholds);
        summary.sample_included = selection.included.len();
        summary.sample_excluded = selection.excluded.len();

        if let Some(adjacency_path) = &config.inputs.adjacency {
            let graph = load_adjacency(adjacency_path)?;
            let built = build_similarity_instrument(scores, m, &graph, config.regression.instrument_peers)?;
            summary.instrument_dropped = built.dropped.clone();
            instrument = Some(built);
        }
        country_table = Some(build_country_table(
            scores,
            &indicators,
            instrument.as_ref(),
            Some(&selection.included),
        )?);
        sample = Some(selection);
    }

    let options = GridOptions {
        instrument_column: instrument.as_ref().map(|_| "eci_software_iv".to_string()),
        include_logit: config.regression.include_logit,
        cluster_column: "country".to_string(),
        sample_tag: sample.as_ref().map(|_| "population/exports/patents filter".to_string()),
    };
    let tables = run_model_grid(
        country_table.as_ref(),
        Some(&entry_table),
        Some(&exit_table),
        &options,
    );

    let correlation = match &config.inputs.external_scores {
        Some(path) => {
            let external = io::read_external_scores(path)?;
            Some(correlate_ubiquity_external(
                &m.activities().to_vec(),
                m.ubiquity(),
                &external,
            )?)
        }
        None => None,
    };

    Ok(ResultsDocument {
        tables,
        ubiquity_external_correlation: correlation,
        sample,
    })
}
