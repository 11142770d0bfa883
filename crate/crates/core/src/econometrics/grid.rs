//! Runs the standard grid of model specifications over a merged country
//! table and the entry/exit transition datasets, producing machine-readable
//! results plus formatted text tables with significance stars.

use serde::Serialize;

use super::design::{Covariate, ModelSpec, SeType, Transform};
use super::instrument::InstrumentResult;
use super::iv::{tsls, IvResult};
use super::logit::logit;
use super::ols::{ols, RegressionResult};
use super::table::{Column, DataTable};
use super::EconError;
use crate::complexity::ComplexityScores;
use crate::dynamics::TransitionDataset;
use crate::ingest::CountryIndicators;

pub const ECI_SOFTWARE: &str = "eci_software";
pub const ECI_TRADE: &str = "eci_trade";
pub const ECI_TECH: &str = "eci_tech";
pub const ECI_RESEARCH: &str = "eci_research";

/// Merges complexity scores, country indicators, and (optionally) the
/// similarity instrument into one regression-ready table. When `sample` is
/// given, only those countries are kept.
pub fn build_country_table(
    scores: &ComplexityScores,
    indicators: &CountryIndicators,
    instrument: Option<&InstrumentResult>,
    sample: Option<&[String]>,
) -> Result<DataTable, EconError> {
    let keep: Vec<usize> = scores
        .countries
        .iter()
        .enumerate()
        .filter(|(_, c)| sample.is_none_or(|list| list.contains(c)))
        .map(|(i, _)| i)
        .collect();

    let mut table = DataTable::new();
    table.add_categorical(
        "country",
        keep.iter().map(|&i| Some(scores.countries[i].clone())).collect(),
    )?;
    table.add_numeric(ECI_SOFTWARE, keep.iter().map(|&i| Some(scores.eci_z[i])).collect())?;

    let indicator =
        |get: fn(&crate::ingest::IndicatorRow) -> Option<f64>| -> Vec<Option<f64>> {
            keep.iter()
                .map(|&i| indicators.rows.get(&scores.countries[i]).and_then(get))
                .collect()
        };
    table.add_numeric(ECI_TRADE, indicator(|r| r.eci_trade))?;
    table.add_numeric(ECI_TECH, indicator(|r| r.eci_tech))?;
    table.add_numeric(ECI_RESEARCH, indicator(|r| r.eci_research))?;
    table.add_numeric("gdp_pc", indicator(|r| r.gdp_pc))?;
    table.add_numeric("population", indicator(|r| r.population))?;
    table.add_numeric("natural_resources", indicator(|r| r.natural_resources))?;
    table.add_numeric("gini_avg", indicator(|r| r.gini_avg))?;
    table.add_numeric("emissions_per_gdp", indicator(|r| r.emissions_per_gdp))?;
    table.add_numeric("exports_usd", indicator(|r| r.exports_usd))?;
    table.add_numeric("patents", indicator(|r| r.patents))?;
    if let Some(instrument) = instrument {
        table.add_numeric(
            "eci_software_iv",
            keep.iter()
                .map(|&i| instrument.value_for(&scores.countries[i]))
                .collect(),
        )?;
    }
    Ok(table)
}

/// Converts a transition dataset into the estimators' table format.
pub fn transition_table(ds: &TransitionDataset) -> DataTable {
    let mut table = DataTable::new();
    table
        .add_column(
            "country",
            Column::Categorical(ds.rows.iter().map(|r| Some(r.country.clone())).collect()),
        )
        .expect("fresh table");
    table
        .add_categorical("language", ds.rows.iter().map(|r| Some(r.activity.clone())).collect())
        .expect("fresh table");
    table
        .add_numeric("outcome", ds.rows.iter().map(|r| Some(f64::from(r.outcome))).collect())
        .expect("fresh table");
    table
        .add_numeric("density", ds.rows.iter().map(|r| Some(r.density)).collect())
        .expect("fresh table");
    table
        .add_numeric("ubiquity", ds.rows.iter().map(|r| Some(r.ubiquity)).collect())
        .expect("fresh table");
    table
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FitOutcome {
    Ok(Box<RegressionResult>),
    Iv(Box<IvResult>),
    Error { error: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnFit {
    pub label: String,
    pub fixed_effects: Vec<String>,
    pub instrumented: bool,
    pub fit: FitOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableResult {
    pub name: String,
    pub outcome: String,
    pub estimator: String,
    pub columns: Vec<ColumnFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridResult {
    pub tables: Vec<TableResult>,
}

#[derive(Debug, Clone)]
pub struct GridOptions {
    /// Column holding the excluded instrument; enables the IV variants of
    /// the macro tables when present in the country table.
    pub instrument_column: Option<String>,
    pub include_logit: bool,
    pub cluster_column: String,
    pub sample_tag: Option<String>,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            instrument_column: Some("eci_software_iv".to_string()),
            include_logit: true,
            cluster_column: "country".to_string(),
            sample_tag: None,
        }
    }
}

/// The eight ECI combinations used by every macro table: each index alone,
/// then software paired with each alternative, then all four.
fn eci_combinations() -> Vec<Vec<&'static str>> {
    vec![
        vec![ECI_SOFTWARE],
        vec![ECI_TRADE],
        vec![ECI_TECH],
        vec![ECI_RESEARCH],
        vec![ECI_SOFTWARE, ECI_TRADE],
        vec![ECI_SOFTWARE, ECI_TECH],
        vec![ECI_SOFTWARE, ECI_RESEARCH],
        vec![ECI_SOFTWARE, ECI_TRADE, ECI_TECH, ECI_RESEARCH],
    ]
}

struct MacroTableDef {
    name: &'static str,
    outcome: &'static str,
    outcome_transform: Transform,
    extra_controls: Vec<Covariate>,
}

fn macro_tables() -> Vec<MacroTableDef> {
    vec![
        MacroTableDef {
            name: "gdp_per_capita",
            outcome: "gdp_pc",
            outcome_transform: Transform::Log,
            extra_controls: vec![],
        },
        MacroTableDef {
            name: "gini",
            outcome: "gini_avg",
            outcome_transform: Transform::None,
            extra_controls: vec![Covariate::log("gdp_pc"), Covariate::log_square("gdp_pc")],
        },
        MacroTableDef {
            name: "emissions_intensity",
            outcome: "emissions_per_gdp",
            outcome_transform: Transform::None,
            extra_controls: vec![Covariate::log("gdp_pc"), Covariate::log_square("gdp_pc")],
        },
    ]
}

fn macro_spec(def: &MacroTableDef, ecis: &[&str], sample: Option<String>) -> ModelSpec {
    let mut covariates: Vec<Covariate> = ecis.iter().map(|name| Covariate::raw(*name)).collect();
    covariates.extend(def.extra_controls.iter().cloned());
    covariates.push(Covariate::log("population"));
    covariates.push(Covariate::log("natural_resources"));
    ModelSpec {
        outcome: def.outcome.to_string(),
        outcome_transform: def.outcome_transform,
        covariates,
        fixed_effects: vec![],
        se: SeType::Robust,
        sample,
    }
}

/// The seven entry/exit columns: density alone and with each fixed-effect
/// combination, ubiquity alone, then both regressors without and with
/// country fixed effects.
fn transition_columns() -> Vec<(bool, bool, Vec<&'static str>)> {
    vec![
        (true, false, vec![]),
        (true, false, vec!["country"]),
        (true, false, vec!["language"]),
        (true, false, vec!["country", "language"]),
        (false, true, vec![]),
        (true, true, vec![]),
        (true, true, vec!["country"]),
    ]
}

fn transition_spec(
    use_density: bool,
    use_ubiquity: bool,
    fixed_effects: &[&str],
    cluster: &str,
    sample: Option<String>,
) -> ModelSpec {
    let mut covariates = Vec::new();
    if use_density {
        covariates.push(Covariate::raw("density"));
    }
    if use_ubiquity {
        covariates.push(Covariate::raw("ubiquity"));
    }
    ModelSpec {
        outcome: "outcome".to_string(),
        outcome_transform: Transform::None,
        covariates,
        fixed_effects: fixed_effects.iter().map(|s| s.to_string()).collect(),
        se: SeType::Clustered(cluster.to_string()),
        sample,
    }
}

fn ols_column(table: &DataTable, spec: &ModelSpec, label: String) -> ColumnFit {
    let fit = match ols(table, spec) {
        Ok(result) => FitOutcome::Ok(Box::new(result)),
        Err(err) => FitOutcome::Error { error: err.to_string() },
    };
    ColumnFit {
        label,
        fixed_effects: spec.fixed_effects.clone(),
        instrumented: false,
        fit,
    }
}

fn logit_column(table: &DataTable, spec: &ModelSpec, label: String) -> ColumnFit {
    let fit = match logit(table, spec) {
        Ok(result) => FitOutcome::Ok(Box::new(result)),
        Err(err) => FitOutcome::Error { error: err.to_string() },
    };
    ColumnFit {
        label,
        fixed_effects: spec.fixed_effects.clone(),
        instrumented: false,
        fit,
    }
}

fn iv_column(table: &DataTable, spec: &ModelSpec, instrument: &str, label: String) -> ColumnFit {
    let fit = match tsls(table, spec, ECI_SOFTWARE, instrument) {
        Ok(result) => FitOutcome::Iv(Box::new(result)),
        Err(err) => FitOutcome::Error { error: err.to_string() },
    };
    ColumnFit {
        label,
        fixed_effects: spec.fixed_effects.clone(),
        instrumented: true,
        fit,
    }
}

/// Runs every table the inputs support: the three macro tables (plus IV
/// variants when an instrument column is available), the entry/exit linear
/// probability models, and the logit versions.
pub fn run_model_grid(
    country_table: Option<&DataTable>,
    entry_table: Option<&DataTable>,
    exit_table: Option<&DataTable>,
    options: &GridOptions,
) -> GridResult {
    let mut tables = Vec::new();

    if let Some(country) = country_table {
        for def in macro_tables() {
            let mut columns = Vec::new();
            for (idx, ecis) in eci_combinations().iter().enumerate() {
                let spec = macro_spec(&def, ecis, options.sample_tag.clone());
                columns.push(ols_column(country, &spec, format!("({})", idx + 1)));
            }
            tables.push(TableResult {
                name: def.name.to_string(),
                outcome: Transform::label(def.outcome_transform, def.outcome),
                estimator: "ols".to_string(),
                columns,
            });
        }
        let instrument = options
            .instrument_column
            .as_deref()
            .filter(|name| country.column(name).is_some());
        if let Some(instrument) = instrument {
            for def in macro_tables() {
                let mut columns = Vec::new();
                for (idx, ecis) in eci_combinations().iter().enumerate() {
                    let spec = macro_spec(&def, ecis, options.sample_tag.clone());
                    let label = format!("({})", idx + 1);
                    if ecis.contains(&ECI_SOFTWARE) {
                        columns.push(iv_column(country, &spec, instrument, label));
                    } else {
                        columns.push(ols_column(country, &spec, label));
                    }
                }
                tables.push(TableResult {
                    name: format!("{}_iv", def.name),
                    outcome: Transform::label(def.outcome_transform, def.outcome),
                    estimator: "2sls".to_string(),
                    columns,
                });
            }
        }
    }

    let mut transition_block = |table: &DataTable, kind: &str| {
        let mut lpm_columns = Vec::new();
        for (idx, (density, ubiquity, fe)) in transition_columns().iter().enumerate() {
            let spec = transition_spec(
                *density,
                *ubiquity,
                fe,
                &options.cluster_column,
                options.sample_tag.clone(),
            );
            lpm_columns.push(ols_column(table, &spec, format!("({})", idx + 1)));
        }
        tables.push(TableResult {
            name: format!("{kind}_lpm"),
            outcome: "outcome".to_string(),
            estimator: "lpm".to_string(),
            columns: lpm_columns,
        });
        if options.include_logit {
            let mut logit_columns = Vec::new();
            for (idx, (density, ubiquity, fe)) in transition_columns().iter().enumerate() {
                let spec = transition_spec(
                    *density,
                    *ubiquity,
                    fe,
                    &options.cluster_column,
                    options.sample_tag.clone(),
                );
                logit_columns.push(logit_column(table, &spec, format!("({})", idx + 1)));
            }
            tables.push(TableResult {
                name: format!("{kind}_logit"),
                outcome: "outcome".to_string(),
                estimator: "logit".to_string(),
                columns: logit_columns,
            });
        }
    };

    if let Some(entry) = entry_table {
        transition_block(entry, "entry");
    }
    if let Some(exit) = exit_table {
        transition_block(exit, "exit");
    }

    GridResult { tables }
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

fn is_display_coefficient(name: &str) -> bool {
    name != "const" && !name.contains('=') && name != "first_stage_residual"
}

fn column_result(fit: &FitOutcome) -> Option<&RegressionResult> {
    match fit {
        FitOutcome::Ok(result) => Some(result),
        FitOutcome::Iv(iv) => Some(&iv.second_stage),
        FitOutcome::Error { .. } => None,
    }
}

/// Plain-text rendering of one table: coefficient rows with stars and
/// standard errors in parentheses, fixed-effect and fit-statistic rows
/// underneath, one column per specification.
pub fn format_table_text(table: &TableResult) -> String {
    const LABEL_WIDTH: usize = 26;
    const CELL_WIDTH: usize = 18;
    let mut out = String::new();
    out.push_str(&format!(
        "Table {} (outcome: {}, estimator: {})\n",
        table.name, table.outcome, table.estimator
    ));

    // Coefficient rows: union across columns in first-appearance order.
    let mut coef_rows: Vec<String> = Vec::new();
    for column in &table.columns {
        if let Some(result) = column_result(&column.fit) {
            for name in &result.names {
                if is_display_coefficient(name) && !coef_rows.contains(name) {
                    coef_rows.push(name.clone());
                }
            }
        }
    }
    coef_rows.push("const".to_string());

    let header: String = table
        .columns
        .iter()
        .map(|c| format!("{:>CELL_WIDTH$}", c.label))
        .collect();
    out.push_str(&format!("{:<LABEL_WIDTH$}{header}\n", ""));
    let rule_len = LABEL_WIDTH + CELL_WIDTH * table.columns.len();
    out.push_str(&format!("{}\n", "-".repeat(rule_len)));

    for name in &coef_rows {
        let label = if name == "const" { "Constant" } else { name.as_str() };
        let mut line = format!("{label:<LABEL_WIDTH$}");
        let mut se_line = format!("{:<LABEL_WIDTH$}", "");
        let mut any = false;
        for column in &table.columns {
            let cell = column_result(&column.fit)
                .and_then(|result| {
                    result.names.iter().position(|n| n == name).map(|idx| {
                        any = true;
                        (
                            format!("{:.3}{}", result.coefficients[idx], significance_stars(result.p_values[idx])),
                            format!("({:.3})", result.std_errors[idx]),
                        )
                    })
                })
                .unwrap_or_default();
            line.push_str(&format!("{:>CELL_WIDTH$}", cell.0));
            se_line.push_str(&format!("{:>CELL_WIDTH$}", cell.1));
        }
        if any {
            out.push_str(&line);
            out.push('\n');
            out.push_str(&se_line);
            out.push('\n');
        }
    }

    // Fixed-effect indicator rows.
    let mut fe_names: Vec<String> = Vec::new();
    for column in &table.columns {
        for fe in &column.fixed_effects {
            if !fe_names.contains(fe) {
                fe_names.push(fe.clone());
            }
        }
    }
    for fe in &fe_names {
        let mut line = format!("{:<LABEL_WIDTH$}", format!("{fe} FE"));
        for column in &table.columns {
            let cell = if column.fixed_effects.contains(fe) { "Yes" } else { "No" };
            line.push_str(&format!("{cell:>CELL_WIDTH$}"));
        }
        out.push_str(&line);
        out.push('\n');
    }
    if table.columns.iter().any(|c| c.instrumented) {
        let mut line = format!("{:<LABEL_WIDTH$}", "Instrument");
        for column in &table.columns {
            let cell = if column.instrumented { "Yes" } else { "No" };
            line.push_str(&format!("{cell:>CELL_WIDTH$}"));
        }
        out.push_str(&line);
        out.push('\n');
    }

    let stat_row = |out: &mut String, label: &str, f: &dyn Fn(&ColumnFit) -> Option<String>| {
        let cells: Vec<Option<String>> = table.columns.iter().map(f).collect();
        if cells.iter().all(|c| c.is_none()) {
            return;
        }
        let mut line = format!("{label:<LABEL_WIDTH$}");
        for cell in cells {
            line.push_str(&format!("{:>CELL_WIDTH$}", cell.unwrap_or_default()));
        }
        out.push_str(&line);
        out.push('\n');
    };

    stat_row(&mut out, "Observations", &|c| {
        column_result(&c.fit).map(|r| r.n.to_string())
    });
    stat_row(&mut out, "R2", &|c| {
        column_result(&c.fit).and_then(|r| r.r_squared).map(|v| format!("{v:.3}"))
    });
    stat_row(&mut out, "Adjusted R2", &|c| {
        column_result(&c.fit).and_then(|r| r.adj_r_squared).map(|v| format!("{v:.3}"))
    });
    stat_row(&mut out, "Within R2", &|c| {
        column_result(&c.fit).and_then(|r| r.within_r_squared).map(|v| format!("{v:.3}"))
    });
    stat_row(&mut out, "Pseudo R2", &|c| {
        column_result(&c.fit).and_then(|r| r.pseudo_r_squared).map(|v| format!("{v:.3}"))
    });
    stat_row(&mut out, "BIC", &|c| {
        column_result(&c.fit).and_then(|r| r.bic).map(|v| format!("{v:.0}"))
    });
    stat_row(&mut out, "First-stage F", &|c| match &c.fit {
        FitOutcome::Iv(iv) => Some(format!("{:.1}", iv.weak_instrument_f)),
        _ => None,
    });
    stat_row(&mut out, "DWH p-value", &|c| match &c.fit {
        FitOutcome::Iv(iv) => Some(format!("{:.3}", iv.dwh_p_value)),
        _ => None,
    });

    for column in &table.columns {
        if let FitOutcome::Error { error } = &column.fit {
            out.push_str(&format!("note: column {} not estimated: {error}\n", column.label));
        }
    }
    out.push_str("Significance: *p<0.1, **p<0.05, ***p<0.01\n");
    out
}

pub fn format_grid_text(grid: &GridResult) -> String {
    grid.tables
        .iter()
        .map(format_table_text)
        .collect::<Vec<_>>()
        .join("\n")
}
