//! Parsing, cleaning, filtering, and aggregation of raw input files.
//!
//! The entry point for count data is [`parse_ghig`], which adapts the
//! quarterly `languages.csv` schema (country by language contributor
//! counts) into [`QuarterlyCounts`]. [`clean_filter_aggregate`] then applies
//! the exclusion list, keeps the top-N languages by mean contributors, and
//! averages quarters into yearly observations. Auxiliary loaders handle the
//! country indicator table, the neighbor list, and the country sample
//! filters used by the regression stage.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Languages excluded by default before ranking: data formats and markup,
/// matched case-insensitively.
pub const DEFAULT_EXCLUDED_LANGUAGES: &[&str] = ["yaml", "json", "text", "svg", "Markdown", "xml"].as_slice();

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("column `{column}` not found in {path}")]
    MissingColumn { column: String, path: String },
    #[error("duplicate key ({year} Q{quarter}, {country}, {language})")]
    DuplicateKey {
        year: i32,
        quarter: u8,
        country: String,
        language: String,
    },
    #[error("row {row}: {message}")]
    UnparsableRow { row: usize, message: String },
    #[error("row {row}: column `{column}` has invalid value: {message}")]
    InvalidValue {
        row: usize,
        column: String,
        message: String,
    },
    #[error("no language survives the exclusion filter")]
    EmptyAfterFilter,
    #[error("self-loop ({country}, {country}) in adjacency list")]
    SelfLoop { country: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("duplicate country `{0}` in indicator table")]
    DuplicateCountry(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Maps canonical field names onto the header names of a quarterly counts
/// file. Defaults follow the published `languages.csv` schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMap {
    pub year: String,
    pub quarter: String,
    pub country: String,
    pub language: String,
    pub developers: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            year: "year".into(),
            quarter: "quarter".into(),
            country: "iso2_code".into(),
            language: "language".into(),
            developers: "num_pushers".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuarterlyRow {
    pub year: i32,
    pub quarter: u8,
    pub country: String,
    pub language: String,
    pub developers: u64,
}

/// One row per (year, quarter, country, language); rows with blank country
/// or language are dropped at parse time and counted in `dropped_rows`.
#[derive(Debug, Clone, Default)]
pub struct QuarterlyCounts {
    pub rows: Vec<QuarterlyRow>,
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YearlyRow {
    pub year: i32,
    pub country: String,
    pub language: String,
    /// Mean developers over the quarters present in the year.
    pub developers: f64,
}

/// One row per (year, country, language), sorted by that key.
#[derive(Debug, Clone, Default)]
pub struct YearlyCounts {
    pub rows: Vec<YearlyRow>,
}

impl YearlyCounts {
    pub fn years(&self) -> Vec<i32> {
        let set: BTreeSet<i32> = self.rows.iter().map(|r| r.year).collect();
        set.into_iter().collect()
    }
}

fn header_index(headers: &csv::StringRecord, name: &str, path: &str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| IngestError::MissingColumn {
            column: name.to_string(),
            path: path.to_string(),
        })
}

/// Parses a quarterly counts CSV using `map` to locate columns. Rows with a
/// blank country or language are dropped and counted; duplicate
/// (year, quarter, country, language) keys are an error.
pub fn parse_ghig(path: impl AsRef<Path>, map: &ColumnMap) -> Result<QuarterlyCounts, IngestError> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let idx_year = header_index(&headers, &map.year, &path_str)?;
    let idx_quarter = header_index(&headers, &map.quarter, &path_str)?;
    let idx_country = header_index(&headers, &map.country, &path_str)?;
    let idx_language = header_index(&headers, &map.language, &path_str)?;
    let idx_developers = header_index(&headers, &map.developers, &path_str)?;

    let mut out = QuarterlyCounts::default();
    let mut seen: HashSet<(i32, u8, String, String)> = HashSet::new();
    for (record_no, record) in reader.records().enumerate() {
        let row = record_no + 2; // 1-based, after the header line
        let record = record?;
        let field = |idx: usize| record.get(idx).unwrap_or("").trim().to_string();
        let country = field(idx_country);
        let language = field(idx_language);
        if country.is_empty() || language.is_empty() {
            out.dropped_rows += 1;
            continue;
        }
        let year: i32 = field(idx_year).parse().map_err(|e| IngestError::UnparsableRow {
            row,
            message: format!("year `{}`: {e}", field(idx_year)),
        })?;
        let quarter: u8 = field(idx_quarter).parse().map_err(|e| IngestError::UnparsableRow {
            row,
            message: format!("quarter `{}`: {e}", field(idx_quarter)),
        })?;
        if !(1..=4).contains(&quarter) {
            return Err(IngestError::UnparsableRow {
                row,
                message: format!("quarter {quarter} outside 1-4"),
            });
        }
        let developers: u64 = field(idx_developers).parse().map_err(|e| IngestError::UnparsableRow {
            row,
            message: format!("developers `{}`: {e}", field(idx_developers)),
        })?;
        if !seen.insert((year, quarter, country.clone(), language.clone())) {
            return Err(IngestError::DuplicateKey {
                year,
                quarter,
                country,
                language,
            });
        }
        out.rows.push(QuarterlyRow {
            year,
            quarter,
            country,
            language,
            developers,
        });
    }
    Ok(out)
}

/// Removes excluded languages (case-insensitive exact match), keeps the
/// `top_n` languages by mean contributors per period, and averages each
/// (year, country, language) over its present quarters.
///
/// The per-language mean is the language's total contributors divided by the
/// number of distinct (year, quarter) periods in the post-exclusion data, so
/// a language missing from a period counts zero for it. Ties rank by total
/// contributors, then by language name.
pub fn clean_filter_aggregate(
    q: &QuarterlyCounts,
    exclusions: &[String],
    top_n: usize,
) -> Result<YearlyCounts, IngestError> {
    if top_n == 0 {
        return Err(IngestError::InvalidParameter("top_n must be at least 1".into()));
    }
    let excluded: HashSet<String> = exclusions.iter().map(|s| s.to_lowercase()).collect();
    let retained: Vec<&QuarterlyRow> = q
        .rows
        .iter()
        .filter(|r| !excluded.contains(&r.language.to_lowercase()))
        .collect();

    let periods: BTreeSet<(i32, u8)> = retained.iter().map(|r| (r.year, r.quarter)).collect();
    let n_periods = periods.len();
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for r in &retained {
        *totals.entry(r.language.as_str()).or_default() += r.developers;
    }
    if totals.is_empty() {
        return Err(IngestError::EmptyAfterFilter);
    }

    let mut ranked: Vec<(&str, f64, u64)> = totals
        .iter()
        .map(|(lang, total)| (*lang, *total as f64 / n_periods as f64, *total))
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite means")
            .then(b.2.cmp(&a.2))
            .then(a.0.cmp(b.0))
    });
    let kept: HashSet<&str> = ranked.iter().take(top_n).map(|(lang, _, _)| *lang).collect();

    // (year, country, language) -> (sum over quarters, quarter count)
    let mut groups: BTreeMap<(i32, &str, &str), (f64, u32)> = BTreeMap::new();
    for r in &retained {
        if !kept.contains(r.language.as_str()) {
            continue;
        }
        let entry = groups
            .entry((r.year, r.country.as_str(), r.language.as_str()))
            .or_insert((0.0, 0));
        entry.0 += r.developers as f64;
        entry.1 += 1;
    }

    let rows = groups
        .into_iter()
        .map(|((year, country, language), (sum, count))| YearlyRow {
            year,
            country: country.to_string(),
            language: language.to_string(),
            developers: sum / count as f64,
        })
        .collect();
    Ok(YearlyCounts { rows })
}

/// Per-country indicator values; absent cells stay absent rather than
/// becoming zero, so later joins can drop incomplete rows.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IndicatorRow {
    pub gdp_pc: Option<f64>,
    pub population: Option<f64>,
    pub natural_resources: Option<f64>,
    pub gini_avg: Option<f64>,
    pub emissions_per_gdp: Option<f64>,
    pub exports_usd: Option<f64>,
    pub patents: Option<f64>,
    pub eci_trade: Option<f64>,
    pub eci_tech: Option<f64>,
    pub eci_research: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct CountryIndicators {
    pub rows: BTreeMap<String, IndicatorRow>,
}

const INDICATOR_COLUMNS: &[&str] = &[
    "gdp_pc",
    "population",
    "natural_resources",
    "gini_avg",
    "emissions_per_gdp",
    "exports_usd",
    "patents",
];
const OPTIONAL_INDICATOR_COLUMNS: &[&str] = &["eci_trade", "eci_tech", "eci_research"];

pub fn load_indicators(path: impl AsRef<Path>) -> Result<CountryIndicators, IngestError> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let idx_country = header_index(&headers, "country", &path_str)?;
    let mut required: Vec<(usize, &str)> = Vec::new();
    for name in INDICATOR_COLUMNS {
        required.push((header_index(&headers, name, &path_str)?, name));
    }
    let mut optional: Vec<(usize, &str)> = Vec::new();
    for name in OPTIONAL_INDICATOR_COLUMNS {
        if let Some(idx) = headers.iter().position(|h| h.trim() == *name) {
            optional.push((idx, name));
        }
    }

    let parse_cell = |record: &csv::StringRecord, idx: usize, name: &str, row: usize| -> Result<Option<f64>, IngestError> {
        let raw = record.get(idx).unwrap_or("").trim();
        if raw.is_empty() {
            return Ok(None);
        }
        let value: f64 = raw.parse().map_err(|_| IngestError::UnparsableRow {
            row,
            message: format!("column `{name}`: cannot parse `{raw}` as a number"),
        })?;
        if !value.is_finite() {
            return Err(IngestError::InvalidValue {
                row,
                column: name.to_string(),
                message: "value is not finite".into(),
            });
        }
        Ok(Some(value))
    };

    let mut out = CountryIndicators::default();
    for (record_no, record) in reader.records().enumerate() {
        let row_no = record_no + 2;
        let record = record?;
        let country = record.get(idx_country).unwrap_or("").trim().to_string();
        if country.is_empty() {
            continue;
        }
        let mut ind = IndicatorRow::default();
        for (idx, name) in required.iter().chain(optional.iter()) {
            let value = parse_cell(&record, *idx, name, row_no)?;
            match *name {
                "gdp_pc" => ind.gdp_pc = value,
                "population" => {
                    if let Some(p) = value {
                        if p <= 0.0 {
                            return Err(IngestError::InvalidValue {
                                row: row_no,
                                column: "population".into(),
                                message: format!("population {p} must be positive"),
                            });
                        }
                    }
                    ind.population = value;
                }
                "natural_resources" => ind.natural_resources = value,
                "gini_avg" => ind.gini_avg = value,
                "emissions_per_gdp" => ind.emissions_per_gdp = value,
                "exports_usd" => ind.exports_usd = value,
                "patents" => ind.patents = value,
                "eci_trade" => ind.eci_trade = value,
                "eci_tech" => ind.eci_tech = value,
                "eci_research" => ind.eci_research = value,
                other => unreachable!("unmapped indicator column {other}"),
            }
        }
        if out.rows.insert(country.clone(), ind).is_some() {
            return Err(IngestError::DuplicateCountry(country));
        }
    }
    Ok(out)
}

/// Symmetric set of country pairs sharing a border. Loaded from a two-column
/// pair list; the symmetric closure is applied on load.
#[derive(Debug, Clone, Default)]
pub struct NeighborGraph {
    pairs: BTreeSet<(String, String)>,
}

impl NeighborGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: &str, b: &str) -> Result<(), IngestError> {
        if a == b {
            return Err(IngestError::SelfLoop { country: a.to_string() });
        }
        self.pairs.insert((a.to_string(), b.to_string()));
        self.pairs.insert((b.to_string(), a.to_string()));
        Ok(())
    }

    pub fn are_neighbors(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&(a.to_string(), b.to_string()))
    }

    pub fn len(&self) -> usize {
        self.pairs.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

pub fn load_adjacency(path: impl AsRef<Path>) -> Result<NeighborGraph, IngestError> {
    let path_str = path.as_ref().display().to_string();
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let idx_a = header_index(&headers, "country_a", &path_str)?;
    let idx_b = header_index(&headers, "country_b", &path_str)?;
    let mut graph = NeighborGraph::new();
    for (record_no, record) in reader.records().enumerate() {
        let record = record?;
        let a = record.get(idx_a).unwrap_or("").trim();
        let b = record.get(idx_b).unwrap_or("").trim();
        if a.is_empty() && b.is_empty() {
            continue;
        }
        if a.is_empty() || b.is_empty() {
            return Err(IngestError::UnparsableRow {
                row: record_no + 2,
                message: "adjacency row with a blank side".into(),
            });
        }
        graph.insert(a, b)?;
    }
    Ok(graph)
}

/// Country sample thresholds: population and exports are exclusive lower
/// bounds, the patent count is inclusive.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleThresholds {
    pub min_population: f64,
    pub min_exports_usd: f64,
    pub min_patents: f64,
}

impl Default for SampleThresholds {
    fn default() -> Self {
        Self {
            min_population: 1e6,
            min_exports_usd: 1e9,
            min_patents: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleExclusion {
    pub country: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SampleSelection {
    pub included: Vec<String>,
    pub excluded: Vec<SampleExclusion>,
}

/// Applies the country sample filters. Countries missing any filter field
/// are excluded and reported, never silently assumed to pass.
pub fn apply_sample_filters(ind: &CountryIndicators, thresholds: &SampleThresholds) -> SampleSelection {
    let mut selection = SampleSelection::default();
    for (country, row) in &ind.rows {
        let mut missing = Vec::new();
        if row.population.is_none() {
            missing.push("population");
        }
        if row.exports_usd.is_none() {
            missing.push("exports_usd");
        }
        if row.patents.is_none() {
            missing.push("patents");
        }
        if !missing.is_empty() {
            selection.excluded.push(SampleExclusion {
                country: country.clone(),
                reason: format!("missing {}", missing.join(", ")),
            });
            continue;
        }
        let population = row.population.unwrap();
        let exports = row.exports_usd.unwrap();
        let patents = row.patents.unwrap();
        let mut failures = Vec::new();
        if population <= thresholds.min_population {
            failures.push(format!("population {population} <= {}", thresholds.min_population));
        }
        if exports <= thresholds.min_exports_usd {
            failures.push(format!("exports {exports} <= {}", thresholds.min_exports_usd));
        }
        if patents < thresholds.min_patents {
            failures.push(format!("patents {patents} < {}", thresholds.min_patents));
        }
        if failures.is_empty() {
            selection.included.push(country.clone());
        } else {
            selection.excluded.push(SampleExclusion {
                country: country.clone(),
                reason: failures.join("; "),
            });
        }
    }
    selection
}

/// Reads an exclusion list: one language per line, `#` starts a comment.
pub fn load_exclusion_list(path: impl AsRef<Path>) -> Result<Vec<String>, IngestError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_exclusion_list(&text))
}

pub fn parse_exclusion_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(|line| line.to_string())
        .collect()
}

/// The default exclusions plus any user-provided extras.
pub fn effective_exclusions(extra: &[String], use_defaults: bool) -> Vec<String> {
    let mut list: Vec<String> = if use_defaults {
        DEFAULT_EXCLUDED_LANGUAGES.iter().map(|s| s.to_string()).collect()
    } else {
        Vec::new()
    };
    for name in extra {
        if !list.iter().any(|have| have.eq_ignore_ascii_case(name)) {
            list.push(name.clone());
        }
    }
    list
}
