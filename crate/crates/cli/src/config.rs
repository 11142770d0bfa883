//! Pipeline configuration: TOML (or JSON) file, command-line overrides,
//! validation, and the effective-config echo used by the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use eclab_core::dynamics::{AtRiskRule, UbiquityTransform};
use eclab_core::ingest::ColumnMap;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Inputs,
    #[serde(default)]
    pub cleaning: Cleaning,
    #[serde(default)]
    pub years: Years,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub complexity: Complexity,
    #[serde(default)]
    pub relatedness: Relatedness,
    #[serde(default)]
    pub dynamics: Dynamics,
    #[serde(default)]
    pub regression: Regression,
    pub output: Output,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub languages: PathBuf,
    #[serde(default)]
    pub indicators: Option<PathBuf>,
    #[serde(default)]
    pub adjacency: Option<PathBuf>,
    #[serde(default)]
    pub exclusions: Option<PathBuf>,
    #[serde(default)]
    pub external_scores: Option<PathBuf>,
    /// Header names of the languages file when they differ from the
    /// published schema.
    #[serde(default)]
    pub columns: Option<ColumnMap>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Cleaning {
    pub top_n: usize,
    pub use_default_exclusions: bool,
}

impl Default for Cleaning {
    fn default() -> Self {
        Self {
            top_n: 150,
            use_default_exclusions: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Years {
    /// Years included in the event panel.
    pub panel: Vec<i32>,
    /// Year used for the cross-sectional matrices and scores.
    pub complexity_year: i32,
    pub base: Vec<i32>,
    pub post: Vec<i32>,
}

impl Default for Years {
    fn default() -> Self {
        Self {
            panel: vec![2020, 2021, 2022, 2023],
            complexity_year: 2020,
            base: vec![2020, 2021],
            post: vec![2022, 2023],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub rca: f64,
    pub backbone: f64,
    pub min_population: f64,
    pub min_exports_usd: f64,
    pub min_patents: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            rca: 1.0,
            backbone: 0.4,
            min_population: 1e6,
            min_exports_usd: 1e9,
            min_patents: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Complexity {
    pub method: MethodChoice,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Complexity {
    fn default() -> Self {
        Self {
            method: MethodChoice::Eigen,
            tol: 1e-9,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    Eigen,
    Iterate,
}


#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Relatedness {
    pub include_diagonal: bool,
}

impl Default for Relatedness {
    fn default() -> Self {
        Self { include_diagonal: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Dynamics {
    pub at_risk: AtRiskRule,
    pub ubiquity_transform: UbiquityTransform,
}

impl Default for Dynamics {
    fn default() -> Self {
        Self {
            at_risk: AtRiskRule::NonzeroCount,
            ubiquity_transform: UbiquityTransform::ZScore,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Regression {
    pub instrument_peers: usize,
    pub include_logit: bool,
}

impl Default for Regression {
    fn default() -> Self {
        Self {
            instrument_peers: 3,
            include_logit: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
}

/// Command-line overrides applied on top of the file values.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub top_n: Option<usize>,
    pub method: Option<MethodChoice>,
    pub rca_threshold: Option<f64>,
    pub backbone_threshold: Option<f64>,
    pub at_risk: Option<AtRiskRule>,
    pub ubiquity_transform: Option<UbiquityTransform>,
    pub base: Option<Vec<i32>>,
    pub post: Option<Vec<i32>>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
        let config: PipelineConfig = if is_json {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?
        } else {
            toml::from_str(&text)
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?
        };
        Ok(config)
    }

    pub fn apply_overrides(&mut self, overrides: &Overrides) {
        if let Some(dir) = &overrides.out_dir {
            self.output.dir = dir.clone();
        }
        if let Some(top_n) = overrides.top_n {
            self.cleaning.top_n = top_n;
        }
        if let Some(method) = overrides.method {
            self.complexity.method = method;
        }
        if let Some(t) = overrides.rca_threshold {
            self.thresholds.rca = t;
        }
        if let Some(t) = overrides.backbone_threshold {
            self.thresholds.backbone = t;
        }
        if let Some(rule) = overrides.at_risk {
            self.dynamics.at_risk = rule;
        }
        if let Some(transform) = overrides.ubiquity_transform {
            self.dynamics.ubiquity_transform = transform;
        }
        if let Some(base) = &overrides.base {
            self.years.base = base.clone();
        }
        if let Some(post) = &overrides.post {
            self.years.post = post.clone();
        }
    }

    /// Field-by-field validation; the failing field is named so a bad
    /// config is diagnosable without reading the pipeline source.
    pub fn validate(&self) -> Result<(), CliError> {
        let need_file = |field: &str, path: &Path| -> Result<(), CliError> {
            if path.is_file() {
                Ok(())
            } else {
                Err(CliError::Validation(format!(
                    "inputs.{field}: `{}` does not exist",
                    path.display()
                )))
            }
        };
        need_file("languages", &self.inputs.languages)?;
        if let Some(path) = &self.inputs.indicators {
            need_file("indicators", path)?;
        }
        if let Some(path) = &self.inputs.adjacency {
            need_file("adjacency", path)?;
        }
        if let Some(path) = &self.inputs.exclusions {
            need_file("exclusions", path)?;
        }
        if let Some(path) = &self.inputs.external_scores {
            need_file("external_scores", path)?;
        }
        if self.cleaning.top_n == 0 {
            return Err(CliError::Validation("cleaning.top_n: must be at least 1".into()));
        }
        if !(self.thresholds.rca > 0.0) {
            return Err(CliError::Validation("thresholds.rca: must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.thresholds.backbone) {
            return Err(CliError::Validation("thresholds.backbone: must lie in [0, 1]".into()));
        }
        if self.years.panel.is_empty() {
            return Err(CliError::Validation("years.panel: must not be empty".into()));
        }
        if !self.years.panel.contains(&self.years.complexity_year) {
            return Err(CliError::Validation(
                "years.complexity_year: must be one of years.panel".into(),
            ));
        }
        if self.years.base.is_empty() || self.years.post.is_empty() {
            return Err(CliError::Validation("years.base/years.post: must not be empty".into()));
        }
        if let Some(overlap) = self.years.base.iter().find(|y| self.years.post.contains(y)) {
            return Err(CliError::Validation(format!(
                "years.base/years.post: windows overlap on {overlap}"
            )));
        }
        for year in self.years.base.iter().chain(&self.years.post) {
            if !self.years.panel.contains(year) {
                return Err(CliError::Validation(format!(
                    "years: window year {year} is not in years.panel"
                )));
            }
        }
        if self.complexity.max_iter == 0 {
            return Err(CliError::Validation("complexity.max_iter: must be at least 1".into()));
        }
        if !(self.complexity.tol > 0.0) {
            return Err(CliError::Validation("complexity.tol: must be positive".into()));
        }
        if self.regression.instrument_peers == 0 {
            return Err(CliError::Validation(
                "regression.instrument_peers: must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
