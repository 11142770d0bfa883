//! `eclab`: from raw country-by-language contributor counts to
//! specialization matrices, complexity indices, relatedness networks,
//! diversification events, and regression tables. Run `eclab pipeline`
//! for the whole chain or the individual subcommands for single stages.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use eclab_core::dynamics::{AtRiskRule, EventKind, UbiquityTransform};
use eclab_core::ingest::ColumnMap;

mod commands;
mod config;
mod error;
mod pipeline;

use config::{MethodChoice, Overrides, PipelineConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "eclab", version, about = "Economic-complexity analytics for country-by-activity count data")]
struct Cli {
    /// Reserved for future resampling features; accepted everywhere,
    /// currently unused.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum TransitionKind {
    Entry,
    Exit,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum AtRiskChoice {
    None,
    NonzeroCount,
    RcaPositive,
}

impl AtRiskChoice {
    fn rule(self) -> AtRiskRule {
        match self {
            AtRiskChoice::None => AtRiskRule::None,
            AtRiskChoice::NonzeroCount => AtRiskRule::NonzeroCount,
            AtRiskChoice::RcaPositive => AtRiskRule::RcaPositive,
        }
    }
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum UbiquityChoice {
    Raw,
    Z,
    Log,
}

impl UbiquityChoice {
    fn transform(self) -> UbiquityTransform {
        match self {
            UbiquityChoice::Raw => UbiquityTransform::Raw,
            UbiquityChoice::Z => UbiquityTransform::ZScore,
            UbiquityChoice::Log => UbiquityTransform::Log,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a quarterly counts file, apply exclusions and the top-N
    /// language filter, and write yearly means.
    Clean {
        #[arg(long)]
        languages: PathBuf,
        #[arg(long)]
        exclusions: Option<PathBuf>,
        /// Skip the built-in data-format/markup exclusion list.
        #[arg(long)]
        no_default_exclusions: bool,
        #[arg(long, default_value_t = 150)]
        top_n: usize,
        #[arg(long)]
        out: PathBuf,
        /// Header overrides for nonstandard files.
        #[arg(long, default_value = "year")]
        year_col: String,
        #[arg(long, default_value = "quarter")]
        quarter_col: String,
        #[arg(long, default_value = "iso2_code")]
        country_col: String,
        #[arg(long, default_value = "language")]
        language_col: String,
        #[arg(long, default_value = "num_pushers")]
        developers_col: String,
    },
    /// Pivot yearly counts for one year and write the RCA matrix.
    Rca {
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        year: i32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Binarize an RCA matrix into a specialization matrix.
    M {
        #[arg(long)]
        rca: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the nested-sorted matrix.
        #[arg(long)]
        nested_out: Option<PathBuf>,
        /// Sidecar permutation file for the nested sort.
        #[arg(long)]
        perm_out: Option<PathBuf>,
    },
    /// Country and activity complexity scores from a specialization matrix.
    Complexity {
        #[arg(long)]
        m: PathBuf,
        #[arg(long, value_enum, default_value = "eigen")]
        method: MethodChoice,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pci_out: PathBuf,
        /// Metadata sidecar path (defaults to <out>.meta.json).
        #[arg(long)]
        meta_out: Option<PathBuf>,
    },
    /// Activity-activity proximity in long form.
    Proximity {
        #[arg(long)]
        m: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Country-activity relatedness density.
    Density {
        #[arg(long)]
        m: PathBuf,
        /// Reuse a precomputed proximity file instead of recomputing.
        #[arg(long)]
        phi: Option<PathBuf>,
        /// Exclude the self-term from the density sums.
        #[arg(long)]
        exclude_diagonal: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximum-spanning-tree backbone plus strong edges.
    Backbone {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Entry/exit events over a panel of m_<year>.csv files.
    Events {
        #[arg(long)]
        panel_dir: PathBuf,
        #[arg(long, value_delimiter = ',')]
        base: Vec<i32>,
        #[arg(long, value_delimiter = ',')]
        post: Vec<i32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regression-ready transition dataset for entries or exits.
    Transitions {
        #[arg(long)]
        panel_dir: PathBuf,
        #[arg(long, value_delimiter = ',')]
        base: Vec<i32>,
        #[arg(long, value_delimiter = ',')]
        post: Vec<i32>,
        #[arg(long = "type", value_enum)]
        kind: TransitionKind,
        /// Yearly counts file; required for the count-based at-risk floors.
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "nonzero-count")]
        at_risk: AtRiskChoice,
        #[arg(long, value_enum, default_value = "z")]
        ubiquity: UbiquityChoice,
        #[arg(long)]
        exclude_diagonal: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// One OLS or logit model from a JSON spec over a CSV table.
    Regress {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "ols")]
        estimator: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        text: Option<PathBuf>,
    },
    /// Two-stage least squares with weak-instrument and endogeneity
    /// diagnostics.
    Iv {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        endog: String,
        #[arg(long)]
        instrument: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        text: Option<PathBuf>,
    },
    /// Correlate activity ubiquity with an external score series.
    Correlate {
        #[arg(long)]
        m: PathBuf,
        #[arg(long)]
        external: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank entities by their z-scores.
    Rank {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline from a config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        top_n: Option<usize>,
        #[arg(long, value_enum)]
        method: Option<MethodChoice>,
        #[arg(long)]
        rca_threshold: Option<f64>,
        #[arg(long)]
        backbone_threshold: Option<f64>,
        #[arg(long, value_enum)]
        at_risk: Option<AtRiskChoice>,
        #[arg(long, value_enum)]
        ubiquity: Option<UbiquityChoice>,
        #[arg(long, value_delimiter = ',')]
        base: Option<Vec<i32>>,
        #[arg(long, value_delimiter = ',')]
        post: Option<Vec<i32>>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Clean {
            languages,
            exclusions,
            no_default_exclusions,
            top_n,
            out,
            year_col,
            quarter_col,
            country_col,
            language_col,
            developers_col,
        } => {
            let columns = ColumnMap {
                year: year_col,
                quarter: quarter_col,
                country: country_col,
                language: language_col,
                developers: developers_col,
            };
            commands::clean(&languages, exclusions.as_deref(), no_default_exclusions, top_n, &columns, &out)
        }
        Command::Rca { counts, year, out } => commands::rca_cmd(&counts, year, &out),
        Command::M {
            rca,
            threshold,
            out,
            nested_out,
            perm_out,
        } => commands::m_cmd(&rca, threshold, &out, nested_out.as_deref(), perm_out.as_deref()),
        Command::Complexity {
            m,
            method,
            tol,
            max_iter,
            out,
            pci_out,
            meta_out,
        } => commands::complexity_cmd(&m, method, tol, max_iter, &out, &pci_out, meta_out.as_deref()),
        Command::Proximity { m, out } => commands::proximity_cmd(&m, &out),
        Command::Density {
            m,
            phi,
            exclude_diagonal,
            out,
        } => commands::density_cmd(&m, phi.as_deref(), exclude_diagonal, &out),
        Command::Backbone {
            phi,
            threshold,
            out,
            dot,
        } => commands::backbone_cmd(&phi, threshold, &out, dot.as_deref()),
        Command::Events {
            panel_dir,
            base,
            post,
            out,
        } => commands::events_cmd(&panel_dir, &base, &post, &out),
        Command::Transitions {
            panel_dir,
            base,
            post,
            kind,
            counts,
            at_risk,
            ubiquity,
            exclude_diagonal,
            out,
        } => commands::transitions_cmd(
            &panel_dir,
            &base,
            &post,
            match kind {
                TransitionKind::Entry => EventKind::Entry,
                TransitionKind::Exit => EventKind::Exit,
            },
            counts.as_deref(),
            at_risk.rule(),
            ubiquity.transform(),
            exclude_diagonal,
            &out,
        ),
        Command::Regress {
            spec,
            data,
            estimator,
            out,
            text,
        } => {
            if estimator != "ols" && estimator != "logit" {
                return Err(CliError::Validation(format!(
                    "unknown estimator `{estimator}`; use ols or logit"
                )));
            }
            commands::regress_cmd(&spec, &data, &estimator, &out, text.as_deref())
        }
        Command::Iv {
            spec,
            data,
            endog,
            instrument,
            out,
            text,
        } => commands::iv_cmd(&spec, &data, &endog, &instrument, &out, text.as_deref()),
        Command::Correlate { m, external, out } => commands::correlate_cmd(&m, &external, &out),
        Command::Rank { scores, out } => commands::rank_cmd(&scores, &out),
        Command::Pipeline {
            config,
            out_dir,
            top_n,
            method,
            rca_threshold,
            backbone_threshold,
            at_risk,
            ubiquity,
            base,
            post,
        } => {
            let mut cfg = PipelineConfig::load(&config)?;
            cfg.apply_overrides(&Overrides {
                out_dir,
                top_n,
                method,
                rca_threshold,
                backbone_threshold,
                at_risk: at_risk.map(AtRiskChoice::rule),
                ubiquity_transform: ubiquity.map(UbiquityChoice::transform),
                base,
                post,
            });
            let manifest = pipeline::run_pipeline(&cfg)?;
            eprintln!(
                "pipeline: wrote {} artifacts to {}",
                manifest.artifacts.len(),
                cfg.output.dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("eclab: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
