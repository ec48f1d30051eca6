//! Command-line front end: config resolution, the five commands and exit codes.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::data::Grouping;
use crate::error::{Error, Result};
pub use commands::{ModelManifest, ShapSummary, REFERENCE_TABLE};
pub use config::{Background, CvSettings, Provenance, RunConfig, ShapSettings, Staging};

/// Consulted when `--config` is absent.
pub const CONFIG_ENV: &str = "PDVOICE_CONFIG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PREREQUISITE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pdvoice", version, about = "Voice-feature screening, tree ensembles, voting and SHAP attribution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration (default: $PDVOICE_CONFIG, then built-in defaults)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Input CSV
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Absolute-correlation cutoff for feature screening
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Number of CV folds
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub grouping: Option<GroupingArg>,
    /// Seed for folds, members and SHAP background sampling
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Recompute the feature mask on each training fold
    #[arg(long, global = true)]
    pub selection_inside_folds: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Correlation screening; writes selection.json and correlations.csv
    Select,
    /// Fit the four members and the voting manifest on all rows
    Train,
    /// k-fold evaluation with per-fold models, predictions and ROC data
    Cv,
    /// SHAP attribution of a saved model
    Explain {
        /// Voting manifest or single member file (default: <out>/model.json)
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Markdown summary of a previous cv run
    Report,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupingArg {
    BySubject,
    ByRow,
}

impl From<GroupingArg> for Grouping {
    fn from(g: GroupingArg) -> Self {
        match g {
            GroupingArg::BySubject => Grouping::BySubject,
            GroupingArg::ByRow => Grouping::ByRow,
        }
    }
}

impl Cli {
    fn command_name(&self) -> &'static str {
        match self.command {
            Command::Select => "select",
            Command::Train => "train",
            Command::Cv => "cv",
            Command::Explain { .. } => "explain",
            Command::Report => "report",
        }
    }

    /// File, then environment, then defaults; flags applied last.
    pub fn resolve_config(&self) -> Result<RunConfig> {
        let path = self
            .config
            .clone()
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        let mut cfg = match path {
            Some(p) => RunConfig::load(&p)?,
            None => RunConfig::default(),
        };
        if let Some(d) = &self.data {
            cfg.data = d.clone();
        }
        if let Some(t) = self.threshold {
            cfg.selection.threshold = t;
        }
        if let Some(k) = self.folds {
            cfg.cv.k = k;
        }
        if let Some(g) = self.grouping {
            cfg.cv.grouping = g.into();
        }
        if let Some(s) = self.seed {
            cfg.set_seed(s);
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if self.selection_inside_folds {
            cfg.selection.inside_folds = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MissingPrerequisite(_) => EXIT_PREREQUISITE,
        Error::InvariantBreach(_) => EXIT_INVARIANT,
        _ => EXIT_INPUT,
    }
}

/// Runs one command; messages go to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("pdvoice {}: error: {e}", cli.command_name());
            exit_code(&e)
        }
    }
}

/// Executes a parsed command and returns the lines it would print.
pub fn execute(cli: &Cli) -> Result<Vec<String>> {
    let cfg = cli.resolve_config()?;
    match &cli.command {
        Command::Select => commands::select(&cfg),
        Command::Train => commands::train(&cfg),
        Command::Cv => commands::cv(&cfg),
        Command::Explain { model } => {
            let path = model.clone().unwrap_or_else(|| cfg.output_dir.join("model.json"));
            commands::explain(&cfg, &path)
        }
        Command::Report => commands::report(&cfg),
    }
}
