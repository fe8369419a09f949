//! `marketstates` command-line entry point.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use marketstates::config::{self, Override};
use marketstates::container::read_container;
use marketstates::error::{CliError, Result};
use marketstates::io;
use marketstates::pipeline::{self, Stage};
use marketstates::svg::{self, PaletteBounds, RowLabel};

/// Market states from epoch-wise correlation matrices.
///
/// Configuration values can be overridden with dotted options placed
/// anywhere on the command line, e.g. `--clustering.k_max=8` or
/// `--seed 7`.
#[derive(Debug, Parser)]
#[command(name = "marketstates", version)]
struct Cli {
    /// More log output (repeat for debug messages).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct ConfigArg {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read prices and sectors, write sector-sorted log returns.
    Ingest(ConfigArg),
    /// Build the epoch matrices and mean-correlation series.
    Matrices(ConfigArg),
    /// Run bisecting k-means on every configured matrix kind.
    Cluster(ConfigArg),
    /// Write the mean child quotient curve for choosing k.
    SelectK(ConfigArg),
    /// Timelines, typical states, turning points and the run summary.
    Analyze(ConfigArg),
    /// Adjusted Rand index of ticker-subset clusterings.
    Robustness(ConfigArg),
    /// SVG figures.
    Render(ConfigArg),
    /// All stages in order.
    Run(ConfigArg),
    /// Draw one matrix (labelled CSV or a record of a matrix container) as an SVG heatmap.
    Heatmap {
        /// Matrix file: `.csv` with labels, or `.msmx`.
        input: PathBuf,
        /// Output SVG path.
        #[arg(long, short)]
        output: PathBuf,
        /// Ticker list (`tickers.csv` of an ingest run) for sector ticks.
        #[arg(long)]
        tickers: Option<PathBuf>,
        /// Record number (1-based) inside a container.
        #[arg(long, default_value_t = 1)]
        record: usize,
        /// Colour scale: symmetric about zero with this bound; automatic if absent.
        #[arg(long)]
        bound: Option<f64>,
        #[arg(long, default_value = "")]
        title: String,
    },
}

fn stage_of(command: &Command) -> Option<(Option<Stage>, &Path)> {
    let (stage, arg) = match command {
        Command::Ingest(a) => (Some(Stage::Ingest), a),
        Command::Matrices(a) => (Some(Stage::Matrices), a),
        Command::Cluster(a) => (Some(Stage::Cluster), a),
        Command::SelectK(a) => (Some(Stage::SelectK), a),
        Command::Analyze(a) => (Some(Stage::Analyze), a),
        Command::Robustness(a) => (Some(Stage::Robustness), a),
        Command::Render(a) => (Some(Stage::Render), a),
        Command::Run(a) => (None, a),
        Command::Heatmap { .. } => return None,
    };
    Some((stage, arg.config.as_path()))
}

fn heatmap(
    input: &Path,
    output: &Path,
    tickers: Option<&Path>,
    record: usize,
    bound: Option<f64>,
    title: &str,
) -> Result<()> {
    let is_csv = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (names, matrix) = if is_csv {
        let (names, m) = io::read_matrix_csv(input)?;
        (Some(names), m)
    } else {
        let records = read_container(input)?;
        let r = record
            .checked_sub(1)
            .and_then(|i| records.get(i))
            .ok_or_else(|| CliError::data(format!("{}: no record {record}", input.display())))?;
        (None, r.values.clone())
    };
    let labels: Vec<RowLabel> = match (tickers, names) {
        (Some(t), _) => io::read_tickers(t)?
            .0
            .into_iter()
            .map(|a| RowLabel {
                ticker: a.ticker,
                sector: a.sector,
            })
            .collect(),
        (None, Some(names)) => names
            .into_iter()
            .map(|ticker| RowLabel { ticker, sector: None })
            .collect(),
        (None, None) => (1..=matrix.nrows())
            .map(|i| RowLabel {
                ticker: i.to_string(),
                sector: None,
            })
            .collect(),
    };
    let bounds = match bound {
        Some(b) if b > 0.0 && b.is_finite() => PaletteBounds::Symmetric(b),
        Some(b) => return Err(CliError::config(format!("--bound must be positive, got {b}"))),
        None => PaletteBounds::SymmetricAuto,
    };
    let text = svg::heatmap(&matrix, &labels, bounds, title)?;
    std::fs::write(output, text).map_err(|e| CliError::io(output, e))
}

fn execute(cli: Cli, overrides: &[Override]) -> Result<()> {
    if let Command::Heatmap {
        input,
        output,
        tickers,
        record,
        bound,
        title,
    } = &cli.command
    {
        return heatmap(input, output, tickers.as_deref(), *record, *bound, title);
    }
    let (stage, path) = stage_of(&cli.command).expect("pipeline command");
    let loaded = config::load(path, overrides)?;
    match stage {
        Some(s) => pipeline::run_stage(&loaded, s)?,
        None => pipeline::run_pipeline(&loaded)?,
    };
    log::info!("outputs in {}", loaded.output.display());
    Ok(())
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let (args, overrides) = match config::extract_overrides(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("marketstates: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match execute(cli, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("marketstates: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
