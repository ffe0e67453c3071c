use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use srvar_core::oracle::ExactMoments;
use srvar_core::{Algorithm, FpFormat, RoundingMode, SummationScheme};

use crate::commands;
use crate::config::{self, BoundsGrid, Overrides};
use crate::error::{CliError, Result};
use crate::figures::FigureId;
use crate::report;
use crate::table::OutputFormat;

#[derive(Debug, Parser)]
#[command(
    name = "srvar",
    version,
    about = "Stochastic rounding variance experiments"
)]
pub struct Cli {
    /// Directory for output files.
    #[arg(
        long,
        global = true,
        env = "SRVAR_OUT_DIR",
        default_value = "srvar-out"
    )]
    pub out_dir: PathBuf,
    /// Table format for outputs.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Round one value and report the empirical round-up frequency.
    Round(RoundArgs),
    /// Sum a list of values.
    Sum(ComputeArgs),
    /// Variance of a list of values.
    Variance(VarianceArgs),
    /// Evaluate error bounds over a grid of n and lambda.
    BoundsTable(BoundsTableArgs),
    /// Run an experiment described by a config file or manifest.
    Experiment(ExperimentArgs),
    /// Generate the data behind one of the canned figures.
    FiguresData(FiguresArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Sr,
    Rn,
}

impl From<Mode> for RoundingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Sr => RoundingMode::Sr,
            Mode::Rn => RoundingMode::Rn,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scheme {
    Recursive,
    Pairwise,
}

impl From<Scheme> for SummationScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Recursive => SummationScheme::Recursive,
            Scheme::Pairwise => SummationScheme::Pairwise,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VarianceMethod {
    Textbook,
    Twopass,
}

#[derive(Debug, Args)]
pub struct RoundArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = 24)]
    pub precision: u32,
    #[arg(long, value_enum, default_value_t = Mode::Sr)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub draws: u64,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// Comma-separated input values.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "input")]
    pub values: Option<String>,
    /// File of values separated by commas or whitespace.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 24)]
    pub precision: u32,
    #[arg(long, value_enum, default_value_t = Mode::Sr)]
    pub mode: Mode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of SR trials.
    #[arg(long, default_value_t = 1)]
    pub reps: u64,
    #[arg(long, value_enum, default_value_t = Scheme::Recursive)]
    pub scheme: Scheme,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    #[command(flatten)]
    pub compute: ComputeArgs,
    #[arg(long, value_enum, default_value_t = VarianceMethod::Textbook)]
    pub algorithm: VarianceMethod,
}

#[derive(Debug, Args)]
pub struct BoundsTableArgs {
    /// Grid file (TOML or JSON, or a previous manifest); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sizes such as 1000, 1e6 or 2^20.
    #[arg(long, value_delimiter = ',', value_parser = config::parse_size)]
    pub n: Vec<u64>,
    #[arg(long)]
    pub precision: Option<u32>,
    /// Unit roundoff; overrides --precision.
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub k2: Option<f64>,
    /// Values from which kappa, K1 and K2 are computed.
    #[arg(long, conflicts_with_all = ["kappa", "k1", "k2"])]
    pub data: Option<PathBuf>,
    /// Bound methods (default: all).
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
}

#[derive(Debug, Args)]
pub struct OverrideArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub precision: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    /// Worker threads for trials (1 = serial, 0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl From<&OverrideArgs> for Overrides {
    fn from(a: &OverrideArgs) -> Self {
        Overrides {
            seed: a.seed,
            reps: a.reps,
            precision: a.precision,
            lambdas: a.lambda.clone(),
            threads: a.threads,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML config or JSON manifest.
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

#[derive(Debug, Args)]
pub struct FiguresArgs {
    #[arg(value_enum)]
    pub figure: FigureId,
    #[command(flatten)]
    pub overrides: OverrideArgs,
}

fn read_values(args: &ComputeArgs) -> Result<Vec<f64>> {
    match (&args.values, &args.input) {
        (Some(v), _) => config::parse_values(v),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            config::parse_values(&text)
        }
        (None, None) => Err(CliError::Config(
            "one of --values or --input is required".into(),
        )),
    }
}

fn load_grid(path: &Path) -> Result<BoundsGrid> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let bad = |e: &dyn std::fmt::Display| CliError::Config(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
        let v = match v.get_mut("bounds") {
            Some(b) => b.take(),
            None => v,
        };
        serde_json::from_value(v).map_err(|e| bad(&e))
    } else {
        toml::from_str(&text).map_err(|e| bad(&e))
    }
}

fn resolve_grid(a: &BoundsTableArgs) -> Result<BoundsGrid> {
    let mut grid = match &a.config {
        Some(path) => load_grid(path)?,
        None => BoundsGrid {
            n: Vec::new(),
            u: FpFormat::BINARY32.unit_roundoff(),
            lambdas: vec![0.1],
            kappa: 1.0,
            k1: 1.0,
            k2: 1.0,
            methods: report::all_methods(),
        },
    };
    if !a.n.is_empty() {
        grid.n = a.n.clone();
    }
    if let Some(p) = a.precision {
        grid.u = FpFormat::new(p)?.unit_roundoff();
    }
    if let Some(u) = a.u {
        grid.u = u;
    }
    if !a.lambda.is_empty() {
        grid.lambdas = a.lambda.clone();
    }
    if let Some(path) = &a.data {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let c = ExactMoments::new(&config::parse_values(&text)?).condition_numbers();
        (grid.kappa, grid.k1, grid.k2) = (c.kappa, c.k1, c.k2);
    }
    grid.kappa = a.kappa.unwrap_or(grid.kappa);
    grid.k1 = a.k1.unwrap_or(grid.k1);
    grid.k2 = a.k2.unwrap_or(grid.k2);
    if !a.methods.is_empty() {
        grid.methods = a
            .methods
            .iter()
            .map(|m| {
                serde_json::from_value(serde_json::Value::String(m.trim().to_ascii_uppercase()))
                    .map_err(|_| CliError::Config(format!("unknown bound method '{m}'")))
            })
            .collect::<Result<_>>()?;
    }
    if grid.n.is_empty() {
        return Err(CliError::Config(
            "--n (or a grid config) is required".into(),
        ));
    }
    Ok(grid)
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let format = cli.format;
    match &cli.command {
        Command::Round(a) => {
            let t = commands::cmd_round(
                a.x,
                FpFormat::new(a.precision)?,
                a.mode.into(),
                a.seed,
                a.draws,
            )?;
            commands::print_table(&t, format)
        }
        Command::Sum(a) => {
            let alg = Algorithm::Sum(a.scheme.into());
            let t = commands::cmd_compute(
                alg,
                &read_values(a)?,
                FpFormat::new(a.precision)?,
                a.mode.into(),
                a.seed,
                a.reps,
            )?;
            commands::print_table(&t, format)
        }
        Command::Variance(v) => {
            let a = &v.compute;
            let scheme = a.scheme.into();
            let alg = match v.algorithm {
                VarianceMethod::Textbook => Algorithm::textbook(scheme),
                VarianceMethod::Twopass => Algorithm::two_pass(scheme),
            };
            let t = commands::cmd_compute(
                alg,
                &read_values(a)?,
                FpFormat::new(a.precision)?,
                a.mode.into(),
                a.seed,
                a.reps,
            )?;
            commands::print_table(&t, format)
        }
        Command::BoundsTable(a) => {
            let grid = resolve_grid(a)?;
            print_paths(&commands::cmd_bounds_table(
                &grid,
                &cli.out_dir,
                format,
                None,
            )?);
            Ok(())
        }
        Command::Experiment(a) => {
            let mut spec = config::load_run_spec(&a.config)?;
            Overrides::from(&a.overrides).apply(&mut spec)?;
            print_paths(&commands::cmd_experiment(
                &spec,
                &cli.out_dir,
                format,
                None,
            )?);
            Ok(())
        }
        Command::FiguresData(a) => {
            let o = Overrides::from(&a.overrides);
            print_paths(&commands::cmd_figures_data(
                a.figure,
                &o,
                &cli.out_dir,
                format,
            )?);
            Ok(())
        }
    }
}
