use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

use commands::Artifact;

const OUTPUT_DIR_ENV: &str = "PBPRIOR_OUTPUT_DIR";

const EXIT_VALIDATION: u8 = 3;
const EXIT_UNREACHABLE: u8 = 4;
const EXIT_IO: u8 = 5;
const EXIT_PARSE: u8 = 6;

/// Catoni PAC-Bayes certificates and prior-mass requirements.
#[derive(Debug, Parser)]
#[command(name = "pbprior", version, propagate_version = true)]
struct Cli {
    /// Output encoding [default: json for coverage, csv otherwise].
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,

    /// Write the result here instead of stdout. Without it, a directory in
    /// PBPRIOR_OUTPUT_DIR receives `<subcommand>.<csv|json>`.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Target guarantee `G` at sample size `n` and confidence parameter `delta`.
#[derive(Debug, Clone, Args)]
pub struct TargetArgs {
    /// Target bound on the posterior's population risk.
    #[arg(long = "G", default_value_t = 0.015)]
    pub guarantee: f64,
    /// Number of training points.
    #[arg(long, default_value_t = 60_000)]
    pub n: u64,
    /// The bound holds with probability at least 1 - delta.
    #[arg(long, default_value_t = 0.035)]
    pub delta: f64,
}

/// A finite predictor space given inline.
#[derive(Debug, Clone, Args)]
pub struct SpaceArgs {
    /// Empirical risk of each predictor, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub risks: Vec<f64>,
    /// Prior mass of each predictor, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    pub masses: Vec<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Catoni's bound. With --posterior, evaluates that posterior on the
    /// inline space; otherwise the minimum over posteriors, from a risk
    /// prior file (`atom,mass`) or the push-forward of the inline space.
    Bound(BoundArgs),
    /// Gibbs posterior weights `prior * exp(-risk / lambda)`, normalised.
    Gibbs(GibbsArgs),
    /// Prior mass required below risk r to certify G. Fixed temperature
    /// with --lambda, otherwise minimised over temperatures.
    Quantile(QuantileArgs),
    /// Temperatures at which the requirement stays below 1, the
    /// asymptotically optimal temperature and the risk threshold below which
    /// nothing is required.
    Window(TargetArgs),
    /// Closed-form necessary condition: mass q_alpha on risks up to
    /// r_alpha = G / (1 - alpha).
    Theorem3(Theorem3Args),
    /// kl-inverse upper confidence bound on a mean loss from a test sample.
    Testbound(TestboundArgs),
    /// Test bounds against reported PAC-Bayes certificates. Defaults to the
    /// bundled 14-row comparison.
    Table2(Table2Args),
    /// Requirement curves at the asymptotically optimal temperature and
    /// minimised over temperatures.
    Figure1(CurveArgs),
    /// Requirement curves at log-spaced temperatures across the window,
    /// plus the temperature-free curve.
    Figure2(Figure2Args),
    /// Low-risk mass of a class-permutation-invariant prior over clusters,
    /// exact and closed-form bound, in log10.
    Figure3(Figure3Args),
    /// Monte Carlo check that the bound at the Gibbs posterior holds with
    /// probability at least 1 - delta.
    Coverage(CoverageArgs),
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Risk prior CSV with header `atom,mass`.
    #[arg(long, conflicts_with_all = ["risks", "masses", "posterior"])]
    pub prior: Option<PathBuf>,
    #[arg(
        long,
        value_delimiter = ',',
        requires = "masses",
        allow_negative_numbers = true
    )]
    pub risks: Option<Vec<f64>>,
    #[arg(
        long,
        value_delimiter = ',',
        requires = "risks",
        allow_negative_numbers = true
    )]
    pub masses: Option<Vec<f64>>,
    /// Posterior weights aligned with --risks.
    #[arg(
        long,
        value_delimiter = ',',
        requires = "risks",
        allow_negative_numbers = true
    )]
    pub posterior: Option<Vec<f64>>,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 60_000)]
    pub n: u64,
    #[arg(long, default_value_t = 0.035)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct GibbsArgs {
    #[command(flatten)]
    pub space: SpaceArgs,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    /// Risk level below which mass is required.
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Theorem3Args {
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct TestboundArgs {
    /// Empirical mean loss on the test sample.
    #[arg(long)]
    pub mean: f64,
    #[arg(long, default_value_t = 60_000)]
    pub n: u64,
    #[arg(long, default_value_t = 0.035)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct Table2Args {
    /// CSV with header `name,pac_bayes_bound,test_score,n_valid`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.035)]
    pub delta: f64,
    /// Bounds closer than this are reported as TIE.
    #[arg(long, default_value_t = pbprior::test_bounds::DEFAULT_TIE_TOL)]
    pub tie_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 0.001)]
    pub r_min: f64,
    #[arg(long, default_value_t = 0.1)]
    pub r_max: f64,
    /// Number of evenly spaced risk values.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct Figure2Args {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Explicit temperatures; default is 40 log-spaced across the window.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct Figure3Args {
    /// Class counts.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20"
    )]
    pub k: Vec<u64>,
    /// Clusters per class.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,40")]
    pub p: Vec<u64>,
    #[arg(long, default_value_t = 0.015)]
    pub r: f64,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// Scenario fixture: a `# n=..,lambda=..,delta=..,trials=..,seed=..`
    /// line followed by `population_risk,prior_mass` rows.
    #[arg(long, conflicts_with_all = ["risks", "masses", "n", "lambda", "delta", "trials", "seed"])]
    pub scenario: Option<PathBuf>,
    /// Population risks, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        requires = "masses",
        allow_negative_numbers = true
    )]
    pub risks: Option<Vec<f64>>,
    #[arg(
        long,
        value_delimiter = ',',
        requires = "risks",
        allow_negative_numbers = true
    )]
    pub masses: Option<Vec<f64>>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bound(_) => "bound",
            Command::Gibbs(_) => "gibbs",
            Command::Quantile(_) => "quantile",
            Command::Window(_) => "window",
            Command::Theorem3(_) => "theorem3",
            Command::Testbound(_) => "testbound",
            Command::Table2(_) => "table2",
            Command::Figure1(_) => "figure1",
            Command::Figure2(_) => "figure2",
            Command::Figure3(_) => "figure3",
            Command::Coverage(_) => "coverage",
        }
    }

    fn run(&self) -> Result<Artifact> {
        match self {
            Command::Bound(a) => commands::bound(a),
            Command::Gibbs(a) => commands::gibbs(a),
            Command::Quantile(a) => commands::quantile(a),
            Command::Window(a) => commands::window(a),
            Command::Theorem3(a) => commands::theorem3(a),
            Command::Testbound(a) => commands::testbound(a),
            Command::Table2(a) => commands::table2(a),
            Command::Figure1(a) => commands::figure1(a),
            Command::Figure2(a) => commands::figure2(a),
            Command::Figure3(a) => commands::figure3(a),
            Command::Coverage(a) => commands::coverage(a),
        }
    }
}

impl Cli {
    fn format(&self) -> Format {
        match (self.format, &self.command) {
            (Some(f), _) => f,
            (None, Command::Coverage(_)) => Format::Json,
            (None, _) => Format::Csv,
        }
    }
}

fn destination(cli: &Cli) -> Option<PathBuf> {
    if let Some(path) = &cli.output {
        return Some(path.clone());
    }
    let dir = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty())?;
    Some(Path::new(&dir).join(format!(
        "{}.{}",
        cli.command.name(),
        cli.format().extension()
    )))
}

fn emit(cli: &Cli, artifact: &Artifact) -> Result<()> {
    let text = artifact.render(cli.format())?;
    match destination(cli) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .context("writing to stdout")?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<pbprior::Error>() {
        return match e {
            pbprior::Error::Unreachable { .. } => EXIT_UNREACHABLE,
            pbprior::Error::Csv { .. } => EXIT_PARSE,
            _ => EXIT_VALIDATION,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return EXIT_IO;
    }
    if err.downcast_ref::<serde_json::Error>().is_some() {
        return EXIT_IO;
    }
    EXIT_VALIDATION
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command.run().and_then(|artifact| emit(&cli, &artifact)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            let label = if code == EXIT_UNREACHABLE {
                "UNREACHABLE"
            } else {
                "error"
            };
            eprintln!("{label}: {}", format!("{err:#}").replace('\n', " "));
            ExitCode::from(code)
        }
    }
}
