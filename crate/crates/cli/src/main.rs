mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "l2tor", version, about = "L²-torsion toolkit: spectral density checks, determinants, torsion constants")]
struct Cli {
    /// TOML or JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed; overrides the config file.
    #[arg(long, global = true, env = "L2TOR_SEED")]
    seed: Option<u64>,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Report format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Randomized property suites for spectral density functions.
    SdfCheck(SdfCheckArgs),
    /// Zeta-regularized determinants, heat traces and torsion of spectra.
    Zeta(ZetaArgs),
    /// Heat densities and torsion constant of hyperbolic space, cusp volumes.
    Hyperbolic(HyperbolicArgs),
    /// Compare diagonal heat kernels of a subdomain and its ambient domain.
    Heatcmp(HeatcmpArgs),
    /// Boundary anomaly coefficients of a conformal metric family.
    Anomaly(AnomalyArgs),
    /// Torsion of a 3-manifold from its JSJ pieces.
    Jsj(JsjArgs),
    /// Run the acceptance criteria and print a pass/fail table.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct SdfCheckArgs {
    /// basic, block, short-exact, gromov-shubin, laplacian or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Random instances per suite.
    #[arg(long, default_value_t = 200)]
    instances: usize,
    /// Largest space dimension.
    #[arg(long, default_value_t = 6)]
    max_dim: usize,
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
struct ZetaArgs {
    #[command(subcommand)]
    command: Option<ZetaCommand>,

    /// Spectrum as JSON (`[[λ, w], …]` or `[λ, …]`) or a path to a JSON file.
    /// For `--op torsion`, a list of spectra indexed by degree.
    #[arg(long, conflicts_with = "circle")]
    spectrum: Option<String>,

    /// Use the Laplacian on the circle of this length.
    #[arg(long)]
    circle: Option<f64>,

    #[arg(long, value_enum, default_value_t = ZetaOp::Det)]
    op: ZetaOp,

    /// Times for `--op trace`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0])]
    t: Vec<f64>,

    /// Dimension parameter of a finite spectrum.
    #[arg(long, default_value_t = 0)]
    m: usize,
}

#[derive(Debug, Subcommand)]
enum ZetaCommand {
    /// Resolve the constants c(i, m) against the 1/Γ-series oracle.
    SelftestCim,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ZetaOp {
    Det,
    Trace,
    Torsion,
    Dsmall,
}

#[derive(Debug, Args)]
struct HyperbolicArgs {
    #[arg(long, default_value_t = 3)]
    m: usize,

    #[arg(long, value_enum, default_value_t = HyperbolicOp::Constant)]
    op: HyperbolicOp,

    /// Plancherel table (JSON); the H³ table is built in.
    #[arg(long)]
    table: Option<PathBuf>,

    /// Form degree for `--op density`; all degrees by default.
    #[arg(long)]
    p: Option<usize>,

    /// Times for `--op density`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 1.0, 10.0])]
    t: Vec<f64>,

    /// Cross-section volume for `--op cusp`.
    #[arg(long, default_value_t = 1.0)]
    cross_section: f64,

    /// Truncation heights R for `--op cusp`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 2.0, 4.0])]
    height: Vec<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HyperbolicOp {
    Density,
    Constant,
    Cusp,
}

#[derive(Debug, Args)]
struct HeatcmpArgs {
    #[arg(long, value_enum)]
    pair: Pair,

    /// Minimal distance to the boundary of the subdomain.
    #[arg(long = "K", default_value_t = 1.0)]
    k: f64,

    /// Interval length for `interval-halfline`.
    #[arg(long, default_value_t = 4.0)]
    length: f64,

    #[arg(long, default_value_t = 1e-4)]
    t_min: f64,
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[arg(long, default_value_t = 41)]
    t_points: usize,
    #[arg(long, default_value_t = 65)]
    x_points: usize,
    #[arg(long, default_value_t = 4.0)]
    x_max: f64,

    /// Also write the probe rows as CSV to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Pair {
    HalflineLine,
    IntervalHalfline,
}

#[derive(Debug, Args)]
struct AnomalyArgs {
    #[arg(long)]
    dim: usize,

    /// `preset` selects the built-in family of the given dimension.
    #[arg(long, conflicts_with = "f")]
    family: Option<String>,

    /// Conformal factor f(x, u), e.g. `1+x+u*x`.
    #[arg(long)]
    f: Option<String>,

    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    u: f64,

    /// `u0:u1:n` evaluates n equally spaced parameters.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,

    #[arg(long, default_value_t = 1.0)]
    cross_section_volume: f64,
}

#[derive(Debug, Args)]
struct JsjArgs {
    /// Manifest file (JSON or CSV).
    #[arg(long, required_unless_present = "census", conflicts_with = "census")]
    input: Option<PathBuf>,

    /// Use a manifold from the built-in census instead.
    #[arg(long)]
    census: Option<String>,

    /// Report format; overrides `--format`.
    #[arg(long, value_enum)]
    report: Option<Format>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Run only these criteria (by key).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
}

/// How a subcommand finished.
pub enum Outcome {
    Passed,
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = commands::Sink {
        path: cli.output.or_else(|| cfg.output.path.clone()),
        format: cli.format.or(cfg.output.format),
    };
    match cli.command {
        Command::SdfCheck(a) => commands::sdf_check(&cfg, &out, &a.suite, a.instances, a.max_dim),
        Command::Zeta(a) => match a.command {
            Some(ZetaCommand::SelftestCim) => commands::selftest_cim(&out),
            None => commands::zeta(&out, &a),
        },
        Command::Hyperbolic(a) => commands::hyperbolic(&cfg, &out, &a),
        Command::Heatcmp(a) => commands::heatcmp(&out, &a),
        Command::Anomaly(a) => commands::anomaly(&out, &a),
        Command::Jsj(a) => {
            let out = commands::Sink { format: a.report.or(out.format), ..out };
            commands::jsj(&out, a.input.as_deref(), a.census.as_deref())
        }
        Command::Selftest(a) => commands::selftest(&cfg, &out, &a.only),
    }
}
