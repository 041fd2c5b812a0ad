use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ergdvo::config::RunConfig;
use ergdvo::decoherence::Weighting;
use ergdvo::ion::Sublattice;
use ergdvo::spectrum::Polarization;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "ergdvo", version, about = "Er:GdVO4 spectra, avoided crossings and decoherence fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Field sweep of the absorption spectrum, written as CSV.
    Spectrum(SpectrumArgs),
    /// Fit model parameters to a transition CSV.
    Fit(FitArgs),
    /// Synthesize a transition CSV from the configured parameters.
    Synth(SynthArgs),
    /// Fit a stretched-exponential echo decay.
    EchoFit(EchoArgs),
    /// Fit the temperature dependence of the homogeneous linewidth.
    LinewidthFit(LinewidthArgs),
    /// Locate the avoided crossing between two branches.
    Crossing(CrossingArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for every random draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
struct SweepFlags {
    /// First field of the sweep, tesla.
    #[arg(long)]
    bmin: Option<f64>,
    /// Last field of the sweep, tesla.
    #[arg(long)]
    bmax: Option<f64>,
    /// Number of field points, endpoints included.
    #[arg(long)]
    steps: Option<usize>,
    /// Couple the Gd magnon mode to the erbium ion.
    #[arg(long, value_enum)]
    magnons: Option<Switch>,
    #[arg(long, value_enum)]
    sublattice: Option<SublatticeArg>,
    /// Line-strength channel: sigma, pi or average.
    #[arg(long)]
    polarization: Option<Polarization>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Switch {
    On,
    Off,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SublatticeArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Both,
}

impl SublatticeArg {
    fn sublattices(self) -> Vec<Sublattice> {
        match self {
            SublatticeArg::One => vec![Sublattice::One],
            SublatticeArg::Two => vec![Sublattice::Two],
            SublatticeArg::Both => Sublattice::BOTH.to_vec(),
        }
    }
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sweep: SweepFlags,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Transition CSV (overrides the config's fit.data).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Run only the magnon-free stage.
    #[arg(long)]
    single_stage: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sweep: SweepFlags,
    /// Gaussian noise standard deviation, GHz.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Args, Debug)]
struct EchoArgs {
    #[command(flatten)]
    common: Common,
    /// Echo CSV with columns t12_us, amplitude, shot.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Hold the stretch factor fixed.
    #[arg(long)]
    fixed_stretch: Option<f64>,
}

#[derive(Args, Debug)]
struct LinewidthArgs {
    #[command(flatten)]
    common: Common,
    /// Linewidth CSV with columns temperature_mK, gamma_h_kHz[, sigma_kHz].
    #[arg(long)]
    data: Option<PathBuf>,
    /// Residual weighting; auto uses sigma_kHz when every row carries one.
    #[arg(long, value_enum)]
    weighting: Option<WeightingArg>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum WeightingArg {
    Auto,
    Unweighted,
    InverseVariance,
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Self {
        match w {
            WeightingArg::Auto => Weighting::Auto,
            WeightingArg::Unweighted => Weighting::Unweighted,
            WeightingArg::InverseVariance => Weighting::InverseVariance,
        }
    }
}

#[derive(Args, Debug)]
struct CrossingArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sweep: SweepFlags,
    /// Branch labels as `A,B`; defaults to the one-magnon crossing pair.
    #[arg(long, value_delimiter = ',')]
    branches: Option<Vec<String>>,
}

/// Process exit codes.
const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<ergdvo::Error> for Failure {
    fn from(e: ergdvo::Error) -> Self {
        let code = match e {
            ergdvo::Error::Config(_) => EXIT_CONFIG,
            ergdvo::Error::FitFailure(_) => EXIT_CONVERGENCE,
            _ => EXIT_DATA,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        match error.downcast::<ergdvo::Error>() {
            Ok(e) => e.into(),
            Err(error) => Failure { code: EXIT_DATA, error },
        }
    }
}

type Outcome = Result<(), Failure>;

fn load_config(common: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    match &common.config {
        None => Ok((RunConfig::default(), PathBuf::from("."))),
        Some(path) => {
            let cfg = RunConfig::from_path(path).map_err(|e| match e {
                ergdvo::Error::Io(io) => Failure {
                    code: EXIT_CONFIG,
                    error: anyhow::Error::new(io).context(format!("reading {}", path.display())),
                },
                other => other.into(),
            })?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            Ok((cfg, base))
        }
    }
}

fn setup(common: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")
            .map_err(|error| Failure { code: EXIT_CONFIG, error })?;
    }
    let loaded = load_config(common)?;
    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))
        .map_err(|error| Failure { code: EXIT_DATA, error })?;
    Ok(loaded)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Fit(a) => commands::fit(a),
        Command::Synth(a) => commands::synth(a),
        Command::EchoFit(a) => commands::echo_fit(a),
        Command::LinewidthFit(a) => commands::linewidth_fit(a),
        Command::Crossing(a) => commands::crossing(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
