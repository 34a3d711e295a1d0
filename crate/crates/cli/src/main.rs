//! `mollow`: spectra, dressed-state lines, cooling maps and calibration fits.

mod commands;
mod config;
mod error;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::Settings;
use error::{CliError, CliResult};
use output::Format;

#[derive(Parser, Debug)]
#[command(name = "mollow", version, about = "Acoustically modulated resonance fluorescence and phonon cooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `key = value` file; flags override its values.
    #[arg(long, global = true, allow_hyphen_values = true)]
    config: Option<PathBuf>,
    /// Output file (standard output when absent).
    #[arg(long, global = true, allow_hyphen_values = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Worker threads (all cores by default).
    #[arg(long, global = true, env = "MOLLOW_JOBS")]
    jobs: Option<usize>,
    /// Integration tolerance of the spectrum pipeline.
    #[arg(long, global = true, allow_hyphen_values = true)]
    tol: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta_ghz: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    rabi_l_ghz: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    rabi_s_ghz: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    omega_s_ghz: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma_mhz: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    diffusion_mhz: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    etalon_mhz: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    temp_k: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    g0_mhz: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    q: Option<String>,
    /// Two-column data file for the fit commands.
    #[arg(long, global = true, allow_hyphen_values = true)]
    input: Option<String>,
    /// Any other parameter, as `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", allow_hyphen_values = true)]
    set: Vec<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Emission spectrum of one drive.
    Spectrum,
    /// Spectra along a sweep of Ω_L, Ω_S or Δ.
    SpectrumMap,
    /// The nine dressed-state lines along a sweep.
    DressedLines,
    /// Closed-form cooling rate on a (Δ, Ω_L) grid.
    CoolingMap,
    /// Master-equation cooling performance on a (Δ, Ω_L) grid.
    LindbladMap,
    /// Bessel-sideband absorption fit.
    FitAbsorption,
    /// Lorentzian cavity resonance fit.
    FitLorentzian,
    /// Straight-line calibration fit.
    FitLinear,
    /// Quadratic background extrapolation.
    Background,
    /// Quick invariant checks.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::SpectrumMap => "spectrum-map",
            Command::DressedLines => "dressed-lines",
            Command::CoolingMap => "cooling-map",
            Command::LindbladMap => "lindblad-map",
            Command::FitAbsorption => "fit-absorption",
            Command::FitLorentzian => "fit-lorentzian",
            Command::FitLinear => "fit-linear",
            Command::Background => "background",
            Command::Selftest => "selftest",
        }
    }
}

fn resolve(cli: &Cli) -> CliResult<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &cli.config {
        s.apply_file(path, cli.command.name())?;
    }
    let flags = [
        ("tol", &cli.tol),
        ("delta_ghz", &cli.delta_ghz),
        ("rabi_l_ghz", &cli.rabi_l_ghz),
        ("rabi_s_ghz", &cli.rabi_s_ghz),
        ("omega_s_ghz", &cli.omega_s_ghz),
        ("gamma_mhz", &cli.gamma_mhz),
        ("diffusion_mhz", &cli.diffusion_mhz),
        ("etalon_mhz", &cli.etalon_mhz),
        ("temp_k", &cli.temp_k),
        ("g0_mhz", &cli.g0_mhz),
        ("q", &cli.q),
        ("input", &cli.input),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, v)?;
        }
    }
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        s.set(k, v)?;
    }
    Ok(s)
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let s = resolve(cli)?;
    let report = match cli.command {
        Command::Spectrum => commands::spectrum(&s)?,
        Command::SpectrumMap => commands::spectrum_sweep(&s)?,
        Command::DressedLines => commands::dressed_lines(&s)?,
        Command::CoolingMap => commands::cooling(&s)?,
        Command::LindbladMap => commands::lindblad(&s)?,
        Command::FitAbsorption => commands::absorption(&s)?,
        Command::FitLorentzian => commands::lorentzian(&s)?,
        Command::FitLinear => commands::linear(&s)?,
        Command::Background => commands::background(&s)?,
        Command::Selftest => {
            return match selftest::run() {
                0 => Ok(()),
                n => Err(CliError::SelfTest(n)),
            }
        }
    };
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    output::emit(&report.render(format), cli.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mollow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
