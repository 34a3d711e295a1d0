use std::path::Path;

use mollow_core::cooling::{cooling_map, cooling_performance_map};
use mollow_core::dressed::overlay_lines;
use mollow_core::fitting::{background_extrapolate, fit_absorption, fit_linear, fit_lorentzian, parse_two_column};
use mollow_core::spectrum::{instrument_spectrum, spectrum_map};
use mollow_core::{
    AbsorptionModel, AcousticCavity, DriveConfig, EmitterParams, FitReport, Frequency, FrequencyGrid, InstrumentModel, LindbladConfig, MapGrid,
    Spectrum, SpectrumOptions,
};

use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Report};

const DRIVE: &[&str] = &["delta_ghz", "rabi_l_ghz", "rabi_s_ghz", "omega_s_ghz"];
const SPECTRUM: &[&str] = &[
    "gamma_mhz",
    "diffusion_mhz",
    "etalon_mhz",
    "etalon_fsr_ghz",
    "tol",
    "freq_lo_ghz",
    "freq_hi_ghz",
    "freq_n",
    "n_phase",
    "n_nodes",
];
const SWEEP: &[&str] = &["sweep", "sweep_lo_ghz", "sweep_hi_ghz", "sweep_n"];
const MAP: &[&str] = &["delta_lo_ghz", "delta_hi_ghz", "delta_n", "rabi_lo_ghz", "rabi_hi_ghz", "rabi_n", "gamma_mhz", "diffusion_mhz", "n_nodes"];

/// Parameters that affect the output of `command`.
pub fn keys(command: &str) -> Vec<&'static str> {
    let cat = |parts: &[&[&'static str]]| parts.iter().flat_map(|p| p.iter().copied()).collect();
    match command {
        "spectrum" => cat(&[DRIVE, SPECTRUM]),
        "spectrum-map" => cat(&[DRIVE, SPECTRUM, SWEEP]),
        "dressed-lines" => cat(&[DRIVE, SWEEP]),
        "cooling-map" => cat(&[&["rabi_s_ghz", "omega_s_ghz"], MAP]),
        "lindblad-map" => cat(&[&["omega_s_ghz", "temp_k", "g0_mhz", "q", "m_max"], MAP]),
        "fit-absorption" => vec!["input", "omega_s_ghz", "rabi_s_ghz", "linewidth_ghz"],
        "fit-lorentzian" => vec!["input"],
        "fit-linear" => vec!["input", "intercept"],
        "background" => vec!["input", "target"],
        _ => Vec::new(),
    }
}

fn ghz(s: &Settings, key: &str) -> CliResult<Frequency> {
    Ok(Frequency::from_ghz(s.f64(key)?))
}

fn drive(s: &Settings) -> CliResult<DriveConfig> {
    let d = DriveConfig::new(
        ghz(s, "delta_ghz")?,
        Frequency::from_ghz(s.non_negative("rabi_l_ghz")?),
        Frequency::from_ghz(s.non_negative("rabi_s_ghz")?),
        Frequency::from_ghz(s.positive("omega_s_ghz")?),
    )?;
    Ok(d)
}

fn emitter(s: &Settings) -> CliResult<EmitterParams> {
    Ok(EmitterParams::new(Frequency::from_mhz(s.positive("gamma_mhz")?), Frequency::from_mhz(s.non_negative("diffusion_mhz")?))?)
}

fn instrument(s: &Settings) -> CliResult<InstrumentModel> {
    Ok(InstrumentModel::new(
        Frequency::from_mhz(s.non_negative("diffusion_mhz")?),
        Frequency::from_mhz(s.non_negative("etalon_mhz")?),
        Frequency::from_ghz(s.positive("etalon_fsr_ghz")?),
    )?)
}

fn options(s: &Settings) -> CliResult<SpectrumOptions> {
    Ok(SpectrumOptions { n_phase: s.count("n_phase")?, n_nodes: s.count("n_nodes")?, ode_tol: s.positive("tol")?, ..SpectrumOptions::default() })
}

fn freq_grid(s: &Settings) -> CliResult<FrequencyGrid> {
    Ok(FrequencyGrid::linspace(ghz(s, "freq_lo_ghz")?, ghz(s, "freq_hi_ghz")?, s.count("freq_n")?)?)
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn sweep(s: &Settings) -> CliResult<Vec<DriveConfig>> {
    let base = drive(s)?;
    let values = axis(s.f64("sweep_lo_ghz")?, s.f64("sweep_hi_ghz")?, s.count("sweep_n")?);
    let apply: fn(DriveConfig, Frequency) -> DriveConfig = match s.raw("sweep") {
        "rabi_l" => DriveConfig::with_rabi_l,
        "rabi_s" => DriveConfig::with_rabi_s,
        "delta" => DriveConfig::with_delta,
        other => return Err(CliError::Config(format!("sweep = '{other}' must be one of rabi_l, rabi_s, delta"))),
    };
    values
        .into_iter()
        .map(|v| {
            let d = apply(base, Frequency::from_ghz(v));
            d.validate()?;
            Ok(d)
        })
        .collect()
}

fn map_grid(s: &Settings) -> CliResult<MapGrid> {
    Ok(MapGrid::linspace(
        ghz(s, "delta_lo_ghz")?,
        ghz(s, "delta_hi_ghz")?,
        s.count("delta_n")?,
        Frequency::from_ghz(s.non_negative("rabi_lo_ghz")?),
        Frequency::from_ghz(s.non_negative("rabi_hi_ghz")?),
        s.count("rabi_n")?,
    )?)
}

fn report(command: &str, s: &Settings, columns: &[&str]) -> Report {
    let mut r = Report::new(command, s.subset(&keys(command)), columns);
    r.note("version", env!("CARGO_PKG_VERSION"));
    r
}

fn coherent_notes(r: &mut Report, spec: &Spectrum, label: &str) {
    r.note(&format!("coherent_weight{label}"), spec.coherent_weight());
    let (lo, hi) = (spec.grid.start.ghz(), spec.grid.last().ghz());
    for l in spec.coherent.iter().filter(|l| l.offset.ghz() >= lo && l.offset.ghz() <= hi) {
        r.note(&format!("coherent_line{label}"), format!("{} {}", crate::output::number(l.offset.ghz()), crate::output::number(l.weight)));
    }
}

fn constants(r: &mut Report, opts: &SpectrumOptions) {
    r.note("floquet_tol", opts.floquet_tol);
    r.note("tau_max_gamma", 30.0);
    r.note("intensity_units", "s (per unit angular frequency)");
}

pub fn spectrum(s: &Settings) -> CliResult<Report> {
    let (d, e, m, opts, grid) = (drive(s)?, emitter(s)?, instrument(s)?, options(s)?, freq_grid(s)?);
    let spec = instrument_spectrum(&d, &e, &m, &grid, &opts)?;
    let mut r = report("spectrum", s, &["freq_offset_GHz", "intensity"]);
    constants(&mut r, &opts);
    r.note("integrated_intensity", spec.normalization);
    coherent_notes(&mut r, &spec, "");
    for (f, v) in spec.freqs().iter().zip(&spec.intensity) {
        r.row(vec![f.ghz().into(), (*v).into()]);
    }
    Ok(r)
}

pub fn spectrum_sweep(s: &Settings) -> CliResult<Report> {
    let (e, m, opts, grid) = (emitter(s)?, instrument(s)?, options(s)?, freq_grid(s)?);
    let configs = sweep(s)?;
    let spectra = spectrum_map(&configs, &e, &m, &grid, &opts)?;
    let mut r = report("spectrum-map", s, &["delta_GHz", "rabiL_GHz", "rabiS_GHz", "freq_offset_GHz", "intensity"]);
    constants(&mut r, &opts);
    for (i, (d, spec)) in configs.iter().zip(&spectra).enumerate() {
        coherent_notes(&mut r, spec, &format!("[{i}]"));
        for (f, v) in spec.freqs().iter().zip(&spec.intensity) {
            r.row(vec![d.delta.ghz().into(), d.rabi_l.ghz().into(), d.rabi_s.ghz().into(), f.ghz().into(), (*v).into()]);
        }
    }
    Ok(r)
}

pub fn dressed_lines(s: &Settings) -> CliResult<Report> {
    let configs = sweep(s)?;
    let lines = overlay_lines(&configs)?;
    let mut r = report("dressed-lines", s, &["delta_GHz", "rabiL_GHz", "rabiS_GHz", "group", "members", "offset_GHz", "weight"]);
    for (d, set) in configs.iter().zip(&lines) {
        for l in set {
            let members: Vec<String> = l.members.iter().map(|m| m.to_string()).collect();
            r.row(vec![
                d.delta.ghz().into(),
                d.rabi_l.ghz().into(),
                d.rabi_s.ghz().into(),
                l.group.name().into(),
                members.join("+").into(),
                l.frequency.ghz().into(),
                l.weight.into(),
            ]);
        }
    }
    Ok(r)
}

pub fn cooling(s: &Settings) -> CliResult<Report> {
    let e = emitter(s)?;
    let template = DriveConfig::new(Frequency::ZERO, Frequency::ZERO, Frequency::from_ghz(s.non_negative("rabi_s_ghz")?), Frequency::from_ghz(s.positive("omega_s_ghz")?))?;
    let map = cooling_map(&map_grid(s)?, &e, &template, e.gamma_inh, s.count("n_nodes")?)?;
    let mut r = report("cooling-map", s, &["delta_GHz", "rabiL_GHz", "rate", "rho_ee", "delta_phonon"]);
    r.note("rate_units", "phonons per second");
    for p in &map.points {
        r.row(vec![p.drive.delta.ghz().into(), p.drive.rabi_l.ghz().into(), p.rate.into(), p.rho_ee.into(), p.delta_phonon.into()]);
    }
    Ok(r)
}

pub fn lindblad(s: &Settings) -> CliResult<Report> {
    let e = emitter(s)?;
    let omega_s = Frequency::from_ghz(s.positive("omega_s_ghz")?);
    let cavity = AcousticCavity::new(omega_s, s.positive("q")?, Frequency::from_mhz(s.non_negative("g0_mhz")?))?;
    let drive = DriveConfig::new(Frequency::ZERO, Frequency::ZERO, Frequency::ZERO, omega_s)?;
    let mut cfg = LindbladConfig::new(e, drive, cavity, s.positive("temp_k")?);
    cfg.m_max = s.optional_count("m_max")?;
    let grid = map_grid(s)?;
    let results = cooling_performance_map(&grid, &cfg, e.gamma_inh, s.count("n_nodes")?)?;
    let mut r = report("lindblad-map", s, &["delta_GHz", "rabiL_GHz", "m_ss", "m_th", "C", "rho_ee", "trace_error", "min_eigenvalue", "m_max"]);
    r.note("thermal_occupation", cfg.thermal_occupation()?);
    for ((delta, rabi), p) in grid.points().iter().zip(&results) {
        r.row(vec![
            delta.ghz().into(),
            rabi.ghz().into(),
            p.m_ss.into(),
            p.m_th.into(),
            p.cooling_c.into(),
            p.excited_population.into(),
            p.trace_error.into(),
            p.min_eigenvalue.into(),
            p.m_max.into(),
        ]);
    }
    Ok(r)
}

fn read_data(s: &Settings) -> CliResult<Vec<(f64, f64)>> {
    let path = s.raw("input");
    if path.is_empty() {
        return Err(CliError::Config("this command needs --input".into()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: Path::new(path).to_path_buf(), source })?;
    Ok(parse_two_column(&text)?)
}

fn fit_report(command: &str, s: &Settings, fit: &FitReport) -> CliResult<Report> {
    let mut r = report(command, s, &["parameter", "value", "stderr"]);
    r.note("converged", if fit.converged { "true" } else { "false" });
    r.note("iterations", fit.iterations);
    r.note("residual_rms", fit.residual_rms);
    for (k, v) in &fit.derived {
        r.note(k, *v);
    }
    for f in &fit.flags {
        r.note("flag", f.as_str());
    }
    for n in &fit.names {
        r.row(vec![n.as_str().into(), fit.param(n).into(), fit.error(n).into()]);
    }
    r.extra = Some(serde_json::to_value(fit).map_err(|e| CliError::Config(e.to_string()))?);
    Ok(r)
}

pub fn absorption(s: &Settings) -> CliResult<Report> {
    let data = read_data(s)?;
    let omega_s = Frequency::from_ghz(s.positive("omega_s_ghz")?);
    let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let mut init = AbsorptionModel::new(omega_s, Frequency::from_ghz(s.non_negative("rabi_s_ghz")?), Frequency::from_ghz(s.positive("linewidth_ghz")?), (hi - lo).max(f64::MIN_POSITIVE))?;
    init.offset = lo;
    fit_report("fit-absorption", s, &fit_absorption(&data, omega_s, &init)?)
}

pub fn lorentzian(s: &Settings) -> CliResult<Report> {
    fit_report("fit-lorentzian", s, &fit_lorentzian(&read_data(s)?)?)
}

pub fn linear(s: &Settings) -> CliResult<Report> {
    fit_report("fit-linear", s, &fit_linear(&read_data(s)?, s.flag("intercept")?)?)
}

pub fn background(s: &Settings) -> CliResult<Report> {
    let e = background_extrapolate(&read_data(s)?, s.f64("target")?)?;
    let mut r = report("background", s, &["coefficient", "value"]);
    r.note("value", e.value);
    r.note("stderr", e.stderr);
    for (i, c) in e.coefficients.iter().enumerate() {
        r.row(vec![Cell::Text(format!("c{i}")), (*c).into()]);
    }
    Ok(r)
}
