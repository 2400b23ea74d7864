//! rydlab command-line front end.
//!
//! Exit codes: 0 ok, 2 configuration error, 3 numeric error, 4 resolution or
//! insufficient-data error.

mod config;
mod manifest;

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use rydlab::analysis::{self, classify_spectrum, detect_structure, predict_revivals_with};
use rydlab::error::ErrorClass;
use rydlab::export;
use rydlab::fraction::parse_ratio;
use rydlab::packet::{
    autocorrelation, build_packet, build_stark_packet, time_grid, AutocorrelationTrace,
    PhaseModel,
};
use rydlab::spectrum::tune_field;
use rydlab::squeezed::{evolve_uncertainty, fit, project, FitTarget};
use rydlab::stark::{
    antiperiodicity_check, direct_coefficients, expansion_coefficients, max_coefficient_error,
    minimal_periods, node_structure, reconstruct, sector_autocorrelation, split_parity,
    FractionalTime, StarkSetup, NEGLIGIBLE,
};
use rydlab::units;

use config::{format_si_time, load_config, Merge, SpectrumArgs, UnitSystem};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(std::io::Error),
    Core(rydlab::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("json: {e}"))
    }
}

impl From<rydlab::Error> for CliError {
    fn from(e: rydlab::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 2,
            CliError::Core(e) => match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Numeric => 3,
                ErrorClass::Resolution => 4,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "rydlab",
    version,
    about = "Revival dynamics of Rydberg-type wave packets",
    long_about = "Construct wave packets over discrete spectra, evolve them, analyze \
                  revival structure, decompose Stark packets into parity sectors, and fit \
                  radial squeezed states. All computation is in atomic units; SI values \
                  appear at the output boundary."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derivative-defined time scales (T_cl, t_rev, t_sr, Stark scales).
    Timescales(TimescalesOpts),
    /// Evolve a packet and write the autocorrelation trace as CSV.
    Evolve(EvolveOpts),
    /// Predict the revival hierarchy from the time scales.
    Predict(PredictOpts),
    /// Detect revival structure in a previously written trace CSV.
    Detect(DetectOpts),
    /// Tune the Stark field to a revival-time ratio r/s.
    TuneField(TuneFieldOpts),
    /// Subsidiary-wave decomposition of a Stark packet at a fractional time.
    StarkDecompose(StarkDecomposeOpts),
    /// Node structure of the parity sectors near half the full revival.
    StarkNodes(StarkNodesOpts),
    /// Fit a radial squeezed state at the classical outer apsis.
    SqueezedFit(SqueezedFitOpts),
    /// Evolve a fitted squeezed state and track the uncertainty product.
    SqueezedEvolve(SqueezedEvolveOpts),
    /// Classify a spectrum by its defined time scales.
    Classify(ClassifyOpts),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Timescales(o) => cmd_timescales(o),
        Command::Evolve(o) => cmd_evolve(o),
        Command::Predict(o) => cmd_predict(o),
        Command::Detect(o) => cmd_detect(o),
        Command::TuneField(o) => cmd_tune_field(o),
        Command::StarkDecompose(o) => cmd_stark_decompose(o),
        Command::StarkNodes(o) => cmd_stark_nodes(o),
        Command::SqueezedFit(o) => cmd_squeezed_fit(o),
        Command::SqueezedEvolve(o) => cmd_squeezed_evolve(o),
        Command::Classify(o) => cmd_classify(o),
    };
    if let Err(e) = result {
        eprintln!("rydlab: {e}");
        std::process::exit(e.exit_code());
    }
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

// ---------------------------------------------------------------- timescales

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct TimescalesOpts {
    #[command(flatten)]
    #[serde(flatten)]
    spectrum: SpectrumArgs,
    /// Central principal quantum number.
    #[arg(long)]
    nbar: Option<f64>,
    /// atomic | si display units.
    #[arg(long, value_enum)]
    units: Option<UnitSystem>,
    /// Output JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Merge for TimescalesOpts {
    fn or_file(self, f: Self) -> Self {
        TimescalesOpts {
            spectrum: self.spectrum.or_file(f.spectrum),
            nbar: self.nbar.or(f.nbar),
            units: self.units.or(f.units),
            out: self.out.or(f.out),
            config: None,
        }
    }
}

fn resolve<T: Merge + Clone + for<'de> Deserialize<'de>>(
    opts: T,
    config: &Option<PathBuf>,
) -> Result<T, CliError> {
    match config {
        Some(path) => Ok(opts.or_file(load_config(path)?)),
        None => Ok(opts),
    }
}

fn print_scale(name: &str, value: Option<f64>, units: UnitSystem) {
    match value {
        Some(t) => match units {
            UnitSystem::Atomic => println!("{name} = {:.6e} a.u.", t),
            UnitSystem::Si => {
                let s = units::time_to_seconds(t);
                println!("{name} = {:.6e} a.u. = {:.6e} s ({})", t, s, format_si_time(s));
            }
        },
        None => println!("{name} undefined"),
    }
}

fn cmd_timescales(opts: TimescalesOpts) -> Result<(), CliError> {
    let opts = resolve(opts.clone(), &opts.config)?;
    let spectrum = opts.spectrum.build()?;
    let nbar = opts.nbar.ok_or_else(|| CliError::Config("--nbar is required".into()))?;
    let units_sel = opts.units.unwrap_or_default();
    let scales = spectrum.time_scales(nbar)?;
    print_scale("T_cl", scales.t_cl_n.map(|s| s.time), units_sel);
    if let Some(s) = scales.t_cl_k {
        print_scale("T_cl^(k)", Some(s.time), units_sel);
    }
    print_scale("t_rev", scales.t_rev_n.map(|s| s.time), units_sel);
    if let Some(s) = scales.t_rev_nk {
        print_scale("t_rev^(nk)", Some(s.time), units_sel);
    }
    if scales.t_cl_k.is_none() {
        print_scale("t_sr", scales.t_sr.map(|s| s.time), units_sel);
    }
    if let Some((int, frac)) = scales.effective_center_parts() {
        println!("effective center N* = {} + {:.6}", int, frac);
    }
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("timescales.json"));
    write_file(&out, serde_json::to_string_pretty(&scales)?.as_bytes())?;
    let rec = manifest::record(&out)?;
    manifest::write("timescales", &opts, vec![rec], &out)?;
    Ok(())
}

// -------------------------------------------------------------------- evolve

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct EvolveOpts {
    #[command(flatten)]
    #[serde(flatten)]
    spectrum: SpectrumArgs,
    #[arg(long)]
    nbar: Option<f64>,
    /// Gaussian width of |c_n|^2 (default 2.5).
    #[arg(long)]
    sigma: Option<f64>,
    /// k width for Stark packets (defaults to sigma).
    #[arg(long)]
    sigma_k: Option<f64>,
    /// Window half-width (default ceil(5 sigma)).
    #[arg(long)]
    window: Option<u32>,
    /// Phase model: exact | 1 | 2 | 3.
    #[arg(long)]
    phase: Option<String>,
    /// Trace start, in classical periods.
    #[arg(long)]
    start_periods: Option<f64>,
    /// Trace length, in classical periods (default 4).
    #[arg(long)]
    periods: Option<f64>,
    /// Samples per classical period (default 2048).
    #[arg(long)]
    samples_per_period: Option<u32>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Merge for EvolveOpts {
    fn or_file(self, f: Self) -> Self {
        EvolveOpts {
            spectrum: self.spectrum.or_file(f.spectrum),
            nbar: self.nbar.or(f.nbar),
            sigma: self.sigma.or(f.sigma),
            sigma_k: self.sigma_k.or(f.sigma_k),
            window: self.window.or(f.window),
            phase: self.phase.or(f.phase),
            start_periods: self.start_periods.or(f.start_periods),
            periods: self.periods.or(f.periods),
            samples_per_period: self.samples_per_period.or(f.samples_per_period),
            out: self.out.or(f.out),
            config: None,
        }
    }
}

fn phase_model(spec: &Option<String>, scales: rydlab::TimeScaleSet) -> Result<PhaseModel, CliError> {
    match spec.as_deref().unwrap_or("exact") {
        "exact" => Ok(PhaseModel::exact(scales)),
        n @ ("1" | "2" | "3") => Ok(PhaseModel::truncated(n.parse().unwrap(), scales)?),
        other => Err(CliError::Config(format!("phase must be exact|1|2|3, got '{other}'"))),
    }
}

fn cmd_evolve(opts: EvolveOpts) -> Result<(), CliError> {
    let opts = resolve(opts.clone(), &opts.config)?;
    let spectrum = opts.spectrum.build()?;
    let nbar = opts.nbar.ok_or_else(|| CliError::Config("--nbar is required".into()))?;
    let sigma = opts.sigma.unwrap_or(2.5);
    let window = opts.window.unwrap_or_else(|| rydlab::packet::default_window(sigma));
    let packet = if spectrum.is_stark() {
        build_stark_packet(
            &spectrum,
            nbar.round() as i64,
            sigma,
            opts.sigma_k.unwrap_or(sigma),
            window,
        )?
    } else {
        build_packet(&spectrum, nbar, sigma, window)?
    };
    let scales = spectrum.time_scales(nbar)?;
    let t_cl = scales.classical_period()?;
    let model = phase_model(&opts.phase, scales)?;
    let start = opts.start_periods.unwrap_or(0.0) * t_cl;
    let length = opts.periods.unwrap_or(4.0) * t_cl;
    let spp = opts.samples_per_period.unwrap_or(2048);
    let samples = ((length / t_cl) * spp as f64).round() as usize + 1;
    let grid = time_grid(start, start + length, samples.max(2));
    let mut trace = autocorrelation(&spectrum, &packet, &model, &grid)?;
    let _ = analysis::annotate(&mut trace, t_cl);
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("trace.csv"));
    let mut buf = Vec::new();
    export::write_trace_csv(&mut buf, &trace)?;
    write_file(&out, &buf)?;
    println!(
        "wrote {} samples over [{:.3}, {:.3}] T_cl to {}",
        trace.len(),
        start / t_cl,
        (start + length) / t_cl,
        out.display()
    );
    let rec = manifest::record(&out)?;
    manifest::write("evolve", &opts, vec![rec], &out)?;
    Ok(())
}

// ------------------------------------------------------------------- predict

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct PredictOpts {
    #[command(flatten)]
    #[serde(flatten)]
    spectrum: SpectrumArgs,
    #[arg(long)]
    nbar: Option<f64>,
    /// Highest fractional-revival denominator (default 8).
    #[arg(long)]
    max_q: Option<u32>,
    /// Highest fractional-superrevival q (default 12).
    #[arg(long)]
    max_q_sr: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Merge for PredictOpts {
    fn or_file(self, f: Self) -> Self {
        PredictOpts {
            spectrum: self.spectrum.or_file(f.spectrum),
            nbar: self.nbar.or(f.nbar),
            max_q: self.max_q.or(f.max_q),
            max_q_sr: self.max_q_sr.or(f.max_q_sr),
            out: self.out.or(f.out),
            config: None,
        }
    }
}

fn cmd_predict(opts: PredictOpts) -> Result<(), CliError> {
    let opts = resolve(opts.clone(), &opts.config)?;
    let spectrum = opts.spectrum.build()?;
    let nbar = opts.nbar.ok_or_else(|| CliError::Config("--nbar is required".into()))?;
    let scales = spectrum.time_scales(nbar)?;
    let report = predict_revivals_with(
        &scales,
        opts.max_q.unwrap_or(analysis::DEFAULT_MAX_Q_REVIVAL),
        opts.max_q_sr.unwrap_or(analysis::DEFAULT_MAX_Q_SUPERREVIVAL),
    )?;
    print!("{}", report.table());
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("predict.json"));
    write_file(&out, serde_json::to_string_pretty(&report)?.as_bytes())?;
    let rec = manifest::record(&out)?;
    manifest::write("predict", &opts, vec![rec], &out)?;
    Ok(())
}

// -------------------------------------------------------------------- detect

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct DetectOpts {
    #[command(flatten)]
    #[serde(flatten)]
    spectrum: SpectrumArgs,
    #[arg(long)]
    nbar: Option<f64>,
    /// Trace CSV produced by `evolve`.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Merge for DetectOpts {
    fn or_file(self, f: Self) -> Self {
        DetectOpts {
            spectrum: self.spectrum.or_file(f.spectrum),
            nbar: self.nbar.or(f.nbar),
            trace: self.trace.or(f.trace),
            out: self.out.or(f.out),
            config: None,
        }
    }
}

fn read_trace_csv(path: &PathBuf) -> Result<AutocorrelationTrace, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut abs2 = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 5 {
            return Err(CliError::Config(format!("trace line {} malformed", i + 1)));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("trace line {}: bad number '{s}'", i + 1)))
        };
        times.push(parse(cells[0])?);
        let re = parse(cells[2])?;
        let im = parse(cells[3])?;
        values.push(Complex64::new(re, im));
        abs2.push(parse(cells[4])?);
    }
    Ok(AutocorrelationTrace { times, values, abs2, annotations: Default::default() })
}

fn cmd_detect(opts: DetectOpts) -> Result<(), CliError> {
    let opts = resolve(opts.clone(), &opts.config)?;
    let spectrum = opts.spectrum.build()?;
    let nbar = opts.nbar.ok_or_else(|| CliError::Config("--nbar is required".into()))?;
    let trace_path = opts.trace.clone().ok_or_else(|| CliError::Config("--trace is required".into()))?;
    let trace = read_trace_csv(&trace_path)?;
    let scales = spectrum.time_scales(nbar)?;
    let report = detect_structure(&trace, &scales)?;
    print!("{}", report.table());
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("detect.json"));
    write_file(&out, serde_json::to_string_pretty(&report)?.as_bytes())?;
    let rec = manifest::record(&out)?;
    manifest::write("detect", &opts, vec![rec], &out)?;
    Ok(())
}

// ---------------------------------------------------------------- tune-field

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct TuneFieldOpts {
    /// Central principal quantum number.
    #[arg(long)]
    nbar: Option<i64>,
    /// Target ratio t_rev^(n)/t_rev^(nk), e.g. 1/12.
    #[arg(long)]
    ratio: Option<String>,
    #[arg(long, value_enum)]
    units: Option<UnitSystem>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Merge for TuneFieldOpts {
    fn or_file(self, f: Self) -> Self {
        TuneFieldOpts {
            nbar: self.nbar.or(f.nbar),
            ratio: self.ratio.or(f.ratio),
            units: self.units.or(f.units),
            out: self.out.or(f.out),
            config: None,
        }
    }
}

fn cmd_tune_field(opts: TuneFieldOpts) -> Result<(), CliError> {
    let opts = resolve(opts.clone(), &opts.config)?;
    let nbar = opts.nbar.ok_or_else(|| CliError::Config("--nbar is required".into()))?;
    let ratio = parse_ratio(opts.ratio.as_deref().ok_or_else(|| CliError::Config("--ratio is required".into()))?)?;
    let tuned = tune_field(nbar, ratio)?;
    match opts.units.unwrap_or_default() {
        UnitSystem::Atomic => println!("F = {:.6e} a.u.", tuned.field),
        UnitSystem::Si => println!(
            "F = {:.6e} a.u. = {:.4} V/cm",
            tuned.field,
            units::field_to_v_per_cm(tuned.field)
        ),
    }
    println!(
        "ionization threshold F_c = {:.6e} a.u.; field is {} threshold",
        tuned.threshold,
        if tuned.below_threshold { "below" } else { "NOT below" }
    );
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("tuned_field.json"));
    write_file(&out, serde_json::to_string_pretty(&tuned)?.as_bytes())?;
    let rec = manifest::record(&out)?;
    manifest::write("tune-field", &opts, vec![rec], &out)?;
    Ok(())
}

// ------------------------------------------------------------ stark-decompose

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct StarkDecomposeOpts {
    #[arg(long)]
    nbar: Option<i64>,
    /// Revival-time ratio r/s used to tune the field.
    #[arg(long)]
    ratio: Option<String>,
    /// Fractional time as a multiple of the full revival, e.g. 1/2.
    #[arg(long)]
    frac: Option<String>,
    #[arg(long)]
    sigma_n: Option<f64>,
    #[arg(long)]
    sigma_k: Option<f64>,
    #[arg(long)]
    window: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Merge for StarkDecomposeOpts {
    fn or_file(self, f: Self) -> Self {
        StarkDecomposeOpts {
            nbar: self.nbar.or(f.nbar),
            ratio: self.ratio.or(f.ratio),
            frac: self.frac.or(f.frac),
            sigma_n: self.sigma_n.or(f.sigma_n),
            sigma_k: self.sigma_k.or(f.sigma_k),
            window: self.window.or(f.window),
            out: self.out.or(f.out),
            config: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct DecomposeReport {
    expansion: rydlab::stark::SubsidiaryExpansion,
    reconstruction_error: f64,
    antiperiodicity: rydlab::stark::AntiperiodicityReport,
    significant_odd: usize,
    significant_even: usize,
}

fn cmd_stark_decompose(opts: StarkDecomposeOpts) -> Result<(), CliError> {
    let opts = resolve(opts.clone(), &opts.config)?;
    let nbar = opts.nbar.ok_or_else(|| CliError::Config("--nbar is required".into()))?;
    let ratio = parse_ratio(opts.ratio.as_deref().unwrap_or("1/12"))?;
    let frac_ratio = parse_ratio(opts.frac.as_deref().unwrap_or("1"))?;
    let setup = StarkSetup::new(nbar, ratio)?;
    let sigma_n = opts.sigma_n.unwrap_or(2.0);
    let sigma_k = opts.sigma_k.unwrap_or(2.0);
    let window = opts.window.unwrap_or(6);
    let packet = build_stark_packet(&setup.spectrum, nbar, sigma_n, sigma_k, window)?;
    let (odd, even) = split_parity(&packet)?;
    let frac = FractionalTime::from_full_revival_multiple(frac_ratio, &setup)?;
    let periods = minimal_periods(&frac, setup.ratio, nbar)?;
    let expansion = expansion_coefficients(&frac, setup.ratio, nbar, &periods)?;
    let recon = reconstruct(&odd, &even, &expansion, &setup, frac.time)?;
    let direct = direct_coefficients(&packet, &setup, frac.time)?;
    let err = max_coefficient_error(&direct, &recon);
    let t_cl = setup.t_cl_n();
    let times: Vec<f64> = (0..16).map(|i| i as f64 * 0.31 * t_cl).collect();
    let anti = antiperiodicity_check(&odd, &even, &setup, &times);
    let report = DecomposeReport {
        significant_odd: expansion.odd.significant(NEGLIGIBLE).len(),
        significant_even: expansion.even.significant(NEGLIGIBLE).len(),
        reconstruction_error: err,
        antiperiodicity: anti,
        expansion,
    };
    println!(
        "periods (l1, l2 | l1', l2') = ({}, {} | {}, {}); {} + {} significant terms; reconstruction error {:.2e}",
        periods.l1, periods.l2, periods.l1p, periods.l2p,
        report.significant_odd, report.significant_even, err
    );
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("stark_expansion.json"));
    write_file(&out, serde_json::to_string_pretty(&report)?.as_bytes())?;
    let rec = manifest::record(&out)?;
    manifest::write("stark-decompose", &opts, vec![rec], &out)?;
    Ok(())
}

// --------------------------------------------------------------- stark-nodes

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct StarkNodesOpts {
    #[arg(long)]
    nbar: Option<i64>,
    #[arg(long)]
    ratio: Option<String>,
    #[arg(long)]
    sigma_n: Option<f64>,
    #[arg(long)]
    sigma_k: Option<f64>,
    #[arg(long)]
    window: Option<u32>,
    /// Half-width of the window around t_rev/2, in classical periods.
    #[arg(long)]
    span_periods: Option<f64>,
    #[arg(long)]
    samples_per_period: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Merge for StarkNodesOpts {
    fn or_file(self, f: Self) -> Self {
        StarkNodesOpts {
            nbar: self.nbar.or(f.nbar),
            ratio: self.ratio.or(f.ratio),
            sigma_n: self.sigma_n.or(f.sigma_n),
            sigma_k: self.sigma_k.or(f.sigma_k),
            window: self.window.or(f.window),
            span_periods: self.span_periods.or(f.span_periods),
            samples_per_period: self.samples_per_period.or(f.samples_per_period),
            out: self.out.or(f.out),
            config: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct NodesReport {
    odd: rydlab::stark::NodeReport,
    even: rydlab::stark::NodeReport,
    t_cl_n: f64,
    window_center: f64,
}

fn cmd_stark_nodes(opts: StarkNodesOpts) -> Result<(), CliError> {
    let opts = resolve(opts.clone(), &opts.config)?;
    let nbar = opts.nbar.ok_or_else(|| CliError::Config("--nbar is required".into()))?;
    let ratio = parse_ratio(opts.ratio.as_deref().unwrap_or("1/12"))?;
    let setup = StarkSetup::new(nbar, ratio)?;
    let packet = build_stark_packet(
        &setup.spectrum,
        nbar,
        opts.sigma_n.unwrap_or(2.0),
        opts.sigma_k.unwrap_or(2.0),
        opts.window.unwrap_or(6),
    )?;
    let (odd, even) = split_parity(&packet)?;
    let t_half = setup.full_revival_time() / 2.0;
    let t_cl = setup.t_cl_n();
    let span = opts.span_periods.unwrap_or(3.0);
    let spp = opts.samples_per_period.unwrap_or(256);
    let samples = (2.0 * span * spp as f64) as usize + 1;
    let grid = time_grid(t_half - span * t_cl, t_half + span * t_cl, samples);
    let odd_tr = sector_autocorrelation(&odd, &setup, &grid)?;
    let even_tr = sector_autocorrelation(&even, &setup, &grid)?;
    let report = NodesReport {
        odd: node_structure(&odd_tr, t_cl)?,
        even: node_structure(&even_tr, t_cl)?,
        t_cl_n: t_cl,
        window_center: t_half,
    };
    println!(
        "odd sector: {} nodes, spacing {} (T_cl/2 match: {}); even sector: half-period comb {}",
        report.odd.nodes.len(),
        report
            .odd
            .median_spacing
            .map(|s| format!("{:.4} T_cl", s / t_cl))
            .unwrap_or_else(|| "-".into()),
        report.odd.matches_half_period,
        if report.even.matches_half_period { "present (unexpected)" } else { "absent" }
    );
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("stark_nodes.json"));
    write_file(&out, serde_json::to_string_pretty(&report)?.as_bytes())?;
    let rec = manifest::record(&out)?;
    manifest::write("stark-nodes", &opts, vec![rec], &out)?;
    Ok(())
}

// -------------------------------------------------------------- squeezed-fit

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct SqueezedFitOpts {
    #[arg(long)]
    nbar: Option<f64>,
    /// Outer apsis (a.u.); default 2 nbar^2.
    #[arg(long)]
    r_out: Option<f64>,
    /// Use the l-dependent classical outer apsis instead of 2 nbar^2.
    #[arg(long)]
    apsidal: bool,
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Merge for SqueezedFitOpts {
    fn or_file(self, f: Self) -> Self {
        SqueezedFitOpts {
            nbar: self.nbar.or(f.nbar),
            r_out: self.r_out.or(f.r_out),
            apsidal: self.apsidal || f.apsidal,
            l: self.l.or(f.l),
            out: self.out.or(f.out),
            config: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct SqueezedFitReport {
    target: FitTarget,
    params: rydlab::squeezed::SqueezedStateParams,
    mean_r: f64,
    mean_pr: f64,
    mean_energy: f64,
    uncertainty_product: f64,
}

fn fit_target(nbar: f64, r_out: Option<f64>, apsidal: bool, l: u32) -> Result<FitTarget, CliError> {
    Ok(match (r_out, apsidal) {
        (Some(r), _) => FitTarget { nbar, r_out: r, l },
        (None, true) => FitTarget::apsidal(nbar, l)?,
        (None, false) => FitTarget::near_radial(nbar, l),
    })
}

fn cmd_squeezed_fit(opts: SqueezedFitOpts) -> Result<(), CliError> {
    let opts = resolve(opts.clone(), &opts.config)?;
    let nbar = opts.nbar.ok_or_else(|| CliError::Config("--nbar is required".into()))?;
    let l = opts.l.unwrap_or(1);
    let target = fit_target(nbar, opts.r_out, opts.apsidal, l)?;
    let params = fit(&target)?;
    let report = SqueezedFitReport {
        target,
        params,
        mean_r: params.mean_r(),
        mean_pr: params.mean_pr(),
        mean_energy: params.mean_energy(l)?,
        uncertainty_product: params.uncertainty_product()?,
    };
    println!(
        "alpha = {:.6}, gamma0 = {:.6e}, gamma1 = {:.1}; <r> = {:.3}, <H> = {:.6e}, dr dp = {:.6}",
        params.alpha, params.gamma0, params.gamma1, report.mean_r, report.mean_energy,
        report.uncertainty_product
    );
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("squeezed_fit.json"));
    write_file(&out, serde_json::to_string_pretty(&report)?.as_bytes())?;
    let rec = manifest::record(&out)?;
    manifest::write("squeezed-fit", &opts, vec![rec], &out)?;
    Ok(())
}

// ----------------------------------------------------------- squeezed-evolve

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct SqueezedEvolveOpts {
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long)]
    r_out: Option<f64>,
    #[arg(long)]
    apsidal: bool,
    #[arg(long)]
    l: Option<u32>,
    /// Projection window half-width (default 12).
    #[arg(long)]
    window: Option<u32>,
    /// Number of classical cycles to evolve (default 3).
    #[arg(long)]
    cycles: Option<f64>,
    #[arg(long)]
    samples_per_period: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Merge for SqueezedEvolveOpts {
    fn or_file(self, f: Self) -> Self {
        SqueezedEvolveOpts {
            nbar: self.nbar.or(f.nbar),
            r_out: self.r_out.or(f.r_out),
            apsidal: self.apsidal || f.apsidal,
            l: self.l.or(f.l),
            window: self.window.or(f.window),
            cycles: self.cycles.or(f.cycles),
            samples_per_period: self.samples_per_period.or(f.samples_per_period),
            out: self.out.or(f.out),
            config: None,
        }
    }
}

#[derive(Debug, Serialize)]
struct SqueezedEvolveSummary {
    captured_norm: f64,
    min_product: f64,
    max_product: f64,
    oscillation_period_atomic: Option<f64>,
    classical_period_atomic: f64,
}

fn cmd_squeezed_evolve(opts: SqueezedEvolveOpts) -> Result<(), CliError> {
    let opts = resolve(opts.clone(), &opts.config)?;
    let nbar = opts.nbar.ok_or_else(|| CliError::Config("--nbar is required".into()))?;
    let l = opts.l.unwrap_or(1);
    let target = fit_target(nbar, opts.r_out, opts.apsidal, l)?;
    let params = fit(&target)?;
    let proj = project(&params, nbar, opts.window.unwrap_or(12))?;
    let t_cl = 2.0 * std::f64::consts::PI * nbar.powi(3);
    let cycles = opts.cycles.unwrap_or(3.0);
    let spp = opts.samples_per_period.unwrap_or(512);
    let samples = (cycles * spp as f64) as usize + 1;
    let grid = time_grid(0.0, cycles * t_cl, samples.max(2));
    let series = evolve_uncertainty(&proj.packet, &grid)?;
    let period = rydlab::analysis::local_period_series(
        &series.times,
        &series.product,
        cycles / 2.0 * t_cl,
        t_cl,
        (cycles / 2.0).floor() as u32,
    )
    .ok();
    let summary = SqueezedEvolveSummary {
        captured_norm: proj.captured_norm,
        min_product: series.product.iter().cloned().fold(f64::MAX, f64::min),
        max_product: series.product.iter().cloned().fold(0.0, f64::max),
        oscillation_period_atomic: period,
        classical_period_atomic: t_cl,
    };
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("squeezed_uncertainty.csv"));
    let mut buf = Vec::new();
    export::write_uncertainty_csv(&mut buf, &series)?;
    write_file(&out, &buf)?;
    let summary_path = out.with_extension("summary.json");
    write_file(&summary_path, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    println!(
        "captured norm {:.6}; dr dp in [{:.4}, {:.4}]; oscillation {} T_cl",
        summary.captured_norm,
        summary.min_product,
        summary.max_product,
        summary
            .oscillation_period_atomic
            .map(|p| format!("{:.3}", p / t_cl))
            .unwrap_or_else(|| "-".into())
    );
    let recs = vec![manifest::record(&out)?, manifest::record(&summary_path)?];
    manifest::write("squeezed-evolve", &opts, recs, &out)?;
    Ok(())
}

// ------------------------------------------------------------------ classify

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
struct ClassifyOpts {
    #[command(flatten)]
    #[serde(flatten)]
    spectrum: SpectrumArgs,
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Merge for ClassifyOpts {
    fn or_file(self, f: Self) -> Self {
        ClassifyOpts {
            spectrum: self.spectrum.or_file(f.spectrum),
            nbar: self.nbar.or(f.nbar),
            out: self.out.or(f.out),
            config: None,
        }
    }
}

fn cmd_classify(opts: ClassifyOpts) -> Result<(), CliError> {
    let opts = resolve(opts.clone(), &opts.config)?;
    let spectrum = opts.spectrum.build()?;
    let nbar = opts.nbar.ok_or_else(|| CliError::Config("--nbar is required".into()))?;
    let class = classify_spectrum(&spectrum, nbar)?;
    println!("{}", class.verdict);
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from("classify.json"));
    write_file(&out, serde_json::to_string_pretty(&class)?.as_bytes())?;
    let rec = manifest::record(&out)?;
    manifest::write("classify", &opts, vec![rec], &out)?;
    Ok(())
}
