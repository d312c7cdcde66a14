//! `ceasnr` command-line front end.
//!
//! Subcommands: `noise`, `design`, `recommend`, `simulate`, `sweep`,
//! `compare`. Exit codes: 0 success, 1 runtime failure, 2 usage or
//! configuration error.
//!
//! Experiment subcommands take an optional TOML configuration (`--config`)
//! with `[source]`, `[amplifier]`, `[noise]`, `[filter]` and `[run]` tables;
//! every key is optional and falls back to the defaults of
//! [`SimulationConfig`]. Flags override the file. Each run writes a manifest
//! echoing the fully resolved configuration; the manifest itself is accepted
//! by `--config` and reproduces the run.

use crate::amp::{output_noise_rms, AmplifierSpec};
use crate::error::Error as CoreError;
use crate::experiments::{
    compare_families, run_monte_carlo, sweep_base_resistor, sweep_cutoff, sweep_order,
    transient_probe, AxisValue, ProbeRow, SimulationConfig, SweepResult, SweepRow,
};
use crate::filters::{design, frequency_response, Biquad, DigitalFilter, FilterFamily, FilterSpec};
use crate::heuristic::{recommended_cutoff, validate_recommendation};
use crate::noise::{shot_noise_rms, thermal_noise_rms, BiasModel, ShotNoiseSpec, ThermalNoiseSpec};
use crate::snr::TransientMode;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CSV_HEADER: &str = "axis,snr_before_db,snr_after_db,improvement_db,ci_halfwidth_db";
pub const PROBE_CSV_HEADER: &str =
    "order,transient,snr_before_db,snr_after_db,improvement_db,ci_halfwidth_db";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn config_err(e: CoreError) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "ceasnr",
    version,
    about = "Common-emitter amplifier noise, filter design and SNR experiments"
)]
pub struct Cli {
    /// Master seed of the Monte-Carlo noise streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (CSV or coefficient dump); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// SVG plot of before/after SNR against the sweep axis.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
    /// TOML configuration or a manifest from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest.toml`, stderr without `--out`.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Monte-Carlo trials per row.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Post-filter SNR measurement: skip the start-up transient or keep it.
    #[arg(long, global = true, value_enum)]
    pub transient: Option<TransientArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransientArg {
    Discard,
    Include,
    /// Run both modes (sweep over orders only) and write the comparison table.
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Thermal and shot noise RMS values, optionally output-referred or swept over R_b.
    Noise(NoiseArgs),
    /// Design a low-pass filter and dump its biquad coefficients.
    Design(DesignArgs),
    /// Recommended Butterworth cutoff for a filter order and signal frequency.
    Recommend(RecommendArgs),
    /// Monte-Carlo SNR before and after filtering for one configuration.
    Simulate(ExperimentArgs),
    /// Sweep cutoff or order.
    Sweep(SweepArgs),
    /// Compare filter families at the configured order and cutoff.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Base resistance (Ω).
    #[arg(long)]
    pub r: Option<f64>,
    /// Temperature (K).
    #[arg(long, default_value_t = 300.0)]
    pub t: f64,
    /// Thermal-noise bandwidth (Hz).
    #[arg(long)]
    pub b: Option<f64>,
    /// DC base current (A).
    #[arg(long)]
    pub ib: Option<f64>,
    /// Shot-noise bandwidth (Hz).
    #[arg(long)]
    pub w: Option<f64>,
    /// Amplifier gain for output-referred values.
    #[arg(long)]
    pub gain: Option<f64>,
    /// Base resistances to sweep (thermal vs shot table).
    #[arg(long = "sweep-r", value_delimiter = ',')]
    pub sweep_r: Option<Vec<f64>>,
    #[arg(long, default_value_t = BiasModel::DEFAULT_VCC)]
    pub vcc: f64,
    #[arg(long, default_value_t = BiasModel::DEFAULT_VBE)]
    pub vbe: f64,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub family: FilterFamily,
    #[arg(long)]
    pub order: usize,
    #[arg(long)]
    pub cutoff: f64,
    #[arg(long)]
    pub fs: f64,
    #[arg(long)]
    pub rp: Option<f64>,
    #[arg(long)]
    pub rs: Option<f64>,
    /// Magnitude/phase response CSV.
    #[arg(long)]
    pub response: Option<PathBuf>,
    /// Grid points of the response CSV (the cutoff is always included).
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub order: usize,
    #[arg(long)]
    pub freq: f64,
    #[arg(long)]
    pub fs: Option<f64>,
}

/// Flags that override configuration-file values.
#[derive(Debug, Args, Default, Clone)]
pub struct ExperimentArgs {
    /// Source frequency (Hz).
    #[arg(long)]
    pub freq: Option<f64>,
    /// Source peak amplitude (V).
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub gain: Option<f64>,
    /// Base resistance (Ω).
    #[arg(long)]
    pub r: Option<f64>,
    /// Temperature (K).
    #[arg(long)]
    pub temp: Option<f64>,
    #[arg(long)]
    pub family: Option<FilterFamily>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub rp: Option<f64>,
    #[arg(long)]
    pub rs: Option<f64>,
    /// Sample rate (Hz).
    #[arg(long)]
    pub fs: Option<f64>,
    /// Record length (s).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Add base-current shot noise to the chain.
    #[arg(long)]
    pub shot: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Option<SweepAxis>,
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Cutoff,
    Order,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Families to compare (default: all four).
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<FilterFamily>>,
    #[command(flatten)]
    pub experiment: ExperimentArgs,
}

impl clap::builder::ValueParserFactory for FilterFamily {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| {
            s.parse::<FilterFamily>().map_err(|e| e.to_string())
        })
    }
}

// ---------------------------------------------------------------------------
// configuration file

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplifier: Option<AmplifierSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    pub frequency_hz: Option<f64>,
    pub amplitude_volt: Option<f64>,
    pub phase_rad: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifierSection {
    pub voltage_gain: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub resistance_ohm: Option<f64>,
    pub temperature_kelvin: Option<f64>,
    pub shot_enabled: Option<bool>,
    pub base_current_amp: Option<f64>,
    pub shot_transresistance_ohm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub family: Option<FilterFamily>,
    pub order: Option<usize>,
    pub cutoff_hz: Option<f64>,
    pub passband_ripple_db: Option<f64>,
    pub stopband_atten_db: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub sample_rate_hz: Option<f64>,
    pub duration_s: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub transient: Option<TransientMode>,
    pub min_periods: Option<usize>,
}

impl ConfigFile {
    /// Applies the file on top of the defaults.
    pub fn resolve(&self) -> SimulationConfig {
        let mut c = SimulationConfig::default();
        if let Some(s) = &self.source {
            set(&mut c.source.frequency_hz, s.frequency_hz);
            set(&mut c.source.amplitude_volt, s.amplitude_volt);
            set(&mut c.source.phase_rad, s.phase_rad);
        }
        if let Some(a) = &self.amplifier {
            set(&mut c.amplifier.voltage_gain, a.voltage_gain);
        }
        if let Some(n) = &self.noise {
            set(&mut c.thermal.resistance_ohm, n.resistance_ohm);
            set(&mut c.thermal.temperature_kelvin, n.temperature_kelvin);
            set(&mut c.shot_enabled, n.shot_enabled);
            set(&mut c.shot.base_current_amp, n.base_current_amp);
            set(&mut c.shot.transresistance_ohm, n.shot_transresistance_ohm);
        }
        if let Some(f) = &self.filter {
            set(&mut c.filter.family, f.family);
            set(&mut c.filter.order, f.order);
            set(&mut c.filter.cutoff_hz, f.cutoff_hz);
            if f.passband_ripple_db.is_some() {
                c.filter.passband_ripple_db = f.passband_ripple_db;
            }
            if f.stopband_atten_db.is_some() {
                c.filter.stopband_atten_db = f.stopband_atten_db;
            }
        }
        if let Some(r) = &self.run {
            set(&mut c.sample_rate_hz, r.sample_rate_hz);
            set(&mut c.duration_s, r.duration_s);
            set(&mut c.seed, r.seed);
            set(&mut c.trials, r.trials);
            set(&mut c.policy.transient_mode, r.transient);
            set(&mut c.policy.min_periods, r.min_periods);
        }
        sync_rates(&mut c);
        c
    }

    /// Full echo of a resolved configuration.
    pub fn echo(c: &SimulationConfig) -> Self {
        ConfigFile {
            source: Some(SourceSection {
                frequency_hz: Some(c.source.frequency_hz),
                amplitude_volt: Some(c.source.amplitude_volt),
                phase_rad: Some(c.source.phase_rad),
            }),
            amplifier: Some(AmplifierSection {
                voltage_gain: Some(c.amplifier.voltage_gain),
            }),
            noise: Some(NoiseSection {
                resistance_ohm: Some(c.thermal.resistance_ohm),
                temperature_kelvin: Some(c.thermal.temperature_kelvin),
                shot_enabled: Some(c.shot_enabled),
                base_current_amp: Some(c.shot.base_current_amp),
                shot_transresistance_ohm: Some(c.shot.transresistance_ohm),
            }),
            filter: Some(FilterSection {
                family: Some(c.filter.family),
                order: Some(c.filter.order),
                cutoff_hz: Some(c.filter.cutoff_hz),
                passband_ripple_db: c.filter.passband_ripple_db,
                stopband_atten_db: c.filter.stopband_atten_db,
            }),
            run: Some(RunSection {
                sample_rate_hz: Some(c.sample_rate_hz),
                duration_s: Some(c.duration_s),
                seed: Some(c.seed),
                trials: Some(c.trials),
                transient: Some(c.policy.transient_mode),
                min_periods: Some(c.policy.min_periods),
            }),
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn sync_rates(c: &mut SimulationConfig) {
    c.filter.sample_rate_hz = c.sample_rate_hz;
    c.thermal.bandwidth_hz = c.sample_rate_hz / 2.0;
}

/// Reproducibility record written next to every experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    /// UTC, RFC 3339.
    pub timestamp: String,
    pub seed: u64,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<FilterFamily>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub both_transient_modes: Option<bool>,
    pub config: ConfigFile,
}

/// Either a plain configuration file or an earlier manifest.
#[derive(Debug, Clone)]
pub enum LoadedConfig {
    Plain(Box<ConfigFile>),
    Manifest(Box<RunManifest>),
}

impl LoadedConfig {
    pub fn file(&self) -> &ConfigFile {
        match self {
            LoadedConfig::Plain(c) => c,
            LoadedConfig::Manifest(m) => &m.config,
        }
    }

    fn manifest(&self) -> Option<&RunManifest> {
        match self {
            LoadedConfig::Manifest(m) => Some(m),
            LoadedConfig::Plain(_) => None,
        }
    }
}

pub fn parse_config(text: &str, origin: &str) -> Result<LoadedConfig, CliError> {
    let table: toml::Table =
        toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    if table.contains_key("tool_version") {
        let m: RunManifest =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        Ok(LoadedConfig::Manifest(Box::new(m)))
    } else {
        let c: ConfigFile =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        Ok(LoadedConfig::Plain(Box::new(c)))
    }
}

fn load_config(path: Option<&Path>) -> Result<Option<LoadedConfig>, CliError> {
    let Some(path) = path else { return Ok(None) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, &path.display().to_string()).map(Some)
}

fn apply_overrides(c: &mut SimulationConfig, cli: &Cli, x: &ExperimentArgs) {
    set(&mut c.source.frequency_hz, x.freq);
    set(&mut c.source.amplitude_volt, x.amplitude);
    set(&mut c.amplifier.voltage_gain, x.gain);
    set(&mut c.thermal.resistance_ohm, x.r);
    set(&mut c.thermal.temperature_kelvin, x.temp);
    set(&mut c.filter.family, x.family);
    set(&mut c.filter.order, x.order);
    set(&mut c.filter.cutoff_hz, x.cutoff);
    if x.rp.is_some() {
        c.filter.passband_ripple_db = x.rp;
    }
    if x.rs.is_some() {
        c.filter.stopband_atten_db = x.rs;
    }
    set(&mut c.sample_rate_hz, x.fs);
    set(&mut c.duration_s, x.duration);
    if x.shot {
        c.shot_enabled = true;
    }
    set(&mut c.seed, cli.seed);
    set(&mut c.trials, cli.trials);
    match cli.transient {
        Some(TransientArg::Discard) => c.policy.transient_mode = TransientMode::Discard,
        Some(TransientArg::Include) => c.policy.transient_mode = TransientMode::Include,
        _ => {}
    }
    sync_rates(c);
}

// ---------------------------------------------------------------------------
// formatting

/// `%.6g`-style formatting: 6 significant digits, trailing zeros trimmed.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-5..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Engineering notation with an SI prefix, 4 significant digits.
pub fn si(x: f64, unit: &str) -> String {
    if x == 0.0 {
        return format!("0 {unit}");
    }
    const PREFIXES: [(f64, &str); 9] = [
        (1e9, "G"),
        (1e6, "M"),
        (1e3, "k"),
        (1.0, ""),
        (1e-3, "m"),
        (1e-6, "µ"),
        (1e-9, "n"),
        (1e-12, "p"),
        (1e-15, "f"),
    ];
    let (scale, p) = PREFIXES
        .iter()
        .find(|(s, _)| x.abs() >= *s * 0.9995)
        .copied()
        .unwrap_or((1e-15, "f"));
    let v = x / scale;
    let decimals = if v.abs() >= 100.0 {
        1
    } else if v.abs() >= 10.0 {
        2
    } else {
        3
    };
    format!("{v:.decimals$} {p}{unit}")
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for row in &result.rows {
        push_row(&mut s, row);
    }
    s
}

fn push_row(s: &mut String, row: &SweepRow) {
    let axis = match &row.axis_value {
        AxisValue::Number(x) => fmt_sig6(*x),
        AxisValue::Label(l) => l.clone(),
    };
    let _ = writeln!(
        s,
        "{axis},{},{},{},{}",
        fmt_sig6(row.snr_before_db),
        fmt_sig6(row.snr_after_db),
        fmt_sig6(row.improvement_db),
        fmt_sig6(row.ci_halfwidth_db)
    );
}

pub fn probe_csv(rows: &[ProbeRow]) -> String {
    let mut s = String::from(PROBE_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.order,
            r.mode,
            fmt_sig6(r.report.snr_before_db),
            fmt_sig6(r.report.snr_after_db),
            fmt_sig6(r.report.improvement_db),
            fmt_sig6(r.report.ci_halfwidth_db)
        );
    }
    s
}

/// One biquad per line (`b0 b1 b2 a1 a2`), then the overall gain.
/// Values use the shortest representation that round-trips exactly.
pub fn coefficient_dump(filter: &DigitalFilter) -> String {
    let mut s = String::new();
    for q in &filter.sections {
        let _ = writeln!(s, "{:e} {:e} {:e} {:e} {:e}", q.b0, q.b1, q.b2, q.a1, q.a2);
    }
    let _ = writeln!(s, "{:e}", filter.overall_gain);
    s
}

pub fn parse_coefficient_dump(text: &str) -> Result<DigitalFilter, CliError> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let (gain_line, section_lines) = lines
        .split_last()
        .ok_or_else(|| CliError::Config("empty coefficient dump".into()))?;
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|e| CliError::Config(format!("bad coefficient '{t}': {e}")))
    };
    let sections = section_lines
        .iter()
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(num).collect::<Result<_, _>>()?;
            match v[..] {
                [b0, b1, b2, a1, a2] => Ok(Biquad { b0, b1, b2, a1, a2 }),
                _ => Err(CliError::Config(format!(
                    "expected 5 coefficients, got '{l}'"
                ))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DigitalFilter {
        sections,
        overall_gain: num(gain_line.trim())?,
    })
}

/// Magnitude (dB, floored at -400) and phase (degrees) on a linear grid over `[0, fs/2]` plus the cutoff.
pub fn response_csv(
    filter: &DigitalFilter,
    spec: &FilterSpec,
    points: usize,
) -> Result<String, CliError> {
    let fs = spec.sample_rate_hz;
    let points = points.max(2);
    let mut freqs: Vec<f64> = (0..points)
        .map(|i| fs / 2.0 * i as f64 / (points - 1) as f64)
        .collect();
    freqs.push(spec.cutoff_hz);
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    freqs.dedup();
    let mut s = String::from("freq_hz,magnitude_db,phase_deg\n");
    for f in freqs {
        let h = frequency_response(filter, f, fs).map_err(runtime_err)?;
        let mag = 20.0 * h.norm().max(1e-20).log10();
        let _ = writeln!(
            s,
            "{},{},{}",
            fmt_sig6(f),
            fmt_sig6(mag),
            fmt_sig6(h.arg().to_degrees())
        );
    }
    Ok(s)
}

/// Minimal line plot of before/after SNR against the sweep axis.
pub fn sweep_svg(result: &SweepResult) -> String {
    let (w, h, m) = (640.0, 400.0, 60.0);
    let n = result.rows.len();
    let xs: Vec<f64> = result
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| match r.axis_value {
            AxisValue::Number(x) => x,
            AxisValue::Label(_) => i as f64,
        })
        .collect();
    let ys = result
        .rows
        .iter()
        .flat_map(|r| [r.snr_before_db, r.snr_after_db]);
    let (ymin, ymax) = ys.fold((f64::MAX, f64::MIN), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let (ymin, ymax) = if ymax - ymin < 1e-9 {
        (ymin - 1.0, ymax + 1.0)
    } else {
        (ymin, ymax)
    };
    let (xmin, xmax) = xs
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (xmin, xmax) = if xmax - xmin < 1e-12 {
        (xmin - 1.0, xmax + 1.0)
    } else {
        (xmin, xmax)
    };
    let px = |x: f64| m + (x - xmin) / (xmax - xmin) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - ymin) / (ymax - ymin) * (h - 2.0 * m);
    let line = |get: fn(&SweepRow) -> f64| {
        result
            .rows
            .iter()
            .zip(&xs)
            .map(|(r, &x)| format!("{:.2},{:.2}", px(x), py(get(r))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{m},{m} L{m},{} L{},{}" stroke="black" fill="none"/>"#,
        h - m,
        w - m,
        h - m
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 15.0,
        result.axis_name
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">SNR (dB)</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (i, r) in result.rows.iter().enumerate() {
        let label = match &r.axis_value {
            AxisValue::Number(x) => fmt_sig6(*x),
            AxisValue::Label(l) => l.clone(),
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{label}</text>"#,
            px(xs[i]),
            h - m + 16.0
        );
    }
    for y in [ymin, ymax] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            m - 4.0,
            py(y) + 4.0,
            fmt_sig6(y)
        );
    }
    if n > 0 {
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="gray" fill="none" stroke-width="2"/>"#,
            line(|r| r.snr_before_db)
        );
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="blue" fill="none" stroke-width="2"/>"#,
            line(|r| r.snr_after_db)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" fill="gray">before filtering</text>"#,
        w - m - 120.0,
        m - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" fill="blue">after filtering</text>"#,
        w - m - 120.0,
        m - 6.0
    );
    s.push_str("</svg>\n");
    s
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| runtime_err(format!("{}: {e}", path.display())))?;
    tmp.write_all(contents.as_bytes()).map_err(runtime_err)?;
    tmp.persist(path)
        .map_err(|e| runtime_err(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn emit_manifest(cli: &Cli, manifest: &RunManifest) -> Result<(), CliError> {
    let text = toml::to_string(manifest).map_err(runtime_err)?;
    let path = cli.manifest.clone().or_else(|| {
        cli.out
            .as_ref()
            .map(|o| PathBuf::from(format!("{}.manifest.toml", o.display())))
    });
    match path {
        Some(p) => write_atomic(&p, &text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn manifest_for(command: &str, config: &SimulationConfig) -> RunManifest {
    RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        seed: config.seed,
        command: command.to_string(),
        axis: None,
        values: None,
        families: None,
        both_transient_modes: None,
        config: ConfigFile::echo(config),
    }
}

// ---------------------------------------------------------------------------
// subcommands

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Noise(a) => cmd_noise(cli, a),
        Command::Design(a) => cmd_design(cli, a),
        Command::Recommend(a) => cmd_recommend(a),
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Compare(a) => cmd_compare(cli, a),
    }
}

pub fn cmd_noise(cli: &Cli, a: &NoiseArgs) -> Result<(), CliError> {
    if let Some(rs) = &a.sweep_r {
        let bw =
            a.b.ok_or_else(|| CliError::Usage("--sweep-r needs --b <bandwidth>".into()))?;
        let bias = BiasModel {
            vcc_volt: a.vcc,
            vbe_volt: a.vbe,
            base_resistor_ohm: 1.0,
        };
        let rows = sweep_base_resistor(rs, &bias, a.t, bw).map_err(config_err)?;
        let mut s = String::from("r_ohm,base_current_a,thermal_rms_v,shot_rms_a\n");
        for r in rows {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                fmt_sig6(r.resistance_ohm),
                fmt_sig6(r.base_current_amp),
                fmt_sig6(r.thermal_rms),
                fmt_sig6(r.shot_rms)
            );
        }
        return emit(cli.out.as_deref(), &s);
    }

    let thermal = match (a.r, a.b) {
        (Some(r), Some(b)) => Some((r, b)),
        (None, None) => None,
        _ => {
            return Err(CliError::Usage(
                "thermal noise needs both --r and --b".into(),
            ))
        }
    };
    let shot = match (a.ib, a.w) {
        (Some(i), Some(w)) => Some((i, w)),
        (None, None) => None,
        _ => return Err(CliError::Usage("shot noise needs both --ib and --w".into())),
    };
    if thermal.is_none() && shot.is_none() {
        return Err(CliError::Usage(
            "give --r and --b (thermal) and/or --ib and --w (shot), or --sweep-r".into(),
        ));
    }
    let amp = a.gain.map(|g| AmplifierSpec { voltage_gain: g });
    let mut table = vec![];
    if let Some((r, b)) = thermal {
        let v = thermal_noise_rms(&ThermalNoiseSpec {
            resistance_ohm: r,
            temperature_kelvin: a.t,
            bandwidth_hz: b,
        })
        .map_err(config_err)?;
        table.push(("thermal_rms", v, "V"));
        if let Some(amp) = &amp {
            table.push((
                "output_thermal_rms",
                output_noise_rms(v, amp).map_err(config_err)?,
                "V",
            ));
        }
    }
    if let Some((ib, w)) = shot {
        let i = shot_noise_rms(&ShotNoiseSpec {
            base_current_amp: ib,
            bandwidth_hz: w,
        })
        .map_err(config_err)?;
        table.push(("shot_rms", i, "A"));
        if let Some(amp) = &amp {
            table.push((
                "output_shot_rms",
                output_noise_rms(i, amp).map_err(config_err)?,
                "A",
            ));
        }
    }
    match cli.out.as_deref() {
        Some(p) => {
            let mut s = String::from("quantity,value,unit\n");
            for (q, v, u) in &table {
                let _ = writeln!(s, "{q},{},{u}", fmt_sig6(*v));
            }
            write_atomic(p, &s)
        }
        None => {
            for (q, v, u) in &table {
                println!("{q:<20} {:<14} {}", fmt_sig6(*v), si(*v, u));
            }
            Ok(())
        }
    }
}

pub fn cmd_design(cli: &Cli, a: &DesignArgs) -> Result<(), CliError> {
    let spec = FilterSpec {
        family: a.family,
        order: a.order,
        cutoff_hz: a.cutoff,
        passband_ripple_db: a.rp,
        stopband_atten_db: a.rs,
        sample_rate_hz: a.fs,
    };
    spec.validate().map_err(config_err)?;
    let filter = design(&spec).map_err(runtime_err)?;
    emit(cli.out.as_deref(), &coefficient_dump(&filter))?;
    if let Some(path) = &a.response {
        write_atomic(path, &response_csv(&filter, &spec, a.points)?)?;
    }
    Ok(())
}

pub fn cmd_recommend(a: &RecommendArgs) -> Result<(), CliError> {
    let mut rec = recommended_cutoff(a.order, a.freq).map_err(config_err)?;
    println!("cutoff_hz {}", fmt_sig6(rec.cutoff_hz));
    println!("branch    {}", rec.branch);
    if let Some(fs) = a.fs {
        rec = validate_recommendation(rec, fs).map_err(config_err)?;
        println!(
            "nyquist   {}",
            if rec.valid {
                "valid"
            } else {
                "invalid (cutoff >= fs/2)"
            }
        );
    }
    if rec.below_signal() {
        eprintln!(
            "warning: recommended cutoff {} Hz does not exceed the signal frequency {} Hz",
            fmt_sig6(rec.cutoff_hz),
            fmt_sig6(rec.signal_freq_hz)
        );
    }
    Ok(())
}

fn resolve_experiment(
    cli: &Cli,
    x: &ExperimentArgs,
) -> Result<(SimulationConfig, Option<LoadedConfig>), CliError> {
    let loaded = load_config(cli.config.as_deref())?;
    let mut c = loaded
        .as_ref()
        .map(|l| l.file().resolve())
        .unwrap_or_default();
    apply_overrides(&mut c, cli, x);
    c.validate().map_err(config_err)?;
    Ok((c, loaded))
}

fn finish(cli: &Cli, result: &SweepResult, manifest: &RunManifest) -> Result<(), CliError> {
    emit(cli.out.as_deref(), &sweep_csv(result))?;
    if let Some(p) = &cli.plot {
        write_atomic(p, &sweep_svg(result))?;
    }
    emit_manifest(cli, manifest)
}

pub fn cmd_simulate(cli: &Cli, x: &ExperimentArgs) -> Result<(), CliError> {
    if cli.transient == Some(TransientArg::Both) {
        return Err(CliError::Usage(
            "--transient both is only supported by `sweep --axis order`".into(),
        ));
    }
    let (c, _) = resolve_experiment(cli, x)?;
    let report = run_monte_carlo(&c).map_err(runtime_err)?;
    let result = SweepResult {
        axis_name: "cutoff_hz".into(),
        rows: vec![SweepRow {
            axis_value: AxisValue::Number(c.filter.cutoff_hz),
            snr_before_db: report.snr_before_db,
            snr_after_db: report.snr_after_db,
            improvement_db: report.improvement_db,
            ci_halfwidth_db: report.ci_halfwidth_db,
        }],
    };
    finish(cli, &result, &manifest_for("simulate", &c))
}

pub fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> Result<(), CliError> {
    let (c, loaded) = resolve_experiment(cli, &a.experiment)?;
    let prior = loaded.as_ref().and_then(LoadedConfig::manifest);
    let axis = a
        .axis
        .or_else(|| prior.and_then(|m| m.axis))
        .ok_or_else(|| CliError::Usage("--axis is required".into()))?;
    let values = a
        .values
        .clone()
        .or_else(|| prior.and_then(|m| m.values.clone()))
        .ok_or_else(|| CliError::Usage("--values is required".into()))?;
    let both = cli.transient == Some(TransientArg::Both)
        || (cli.transient.is_none() && prior.and_then(|m| m.both_transient_modes).unwrap_or(false));

    let mut manifest = manifest_for("sweep", &c);
    manifest.axis = Some(axis);
    manifest.values = Some(values.clone());

    let orders = || -> Result<Vec<usize>, CliError> {
        values
            .iter()
            .map(|&v| {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(CliError::Config(format!("invalid filter order {v}")))
                }
            })
            .collect()
    };

    if both {
        if axis != SweepAxis::Order {
            return Err(CliError::Usage(
                "--transient both needs --axis order".into(),
            ));
        }
        let orders = orders()?;
        for &n in &orders {
            FilterSpec {
                order: n,
                ..c.filter
            }
            .validate()
            .map_err(config_err)?;
        }
        let rows = transient_probe(&c, &orders).map_err(runtime_err)?;
        manifest.both_transient_modes = Some(true);
        emit(cli.out.as_deref(), &probe_csv(&rows))?;
        return emit_manifest(cli, &manifest);
    }

    let result = match axis {
        SweepAxis::Cutoff => {
            for &fc in &values {
                FilterSpec {
                    cutoff_hz: fc,
                    ..c.filter
                }
                .validate()
                .map_err(config_err)?;
            }
            sweep_cutoff(&c, &values)
        }
        SweepAxis::Order => {
            let orders = orders()?;
            for &n in &orders {
                FilterSpec {
                    order: n,
                    ..c.filter
                }
                .validate()
                .map_err(config_err)?;
            }
            sweep_order(&c, &orders)
        }
    }
    .map_err(runtime_err)?;
    finish(cli, &result, &manifest)
}

pub fn cmd_compare(cli: &Cli, a: &CompareArgs) -> Result<(), CliError> {
    if cli.transient == Some(TransientArg::Both) {
        return Err(CliError::Usage(
            "--transient both is only supported by `sweep --axis order`".into(),
        ));
    }
    let (c, loaded) = resolve_experiment(cli, &a.experiment)?;
    let families = a
        .families
        .clone()
        .or_else(|| {
            loaded
                .as_ref()
                .and_then(LoadedConfig::manifest)
                .and_then(|m| m.families.clone())
        })
        .unwrap_or_else(|| FilterFamily::ALL.to_vec());
    for &family in &families {
        FilterSpec { family, ..c.filter }
            .validate()
            .map_err(config_err)?;
    }
    let result = compare_families(&c, &families).map_err(runtime_err)?;
    let mut manifest = manifest_for("compare", &c);
    manifest.families = Some(families);
    finish(cli, &result, &manifest)
}

/// Parses arguments, runs, and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
