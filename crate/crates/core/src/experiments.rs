//! Seeded Monte-Carlo experiments: single runs, trial averaging and sweeps
//! over cutoff, order, filter family and base resistance.
//!
//! Trial `t` of any run uses the noise seed `trial_seed(seed, t, 0)`, so every
//! row of a sweep filters exactly the same noise realisations and the
//! unfiltered SNR is bit-identical across rows. Trials run in parallel and are
//! reduced in trial order with compensated summation, so results do not
//! depend on the thread count.

use crate::amp::{synthesize_chain_with_shot, AmplifierSpec, ShotInjection, SourceSpec};
use crate::error::{domain, ensure_pos, Error, Result};
use crate::filters::{
    apply, design, equivalent_noise_bandwidth, frequency_response, DigitalFilter, FilterFamily,
    FilterSpec,
};
use crate::noise::{
    base_current_from_bias, shot_noise_rms, thermal_noise_rms, BiasModel, ShotNoiseSpec,
    ThermalNoiseSpec,
};
use crate::rng::trial_seed;
use crate::snr::{
    estimate_filtered_snr, estimate_snr, SnrMeasurementPolicy, SnrReport, TransientMode,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

pub const DEFAULT_TRIALS: usize = 32;

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub source: SourceSpec,
    pub amplifier: AmplifierSpec,
    /// Base-resistor thermal noise. The simulated bandwidth is always `fs/2`.
    pub thermal: ThermalNoiseSpec,
    pub shot_enabled: bool,
    pub shot: ShotInjection,
    pub filter: FilterSpec,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub seed: u64,
    pub trials: usize,
    pub policy: SnrMeasurementPolicy,
}

impl Default for SimulationConfig {
    /// 1 mV / 50 Hz source, gain 100, 10 kΩ at 300 K, first-order
    /// Butterworth at 600 Hz, 100 kHz for 1 s, 32 trials.
    fn default() -> Self {
        let fs = 100e3;
        Self {
            source: SourceSpec {
                frequency_hz: 50.0,
                amplitude_volt: 1e-3,
                phase_rad: 0.0,
            },
            amplifier: AmplifierSpec {
                voltage_gain: 100.0,
            },
            thermal: ThermalNoiseSpec {
                resistance_ohm: 10e3,
                temperature_kelvin: 300.0,
                bandwidth_hz: fs / 2.0,
            },
            shot_enabled: false,
            shot: ShotInjection {
                base_current_amp: 10e-6,
                transresistance_ohm: 10e3,
            },
            filter: FilterSpec {
                family: FilterFamily::Butterworth,
                order: 1,
                cutoff_hz: 600.0,
                passband_ripple_db: Some(0.5),
                stopband_atten_db: Some(30.0),
                sample_rate_hz: fs,
            },
            sample_rate_hz: fs,
            duration_s: 1.0,
            seed: 0,
            trials: DEFAULT_TRIALS,
            policy: SnrMeasurementPolicy::default(),
        }
    }
}

impl SimulationConfig {
    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.amplifier.validate()?;
        self.thermal.validate()?;
        ensure_pos("run.sample_rate_hz", self.sample_rate_hz)?;
        ensure_pos("run.duration_s", self.duration_s)?;
        if self.filter.sample_rate_hz != self.sample_rate_hz {
            return Err(domain(
                "filter.sample_rate_hz",
                "must equal run.sample_rate_hz",
            ));
        }
        self.filter.validate()?;
        self.policy.validate()?;
        if self.trials == 0 {
            return Err(domain("run.trials", "must be >= 1"));
        }
        if self.shot_enabled {
            crate::error::ensure_nonneg("noise.base_current_amp", self.shot.base_current_amp)?;
            crate::error::ensure_nonneg(
                "noise.shot_transresistance_ohm",
                self.shot.transresistance_ohm,
            )?;
        }
        if 2.0 * self.source.frequency_hz >= self.sample_rate_hz {
            return Err(Error::Nyquist {
                what: "source.frequency_hz",
                freq_hz: self.source.frequency_hz,
                sample_rate_hz: self.sample_rate_hz,
            });
        }
        let periods = (self.n_samples() as f64 * self.source.frequency_hz / self.sample_rate_hz)
            .floor() as usize;
        if periods < self.policy.min_periods {
            return Err(Error::RecordTooShort {
                periods,
                required: self.policy.min_periods,
            });
        }
        Ok(())
    }

    fn with_filter(&self, filter: FilterSpec) -> Self {
        Self {
            filter,
            ..self.clone()
        }
    }
}

/// Unfiltered and filtered SNR of one noise realisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub snr_before_db: f64,
    pub snr_after_db: f64,
}

fn run_trial(
    config: &SimulationConfig,
    filter: &DigitalFilter,
    trial_index: u64,
) -> Result<TrialOutcome> {
    let shot = config.shot_enabled.then_some(&config.shot);
    let chain = synthesize_chain_with_shot(
        &config.source,
        &config.amplifier,
        &config.thermal,
        shot,
        config.sample_rate_hz,
        config.n_samples(),
        trial_seed(config.seed, trial_index, 0),
    )?;
    let f = config.source.frequency_hz;
    let fs = config.sample_rate_hz;
    let snr_before_db = estimate_snr(&chain.noisy, f, fs, &config.policy)?;
    let filtered = apply(filter, &chain.noisy)?;
    let snr_after_db =
        estimate_filtered_snr(&filtered, f, fs, &config.policy, filter.transient_samples())?;
    Ok(TrialOutcome {
        snr_before_db,
        snr_after_db,
    })
}

/// One trial: synthesise, measure, filter, measure again.
pub fn run_once(config: &SimulationConfig, trial_index: u64) -> Result<TrialOutcome> {
    config.validate()?;
    let filter = design(&config.filter)?;
    run_trial(config, &filter, trial_index)
}

/// Runs a pre-designed filter (e.g. the identity) through the configured chain.
pub fn run_once_with_filter(
    config: &SimulationConfig,
    filter: &DigitalFilter,
    trial_index: u64,
) -> Result<TrialOutcome> {
    config.validate()?;
    run_trial(config, filter, trial_index)
}

/// Neumaier-compensated sum, accumulated in slice order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Averages trial outcomes. The CI half-width is `1.96 s / sqrt(trials)`
/// with `s` the sample standard deviation of the per-trial improvement.
pub fn summarize(outcomes: &[TrialOutcome]) -> Result<SnrReport> {
    let n = outcomes.len();
    if n == 0 {
        return Err(domain("trials", "must be >= 1"));
    }
    let nf = n as f64;
    let before = compensated_sum(outcomes.iter().map(|o| o.snr_before_db)) / nf;
    let after = compensated_sum(outcomes.iter().map(|o| o.snr_after_db)) / nf;
    let improvement_db = after - before;
    let ci_halfwidth_db = if n > 1 {
        let imps: Vec<f64> = outcomes
            .iter()
            .map(|o| o.snr_after_db - o.snr_before_db)
            .collect();
        let mean = compensated_sum(imps.iter().copied()) / nf;
        let var = compensated_sum(imps.iter().map(|x| (x - mean).powi(2))) / (nf - 1.0);
        1.96 * var.sqrt() / nf.sqrt()
    } else {
        0.0
    };
    Ok(SnrReport {
        snr_before_db: before,
        snr_after_db: after,
        improvement_db,
        trials: n,
        ci_halfwidth_db,
    })
}

fn monte_carlo_with(config: &SimulationConfig, filter: &DigitalFilter) -> Result<SnrReport> {
    let outcomes = (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(config, filter, t))
        .collect::<Result<Vec<_>>>()?;
    summarize(&outcomes)
}

pub fn run_monte_carlo(config: &SimulationConfig) -> Result<SnrReport> {
    config.validate()?;
    let filter = design(&config.filter)?;
    monte_carlo_with(config, &filter)
}

/// Sweep coordinate: a number (cutoff, order) or a label (family name).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Label(String),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Number(x) => write!(f, "{x}"),
            AxisValue::Label(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: AxisValue,
    pub snr_before_db: f64,
    pub snr_after_db: f64,
    pub improvement_db: f64,
    pub ci_halfwidth_db: f64,
}

impl SweepRow {
    fn new(axis_value: AxisValue, r: &SnrReport) -> Self {
        Self {
            axis_value,
            snr_before_db: r.snr_before_db,
            snr_after_db: r.snr_after_db,
            improvement_db: r.improvement_db,
            ci_halfwidth_db: r.ci_halfwidth_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, axis: &AxisValue) -> Option<&SweepRow> {
        self.rows.iter().find(|r| &r.axis_value == axis)
    }
}

fn sorted_unique<T: PartialOrd + Copy>(values: &[T]) -> Result<Vec<T>> {
    if values.is_empty() {
        return Err(domain("values", "sweep needs at least one value"));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("unordered sweep value"));
    v.dedup_by(|a, b| a == b);
    Ok(v)
}

fn sweep_filters(
    config: &SimulationConfig,
    axis_name: &str,
    specs: Vec<(AxisValue, FilterSpec)>,
) -> Result<SweepResult> {
    let configs: Vec<(AxisValue, SimulationConfig)> = specs
        .into_iter()
        .map(|(a, f)| (a, config.with_filter(f)))
        .collect();
    // reject every invalid row before any simulation work
    let mut filters = Vec::with_capacity(configs.len());
    for (_, c) in &configs {
        c.validate()?;
        filters.push(design(&c.filter)?);
    }
    let rows = configs
        .par_iter()
        .zip(filters.par_iter())
        .map(|((axis, c), f)| monte_carlo_with(c, f).map(|r| SweepRow::new(axis.clone(), &r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis_name: axis_name.to_string(),
        rows,
    })
}

/// One Monte-Carlo run per cutoff frequency, everything else fixed.
pub fn sweep_cutoff(config: &SimulationConfig, cutoffs: &[f64]) -> Result<SweepResult> {
    let cutoffs = sorted_unique(cutoffs)?;
    let specs = cutoffs
        .iter()
        .map(|&fc| {
            (
                AxisValue::Number(fc),
                FilterSpec {
                    cutoff_hz: fc,
                    ..config.filter
                },
            )
        })
        .collect();
    sweep_filters(config, "cutoff_hz", specs)
}

/// One Monte-Carlo run per filter order at a fixed cutoff.
pub fn sweep_order(config: &SimulationConfig, orders: &[usize]) -> Result<SweepResult> {
    let orders = sorted_unique(orders)?;
    let specs = orders
        .iter()
        .map(|&n| {
            (
                AxisValue::Number(n as f64),
                FilterSpec {
                    order: n,
                    ..config.filter
                },
            )
        })
        .collect();
    sweep_filters(config, "order", specs)
}

/// One Monte-Carlo run per family at the configured order and cutoff; rows keyed by family name.
pub fn compare_families(
    config: &SimulationConfig,
    families: &[FilterFamily],
) -> Result<SweepResult> {
    if families.is_empty() {
        return Err(domain("families", "need at least one family"));
    }
    let specs = families
        .iter()
        .map(|&family| {
            (
                AxisValue::Label(family.name().to_string()),
                FilterSpec {
                    family,
                    ..config.filter
                },
            )
        })
        .collect();
    sweep_filters(config, "family", specs)
}

/// Thermal noise voltage and shot noise current for one base resistor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResistorRow {
    pub resistance_ohm: f64,
    pub base_current_amp: f64,
    /// V rms
    pub thermal_rms: f64,
    /// A rms
    pub shot_rms: f64,
}

/// Thermal noise (rising as `sqrt R`) and shot noise of the bias current
/// (falling as `1/sqrt R` under fixed bias) for each base resistor.
pub fn sweep_base_resistor(
    r_values: &[f64],
    bias: &BiasModel,
    temperature_kelvin: f64,
    bandwidth_hz: f64,
) -> Result<Vec<ResistorRow>> {
    let r_values = sorted_unique(r_values)?;
    r_values
        .iter()
        .map(|&r| {
            ensure_pos("resistance_ohm", r)?;
            let ib = base_current_from_bias(&BiasModel {
                base_resistor_ohm: r,
                ..*bias
            })?;
            Ok(ResistorRow {
                resistance_ohm: r,
                base_current_amp: ib,
                thermal_rms: thermal_noise_rms(&ThermalNoiseSpec {
                    resistance_ohm: r,
                    temperature_kelvin,
                    bandwidth_hz,
                })?,
                shot_rms: shot_noise_rms(&ShotNoiseSpec {
                    base_current_amp: ib,
                    bandwidth_hz,
                })?,
            })
        })
        .collect()
}

/// Resistances (log-interpolated) where the numeric thermal value (V) equals
/// the numeric shot value (A). One entry per sign change of the difference.
pub fn noise_crossings(rows: &[ResistorRow]) -> Vec<f64> {
    rows.windows(2)
        .filter_map(|w| {
            let d0 = w[0].thermal_rms.ln() - w[0].shot_rms.ln();
            let d1 = w[1].thermal_rms.ln() - w[1].shot_rms.ln();
            if d0 == 0.0 {
                return Some(w[0].resistance_ohm);
            }
            (d0 < 0.0 && d1 > 0.0 || d0 > 0.0 && d1 < 0.0).then(|| {
                let t = d0 / (d0 - d1);
                (w[0].resistance_ohm.ln()
                    + t * (w[1].resistance_ohm.ln() - w[0].resistance_ohm.ln()))
                .exp()
            })
        })
        .collect()
}

/// Closed-form crossing under the fixed-bias model:
/// `4kTR = 2q(Vcc - Vbe)/R`, i.e. `R = sqrt(q (Vcc - Vbe) / (2 k T))`.
pub fn crossing_resistance(bias: &BiasModel, temperature_kelvin: f64) -> Result<f64> {
    ensure_pos("temperature_kelvin", temperature_kelvin)?;
    let headroom = bias.vcc_volt - bias.vbe_volt;
    if headroom <= 0.0 {
        return Err(domain("vcc_volt", "must exceed vbe_volt"));
    }
    Ok((crate::noise::ELECTRON_CHARGE_Q * headroom
        / (2.0 * crate::noise::BOLTZMANN_K * temperature_kelvin))
        .sqrt())
}

/// Steady-state improvement predicted from the frequency response:
/// `10 log10(|H(f_sig)|² (fs/2) / (ENB |H_peak|²))`, i.e.
/// `10 log10((fs/2)/ENB) + 20 log10|H(f_sig)|` for filters peaking at 0 dB.
pub fn predicted_improvement_db(
    filter: &DigitalFilter,
    signal_freq_hz: f64,
    sample_rate_hz: f64,
) -> Result<f64> {
    let enb = equivalent_noise_bandwidth(filter, sample_rate_hz)?;
    let peak = crate::filters::peak_magnitude(filter);
    let h = frequency_response(filter, signal_freq_hz, sample_rate_hz)?.norm();
    Ok(10.0 * ((sample_rate_hz / 2.0) / (enb * peak * peak)).log10() + 20.0 * h.log10())
}

/// One row of the transient-mode comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub order: usize,
    pub mode: TransientMode,
    pub report: SnrReport,
}

/// Runs every order under both transient modes on the same noise realisations.
pub fn transient_probe(config: &SimulationConfig, orders: &[usize]) -> Result<Vec<ProbeRow>> {
    let mut rows = Vec::new();
    for mode in [TransientMode::Discard, TransientMode::Include] {
        let c = SimulationConfig {
            policy: SnrMeasurementPolicy {
                transient_mode: mode,
                ..config.policy
            },
            ..config.clone()
        };
        let sweep = sweep_order(&c, orders)?;
        for row in sweep.rows {
            let AxisValue::Number(n) = row.axis_value else {
                unreachable!()
            };
            rows.push(ProbeRow {
                order: n as usize,
                mode,
                report: SnrReport {
                    snr_before_db: row.snr_before_db,
                    snr_after_db: row.snr_after_db,
                    improvement_db: row.improvement_db,
                    trials: c.trials,
                    ci_halfwidth_db: row.ci_halfwidth_db,
                },
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(trials: usize) -> SimulationConfig {
        SimulationConfig {
            trials,
            seed: 42,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn noiseless_run_is_capped() {
        let mut c = quick(1);
        c.thermal.resistance_ohm = 0.0;
        let o = run_once(&c, 0).unwrap();
        assert_eq!(o.snr_before_db, crate::snr::SNR_CAP_DB);
        // only the decayed start-up transient remains
        assert!(o.snr_after_db > 150.0, "{}", o.snr_after_db);
    }

    #[test]
    fn identity_filter_changes_nothing() {
        let c = quick(1);
        let o = run_once_with_filter(&c, &DigitalFilter::identity(), 3).unwrap();
        assert!((o.snr_after_db - o.snr_before_db).abs() < 1e-9);
    }

    #[test]
    fn deterministic_per_trial() {
        let c = quick(1);
        assert_eq!(run_once(&c, 5).unwrap(), run_once(&c, 5).unwrap());
        assert_ne!(run_once(&c, 5).unwrap(), run_once(&c, 6).unwrap());
    }

    #[test]
    fn single_trial_has_zero_ci() {
        let r = run_monte_carlo(&quick(1)).unwrap();
        assert_eq!(r.ci_halfwidth_db, 0.0);
        assert_eq!(r.trials, 1);
        assert_eq!(r.improvement_db, r.snr_after_db - r.snr_before_db);
    }

    #[test]
    fn monte_carlo_bit_reproducible() {
        let c = quick(8);
        let a = run_monte_carlo(&c).unwrap();
        let b = run_monte_carlo(&c).unwrap();
        assert_eq!(a.snr_before_db.to_bits(), b.snr_before_db.to_bits());
        assert_eq!(a.snr_after_db.to_bits(), b.snr_after_db.to_bits());
        assert_eq!(a.ci_halfwidth_db.to_bits(), b.ci_halfwidth_db.to_bits());
    }

    #[test]
    fn ci_shrinks_with_more_trials() {
        let mut ratios = Vec::new();
        for seed in [1u64, 2, 3] {
            let base = SimulationConfig {
                seed,
                trials: 16,
                ..SimulationConfig::default()
            };
            let a = run_monte_carlo(&base).unwrap().ci_halfwidth_db;
            let b = run_monte_carlo(&SimulationConfig { trials: 32, ..base })
                .unwrap()
                .ci_halfwidth_db;
            ratios.push(a / b);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(
            (mean / std::f64::consts::SQRT_2 - 1.0).abs() < 0.3,
            "{ratios:?}"
        );
    }

    #[test]
    fn compensated_sum_is_exact_on_cancellation() {
        assert_eq!(compensated_sum([1e16, 1.0, -1e16]), 1.0);
    }

    #[test]
    fn sweeps_share_noise() {
        let c = quick(2);
        let s = sweep_cutoff(&c, &[3000.0, 600.0]).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0].axis_value, AxisValue::Number(600.0));
        assert_eq!(
            s.rows[0].snr_before_db.to_bits(),
            s.rows[1].snr_before_db.to_bits()
        );
        for r in &s.rows {
            assert_eq!(r.improvement_db, r.snr_after_db - r.snr_before_db);
        }
        let single = sweep_cutoff(&c, &[600.0]).unwrap();
        assert_eq!(
            single.rows[0].improvement_db,
            run_monte_carlo(&c).unwrap().improvement_db
        );
    }

    #[test]
    fn invalid_cutoff_rejected_before_running() {
        let c = quick(2);
        assert!(matches!(
            sweep_cutoff(&c, &[600.0, 60e3]),
            Err(Error::Nyquist { .. })
        ));
        assert!(sweep_order(&c, &[0, 1]).is_err());
    }

    #[test]
    fn family_comparison_shares_noise() {
        let c = quick(2);
        let s = compare_families(&c, &FilterFamily::ALL).unwrap();
        assert_eq!(s.rows.len(), 4);
        let b0 = s.rows[0].snr_before_db;
        assert!(s.rows.iter().all(|r| r.snr_before_db == b0));
        let one = compare_families(&c, &[FilterFamily::Butterworth]).unwrap();
        assert_eq!(
            one.rows[0].snr_after_db,
            run_monte_carlo(&c).unwrap().snr_after_db
        );
    }

    #[test]
    fn resistor_sweep_scaling() {
        let bias = BiasModel::with_resistor(1.0);
        let rows = sweep_base_resistor(&[1e3, 2e3], &bias, 300.0, 1e4).unwrap();
        assert!(
            (rows[1].thermal_rms / rows[0].thermal_rms - std::f64::consts::SQRT_2).abs() < 1e-12
        );
        assert!((rows[0].shot_rms / rows[1].shot_rms - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!(sweep_base_resistor(&[0.0], &bias, 300.0, 1e4).is_err());
    }

    #[test]
    fn resistor_crossing_matches_closed_form() {
        let bias = BiasModel::with_resistor(1.0);
        let rs: Vec<f64> = (0..=60).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        let rows = sweep_base_resistor(&rs, &bias, 300.0, 1e4).unwrap();
        let x = noise_crossings(&rows);
        assert_eq!(x.len(), 1);
        let exact = crossing_resistance(&bias, 300.0).unwrap();
        assert!((x[0] - exact).abs() / exact < 1e-9, "{x:?} vs {exact}");
    }

    #[test]
    fn config_validation() {
        let mut c = quick(1);
        c.filter.sample_rate_hz = 48e3;
        assert!(c.validate().is_err());
        let mut c = quick(1);
        c.duration_s = 0.1;
        assert!(matches!(c.validate(), Err(Error::RecordTooShort { .. })));
        let mut c = quick(1);
        c.trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn shot_noise_lowers_snr() {
        let mut c = quick(1);
        let base = run_once(&c, 0).unwrap();
        c.shot_enabled = true;
        c.shot.base_current_amp = 1e-3;
        let with = run_once(&c, 0).unwrap();
        assert!(with.snr_before_db < base.snr_before_db);
    }
}
