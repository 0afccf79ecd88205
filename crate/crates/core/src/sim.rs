//! Seeded Monte-Carlo trials, parameter sweeps and result emission.
//!
//! Every trial draws one channel realization and evaluates all requested
//! methods on it. Trial seeds are derived from the master seed, the axis
//! position and the trial index, so results do not depend on how trials
//! are scheduled across worker threads.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bsa::{apply_bsa, apply_bsa_with, sd_analog};
use crate::channel::{generate_channel_with, ChannelSet, PathParams};
use crate::config::{Absorption, BsaReference, SystemConfig};
use crate::error::{BsaError, Result};
use crate::metrics::{
    fully_digital_yardstick, power_constraint_residual_sd, sum_rate, sum_rate_with, LinkBudget,
    Precoder, RateReport, SubcarrierBeamformers,
};
use crate::omp::{build_dictionaries, design_hybrid, effective_channel_at, normalize_power, zf_unnormalized, BeamformerSet, Dictionary};
use crate::CMat;

/// Default number of channel redraws per trial on degenerate geometry.
pub const DEFAULT_MAX_REDRAWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// OMP analog design with zero-forcing baseband.
    Omp,
    /// OMP analog design with the beam-split-aware baseband.
    BsaOmp,
    /// Phase-rescaled analog beamformers on every subcarrier (not
    /// realizable with one phase-shifter network; an upper reference).
    SdOracle,
    /// Interference-free fully-digital dominant-mode bound.
    FullyDigital,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Omp, Method::BsaOmp, Method::SdOracle, Method::FullyDigital];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Omp => "omp",
            Method::BsaOmp => "bsa_omp",
            Method::SdOracle => "sd_oracle",
            Method::FullyDigital => "fully_digital",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = BsaError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| BsaError::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SnrDb,
    BandwidthHz,
    NumUsers,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::BandwidthHz => "bandwidth_hz",
            SweepAxis::NumUsers => "num_users",
        }
    }

    /// Default sweep points.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::SnrDb => vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            SweepAxis::BandwidthHz => vec![1e9, 10e9, 30e9, 50e9, 70e9],
            SweepAxis::NumUsers => vec![2.0, 4.0, 8.0],
        }
    }

    /// Derives the configuration at one sweep point.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::SnrDb => cfg.set_snr_db(value),
            SweepAxis::BandwidthHz => cfg.bandwidth = value,
            SweepAxis::NumUsers => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(BsaError::Config(format!("user count must be a positive integer, got {value}")));
                }
                cfg.set_num_users(value as usize);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl FromStr for SweepAxis {
    type Err = BsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr" | "snr_db" => Ok(SweepAxis::SnrDb),
            "bandwidth" | "bandwidth_hz" => Ok(SweepAxis::BandwidthHz),
            "users" | "num_users" => Ok(SweepAxis::NumUsers),
            other => Err(BsaError::Config(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` at sweep position `point` under `master`.
pub fn trial_seed(master: u64, point: usize, trial: usize) -> u64 {
    mix64(mix64(mix64(master) ^ point as u64) ^ trial as u64)
}

fn redraw_seed(trial_seed: u64, attempt: usize) -> u64 {
    if attempt == 0 {
        trial_seed
    } else {
        mix64(trial_seed ^ mix64(attempt as u64))
    }
}

/// Everything a trial needs that does not change between trials.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub cfg: SystemConfig,
    pub dict: Dictionary,
    pub absorption: Absorption,
    pub methods: Vec<Method>,
    pub max_redraws: usize,
}

impl TrialContext {
    pub fn new(cfg: SystemConfig, methods: &[Method]) -> Result<Self> {
        cfg.validate()?;
        Ok(TrialContext {
            dict: build_dictionaries(&cfg)?,
            absorption: cfg.absorption()?,
            methods: methods.to_vec(),
            max_redraws: DEFAULT_MAX_REDRAWS,
            cfg,
        })
    }
}

/// Designs of one channel realization, kept for inspection.
#[derive(Debug, Clone)]
pub struct TrialDesign {
    pub channels: ChannelSet,
    pub beamformers: BeamformerSet,
    pub sd_oracle: Option<SdOracleDesign>,
}

/// Per-subcarrier analog beamformers and zero-forcing basebands of the
/// subcarrier-dependent reference.
#[derive(Debug, Clone)]
pub struct SdOracleDesign {
    pub f_rf: Vec<CMat>,
    pub w_rf: Vec<CMat>,
    pub f_bb: Vec<CMat>,
}

/// Result of one Monte-Carlo trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub reports: Vec<(Method, RateReport)>,
    /// Number of discarded degenerate realizations before this one.
    pub redraws: usize,
    pub seed: u64,
    pub design: TrialDesign,
}

impl TrialOutcome {
    pub fn report(&self, method: Method) -> Option<&RateReport> {
        self.reports.iter().find(|(m, _)| *m == method).map(|(_, r)| r)
    }
}

/// Subcarrier-dependent reference: analog precoder and combiners rescaled to
/// every subcarrier, zero-forcing baseband recomputed on the resulting
/// effective channel.
pub fn design_sd_oracle(channels: &ChannelSet, bf: &BeamformerSet) -> Result<SdOracleDesign> {
    let per_m = channels
        .eta
        .par_iter()
        .enumerate()
        .map(|(m, &eta)| {
            let f_rf = sd_analog(&bf.f_rf, eta)?;
            let w_rf = sd_analog(&bf.w_rf, eta)?;
            let h_eff = effective_channel_at(channels, m, &w_rf, &f_rf)?;
            let f_bb = normalize_power(&f_rf, zf_unnormalized(&h_eff, m)?)?;
            Ok((f_rf, w_rf, f_bb))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SdOracleDesign { f_rf: Vec::new(), w_rf: Vec::new(), f_bb: Vec::new() };
    for (f, w, b) in per_m {
        out.f_rf.push(f);
        out.w_rf.push(w);
        out.f_bb.push(b);
    }
    Ok(out)
}

fn evaluate(ctx: &TrialContext, seed: u64) -> Result<(Vec<(Method, RateReport)>, TrialDesign)> {
    let cfg = &ctx.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = PathParams::draw(cfg, &mut rng);
    let channels = generate_channel_with(cfg, &ctx.absorption, &paths, false)?;
    if !channels.is_finite() {
        return Err(BsaError::Numerical("non-finite channel".into()));
    }
    let plain = design_hybrid(cfg, &channels, &ctx.dict)?;
    let needs_sd = ctx.methods.contains(&Method::SdOracle) || cfg.bsa_reference == BsaReference::SdBaseband;
    let sd = if needs_sd { Some(design_sd_oracle(&channels, &plain)?) } else { None };
    let bf = match (&sd, cfg.bsa_reference) {
        (Some(sd), BsaReference::SdBaseband) => apply_bsa_with(&channels, &plain, &sd.f_bb)?,
        _ => apply_bsa(&channels, &plain)?,
    };
    let link = LinkBudget::from(cfg);
    let mut reports = Vec::with_capacity(ctx.methods.len());
    for &method in &ctx.methods {
        let mut report = match method {
            Method::Omp => sum_rate(&channels, &bf, Precoder::Plain, &link)?,
            Method::BsaOmp => sum_rate(&channels, &bf, Precoder::Bsa, &link)?,
            Method::FullyDigital => fully_digital_yardstick(&channels, &link),
            Method::SdOracle => {
                let sd = sd.as_ref().expect("computed above");
                let residual = power_constraint_residual_sd(&sd.f_rf, &sd.f_bb);
                sum_rate_with(&channels, method.as_str(), &link, residual, |m| SubcarrierBeamformers {
                    w_rf: &sd.w_rf[m],
                    f_rf: &sd.f_rf[m],
                    f_bb: &sd.f_bb[m],
                })?
            }
        };
        report.seed = Some(seed);
        reports.push((method, report));
    }
    Ok((
        reports,
        TrialDesign {
            channels,
            beamformers: bf,
            sd_oracle: sd,
        },
    ))
}

/// Runs one trial, redrawing the channel on degenerate geometry up to
/// `ctx.max_redraws` times.
pub fn run_trial(ctx: &TrialContext, trial_seed: u64) -> Result<TrialOutcome> {
    for attempt in 0..=ctx.max_redraws {
        let seed = redraw_seed(trial_seed, attempt);
        match evaluate(ctx, seed) {
            Ok((reports, design)) => {
                return Ok(TrialOutcome {
                    reports,
                    redraws: attempt,
                    seed,
                    design,
                })
            }
            Err(e) if e.is_degenerate_geometry() => continue,
            Err(e) => return Err(e),
        }
    }
    Err(BsaError::RedrawCapExceeded {
        attempts: ctx.max_redraws + 1,
    })
}

/// A sweep over one configuration axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub base_config: SystemConfig,
    pub seed: u64,
    pub max_redraws: usize,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, values: Vec<f64>, trials: usize, base_config: SystemConfig) -> Self {
        SweepSpec {
            axis,
            values,
            trials,
            methods: Method::ALL.to_vec(),
            seed: base_config.seed,
            base_config,
            max_redraws: DEFAULT_MAX_REDRAWS,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(BsaError::Config("sweep needs at least one value".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(BsaError::Config("sweep values must be finite".into()));
        }
        let increasing = self.values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(BsaError::Config("sweep values must be strictly monotone".into()));
        }
        if self.trials == 0 {
            return Err(BsaError::Config("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(BsaError::Config("no methods selected".into()));
        }
        for &v in &self.values {
            self.axis.apply(&self.base_config, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub method: Method,
    pub mean_sum_rate: f64,
    pub std_sum_rate: f64,
    pub per_subcarrier_avg: f64,
    pub trials: usize,
    pub seed: u64,
    pub config_hash: String,
}

/// Degenerate-channel redraws at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedrawRecord {
    pub axis_value: f64,
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub seed: u64,
    pub config: SystemConfig,
    pub rows: Vec<SweepRow>,
    pub redraws: Vec<RedrawRecord>,
}

impl SweepResult {
    pub fn row(&self, axis_value: f64, method: Method) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.axis_value == axis_value && r.method == method)
    }

    /// Means of one method in sweep order.
    pub fn means(&self, method: Method) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.mean_sum_rate)
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_point(spec: &SweepSpec, point: usize, value: f64) -> Result<(Vec<SweepRow>, RedrawRecord)> {
    let cfg = spec.axis.apply(&spec.base_config, value)?;
    let mut ctx = TrialContext::new(cfg, &spec.methods)?;
    ctx.max_redraws = spec.max_redraws;
    let outcomes = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(&ctx, trial_seed(spec.seed, point, t)))
        .collect::<Result<Vec<_>>>()?;
    let hash = ctx.cfg.config_hash();
    let rows = spec
        .methods
        .iter()
        .map(|&method| {
            let rates: Vec<f64> = outcomes
                .iter()
                .map(|o| o.report(method).expect("every method evaluated").sum_rate)
                .collect();
            let (mean, std) = mean_std(&rates);
            SweepRow {
                axis_value: value,
                method,
                mean_sum_rate: mean,
                std_sum_rate: std,
                per_subcarrier_avg: mean / ctx.cfg.num_subcarriers as f64,
                trials: spec.trials,
                seed: spec.seed,
                config_hash: hash.clone(),
            }
        })
        .collect();
    let redraws = RedrawRecord {
        axis_value: value,
        redraws: outcomes.iter().map(|o| o.redraws).sum(),
    };
    Ok((rows, redraws))
}

/// Runs every trial at every sweep point and aggregates per method.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let body = || -> Result<SweepResult> {
        let mut rows = Vec::new();
        let mut redraws = Vec::new();
        for (point, &value) in spec.values.iter().enumerate() {
            let (r, d) = run_point(spec, point, value)?;
            rows.extend(r);
            redraws.push(d);
        }
        Ok(SweepResult {
            axis: spec.axis,
            seed: spec.seed,
            config: spec.base_config.clone(),
            rows,
            redraws,
        })
    };
    match spec.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| BsaError::Config(format!("cannot build worker pool: {e}")))?
            .install(body),
        None => body(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = BsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(BsaError::Config(format!("unknown format '{other}'"))),
        }
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "axis",
    "axis_value",
    "method",
    "mean_sum_rate",
    "std_sum_rate",
    "per_subcarrier_avg",
    "trials",
    "seed",
    "config_hash",
];

/// Writes the result as CSV or JSON to any writer.
pub fn write_result<W: std::io::Write>(result: &SweepResult, format: OutputFormat, mut out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(out);
            wtr.write_record(CSV_HEADER)?;
            for row in &result.rows {
                wtr.write_record([
                    result.axis.as_str().to_string(),
                    row.axis_value.to_string(),
                    row.method.to_string(),
                    row.mean_sum_rate.to_string(),
                    row.std_sum_rate.to_string(),
                    row.per_subcarrier_avg.to_string(),
                    row.trials.to_string(),
                    row.seed.to_string(),
                    row.config_hash.clone(),
                ])?;
            }
            wtr.flush().map_err(|e| BsaError::io("<csv output>", e))?;
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, result)?;
            out.write_all(b"\n").map_err(|e| BsaError::io("<json output>", e))?;
        }
    }
    Ok(())
}

/// Writes the result to `path`.
pub fn emit(result: &SweepResult, format: OutputFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| BsaError::io(path, e))?;
    write_result(result, format, std::io::BufWriter::new(file))
}
