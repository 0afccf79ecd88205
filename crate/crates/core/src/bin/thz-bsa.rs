use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use thz_bsa::channel::{array_gain, array_gain_analytic, frequency_ratios, steering_vector};
use thz_bsa::sim::{run_sweep, write_result, emit, Method, OutputFormat, SweepAxis, SweepSpec};
use thz_bsa::{BsaError, Profile, SystemConfig};

#[derive(Parser)]
#[command(name = "thz-bsa", version, about = "Beam-split-aware hybrid beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter preset the config file and overrides apply on top of.
    #[arg(long, default_value = "desk")]
    profile: Profile,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self, seed: Option<u64>) -> Result<SystemConfig, BsaError> {
        let mut cfg = self.profile.config();
        if let Some(path) = &self.config {
            cfg.apply_kv_file(path)?;
        }
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| BsaError::Config(format!("override '{o}' is not KEY=VALUE")))?;
            cfg.set_field(k.trim(), v)?;
        }
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep and write per-method mean sum rates.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Swept axis: snr, bandwidth or users.
        #[arg(long)]
        sweep: SweepAxis,
        /// Comma-separated sweep points (dB, Hz or user counts).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        /// Trials per sweep point; defaults to the profile's count.
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated subset of omp, bsa_omp, sd_oracle, fully_digital.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads.
        #[arg(long)]
        workers: Option<usize>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: OutputFormat,
    },
    /// Tabulate the normalized array gain of a(phi) on one subcarrier.
    ArrayGain {
        #[command(flatten)]
        config: ConfigArgs,
        /// Beamformer direction (sine space).
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
        /// Subcarrier index, 1..=M.
        #[arg(long)]
        subcarrier: usize,
        /// Grid oversampling relative to N_T points over [-1, 1].
        #[arg(long, default_value_t = 16)]
        oversample: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the fully resolved configuration.
    ShowConfig {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn exit_code(err: &BsaError) -> u8 {
    match err {
        BsaError::Config(_) | BsaError::Io { .. } => 2,
        BsaError::RedrawCapExceeded { .. } | BsaError::RankDeficient { .. } | BsaError::Numerical(_) => 3,
        _ => 1,
    }
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, BsaError> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).map_err(|e| BsaError::Io { path: p.clone(), source: e })?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), BsaError> {
    match cli.command {
        Command::Simulate {
            config,
            sweep,
            values,
            trials,
            methods,
            seed,
            workers,
            out,
            format,
        } => {
            let cfg = config.resolve(seed)?;
            let mut spec = SweepSpec::new(
                sweep,
                values.unwrap_or_else(|| sweep.default_values()),
                trials.unwrap_or_else(|| config.profile.trials()),
                cfg,
            );
            if let Some(m) = methods {
                spec.methods = m;
            }
            spec.workers = workers;
            let result = run_sweep(&spec)?;
            let total: usize = result.redraws.iter().map(|r| r.redraws).sum();
            if total > 0 {
                eprintln!("note: {total} degenerate channel realizations were redrawn");
            }
            match &out {
                Some(path) => emit(&result, format, path)?,
                None => write_result(&result, format, std::io::stdout().lock())?,
            }
        }
        Command::ArrayGain {
            config,
            phi,
            subcarrier,
            oversample,
            out,
        } => {
            let cfg = config.resolve(None)?;
            if subcarrier == 0 || subcarrier > cfg.num_subcarriers {
                return Err(BsaError::Config(format!(
                    "subcarrier must be in 1..={}",
                    cfg.num_subcarriers
                )));
            }
            if !(phi.abs() <= 1.0) {
                return Err(BsaError::Config("phi must lie in [-1, 1]".into()));
            }
            let m = subcarrier - 1;
            let u = steering_vector(cfg.n_t, phi);
            let points = oversample.max(1) * cfg.n_t;
            let mut w = csv::Writer::from_writer(open_out(&out)?);
            w.write_record(["phi_bar", "gain", "analytic_gain"])?;
            for i in 0..=points {
                let phi_bar = -1.0 + 2.0 * i as f64 / points as f64;
                let g = array_gain(&u, phi_bar, m, &cfg)?;
                let a = array_gain_analytic(phi, phi_bar, m, &cfg);
                w.write_record([phi_bar.to_string(), g.to_string(), a.to_string()])?;
            }
            w.flush().map_err(|e| BsaError::Io { path: "<output>".into(), source: e })?;
            eprintln!(
                "eta_m = {:.9}, expected peak at phi_bar = {:.9}",
                frequency_ratios(&cfg)[m],
                frequency_ratios(&cfg)[m] * phi
            );
        }
        Command::ShowConfig { config } => {
            let cfg = config.resolve(None)?;
            print!("{}", cfg.to_kv_text());
            println!("# config_hash = {}", cfg.config_hash());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
