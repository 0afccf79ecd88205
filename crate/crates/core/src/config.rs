//! System configuration, presets and the flat `key = value` config format.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{BsaError, Result};
use crate::SPEED_OF_LIGHT;

/// How the interference term of the per-user SINR is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SinrConvention {
    /// Leakage of the other users' streams into user k:
    /// `sum_{i != k} |w_k^H H_k F_RF f_i|^2`.
    #[default]
    Physical,
    /// The other users' own desired-signal terms:
    /// `sum_{i != k} |w_i^H H_i F_RF f_i|^2`.
    AsPrinted,
}

/// Which baseband the BSA least-squares fit pairs with the rescaled analog
/// precoder `F_RF[m]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BsaReference {
    /// The zero-forcing baseband designed for the shared analog precoder.
    #[default]
    SiBaseband,
    /// The zero-forcing baseband of the subcarrier-dependent design, i.e. the
    /// fit targets the subcarrier-dependent hybrid precoder itself.
    SdBaseband,
}

/// Named parameter presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Small arrays and grids that run in seconds.
    #[default]
    Desk,
    /// N_T = 128, N_R = 8, K = 8, M = 128, 100 trials.
    Paper,
}

impl Profile {
    pub fn config(self) -> SystemConfig {
        match self {
            Profile::Desk => SystemConfig::default(),
            Profile::Paper => SystemConfig {
                num_subcarriers: 128,
                n_t: 128,
                n_r: 8,
                n_rf: 8,
                num_users: 8,
                grid_f: 256,
                grid_w: 16,
                ..SystemConfig::default()
            },
        }
    }

    pub fn trials(self) -> usize {
        match self {
            Profile::Desk => 20,
            Profile::Paper => 100,
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = BsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(BsaError::Config(format!("unknown profile '{other}'"))),
        }
    }
}

/// Every dimensional and physical parameter of a simulated downlink.
///
/// Serialized names follow the conventional symbols (`B`, `M`, `N_T`, ...)
/// so config files and JSON output read like the system model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Carrier frequency (Hz).
    pub f_c: f64,
    /// Bandwidth (Hz).
    #[serde(rename = "B")]
    pub bandwidth: f64,
    #[serde(rename = "M")]
    pub num_subcarriers: usize,
    #[serde(rename = "N_T")]
    pub n_t: usize,
    #[serde(rename = "N_R")]
    pub n_r: usize,
    #[serde(rename = "N_RF")]
    pub n_rf: usize,
    #[serde(rename = "K")]
    pub num_users: usize,
    #[serde(rename = "L")]
    pub num_paths: usize,
    /// Element spacing (m). `None` means half a wavelength at `f_c`.
    pub d_spacing: Option<f64>,
    /// Total transmit power (linear).
    #[serde(rename = "P")]
    pub power: f64,
    /// Noise power (linear).
    pub sigma_n2: f64,
    /// Link distance (m).
    pub d_bar: f64,
    /// Frequency-flat absorption coefficient (1/m).
    pub k_abs: f64,
    /// Optional two-column CSV with per-frequency absorption; overrides `k_abs`.
    pub absorption_table: Option<String>,
    /// Transmit dictionary size.
    #[serde(rename = "N_F")]
    pub grid_f: usize,
    /// Receive dictionary size.
    #[serde(rename = "N_W")]
    pub grid_w: usize,
    pub seed: u64,
    /// Extra power loss of NLoS paths relative to LoS (dB).
    pub nlos_penalty_db: f64,
    /// Upper bound of the uniform NLoS excess delay (s).
    pub max_excess_delay: f64,
    pub sinr_convention: SinrConvention,
    pub bsa_reference: BsaReference,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            f_c: 300e9,
            bandwidth: 30e9,
            num_subcarriers: 32,
            n_t: 64,
            n_r: 4,
            n_rf: 4,
            num_users: 4,
            num_paths: 3,
            d_spacing: None,
            power: 1.0,
            sigma_n2: 1.0,
            d_bar: 10.0,
            k_abs: 0.0,
            absorption_table: None,
            grid_f: 128,
            grid_w: 8,
            seed: 1,
            nlos_penalty_db: 10.0,
            max_excess_delay: 20e-9,
            sinr_convention: SinrConvention::Physical,
            bsa_reference: BsaReference::SiBaseband,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BsaError::Config(msg));
        let finite = [
            ("f_c", self.f_c),
            ("B", self.bandwidth),
            ("P", self.power),
            ("sigma_n2", self.sigma_n2),
            ("d_bar", self.d_bar),
            ("k_abs", self.k_abs),
            ("nlos_penalty_db", self.nlos_penalty_db),
            ("max_excess_delay", self.max_excess_delay),
        ];
        if let Some((name, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("{name} must be finite"));
        }
        if self.f_c <= 0.0 {
            return bad("f_c must be positive".into());
        }
        if self.bandwidth < 0.0 || self.bandwidth >= 2.0 * self.f_c {
            return bad(format!(
                "B = {} must satisfy 0 <= B < 2 f_c so every subcarrier frequency stays positive",
                self.bandwidth
            ));
        }
        if self.num_subcarriers == 0 {
            return bad("M must be at least 1".into());
        }
        if self.n_t == 0 || self.n_r == 0 {
            return bad("antenna counts must be at least 1".into());
        }
        if self.num_users == 0 {
            return bad("K must be at least 1".into());
        }
        if self.n_rf != self.num_users {
            return bad(format!(
                "N_RF ({}) must equal K ({}): one RF chain per user",
                self.n_rf, self.num_users
            ));
        }
        if self.num_users > self.n_t {
            return bad(format!("K ({}) must not exceed N_T ({})", self.num_users, self.n_t));
        }
        if self.num_paths == 0 {
            return bad("L must be at least 1".into());
        }
        if self.grid_f < self.n_rf || self.grid_w < self.num_users {
            return bad(format!(
                "dictionary sizes N_F = {}, N_W = {} must cover N_RF = {} and K = {}",
                self.grid_f, self.grid_w, self.n_rf, self.num_users
            ));
        }
        if self.power <= 0.0 || self.sigma_n2 <= 0.0 {
            return bad("P and sigma_n2 must be positive".into());
        }
        if self.d_bar <= 0.0 {
            return bad("d_bar must be positive".into());
        }
        if self.k_abs < 0.0 || self.nlos_penalty_db < 0.0 || self.max_excess_delay < 0.0 {
            return bad("k_abs, nlos_penalty_db and max_excess_delay must be nonnegative".into());
        }
        if let Some(d) = self.d_spacing {
            let half = self.half_wavelength();
            if !((d - half).abs() <= 1e-9 * half) {
                return bad(format!(
                    "d_spacing = {d} m: only half-wavelength spacing ({half} m) is supported"
                ));
            }
        }
        Ok(())
    }

    fn half_wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.f_c)
    }

    /// Element spacing in meters.
    pub fn element_spacing(&self) -> f64 {
        self.d_spacing.unwrap_or_else(|| self.half_wavelength())
    }

    /// Signal-to-noise ratio `P / sigma_n2` in dB.
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.power / self.sigma_n2).log10()
    }

    /// Sets `sigma_n2` so that `P / sigma_n2` equals the given SNR.
    pub fn set_snr_db(&mut self, snr_db: f64) {
        self.sigma_n2 = self.power / 10f64.powf(snr_db / 10.0);
    }

    /// Sets K and N_RF together.
    pub fn set_num_users(&mut self, k: usize) {
        self.num_users = k;
        self.n_rf = k;
    }

    /// Short stable digest of the canonical JSON serialization.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    /// Applies one `key = value` override using the serialized field names.
    pub fn set_field(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut obj = match serde_json::to_value(&*self)? {
            Value::Object(map) => map,
            _ => unreachable!("config serializes to an object"),
        };
        let current = obj
            .get(key)
            .ok_or_else(|| BsaError::Config(format!("unknown config key '{key}'")))?;
        let raw = raw.trim();
        let parse_err = || BsaError::Config(format!("cannot parse value '{raw}' for key '{key}'"));
        let value = match current {
            Value::Number(n) if n.is_u64() => Value::from(raw.parse::<u64>().map_err(|_| parse_err())?),
            Value::Number(_) => Value::from(parse_float(raw).ok_or_else(parse_err)?),
            Value::String(_) => Value::String(raw.to_string()),
            Value::Null if raw.eq_ignore_ascii_case("none") || raw.is_empty() => Value::Null,
            Value::Null => match key {
                "absorption_table" => Value::String(raw.to_string()),
                _ => Value::from(parse_float(raw).ok_or_else(parse_err)?),
            },
            _ => return Err(parse_err()),
        };
        obj.insert(key.to_string(), value);
        *self = serde_json::from_value(Value::Object(obj))
            .map_err(|e| BsaError::Config(format!("key '{key}': {e}")))?;
        Ok(())
    }

    /// Applies a flat config text (`key = value` lines, `#` comments) on top
    /// of `self`. Validation is left to the caller so overrides can follow.
    pub fn apply_kv_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                BsaError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            self.set_field(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_kv_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| BsaError::io(path, e))?;
        self.apply_kv_text(&text)
    }

    /// Renders the config in the flat format accepted by [`apply_kv_text`].
    ///
    /// [`apply_kv_text`]: SystemConfig::apply_kv_text
    pub fn to_kv_text(&self) -> String {
        let obj = match serde_json::to_value(self).expect("config serializes") {
            Value::Object(map) => map,
            _ => unreachable!(),
        };
        let mut out = String::new();
        for (key, value) in obj {
            let rendered = match value {
                Value::Null => "none".to_string(),
                Value::String(s) => s,
                other => other.to_string(),
            };
            out.push_str(&format!("{key} = {rendered}\n"));
        }
        out
    }
}

impl fmt::Display for SystemConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv_text())
    }
}

fn parse_float(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Per-frequency absorption coefficients with linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionTable {
    freqs: Vec<f64>,
    values: Vec<f64>,
}

impl AbsorptionTable {
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(BsaError::Config("absorption table is empty".into()));
        }
        if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(BsaError::Config(
                "absorption table frequencies must be strictly increasing".into(),
            ));
        }
        if rows.iter().any(|&(f, k)| !f.is_finite() || !k.is_finite() || k < 0.0) {
            return Err(BsaError::Config(
                "absorption table entries must be finite with k_abs >= 0".into(),
            ));
        }
        let (freqs, values) = rows.into_iter().unzip();
        Ok(AbsorptionTable { freqs, values })
    }

    /// Reads `frequency_hz,k_abs_per_m` rows; a non-numeric first row is
    /// treated as a header.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(BsaError::Config(format!(
                    "absorption table row {} has {} columns, expected 2",
                    i + 1,
                    record.len()
                )));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(f), Ok(k)) => rows.push((f, k)),
                _ if i == 0 => continue,
                _ => {
                    return Err(BsaError::Config(format!(
                        "absorption table row {} is not numeric",
                        i + 1
                    )))
                }
            }
        }
        Self::new(rows)
    }

    pub fn from_csv_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| BsaError::io(path, e))?;
        Self::from_csv_reader(file)
    }

    /// Interpolated coefficient; held constant outside the tabulated range.
    pub fn k_abs_at(&self, freq: f64) -> f64 {
        let n = self.freqs.len();
        if freq <= self.freqs[0] {
            return self.values[0];
        }
        if freq >= self.freqs[n - 1] {
            return self.values[n - 1];
        }
        let hi = self.freqs.partition_point(|&f| f <= freq);
        let lo = hi - 1;
        let t = (freq - self.freqs[lo]) / (self.freqs[hi] - self.freqs[lo]);
        self.values[lo] + t * (self.values[hi] - self.values[lo])
    }
}

/// Frequency dependence of the medium absorption coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum Absorption {
    Flat(f64),
    Table(AbsorptionTable),
}

impl Absorption {
    pub fn k_abs_at(&self, freq: f64) -> f64 {
        match self {
            Absorption::Flat(k) => *k,
            Absorption::Table(t) => t.k_abs_at(freq),
        }
    }
}

impl SystemConfig {
    /// Resolves the absorption model, loading the table file if one is set.
    pub fn absorption(&self) -> Result<Absorption> {
        match &self.absorption_table {
            Some(path) => Ok(Absorption::Table(AbsorptionTable::from_csv_file(Path::new(path))?)),
            None => Ok(Absorption::Flat(self.k_abs)),
        }
    }
}
