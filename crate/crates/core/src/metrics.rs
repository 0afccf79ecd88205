//! SINR, sum rate, the fully-digital yardstick and power-constraint checks.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::config::{SinrConvention, SystemConfig};
use crate::error::{BsaError, Result};
use crate::linalg::{frobenius_sq, spectral_norm};
use crate::omp::BeamformerSet;
use crate::CMat;

/// Transmit power, noise power and the interference convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub power: f64,
    pub sigma_n2: f64,
    pub convention: SinrConvention,
}

impl From<&SystemConfig> for LinkBudget {
    fn from(cfg: &SystemConfig) -> Self {
        LinkBudget {
            power: cfg.power,
            sigma_n2: cfg.sigma_n2,
            convention: cfg.sinr_convention,
        }
    }
}

/// Beamformers in effect on one subcarrier.
#[derive(Debug, Clone, Copy)]
pub struct SubcarrierBeamformers<'a> {
    pub w_rf: &'a CMat,
    pub f_rf: &'a CMat,
    pub f_bb: &'a CMat,
}

/// Which baseband precoder of a [`BeamformerSet`] to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precoder {
    Plain,
    Bsa,
}

/// Per-user, per-subcarrier rates of one method on one channel realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub method: String,
    /// `per_user_rate[k][m] = log2(1 + gamma_k[m])` (bits/s/Hz).
    pub per_user_rate: Vec<Vec<f64>>,
    pub sum_rate: f64,
    pub power_residual: f64,
    pub seed: Option<u64>,
}

/// Compact JSON view of a [`RateReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub method: String,
    pub sum_rate_bits: f64,
    pub per_subcarrier_avg: f64,
    #[serde(rename = "K")]
    pub num_users: usize,
    #[serde(rename = "M")]
    pub num_subcarriers: usize,
    pub seed: Option<u64>,
}

impl RateReport {
    pub fn num_users(&self) -> usize {
        self.per_user_rate.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.per_user_rate.first().map_or(0, Vec::len)
    }

    /// Sum rate divided by the number of subcarriers.
    pub fn per_subcarrier_avg(&self) -> f64 {
        match self.num_subcarriers() {
            0 => 0.0,
            m => self.sum_rate / m as f64,
        }
    }

    pub fn summary(&self) -> RateSummary {
        RateSummary {
            method: self.method.clone(),
            sum_rate_bits: self.sum_rate,
            per_subcarrier_avg: self.per_subcarrier_avg(),
            num_users: self.num_users(),
            num_subcarriers: self.num_subcarriers(),
            seed: self.seed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.summary())?)
    }

    fn from_rates(method: &str, per_user_rate: Vec<Vec<f64>>, power_residual: f64) -> Self {
        let sum_rate = per_user_rate.iter().flatten().sum();
        RateReport {
            method: method.to_string(),
            per_user_rate,
            sum_rate,
            power_residual,
            seed: None,
        }
    }
}

/// `K x K` matrix `G[k][i] = w_k^H H_k[m] F_RF f_BB,i`.
fn gain_matrix(channels: &ChannelSet, bf: SubcarrierBeamformers<'_>, m: usize) -> Result<CMat> {
    let k_users = channels.num_users();
    let (n_r, n_t) = channels.dims();
    if bf.w_rf.shape() != (n_r, k_users)
        || bf.f_rf.nrows() != n_t
        || bf.f_bb.shape() != (bf.f_rf.ncols(), k_users)
    {
        return Err(BsaError::Dimension(format!(
            "W_RF {:?}, F_RF {:?}, F_BB {:?} for {k_users} users with {n_r}x{n_t} channels",
            bf.w_rf.shape(),
            bf.f_rf.shape(),
            bf.f_bb.shape()
        )));
    }
    let precoder = bf.f_rf * bf.f_bb;
    let mut g = CMat::zeros(k_users, k_users);
    for k in 0..k_users {
        let row = bf.w_rf.column(k).adjoint() * &channels.h[k][m] * &precoder;
        g.row_mut(k).copy_from(&row);
    }
    Ok(g)
}

fn sinr_from_gains(g: &CMat, k: usize, link: &LinkBudget) -> f64 {
    let k_users = g.nrows();
    let per_user = link.power / k_users as f64;
    let desired = g[(k, k)].norm_sqr();
    let interference: f64 = (0..k_users)
        .filter(|&i| i != k)
        .map(|i| match link.convention {
            SinrConvention::Physical => g[(k, i)].norm_sqr(),
            SinrConvention::AsPrinted => g[(i, i)].norm_sqr(),
        })
        .sum();
    per_user * desired / (per_user * interference + link.sigma_n2)
}

/// SINR of user `k` on subcarrier `m` (both zero based).
pub fn sinr(
    channels: &ChannelSet,
    bf: SubcarrierBeamformers<'_>,
    k: usize,
    m: usize,
    link: &LinkBudget,
) -> Result<f64> {
    if k >= channels.num_users() || m >= channels.num_subcarriers() {
        return Err(BsaError::Dimension(format!("user {k} / subcarrier {m} out of range")));
    }
    let g = gain_matrix(channels, bf, m)?;
    Ok(sinr_from_gains(&g, k, link))
}

/// Desired and interference power `(P/K)|G_kk|^2`, `(P/K) sum_{i!=k} |G_ki|^2`
/// for every user on subcarrier `m`.
pub fn signal_and_interference(
    channels: &ChannelSet,
    bf: SubcarrierBeamformers<'_>,
    m: usize,
    link: &LinkBudget,
) -> Result<Vec<(f64, f64)>> {
    let g = gain_matrix(channels, bf, m)?;
    let per_user = link.power / g.nrows() as f64;
    Ok((0..g.nrows())
        .map(|k| {
            let leak: f64 = (0..g.ncols()).filter(|&i| i != k).map(|i| g[(k, i)].norm_sqr()).sum();
            (per_user * g[(k, k)].norm_sqr(), per_user * leak)
        })
        .collect())
}

/// Rates of an arbitrary per-subcarrier beamformer assignment.
pub fn sum_rate_with<'a, F>(
    channels: &ChannelSet,
    method: &str,
    link: &LinkBudget,
    power_residual: f64,
    beamformers_at: F,
) -> Result<RateReport>
where
    F: Fn(usize) -> SubcarrierBeamformers<'a>,
{
    let k_users = channels.num_users();
    let m_total = channels.num_subcarriers();
    let mut rates = vec![vec![0.0; m_total]; k_users];
    for m in 0..m_total {
        let g = gain_matrix(channels, beamformers_at(m), m)?;
        for (k, row) in rates.iter_mut().enumerate() {
            row[m] = (1.0 + sinr_from_gains(&g, k, link)).log2();
        }
    }
    Ok(RateReport::from_rates(method, rates, power_residual))
}

/// Sum rate `sum_m sum_k log2(1 + gamma_k[m])` of the plain or BSA design.
pub fn sum_rate(channels: &ChannelSet, bf: &BeamformerSet, which: Precoder, link: &LinkBudget) -> Result<RateReport> {
    let (f_bb, method) = match which {
        Precoder::Plain => (&bf.f_bb, "omp"),
        Precoder::Bsa => (
            bf.f_bb_bsa
                .as_ref()
                .ok_or_else(|| BsaError::Dimension("BSA precoders have not been computed".into()))?,
            "bsa_omp",
        ),
    };
    if f_bb.len() != channels.num_subcarriers() {
        return Err(BsaError::Dimension(format!(
            "{} baseband precoders for {} subcarriers",
            f_bb.len(),
            channels.num_subcarriers()
        )));
    }
    let residual = power_constraint_residual(&bf.f_rf, f_bb);
    sum_rate_with(channels, method, link, residual, |m| SubcarrierBeamformers {
        w_rf: &bf.w_rf,
        f_rf: &bf.f_rf,
        f_bb: &f_bb[m],
    })
}

/// Interference-free fully-digital bound
/// `sum_m sum_k log2(1 + (P/K) sigma_max^2(H_k[m]) / sigma_n2)`.
pub fn fully_digital_yardstick(channels: &ChannelSet, link: &LinkBudget) -> RateReport {
    let per_user = link.power / channels.num_users() as f64;
    let rates = channels
        .h
        .iter()
        .map(|h_k| {
            h_k.iter()
                .map(|h| (1.0 + per_user * spectral_norm(h).powi(2) / link.sigma_n2).log2())
                .collect()
        })
        .collect();
    RateReport::from_rates("fully_digital", rates, 0.0)
}

/// `|sum_m ||F_RF F_BB[m]||_F^2 - M K| / (M K)`.
pub fn power_constraint_residual(f_rf: &CMat, f_bb: &[CMat]) -> f64 {
    residual_of(f_bb.iter().map(|f| frobenius_sq(&(f_rf * f))), f_bb)
}

/// As [`power_constraint_residual`] with a different analog precoder on each
/// subcarrier.
pub fn power_constraint_residual_sd(f_rf: &[CMat], f_bb: &[CMat]) -> f64 {
    residual_of(f_rf.iter().zip(f_bb).map(|(a, f)| frobenius_sq(&(a * f))), f_bb)
}

fn residual_of(energies: impl Iterator<Item = f64>, f_bb: &[CMat]) -> f64 {
    let k = f_bb.first().map_or(0, |f| f.ncols());
    let target = (f_bb.len() * k) as f64;
    if target == 0.0 {
        return 0.0;
    }
    (energies.sum::<f64>() - target).abs() / target
}
