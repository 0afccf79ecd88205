//! Wideband THz channel synthesis: subcarrier grid, ULA steering vectors,
//! beam-split mapping, path gains and array-gain analysis.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::config::{Absorption, SystemConfig};
use crate::error::{BsaError, Result};
use crate::phase::scale_beamformer;
use crate::{CMat, CVec, C64, SPEED_OF_LIGHT};

/// Subcarrier frequencies `f_m = f_c + (B/M)(m - 1 - (M-1)/2)`, `m = 1..M`.
pub fn subcarrier_frequencies(cfg: &SystemConfig) -> Vec<f64> {
    let m_total = cfg.num_subcarriers;
    let spacing = cfg.bandwidth / m_total as f64;
    let center = (m_total as f64 - 1.0) / 2.0;
    (0..m_total)
        .map(|m| cfg.f_c + spacing * (m as f64 - center))
        .collect()
}

/// Frequency ratios `eta_m = f_m / f_c`.
pub fn frequency_ratios(cfg: &SystemConfig) -> Vec<f64> {
    subcarrier_frequencies(cfg)
        .into_iter()
        .map(|f| f / cfg.f_c)
        .collect()
}

/// Zero-based index of the central subcarrier. For odd `M` this is the
/// subcarrier sitting exactly at `f_c`; for even `M` it is the lower of the
/// two subcarriers straddling `f_c`.
pub fn central_subcarrier(num_subcarriers: usize) -> usize {
    num_subcarriers.saturating_sub(1) / 2
}

/// Spatial direction observed at frequency ratio `eta_m` for physical
/// direction `phi` (both in sine space). Not clamped to `[-1, 1]`.
pub fn spatial_direction(phi: f64, eta_m: f64) -> f64 {
    eta_m * phi
}

/// Beam-split deviation `(eta_m - 1) phi` in sine space.
pub fn beam_split_deviation(phi: f64, eta_m: f64) -> f64 {
    (eta_m - 1.0) * phi
}

/// Unit-norm ULA steering vector with entries `exp(-j pi (n-1) psi) / sqrt(N)`.
///
/// Subcarrier-dependent vectors are obtained by passing `psi = eta_m * phi`.
pub fn steering_vector(n: usize, psi: f64) -> CVec {
    let scale = 1.0 / (n as f64).sqrt();
    CVec::from_iterator(
        n,
        (0..n).map(|i| C64::from_polar(scale, -PI * i as f64 * psi)),
    )
}

/// RMS path-gain magnitude `sqrt(E|alpha|^2)` with
/// `E|alpha|^2 = (c0 / (4 pi f d))^2 exp(-k_abs d)`.
pub fn path_gain(freq: f64, d_bar: f64, k_abs: f64) -> Result<f64> {
    if !(freq > 0.0) || !(d_bar > 0.0) {
        return Err(BsaError::Config(format!(
            "path gain needs positive frequency and distance (got f = {freq}, d = {d_bar})"
        )));
    }
    if !(k_abs >= 0.0) {
        return Err(BsaError::Config(format!("k_abs must be nonnegative, got {k_abs}")));
    }
    let free_space = SPEED_OF_LIGHT / (4.0 * PI * freq * d_bar);
    Ok(free_space * (-0.5 * k_abs * d_bar).exp())
}

/// Dirichlet kernel `sin(N pi a) / (N sin(pi a))`, continuous at integer `a`.
pub fn dirichlet_sinc(a: f64, n: usize) -> f64 {
    let n_f = n as f64;
    let wraps = a.round();
    let r = a - wraps;
    // Sigma(a + 1) = (-1)^(N+1) Sigma(a)
    let sign = if ((n + 1) as i64 * wraps as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let base = if r.abs() < 1e-8 {
        1.0 - (n_f * n_f - 1.0) * (PI * r).powi(2) / 6.0
    } else {
        (n_f * PI * r).sin() / (n_f * (PI * r).sin())
    };
    sign * base
}

/// One propagation path of one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDescriptor {
    /// Small-scale complex gain at the carrier; the frequency-dependent path
    /// loss relative to `f_c` is applied per subcarrier.
    pub alpha: C64,
    /// Physical direction of arrival (sine space).
    pub phi: f64,
    /// Physical direction of departure (sine space).
    pub varphi: f64,
    /// Delay (s).
    pub tau: f64,
    pub is_los: bool,
}

/// Paths for every user, `users[k][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathParams {
    pub users: Vec<Vec<PathDescriptor>>,
}

impl PathParams {
    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.users.len() != cfg.num_users {
            return Err(BsaError::Dimension(format!(
                "paths given for {} users, config has K = {}",
                self.users.len(),
                cfg.num_users
            )));
        }
        for (k, paths) in self.users.iter().enumerate() {
            if paths.len() != cfg.num_paths {
                return Err(BsaError::Dimension(format!(
                    "user {k} has {} paths, config has L = {}",
                    paths.len(),
                    cfg.num_paths
                )));
            }
            if paths.iter().filter(|p| p.is_los).count() != 1 {
                return Err(BsaError::Dimension(format!(
                    "user {k} must have exactly one LoS path"
                )));
            }
            for p in paths {
                if p.phi.abs() > 1.0 || p.varphi.abs() > 1.0 {
                    return Err(BsaError::Dimension(format!(
                        "user {k}: directions must lie in [-1, 1] (got {}, {})",
                        p.phi, p.varphi
                    )));
                }
                if !(p.alpha.re.is_finite() && p.alpha.im.is_finite() && p.tau.is_finite()) {
                    return Err(BsaError::Numerical(format!("user {k}: non-finite path parameter")));
                }
            }
        }
        Ok(())
    }

    /// Draws random paths: angles uniform in `[-pi/2, pi/2]` mapped through
    /// `sin`, `CN(0, 1)` gains with the NLoS penalty, LoS delay `d_bar / c0`
    /// and NLoS delays with a uniform excess. Path 0 of each user is LoS.
    pub fn draw<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Self {
        let angle = Uniform::new_inclusive(-FRAC_PI_2, FRAC_PI_2).expect("valid range");
        let nlos_amp = 10f64.powf(-cfg.nlos_penalty_db / 20.0);
        let los_delay = cfg.d_bar / SPEED_OF_LIGHT;
        let users = (0..cfg.num_users)
            .map(|_| {
                (0..cfg.num_paths)
                    .map(|l| {
                        let phi = angle.sample(rng).sin();
                        let varphi = angle.sample(rng).sin();
                        let re: f64 = StandardNormal.sample(rng);
                        let im: f64 = StandardNormal.sample(rng);
                        let g = C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
                        let is_los = l == 0;
                        let excess: f64 = if is_los {
                            0.0
                        } else {
                            rng.random::<f64>() * cfg.max_excess_delay
                        };
                        PathDescriptor {
                            alpha: if is_los { g } else { g * nlos_amp },
                            phi,
                            varphi,
                            tau: los_delay + excess,
                            is_los,
                        }
                    })
                    .collect()
            })
            .collect();
        PathParams { users }
    }
}

/// Channels of all users on all subcarriers, `h[k][m]` is `N_R x N_T`.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub h: Vec<Vec<CMat>>,
    /// Beam-split-free counterpart, when requested.
    pub h_bar: Option<Vec<Vec<CMat>>>,
    pub freqs: Vec<f64>,
    pub eta: Vec<f64>,
}

impl ChannelSet {
    pub fn num_users(&self) -> usize {
        self.h.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.freqs.len()
    }

    /// `(N_R, N_T)`.
    pub fn dims(&self) -> (usize, usize) {
        let h = &self.h[0][0];
        (h.nrows(), h.ncols())
    }

    pub fn is_finite(&self) -> bool {
        self.h
            .iter()
            .flatten()
            .all(|h| h.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
    }
}

/// Builds `H_k[m] = zeta sum_l alpha_{k,m,l} a_R(theta) a_T^H(vartheta) e^{-j 2 pi tau f_m}`
/// with `zeta = sqrt(N_R N_T / L)`. With `split_free` the steering
/// arguments are the physical directions instead of `eta_m`-scaled ones.
pub fn generate_channel(cfg: &SystemConfig, paths: &PathParams, split_free: bool) -> Result<ChannelSet> {
    let absorption = cfg.absorption()?;
    generate_channel_with(cfg, &absorption, paths, split_free)
}

/// As [`generate_channel`] but with a pre-resolved absorption model.
pub fn generate_channel_with(
    cfg: &SystemConfig,
    absorption: &Absorption,
    paths: &PathParams,
    split_free: bool,
) -> Result<ChannelSet> {
    let freqs = subcarrier_frequencies(cfg);
    let eta: Vec<f64> = freqs.iter().map(|f| f / cfg.f_c).collect();
    let steering_eta = if split_free { vec![1.0; eta.len()] } else { eta.clone() };
    let h = synthesize(cfg, absorption, paths, &freqs, &steering_eta)?;
    Ok(ChannelSet {
        h,
        h_bar: None,
        freqs,
        eta,
    })
}

/// Generates the beam-split channel together with its split-free counterpart.
pub fn generate_channel_pair(cfg: &SystemConfig, paths: &PathParams) -> Result<ChannelSet> {
    let absorption = cfg.absorption()?;
    let mut set = generate_channel_with(cfg, &absorption, paths, false)?;
    let ones = vec![1.0; set.eta.len()];
    set.h_bar = Some(synthesize(cfg, &absorption, paths, &set.freqs, &ones)?);
    Ok(set)
}

/// Core synthesis with explicit per-subcarrier steering dilation factors.
pub(crate) fn synthesize(
    cfg: &SystemConfig,
    absorption: &Absorption,
    paths: &PathParams,
    freqs: &[f64],
    steering_eta: &[f64],
) -> Result<Vec<Vec<CMat>>> {
    cfg.validate()?;
    paths.validate(cfg)?;
    let (n_r, n_t, l) = (cfg.n_r, cfg.n_t, cfg.num_paths);
    let zeta = ((n_r * n_t) as f64 / l as f64).sqrt();
    let reference = path_gain(cfg.f_c, cfg.d_bar, absorption.k_abs_at(cfg.f_c))?;

    let mut relative_gain = Vec::with_capacity(freqs.len());
    for &f in freqs {
        relative_gain.push(path_gain(f, cfg.d_bar, absorption.k_abs_at(f))? / reference);
    }

    let h = paths
        .users
        .iter()
        .map(|user_paths| {
            freqs
                .iter()
                .enumerate()
                .map(|(m, &f)| {
                    let mut h = CMat::zeros(n_r, n_t);
                    for p in user_paths {
                        let a_r = steering_vector(n_r, spatial_direction(p.phi, steering_eta[m]));
                        let a_t = steering_vector(n_t, spatial_direction(p.varphi, steering_eta[m]));
                        let delay = C64::from_polar(1.0, -2.0 * PI * p.tau * f);
                        let coeff = p.alpha * relative_gain[m] * delay * zeta;
                        h += (a_r * a_t.adjoint()) * coeff;
                    }
                    h
                })
                .collect()
        })
        .collect();
    Ok(h)
}

/// Normalized array gain of beamformer `u` probed at beamspace direction
/// `phi_bar` on subcarrier `m` (zero based).
///
/// The beamformer is carried to subcarrier `m` by the phase rescaling with
/// `eta_m` and correlated against the unit-norm probe `a(phi_bar)`:
/// `G = |u_m^H a(phi_bar)|^2 / ||u_m||^2`, so a matched pair gives a gain
/// of one. For `u = a(phi)` this equals `|Sigma(mu_m)|^2` with
/// `mu_m = d (f_m phi - f_c phi_bar) / c0`, peaking at `phi_bar = eta_m phi`.
/// The unnormalized form `|u^H v|^2 / N_T` equals `N_T G` for
/// constant-modulus vectors with unit-modulus entries.
pub fn array_gain(u: &CVec, phi_bar: f64, m: usize, cfg: &SystemConfig) -> Result<f64> {
    if u.len() != cfg.n_t {
        return Err(BsaError::Dimension(format!(
            "beamformer has length {}, N_T = {}",
            u.len(),
            cfg.n_t
        )));
    }
    if m >= cfg.num_subcarriers {
        return Err(BsaError::Dimension(format!(
            "subcarrier {m} out of range for M = {}",
            cfg.num_subcarriers
        )));
    }
    if u.norm() == 0.0 {
        return Err(BsaError::ZeroVector);
    }
    let eta = frequency_ratios(cfg)[m];
    let u_m = scale_beamformer(u, eta)?;
    let probe = steering_vector(cfg.n_t, phi_bar);
    let inner = u_m.dotc(&probe);
    Ok(inner.norm_sqr() / u_m.norm_squared())
}

/// Closed-form array gain `|Sigma(mu_m)|^2` for the beamformer `a(phi)`.
pub fn array_gain_analytic(phi: f64, phi_bar: f64, m: usize, cfg: &SystemConfig) -> f64 {
    let f_m = subcarrier_frequencies(cfg)[m];
    let mu = cfg.element_spacing() * (f_m * phi - cfg.f_c * phi_bar) / SPEED_OF_LIGHT;
    dirichlet_sinc(mu, cfg.n_t).powi(2)
}
