//! OMP-based hybrid beamformer design.
//!
//! Analog precoder and combiner columns are picked from steering-vector
//! dictionaries by matching, jointly over all subcarriers, the
//! frequency-scaled dictionary atoms against the unconstrained per-user
//! beamformers. The baseband precoder is the zero-forcing pseudo-inverse of
//! the resulting effective channel, normalized so that every subcarrier
//! carries power K.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::channel::{steering_vector, ChannelSet};
use crate::config::SystemConfig;
use crate::error::{BsaError, Result};
use crate::linalg::{dominant_right_singular, frobenius_sq, pinv_full_rank};
use crate::phase::scale_analog_matrix;
use crate::{CMat, CVec, C64};

/// Transmit and receive steering dictionaries on uniform sine-space grids.
#[derive(Debug, Clone)]
pub struct Dictionary {
    /// `N_T x N_F`.
    pub d_f: CMat,
    /// `N_R x N_W`.
    pub d_w: CMat,
    pub grid_f: Vec<f64>,
    pub grid_w: Vec<f64>,
}

/// `n` evenly spaced points covering `[-1, 1]` (endpoints included).
pub fn sine_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn dictionary_matrix(n_ant: usize, grid: &[f64]) -> CMat {
    let cols: Vec<CVec> = grid.iter().map(|&g| steering_vector(n_ant, g)).collect();
    CMat::from_columns(&cols)
}

impl Dictionary {
    pub fn new(n_t: usize, n_r: usize, size_f: usize, size_w: usize) -> Result<Self> {
        if size_f == 0 || size_w == 0 {
            return Err(BsaError::EmptyDictionary);
        }
        let grid_f = sine_grid(size_f);
        let grid_w = sine_grid(size_w);
        Ok(Dictionary {
            d_f: dictionary_matrix(n_t, &grid_f),
            d_w: dictionary_matrix(n_r, &grid_w),
            grid_f,
            grid_w,
        })
    }

    /// Transmit dictionary carried to frequency ratio `eta`.
    pub fn sd_transmit(&self, eta: f64) -> Result<CMat> {
        scale_analog_matrix(&self.d_f, eta)
    }

    /// Receive dictionary carried to frequency ratio `eta`.
    pub fn sd_receive(&self, eta: f64) -> Result<CMat> {
        scale_analog_matrix(&self.d_w, eta)
    }
}

pub fn build_dictionaries(cfg: &SystemConfig) -> Result<Dictionary> {
    Dictionary::new(cfg.n_t, cfg.n_r, cfg.grid_f, cfg.grid_w)
}

/// Analog and digital beamformers of one design.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    /// `N_T x N_RF`, constant modulus `1/sqrt(N_T)`.
    pub f_rf: CMat,
    /// `N_R x K`, constant modulus `1/sqrt(N_R)`.
    pub w_rf: CMat,
    /// Per-subcarrier `N_RF x K` zero-forcing precoders.
    pub f_bb: Vec<CMat>,
    /// Per-subcarrier beam-split-aware precoders, once computed.
    pub f_bb_bsa: Option<Vec<CMat>>,
    /// `(p, q)` dictionary indices chosen for each user.
    pub selected_atoms: Vec<(usize, usize)>,
}

/// Column k of `F_opt[m]`: dominant right singular vector of `H_k[m]`.
pub fn unconstrained_precoders(channels: &ChannelSet) -> Result<Vec<CMat>> {
    (0..channels.num_subcarriers())
        .into_par_iter()
        .map(|m| {
            let cols = channels
                .h
                .iter()
                .map(|h_k| dominant_right_singular(&h_k[m]).map(|(v, _)| v))
                .collect::<Result<Vec<_>>>()?;
            Ok(CMat::from_columns(&cols))
        })
        .collect()
}

/// Column k of `W_opt[m]`:
/// `(1/P) (f^H H^H H f + sigma^2/P)^-1 H f` with `f = f_opt,k[m]`.
pub fn unconstrained_combiners(
    channels: &ChannelSet,
    f_opt: &[CMat],
    power: f64,
    sigma_n2: f64,
) -> Result<Vec<CMat>> {
    if f_opt.len() != channels.num_subcarriers() {
        return Err(BsaError::Dimension(format!(
            "{} precoders for {} subcarriers",
            f_opt.len(),
            channels.num_subcarriers()
        )));
    }
    Ok(f_opt
        .iter()
        .enumerate()
        .map(|(m, f_m)| {
            let cols: Vec<CVec> = channels
                .h
                .iter()
                .enumerate()
                .map(|(k, h_k)| {
                    let hf = &h_k[m] * f_m.column(k);
                    let gain = hf.norm_squared();
                    let scalar = 1.0 / (power * (gain + sigma_n2 / power));
                    hf * C64::from(scalar)
                })
                .collect();
            CMat::from_columns(&cols)
        })
        .collect())
}

/// Per-subcarrier magnitudes `|[D~_F[m]]_p^H f_k[m]|` (`N_F x K`) and
/// `|[D~_W[m]]_q^H w_k[m]|` (`N_W x K`).
struct Correlations {
    transmit: Vec<DMatrix<f64>>,
    receive: Vec<DMatrix<f64>>,
}

fn correlations(f_opt: &[CMat], w_opt: &[CMat], dict: &Dictionary, eta: &[f64]) -> Result<Correlations> {
    if f_opt.len() != eta.len() || w_opt.len() != eta.len() {
        return Err(BsaError::Dimension(format!(
            "{} precoders, {} combiners, {} frequency ratios",
            f_opt.len(),
            w_opt.len(),
            eta.len()
        )));
    }
    if dict.d_f.ncols() == 0 || dict.d_w.ncols() == 0 {
        return Err(BsaError::EmptyDictionary);
    }
    let pairs = eta
        .par_iter()
        .enumerate()
        .map(|(m, &e)| {
            let tf = (dict.sd_transmit(e)?.adjoint() * &f_opt[m]).map(|z| z.norm());
            let tw = (dict.sd_receive(e)?.adjoint() * &w_opt[m]).map(|z| z.norm());
            Ok((tf, tw))
        })
        .collect::<Result<Vec<_>>>()?;
    let (transmit, receive) = pairs.into_iter().unzip();
    Ok(Correlations { transmit, receive })
}

fn objective_from(corr: &Correlations, user: usize, n_f: usize, n_w: usize) -> DMatrix<f64> {
    let mut obj = DMatrix::<f64>::zeros(n_f, n_w);
    for (tf, tw) in corr.transmit.iter().zip(&corr.receive) {
        let a = tf.column(user);
        let b = tw.column(user);
        obj.ger(1.0, &a, &b, 1.0);
    }
    obj
}

/// Joint-subcarrier OMP objective `sum_m |d_{p,q}^H[m] g_k[m]|` for one user
/// over the whole `(p, q)` grid, evaluated through the separable identity
/// `d^H g = ([D~_F]_p^H f)^* ([D~_W]_q^H w)`.
pub fn selection_objective(
    f_opt: &[CMat],
    w_opt: &[CMat],
    dict: &Dictionary,
    eta: &[f64],
    user: usize,
) -> Result<DMatrix<f64>> {
    let corr = correlations(f_opt, w_opt, dict, eta)?;
    if user >= f_opt[0].ncols() {
        return Err(BsaError::Dimension(format!("user {user} out of range")));
    }
    Ok(objective_from(&corr, user, dict.d_f.ncols(), dict.d_w.ncols()))
}

/// Analog beamformers chosen by [`omp_select`].
#[derive(Debug, Clone)]
pub struct AnalogSelection {
    pub f_rf: CMat,
    pub w_rf: CMat,
    pub atoms: Vec<(usize, usize)>,
}

/// Picks one transmit/receive atom pair per RF chain. Transmit atoms already
/// given to an earlier user are excluded; ties go to the smallest `p`, then
/// the smallest `q`.
pub fn omp_select(f_opt: &[CMat], w_opt: &[CMat], dict: &Dictionary, eta: &[f64]) -> Result<AnalogSelection> {
    let corr = correlations(f_opt, w_opt, dict, eta)?;
    let n_users = f_opt[0].ncols();
    let (n_f, n_w) = (dict.d_f.ncols(), dict.d_w.ncols());
    if n_users > n_f {
        return Err(BsaError::Dimension(format!(
            "{n_users} RF chains but only {n_f} transmit atoms"
        )));
    }
    let mut taken = vec![false; n_f];
    let mut atoms = Vec::with_capacity(n_users);
    for k in 0..n_users {
        let obj = objective_from(&corr, k, n_f, n_w);
        let mut best: Option<(usize, usize, f64)> = None;
        for p in (0..n_f).filter(|&p| !taken[p]) {
            for q in 0..n_w {
                let v = obj[(p, q)];
                if best.is_none_or(|(_, _, b)| v > b) {
                    best = Some((p, q, v));
                }
            }
        }
        let (p, q, _) = best.ok_or(BsaError::EmptyDictionary)?;
        taken[p] = true;
        atoms.push((p, q));
    }
    let f_cols: Vec<CVec> = atoms.iter().map(|&(p, _)| dict.d_f.column(p).into_owned()).collect();
    let w_cols: Vec<CVec> = atoms.iter().map(|&(_, q)| dict.d_w.column(q).into_owned()).collect();
    Ok(AnalogSelection {
        f_rf: CMat::from_columns(&f_cols),
        w_rf: CMat::from_columns(&w_cols),
        atoms,
    })
}

/// `K x N_RF` effective channel at one subcarrier; row k is
/// `w_k^H H_k[m] F_RF`.
pub fn effective_channel_at(channels: &ChannelSet, m: usize, w_rf: &CMat, f_rf: &CMat) -> Result<CMat> {
    let (n_r, n_t) = channels.dims();
    let k_users = channels.num_users();
    if w_rf.nrows() != n_r || w_rf.ncols() != k_users || f_rf.nrows() != n_t {
        return Err(BsaError::Dimension(format!(
            "W_RF is {}x{}, F_RF is {}x{}, channels are {n_r}x{n_t} for {k_users} users",
            w_rf.nrows(),
            w_rf.ncols(),
            f_rf.nrows(),
            f_rf.ncols()
        )));
    }
    let mut h_eff = CMat::zeros(k_users, f_rf.ncols());
    for k in 0..k_users {
        let row = w_rf.column(k).adjoint() * &channels.h[k][m] * f_rf;
        h_eff.row_mut(k).copy_from(&row);
    }
    Ok(h_eff)
}

pub fn effective_channel(channels: &ChannelSet, w_rf: &CMat, f_rf: &CMat) -> Result<Vec<CMat>> {
    (0..channels.num_subcarriers())
        .map(|m| effective_channel_at(channels, m, w_rf, f_rf))
        .collect()
}

/// Scales `f_bb` so that `||F_RF F_BB||_F^2 = K` (K = number of streams).
pub fn normalize_power(f_rf: &CMat, f_bb: CMat) -> Result<CMat> {
    let k = f_bb.ncols() as f64;
    let energy = frobenius_sq(&(f_rf * &f_bb));
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(BsaError::Numerical(format!("cannot normalize precoder with energy {energy}")));
    }
    Ok(f_bb * C64::from((k / energy).sqrt()))
}

/// Unnormalized zero-forcing precoder `H_eff^+` for one subcarrier.
pub fn zf_unnormalized(h_eff: &CMat, m: usize) -> Result<CMat> {
    pinv_full_rank(h_eff, "effective channel", m)
}

/// Zero-forcing baseband precoders, normalized per subcarrier so that the
/// total power over all subcarriers is `M K`.
pub fn baseband_zf(h_eff: &[CMat], f_rf: &CMat) -> Result<Vec<CMat>> {
    h_eff
        .iter()
        .enumerate()
        .map(|(m, h)| {
            if h.ncols() != f_rf.ncols() {
                return Err(BsaError::Dimension(format!(
                    "effective channel has {} columns, F_RF has {}",
                    h.ncols(),
                    f_rf.ncols()
                )));
            }
            normalize_power(f_rf, zf_unnormalized(h, m)?)
        })
        .collect()
}

/// Full OMP hybrid design on one channel realization.
pub fn design_hybrid(cfg: &SystemConfig, channels: &ChannelSet, dict: &Dictionary) -> Result<BeamformerSet> {
    let f_opt = unconstrained_precoders(channels)?;
    let w_opt = unconstrained_combiners(channels, &f_opt, cfg.power, cfg.sigma_n2)?;
    let sel = omp_select(&f_opt, &w_opt, dict, &channels.eta)?;
    let h_eff = effective_channel(channels, &sel.w_rf, &sel.f_rf)?;
    let f_bb = baseband_zf(&h_eff, &sel.f_rf)?;
    Ok(BeamformerSet {
        f_rf: sel.f_rf,
        w_rf: sel.w_rf,
        f_bb,
        f_bb_bsa: None,
        selected_atoms: sel.atoms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channel, PathDescriptor, PathParams};
    use crate::linalg::spectral_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
        CMat::from_fn(rows, cols, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn channel_set(h: Vec<Vec<CMat>>, eta: Vec<f64>) -> ChannelSet {
        ChannelSet {
            freqs: eta.iter().map(|e| e * 300e9).collect(),
            eta,
            h,
            h_bar: None,
        }
    }

    fn los_config(n_t: usize, n_r: usize, m: usize) -> SystemConfig {
        SystemConfig {
            n_t,
            n_r,
            num_users: 1,
            n_rf: 1,
            num_paths: 1,
            num_subcarriers: m,
            grid_f: 2 * n_t + 1,
            grid_w: 2 * n_r + 1,
            ..SystemConfig::default()
        }
    }

    fn los_paths(phi: f64, varphi: f64) -> PathParams {
        PathParams {
            users: vec![vec![PathDescriptor {
                alpha: C64::new(0.6, -0.8),
                phi,
                varphi,
                tau: 3e-9,
                is_los: true,
            }]],
        }
    }

    #[test]
    fn grid_and_dictionary_shapes() {
        assert_eq!(sine_grid(3), vec![-1.0, 0.0, 1.0]);
        assert_eq!(sine_grid(1), vec![0.0]);
        let d = Dictionary::new(8, 4, 3, 5).unwrap();
        assert_eq!(d.d_f.shape(), (8, 3));
        assert_eq!(d.d_w.shape(), (4, 5));
        for (j, &g) in d.grid_f.iter().enumerate() {
            assert!((d.d_f.column(j) - steering_vector(8, g)).norm() < 1e-15);
        }
        assert!((d.sd_transmit(1.0).unwrap() - &d.d_f).norm() < 1e-12);
        let sd = d.sd_transmit(1.03).unwrap();
        for (j, &g) in d.grid_f.iter().enumerate().filter(|(_, g)| **g > -1.0) {
            assert!((sd.column(j) - steering_vector(8, 1.03 * g)).norm() < 1e-12);
        }
        assert!(matches!(Dictionary::new(8, 4, 0, 2), Err(BsaError::EmptyDictionary)));
    }

    #[test]
    fn rank_one_precoder_is_transmit_steering_vector() {
        let cfg = los_config(16, 4, 1);
        let set = generate_channel(&cfg, &los_paths(0.2, -0.45), false).unwrap();
        let f_opt = unconstrained_precoders(&set).unwrap();
        let a_t = steering_vector(16, -0.45);
        let f = f_opt[0].column(0);
        assert!((f.norm() - 1.0).abs() < 1e-12);
        // equal up to a unit phase
        assert!((f.dotc(&a_t).norm() - 1.0).abs() < 1e-12);
        assert!(f[0].im.abs() < 1e-12 && f[0].re > 0.0);
    }

    #[test]
    fn precoder_attains_largest_eigenvalue() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let h = random(4, 8, &mut rng);
            let set = channel_set(vec![vec![h.clone()]], vec![1.0]);
            let f_opt = unconstrained_precoders(&set).unwrap();
            let f: CVec = f_opt[0].column(0).into_owned();
            let gram = h.adjoint() * &h;
            let quad = (f.adjoint() * &gram * &f)[(0, 0)].norm();
            let eig = nalgebra::SymmetricEigen::new(gram);
            let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
            assert!((quad - lambda_max).abs() < 1e-10);
        }
    }

    #[test]
    fn combiner_direction_scale_and_noise_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random(4, 6, &mut rng);
        let set = channel_set(vec![vec![h.clone()]], vec![1.0]);
        let f_opt = unconstrained_precoders(&set).unwrap();
        let w = unconstrained_combiners(&set, &f_opt, 2.0, 0.5).unwrap();
        let hf = &h * f_opt[0].column(0);
        let w0: CVec = w[0].column(0).into_owned();
        let cos = w0.dotc(&hf).norm() / (w0.norm() * hf.norm());
        assert!((cos - 1.0).abs() < 1e-10);
        // scalar factor (1/P)(g^2 + sigma^2/P)^-1 with g = ||H f||
        let g2 = hf.norm_squared();
        let factor = 1.0 / 2.0 / (g2 + 0.5 / 2.0);
        assert!((w0.norm() - factor * g2.sqrt()).abs() < 1e-12);
        let noisy = unconstrained_combiners(&set, &f_opt, 2.0, 1e12).unwrap();
        assert!(noisy[0].column(0).norm() < 1e-10);
    }

    #[test]
    fn single_user_los_selects_true_atoms() {
        let cfg = los_config(16, 4, 4);
        let dict = build_dictionaries(&cfg).unwrap();
        let (p0, q0) = (21usize, 6usize);
        let set = generate_channel(&cfg, &los_paths(dict.grid_w[q0], dict.grid_f[p0]), false).unwrap();
        let f_opt = unconstrained_precoders(&set).unwrap();
        let w_opt = unconstrained_combiners(&set, &f_opt, cfg.power, cfg.sigma_n2).unwrap();
        let sel = omp_select(&f_opt, &w_opt, &dict, &set.eta).unwrap();
        // brute-force argmax over the whole grid
        let obj = selection_objective(&f_opt, &w_opt, &dict, &set.eta, 0).unwrap();
        let (mut bp, mut bq, mut bv) = (0, 0, f64::MIN);
        for p in 0..obj.nrows() {
            for q in 0..obj.ncols() {
                if obj[(p, q)] > bv {
                    (bp, bq, bv) = (p, q, obj[(p, q)]);
                }
            }
        }
        assert_eq!(sel.atoms, vec![(bp, bq)]);
        assert_eq!(sel.atoms, vec![(p0, q0)]);
        for z in sel.f_rf.iter() {
            assert!((z.norm() - 0.25).abs() < 1e-9);
        }
        for z in sel.w_rf.iter() {
            assert!((z.norm() - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn narrowband_selection_uses_unscaled_dictionaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dict = Dictionary::new(8, 4, 12, 6).unwrap();
        let f_opt = vec![random(8, 2, &mut rng)];
        let w_opt = vec![random(4, 2, &mut rng)];
        let obj = selection_objective(&f_opt, &w_opt, &dict, &[1.0], 1).unwrap();
        for p in 0..12 {
            for q in 0..6 {
                let a = dict.d_f.column(p).dotc(&f_opt[0].column(1));
                let b = dict.d_w.column(q).dotc(&w_opt[0].column(1));
                assert!((obj[(p, q)] - (a.conj() * b).norm()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn repeated_transmit_atoms_are_excluded() {
        // two users with identical unconstrained beamformers
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let dict = Dictionary::new(8, 4, 16, 8).unwrap();
        let f = random(8, 1, &mut rng);
        let w = random(4, 1, &mut rng);
        let f_opt = vec![CMat::from_columns(&[f.column(0).into_owned(), f.column(0).into_owned()])];
        let w_opt = vec![CMat::from_columns(&[w.column(0).into_owned(), w.column(0).into_owned()])];
        let sel = omp_select(&f_opt, &w_opt, &dict, &[1.0]).unwrap();
        assert_ne!(sel.atoms[0].0, sel.atoms[1].0);
        assert_eq!(sel.atoms[0].1, sel.atoms[1].1);
    }

    #[test]
    fn effective_channel_matched_rank_one() {
        let cfg = los_config(16, 4, 1);
        let (phi, varphi) = (0.25, -0.5);
        let paths = los_paths(phi, varphi);
        let set = generate_channel(&cfg, &paths, false).unwrap();
        let f_rf = CMat::from_columns(&[steering_vector(16, varphi)]);
        let w_rf = CMat::from_columns(&[steering_vector(4, phi)]);
        let h_eff = effective_channel(&set, &w_rf, &f_rf).unwrap();
        let zeta = (64.0f64).sqrt();
        let p = &paths.users[0][0];
        let expected = p.alpha * zeta * C64::from_polar(1.0, -2.0 * std::f64::consts::PI * p.tau * set.freqs[0]);
        assert!((h_eff[0][(0, 0)] - expected).norm() < 1e-12);

        let zero = channel_set(vec![vec![CMat::zeros(4, 16)]], vec![1.0]);
        assert_eq!(effective_channel(&zero, &w_rf, &f_rf).unwrap()[0].norm(), 0.0);
    }

    #[test]
    fn effective_channel_matches_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h: Vec<Vec<CMat>> = (0..3).map(|_| (0..2).map(|_| random(4, 8, &mut rng)).collect()).collect();
        let set = channel_set(h, vec![0.99, 1.01]);
        let f_rf = random(8, 3, &mut rng);
        let w_rf = random(4, 3, &mut rng);
        let h_eff = effective_channel(&set, &w_rf, &f_rf).unwrap();
        for m in 0..2 {
            for k in 0..3 {
                for j in 0..3 {
                    let mut acc = C64::new(0.0, 0.0);
                    for r in 0..4 {
                        for t in 0..8 {
                            acc += w_rf[(r, k)].conj() * set.h[k][m][(r, t)] * f_rf[(t, j)];
                        }
                    }
                    assert!((h_eff[m][(k, j)] - acc).norm() < 1e-12);
                }
            }
        }
        assert!(effective_channel(&set, &random(3, 3, &mut rng), &f_rf).is_err());
    }

    #[test]
    fn zero_forcing_and_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f_rf = Dictionary::new(16, 4, 32, 8).unwrap().d_f.columns(3, 3).into_owned();
        let h_eff: Vec<CMat> = (0..4).map(|_| random(3, 3, &mut rng)).collect();
        for (m, h) in h_eff.iter().enumerate() {
            let raw = zf_unnormalized(h, m).unwrap();
            assert!((h * &raw - CMat::identity(3, 3)).norm() < 1e-10);
        }
        let f_bb = baseband_zf(&h_eff, &f_rf).unwrap();
        for (h, f) in h_eff.iter().zip(&f_bb) {
            assert!((frobenius_sq(&(&f_rf * f)) - 3.0).abs() < 1e-10);
            let prod = h * f;
            let c = prod[(0, 0)];
            assert!(c.re > 0.0 && c.im.abs() < 1e-10);
            assert!((prod - CMat::identity(3, 3) * c).norm() < 1e-10);
        }
    }

    #[test]
    fn scalar_zero_forcing() {
        let h = CMat::from_element(1, 1, C64::new(0.3, -0.4));
        let f_rf = CMat::from_columns(&[steering_vector(8, 0.1)]);
        let f_bb = baseband_zf(&[h.clone()], &f_rf).unwrap();
        // h^* / |h|^2 rescaled to unit modulus
        let expected = h[(0, 0)].conj() / h[(0, 0)].norm();
        assert!((f_bb[0][(0, 0)] - expected).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_effective_channel_is_reported() {
        let f_rf = Dictionary::new(8, 2, 8, 2).unwrap().d_f.columns(0, 2).into_owned();
        let h = CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 0.0), C64::new(4.0, 0.0)]);
        assert!(matches!(
            baseband_zf(&[CMat::identity(2, 2), h], &f_rf),
            Err(BsaError::RankDeficient { subcarrier: 1, .. })
        ));
    }

    #[test]
    fn design_respects_constraints() {
        let cfg = SystemConfig { num_subcarriers: 8, ..SystemConfig::default() };
        let paths = PathParams::draw(&cfg, &mut ChaCha8Rng::seed_from_u64(77));
        let set = generate_channel(&cfg, &paths, false).unwrap();
        let dict = build_dictionaries(&cfg).unwrap();
        let bf = design_hybrid(&cfg, &set, &dict).unwrap();
        assert_eq!(bf.f_rf.shape(), (cfg.n_t, cfg.n_rf));
        assert_eq!(bf.w_rf.shape(), (cfg.n_r, cfg.num_users));
        let total: f64 = bf.f_bb.iter().map(|f| frobenius_sq(&(&bf.f_rf * f))).sum();
        let target = (cfg.num_subcarriers * cfg.num_users) as f64;
        assert!((total - target).abs() / target < 1e-10);
        let again = design_hybrid(&cfg, &set, &dict).unwrap();
        assert_eq!(again.selected_atoms, bf.selected_atoms);
        assert!(spectral_norm(&bf.f_rf) > 0.0);
    }
}
