//! Beam-split-aware baseband correction.
//!
//! A single analog precoder `F_RF` serves every subcarrier. The ideal
//! subcarrier-dependent precoder `F_RF[m]` is its phase-rescaled copy; the
//! BSA baseband `F~_BB[m]` is the least-squares fit
//! `argmin_X ||F_RF X - F_RF[m] F_BB[m]||_F = F_RF^+ F_RF[m] F_BB[m]`,
//! renormalized to power K. The fit is exact only when `F_RF` is square and
//! invertible (`N_RF = N_T`); otherwise the residual is the component of the
//! ideal precoder outside the column space of `F_RF`.

use rayon::prelude::*;

use crate::channel::ChannelSet;
use crate::error::{BsaError, Result};
use crate::linalg::lstsq_qr;
use crate::omp::{normalize_power, BeamformerSet};
use crate::phase::scale_analog_matrix;
use crate::CMat;

/// Virtual subcarrier-dependent analog precoder for frequency ratio `eta_m`.
pub fn sd_analog(f_rf: &CMat, eta_m: f64) -> Result<CMat> {
    scale_analog_matrix(f_rf, eta_m)
}

/// Unnormalized least-squares fit `F_RF^+ F_RF_sd F_BB`, solved through a
/// reduced QR factorization of `F_RF`.
pub fn bsa_least_squares(f_rf: &CMat, f_rf_sd: &CMat, f_bb: &CMat, subcarrier: usize) -> Result<CMat> {
    if f_rf.shape() != f_rf_sd.shape() || f_rf.ncols() != f_bb.nrows() {
        return Err(BsaError::Dimension(format!(
            "F_RF {:?}, F_RF[m] {:?}, F_BB {:?}",
            f_rf.shape(),
            f_rf_sd.shape(),
            f_bb.shape()
        )));
    }
    let target = f_rf_sd * f_bb;
    lstsq_qr(f_rf, &target, "analog precoder", subcarrier)
}

/// BSA baseband precoder for one subcarrier, normalized so that
/// `||F_RF F~_BB||_F^2 = K`.
pub fn bsa_baseband(f_rf: &CMat, f_bb: &CMat, eta_m: f64, subcarrier: usize) -> Result<CMat> {
    let f_rf_sd = sd_analog(f_rf, eta_m)?;
    let raw = bsa_least_squares(f_rf, &f_rf_sd, f_bb, subcarrier)?;
    normalize_power(f_rf, raw)
}

/// Fills `f_bb_bsa` for every subcarrier of `channels`, fitting against the
/// plain basebands `bf.f_bb`.
pub fn apply_bsa(channels: &ChannelSet, bf: &BeamformerSet) -> Result<BeamformerSet> {
    apply_bsa_with(channels, bf, &bf.f_bb)
}

/// Fills `f_bb_bsa`, fitting `F_RF X` against `F_RF[m] reference[m]`.
pub fn apply_bsa_with(channels: &ChannelSet, bf: &BeamformerSet, reference: &[CMat]) -> Result<BeamformerSet> {
    if reference.len() != channels.num_subcarriers() {
        return Err(BsaError::Dimension(format!(
            "{} baseband precoders for {} subcarriers",
            reference.len(),
            channels.num_subcarriers()
        )));
    }
    let f_bb_bsa = reference
        .par_iter()
        .zip(channels.eta.par_iter())
        .enumerate()
        .map(|(m, (f_bb, &eta))| bsa_baseband(&bf.f_rf, f_bb, eta, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(BeamformerSet {
        f_bb_bsa: Some(f_bb_bsa),
        ..bf.clone()
    })
}
