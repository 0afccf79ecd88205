//! Small dense linear-algebra helpers on top of nalgebra.

use crate::error::{BsaError, Result};
use crate::{CMat, CVec, C64};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Moore-Penrose pseudo-inverse via SVD. Fails when the matrix is not of
/// full rank `min(rows, cols)`.
pub fn pinv_full_rank(a: &CMat, what: &'static str, subcarrier: usize) -> Result<CMat> {
    if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(BsaError::Numerical(format!("{what} has non-finite entries")));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 || svd.singular_values.iter().any(|&s| s <= RANK_TOLERANCE * smax) {
        return Err(BsaError::RankDeficient { what, subcarrier });
    }
    svd.pseudo_inverse(0.0)
        .map_err(|e| BsaError::Numerical(format!("{what}: {e}")))
}

/// Least-squares solution `X = A^+ B` of a tall full-column-rank `A` via a
/// reduced QR factorization: `R X = Q^H B`.
pub fn lstsq_qr(a: &CMat, b: &CMat, what: &'static str, subcarrier: usize) -> Result<CMat> {
    if a.nrows() != b.nrows() {
        return Err(BsaError::Dimension(format!(
            "least squares with {} x {} system and {} right-hand rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    if a.nrows() < a.ncols() {
        return Err(BsaError::RankDeficient { what, subcarrier });
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if diag_max == 0.0 || r.diagonal().iter().any(|z| z.norm() <= RANK_TOLERANCE * diag_max) {
        return Err(BsaError::RankDeficient { what, subcarrier });
    }
    let rhs = qr.q().adjoint() * b;
    r.solve_upper_triangular(&rhs)
        .ok_or(BsaError::RankDeficient { what, subcarrier })
}

/// Right singular vector of the largest singular value and that value.
/// The phase is fixed so the first entry that is not negligible is real
/// positive.
pub fn dominant_right_singular(h: &CMat) -> Result<(CVec, f64)> {
    if !h.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(BsaError::Numerical("SVD of non-finite matrix".into()));
    }
    let svd = h.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| BsaError::Numerical("SVD did not return V".into()))?;
    let (idx, &sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| BsaError::Numerical("empty SVD".into()))?;
    let v: CVec = v_t.row(idx).adjoint();
    Ok((fix_phase(v), sigma))
}

/// Rotates `v` so its first non-negligible entry is real positive.
pub fn fix_phase(v: CVec) -> CVec {
    let norm = v.norm();
    match v.iter().find(|z| z.norm() > 1e-9 * norm.max(f64::MIN_POSITIVE)) {
        Some(&z) => {
            let rot = z.conj() / z.norm();
            v * rot
        }
        None => v,
    }
}

/// Largest singular value.
pub fn spectral_norm(h: &CMat) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    h.singular_values().max()
}

pub fn frobenius_sq(a: &CMat) -> f64 {
    a.iter().map(C64::norm_sqr).sum()
}
