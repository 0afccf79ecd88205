//! Phase extraction and reconstruction for constant-modulus beamformers, and
//! the frequency-ratio rescaling that maps a subcarrier-independent
//! beamformer onto its subcarrier-dependent counterpart.
//!
//! For a steering vector `a(psi)` the unwrapped phases are exactly the linear
//! ramp `-pi (n-1) psi`, so multiplying them by `r` and reconstructing yields
//! `a(r psi)`. Unwrapping is sequential along the antenna index, anchored at
//! the first entry. It is exact for linear-phase vectors and a nearest-phase
//! heuristic otherwise.

use std::f64::consts::{PI, TAU};

use crate::error::{BsaError, Result};
use crate::{CMat, CVec, C64};

/// Relative modulus tolerance accepted by [`unwrap_phases`].
pub const MODULUS_TOLERANCE: f64 = 1e-6;

/// Steps within this distance of `+pi` are folded to `-pi`.
const TIE_WINDOW: f64 = 1e-12;

/// Unwrapped phases of a constant-modulus vector (radians).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(pub Vec<f64>);

impl PhaseVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Every phase multiplied by `ratio`.
    pub fn scaled(&self, ratio: f64) -> PhaseVector {
        PhaseVector(self.0.iter().map(|p| p * ratio).collect())
    }
}

fn check_constant_modulus(a: &[C64]) -> Result<()> {
    if a.is_empty() {
        return Ok(());
    }
    let moduli: Vec<f64> = a.iter().map(|z| z.norm()).collect();
    let mean = moduli.iter().sum::<f64>() / moduli.len() as f64;
    if mean == 0.0 {
        return Err(BsaError::ZeroVector);
    }
    let max_deviation = moduli
        .iter()
        .map(|m| (m - mean).abs() / mean)
        .fold(0.0, f64::max);
    if max_deviation > MODULUS_TOLERANCE || !max_deviation.is_finite() {
        return Err(BsaError::NotConstantModulus { max_deviation });
    }
    Ok(())
}

/// Unwraps the phases of `a`.
///
/// The first phase is `arg(a_1)` in `(-pi, pi]`; every later phase is
/// `arg(a_n) + 2 pi c_n` with the integer `c_n` picked so the step from the
/// previous phase lies in `[-pi, pi)`. An exact step of `+/- pi` resolves to
/// `-pi`, which makes `a(1)` unwrap to the ramp `-pi (n-1)`.
pub fn unwrap_phases(a: &[C64]) -> Result<PhaseVector> {
    check_constant_modulus(a)?;
    let mut out = Vec::with_capacity(a.len());
    let mut prev = 0.0;
    for (i, z) in a.iter().enumerate() {
        let arg = z.arg();
        let psi = if i == 0 {
            arg
        } else {
            let raw = arg - prev;
            let mut step = raw - TAU * ((raw + PI) / TAU).floor();
            if step >= PI - TIE_WINDOW {
                step -= TAU;
            }
            // re-anchor on the measured angle so rounding does not accumulate
            let wraps = ((prev + step - arg) / TAU).round();
            arg + TAU * wraps
        };
        out.push(psi);
        prev = psi;
    }
    Ok(PhaseVector(out))
}

/// Reconstructs the unit-norm vector with entries `exp(j psi_n) / sqrt(N)`.
///
/// This is the exact inverse of [`unwrap_phases`] on vectors whose entries
/// have modulus `1/sqrt(N)`.
pub fn from_phases(psi: &PhaseVector, n: usize) -> Result<CVec> {
    if psi.len() != n {
        return Err(BsaError::Dimension(format!(
            "phase vector has length {}, expected {n}",
            psi.len()
        )));
    }
    if psi.0.iter().any(|p| !p.is_finite()) {
        return Err(BsaError::Numerical("non-finite phase".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(CVec::from_iterator(
        n,
        psi.0.iter().map(|&p| C64::from_polar(scale, p)),
    ))
}

/// Multiplies the unwrapped phases of `f` by `ratio` and reconstructs at
/// modulus `1/sqrt(N)`: `scale_beamformer(a(psi), r) = a(r psi)`.
pub fn scale_beamformer(f: &CVec, ratio: f64) -> Result<CVec> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(BsaError::Numerical(format!("frequency ratio must be positive, got {ratio}")));
    }
    let psi = unwrap_phases(f.as_slice())?;
    from_phases(&psi.scaled(ratio), f.len())
}

/// Column-wise [`scale_beamformer`] of an analog beamforming matrix.
pub fn scale_analog_matrix(f_rf: &CMat, eta_m: f64) -> Result<CMat> {
    let columns = f_rf
        .column_iter()
        .map(|col| scale_beamformer(&col.into_owned(), eta_m))
        .collect::<Result<Vec<_>>>()?;
    if columns.is_empty() {
        return Ok(CMat::zeros(f_rf.nrows(), 0));
    }
    Ok(CMat::from_columns(&columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::steering_vector;
    use proptest::prelude::*;

    fn max_diff(a: &CVec, b: &CVec) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn unwrap_steering_vector_quarter_turns() {
        let psi = unwrap_phases(steering_vector(4, 0.5).as_slice()).unwrap();
        let expected = [0.0, -PI / 2.0, -PI, -1.5 * PI];
        for (p, e) in psi.0.iter().zip(expected) {
            assert!((p - e).abs() < 1e-14, "{p} vs {e}");
        }
    }

    #[test]
    fn unwrap_broadside_is_zero() {
        let psi = unwrap_phases(steering_vector(9, 0.0).as_slice()).unwrap();
        assert!(psi.0.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn unwrap_follows_linear_ramp_past_wrap() {
        let psi = unwrap_phases(steering_vector(8, 0.9).as_slice()).unwrap();
        for (n, p) in psi.0.iter().enumerate() {
            assert!((p + 0.9 * PI * n as f64).abs() < 1e-13);
        }
        // the naive principal angle wraps from the third entry on
        let naive = steering_vector(8, 0.9)[2].arg();
        assert!((naive + 1.8 * PI).abs() > 1.0);
    }

    #[test]
    fn boundary_direction_round_trips() {
        let a = steering_vector(16, 1.0);
        let psi = unwrap_phases(a.as_slice()).unwrap();
        for (n, p) in psi.0.iter().enumerate() {
            assert!((p + PI * n as f64).abs() < 1e-12);
        }
        assert!(max_diff(&from_phases(&psi, 16).unwrap(), &a) < 1e-12);
        let scaled = scale_beamformer(&a, 1.05).unwrap();
        assert!(max_diff(&scaled, &steering_vector(16, 1.05)) < 1e-12);
    }

    #[test]
    fn rejects_non_constant_modulus() {
        let mut a = steering_vector(4, 0.2);
        a[2] *= 1.5;
        match unwrap_phases(a.as_slice()) {
            Err(BsaError::NotConstantModulus { max_deviation }) => assert!(max_deviation > 0.2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            unwrap_phases(CVec::zeros(3).as_slice()),
            Err(BsaError::ZeroVector)
        ));
    }

    #[test]
    fn from_phases_examples() {
        let ones = from_phases(&PhaseVector(vec![0.0; 4]), 4).unwrap();
        assert!(ones.iter().all(|z| (z - C64::new(0.5, 0.0)).norm() < 1e-15));
        let psi = PhaseVector(vec![0.0, -PI / 2.0, -PI, -1.5 * PI]);
        assert!(max_diff(&from_phases(&psi, 4).unwrap(), &steering_vector(4, 0.5)) < 1e-15);
        let a = steering_vector(16, 0.3);
        let back = from_phases(&unwrap_phases(a.as_slice()).unwrap(), 16).unwrap();
        assert!(max_diff(&back, &a) < 1e-12);
        assert!(from_phases(&PhaseVector(vec![0.0; 3]), 4).is_err());
    }

    #[test]
    fn scale_examples() {
        let f = steering_vector(128, 0.8);
        assert!(max_diff(&scale_beamformer(&f, 1.0).unwrap(), &f) < 1e-13);
        let g = scale_beamformer(&f, 1.049609375).unwrap();
        assert!(max_diff(&g, &steering_vector(128, 0.8396875)) < 1e-12);
        let b = steering_vector(32, 0.0);
        assert!(max_diff(&scale_beamformer(&b, 1.3).unwrap(), &b) < 1e-15);
        assert!(scale_beamformer(&f, 0.0).is_err());
    }

    #[test]
    fn analog_matrix_scaling() {
        let dirs = [-0.7, 0.1, 0.55];
        let cols: Vec<CVec> = dirs.iter().map(|&d| steering_vector(32, d)).collect();
        let f_rf = CMat::from_columns(&cols);
        let same = scale_analog_matrix(&f_rf, 1.0).unwrap();
        assert!((&same - &f_rf).norm() < 1e-12);
        let scaled = scale_analog_matrix(&f_rf, 0.97).unwrap();
        for (j, &d) in dirs.iter().enumerate() {
            let col: CVec = scaled.column(j).into_owned();
            assert!(max_diff(&col, &steering_vector(32, 0.97 * d)) < 1e-12);
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        let broadside = CMat::from_columns(&[steering_vector(8, 0.0)]);
        for eta in [0.95, 1.0, 1.05] {
            assert!((scale_analog_matrix(&broadside, eta).unwrap() - &broadside).norm() < 1e-15);
        }
    }

    fn smooth_phase_vector(n: usize, coeffs: (f64, f64, f64)) -> CVec {
        // quadratic-plus-sinusoid phase with per-entry steps well below pi
        let scale = 1.0 / (n as f64).sqrt();
        CVec::from_iterator(
            n,
            (0..n).map(|i| {
                let x = i as f64;
                let phase = coeffs.0 + coeffs.1 * x + coeffs.2 * (0.3 * x).sin();
                C64::from_polar(scale, phase)
            }),
        )
    }

    proptest! {
        #[test]
        fn round_trip_on_linear_phase(n in 2usize..=256, psi in -1.0f64..=1.0) {
            let a = steering_vector(n, psi);
            let back = from_phases(&unwrap_phases(a.as_slice()).unwrap(), n).unwrap();
            prop_assert!(max_diff(&back, &a) < 1e-12);
        }

        #[test]
        fn round_trip_on_smooth_phase(n in 2usize..=128, c0 in -3.0f64..3.0, c1 in -2.0f64..2.0, c2 in -1.0f64..1.0) {
            let a = smooth_phase_vector(n, (c0, c1, c2));
            let back = from_phases(&unwrap_phases(a.as_slice()).unwrap(), n).unwrap();
            prop_assert!(max_diff(&back, &a) < 1e-12);
        }

        #[test]
        fn steering_commutes_with_scaling(n in 2usize..=256, psi in (-1.0f64..=1.0).prop_filter("a(-1) = a(1)", |p| *p != -1.0), r in 0.9f64..=1.1) {
            let lhs = scale_beamformer(&steering_vector(n, psi), r).unwrap();
            prop_assert!(max_diff(&lhs, &steering_vector(n, r * psi)) < 1e-12);
        }

        #[test]
        fn scaling_composes_on_linear_phase(n in 2usize..=128, psi in -0.9f64..=0.9, r1 in 0.9f64..1.1, r2 in 0.9f64..1.1) {
            let f = steering_vector(n, psi);
            let twice = scale_beamformer(&scale_beamformer(&f, r1).unwrap(), r2).unwrap();
            let once = scale_beamformer(&f, r1 * r2).unwrap();
            prop_assert!(max_diff(&twice, &once) < 1e-10);
        }

        #[test]
        fn matrix_scaling_preserves_column_norms(eta in 0.9f64..1.1, d0 in -1.0f64..1.0, d1 in -1.0f64..1.0) {
            let f_rf = CMat::from_columns(&[steering_vector(24, d0), steering_vector(24, d1)]);
            let out = scale_analog_matrix(&f_rf, eta).unwrap();
            for col in out.column_iter() {
                prop_assert!((col.norm() - 1.0).abs() < 1e-12);
                prop_assert!(col.iter().all(|z| (z.norm() - 1.0 / 24f64.sqrt()).abs() < 1e-12));
            }
        }
    }
}
