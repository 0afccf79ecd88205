//! Beam-split-aware (BSA) hybrid beamforming for wideband THz multi-user
//! massive MIMO downlinks.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`] synthesizes the subcarrier grid, ULA steering vectors,
//!   the beam-split mapping and frequency-selective multipath channels.
//! * [`phase`] implements phase extraction / reconstruction and the
//!   frequency-ratio rescaling of constant-modulus beamformers.
//! * [`omp`] designs the subcarrier-independent analog beamformers by
//!   orthogonal matching pursuit over frequency-scaled dictionaries and the
//!   zero-forcing baseband precoders.
//! * [`bsa`] folds the beam split into the digital precoders by
//!   least-squares matching against the virtual subcarrier-dependent
//!   analog beamformer.
//! * [`metrics`] evaluates SINR, sum rate and constraint residuals.
//! * [`sim`] runs seeded Monte-Carlo trials and parameter sweeps.

pub mod bsa;
pub mod channel;
pub mod config;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod omp;
pub mod phase;
pub mod sim;

pub use config::{BsaReference, Profile, SinrConvention, SystemConfig};
pub use error::{BsaError, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dynamically sized complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dynamically sized complex column vector.
pub type CVec = nalgebra::DVector<C64>;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
