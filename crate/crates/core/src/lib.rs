//! Fisher information bounds and blind moment-based estimators for
//! transmitter IQ imbalance in OFDM systems.
//!
//! The crate is organised bottom-up: [`waveform`] builds OFDM frames,
//! [`channel`] and [`impairment`] distort them, [`covariance`] describes the
//! resulting second-order statistics, [`crlb`] turns those into bounds on the
//! image-rejection coefficient, [`estimators`] implements the blind estimators
//! and [`montecarlo`] ties everything together into reproducible sweeps.

pub mod channel;
pub mod covariance;
pub mod crlb;
pub mod dft;
pub mod error;
pub mod estimators;
pub mod impairment;
pub mod montecarlo;
pub mod waveform;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Converts a linear power ratio to decibels, clamping zero to [`DB_FLOOR`].
pub fn to_db(x: f64) -> f64 {
    if x <= 0.0 {
        DB_FLOOR
    } else {
        (10.0 * x.log10()).max(DB_FLOOR)
    }
}

/// Converts decibels to a linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Value reported in place of minus infinity decibels.
pub const DB_FLOOR: f64 = -300.0;
