//! Decibel conversions for the configuration and report boundaries.
//!
//! Everything inside the library is linear SI. These helpers are the only
//! place dB and dBm appear.

/// 10^(db/10).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// 10 log10(x).
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// dBm referenced to 1 mW, result in watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * db_to_linear(dbm)
}

/// Watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w / 1e-3)
}
