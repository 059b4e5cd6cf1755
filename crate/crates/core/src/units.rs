//! dB/dBm to linear conversions. Every unit crossing goes through here;
//! internal power is linear milliwatts and gains are linear ratios.

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

/// Milliwatts to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}

/// Thermal noise power in dBm over `bandwidth_hz` for a receiver with the
/// given noise figure.
pub fn noise_power_dbm(psd_dbm_hz: f64, bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    psd_dbm_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db
}
