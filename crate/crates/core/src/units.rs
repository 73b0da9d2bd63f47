//! Unit conversions used at configuration and output boundaries.

/// Number of ml/min in one m³/s.
pub const ML_PER_MIN_PER_M3_PER_S: f64 = 6.0e7;

/// Standard gravity used for rotor weight.
pub const GRAVITY: f64 = 9.81;

#[inline]
pub fn ml_min_to_m3_s(q: f64) -> f64 {
    q / ML_PER_MIN_PER_M3_PER_S
}

#[inline]
pub fn m3_s_to_ml_min(q: f64) -> f64 {
    q * ML_PER_MIN_PER_M3_PER_S
}

#[inline]
pub fn hz_to_rad_s(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f
}

#[inline]
pub fn rad_s_to_hz(w: f64) -> f64 {
    w / (2.0 * std::f64::consts::PI)
}
