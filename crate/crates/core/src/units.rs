//! Unit conversions. All library computation is done in atomic units;
//! conversion to SI happens only at output boundaries.

/// One atomic unit of time in seconds.
pub const ATOMIC_TIME_S: f64 = 2.418884326e-17;

/// One atomic unit of electric field in volts per centimeter.
pub const ATOMIC_FIELD_V_PER_CM: f64 = 5.142206747e9;

/// Convert a time from atomic units to seconds.
pub fn time_to_seconds(t_au: f64) -> f64 {
    t_au * ATOMIC_TIME_S
}

/// Convert an electric field from atomic units to V/cm.
pub fn field_to_v_per_cm(f_au: f64) -> f64 {
    f_au * ATOMIC_FIELD_V_PER_CM
}

/// Convert an electric field from V/cm to atomic units.
pub fn field_from_v_per_cm(f_vcm: f64) -> f64 {
    f_vcm / ATOMIC_FIELD_V_PER_CM
}
