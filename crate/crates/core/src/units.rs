//! Unit conversions and physical constants.
//!
//! All internal computation is SI (henries, farads, ohms, radians, seconds,
//! watts). Conversions to the I/O units (pH, pF, GHz, dBm) live here so the
//! constants appear exactly once.

/// Magnetic flux quantum, Wb.
pub const PHI0: f64 = 2.067_833_848e-15;

/// Reduced flux quantum Φ₀/2π, Wb/rad. Converts node phase to flux.
pub const PHI0_OVER_2PI: f64 = PHI0 / std::f64::consts::TAU;

pub const PICO: f64 = 1e-12;
pub const GIGA: f64 = 1e9;
pub const MEGA: f64 = 1e6;

pub fn ph_to_h(ph: f64) -> f64 {
    ph * PICO
}

pub fn h_to_ph(h: f64) -> f64 {
    h / PICO
}

pub fn pf_to_f(pf: f64) -> f64 {
    pf * PICO
}

pub fn f_to_pf(f: f64) -> f64 {
    f / PICO
}

pub fn ghz_to_hz(ghz: f64) -> f64 {
    ghz * GIGA
}

pub fn hz_to_ghz(hz: f64) -> f64 {
    hz / GIGA
}

/// Power in watts for a level in dBm (0 dBm = 1 mW).
pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

/// Power level in dBm for a power in watts. Zero maps to -inf.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / 1e-3).log10()
}

/// Dimensionless power ratio expressed in dB.
pub fn ratio_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Inverse of [`ratio_to_db`].
pub fn db_to_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}


/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
