//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// β = L_s/L_J ≥ 1: the DC flux relation admits multiple branches and the
    /// solver refuses to pick one.
    #[error("beta = {beta:.6} >= 1: DC solution may be hysteretic, refusing to pick a branch")]
    BetaHysteretic { beta: f64 },

    /// The bias point has non-positive mode stiffness (1/L_s + cos(Δφ/N)/L_J ≤ 0).
    #[error("negative mode stiffness at per-SQUID phase {delta_per_squid:.6} rad")]
    NegativeStiffness { delta_per_squid: f64 },

    #[error("invalid circuit parameter {name}: {value} (must be {requirement})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    /// A drive tone does not sit on the commensurate base-frequency grid.
    #[error("tone at {frequency_hz} Hz is not an integer multiple of base {base_hz} Hz")]
    IncommensurateDrive { frequency_hz: f64, base_hz: f64 },

    #[error("invalid drive: {0}")]
    InvalidDrive(String),

    /// Steady state not reached within the period budget.
    #[error("no convergence after {periods} common periods (residual {residual:.3e})")]
    NoConvergence { periods: u64, residual: f64 },

    /// The trajectory left the physically meaningful range (NaN/overflow or
    /// runaway phase) — typically a pump far past the instability.
    #[error("trajectory diverged at t = {time_s:.3e} s (|phi| = {phi_abs:.3e} rad)")]
    DivergedTrajectory { time_s: f64, phi_abs: f64 },

    /// Pump tune-up topped out below the requested gain.
    #[error("max gain {max_gain_db:.2} dB below target {target_db:.2} dB")]
    MaxGainBelowTarget { max_gain_db: f64, target_db: f64 },

    /// Saturation sweep never compressed by 1 dB.
    #[error("no 1 dB compression up to {max_power_dbm:.1} dBm")]
    NoCompressionInRange { max_power_dbm: f64 },

    /// Evaluation frequency falls inside the guard band around a zero of
    /// X(ω) + X_L(ω), where the phase-coupling efficiency diverges.
    #[error("frequency {omega:.6e} rad/s within guard band of reactance pole at {pole:.6e} rad/s")]
    NearPole { omega: f64, pole: f64 },

    #[error("reflection fit diverged: {reason} (residual {residual:.3e})")]
    FitDiverged { reason: String, residual: f64 },

    #[error("bias grid too non-uniform to resample: {0}")]
    NonUniformGrid(String),

    #[error("power-law fit exponent {exponent:.3} outside [{lo:.2}, {hi:.2}]")]
    BadFit { exponent: f64, lo: f64, hi: f64 },

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}
