//! Qubit-as-power-meter calibration: the AC-Stark shift counts readout
//! photons, and the steady-state cavity input power follows from the photon
//! number, the resonator frequency, and its linewidth.

use crate::error::{Error, Result};
use crate::units::{watts_to_dbm, HBAR};

use std::f64::consts::TAU;

/// Independently measured qubit/readout parameters.
#[derive(Debug, Clone, Copy)]
pub struct StarkCalibration {
    /// 2χ: readout-resonator shift between qubit states, Hz.
    pub two_chi_hz: f64,
    /// Readout resonator linewidth κ, Hz.
    pub kappa_hz: f64,
    pub readout_frequency_hz: f64,
}

impl StarkCalibration {
    pub fn new(two_chi_hz: f64, kappa_hz: f64, readout_frequency_hz: f64) -> Result<Self> {
        for (name, v) in [
            ("two_chi_hz", two_chi_hz),
            ("kappa_hz", kappa_hz),
            ("readout_frequency_hz", readout_frequency_hz),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name: match name {
                        "two_chi_hz" => "two_chi_hz",
                        "kappa_hz" => "kappa_hz",
                        _ => "readout_frequency_hz",
                    },
                    value: v,
                    requirement: "finite and > 0",
                });
            }
        }
        Ok(Self {
            two_chi_hz,
            kappa_hz,
            readout_frequency_hz,
        })
    }

    /// The dimensionless dispersive figure 2χ/κ.
    pub fn two_chi_over_kappa(&self) -> f64 {
        self.two_chi_hz / self.kappa_hz
    }

    /// Steady-state input power for n̄ photons driven on resonance:
    /// P = n̄·ħω·κ/4 with κ in rad/s.
    pub fn photon_power_watts(&self, n_bar: f64) -> f64 {
        n_bar * HBAR * TAU * self.readout_frequency_hz * (TAU * self.kappa_hz) / 4.0
    }
}

/// Mean photon number from a measured qubit Stark shift: n̄ = |shift|/2χ.
pub fn photons_from_stark(cal: &StarkCalibration, qubit_shift_hz: f64) -> f64 {
    qubit_shift_hz.abs() / cal.two_chi_hz
}

/// The fitted drive-voltage → power mapping.
#[derive(Debug, Clone, Copy)]
pub struct DriveCalibration {
    /// Log-log slope of n̄ vs drive voltage; 2 for a linear chain.
    pub exponent: f64,
    /// n̄ per V²: n̄(V) = photons_per_v2 · V².
    pub photons_per_v2: f64,
    /// Input power per V², W: P(V) = watts_per_v2 · V².
    pub watts_per_v2: f64,
    pub cal: StarkCalibration,
}

impl DriveCalibration {
    pub fn input_power_watts(&self, v_dac: f64) -> f64 {
        self.watts_per_v2 * v_dac * v_dac
    }

    pub fn input_power_dbm(&self, v_dac: f64) -> f64 {
        watts_to_dbm(self.input_power_watts(v_dac))
    }
}

/// Acceptable exponent window; outside it the chain is not behaving
/// quadratically and the calibration is invalid.
pub const EXPONENT_WINDOW: (f64, f64) = (1.8, 2.2);

/// Fit n̄(V) = a·V^p on a log-log scale and convert the quadratic
/// coefficient into an absolute input-power mapping.
pub fn drive_power_calibration(
    points: &[(f64, f64)],
    cal: &StarkCalibration,
) -> Result<DriveCalibration> {
    if points.len() < 5 {
        return Err(Error::InvalidParameter {
            name: "points",
            value: points.len() as f64,
            requirement: "at least 5 (V, n̄) samples",
        });
    }
    if points.iter().any(|&(v, n)| !(v > 0.0) || !(n > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "points",
            value: f64::NAN,
            requirement: "strictly positive drive voltages and photon numbers",
        });
    }

    let logs: Vec<(f64, f64)> = points.iter().map(|&(v, n)| (v.ln(), n.ln())).collect();
    let n = logs.len() as f64;
    let xm = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - xm) * (p.0 - xm)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    let exponent = sxy / sxx;

    let (lo, hi) = EXPONENT_WINDOW;
    if !(lo..=hi).contains(&exponent) {
        return Err(Error::BadFit { exponent, lo, hi });
    }

    // Quadratic coefficient via least squares of n̄ on V² (using the fitted
    // exponent only as the linearity gate).
    let svv: f64 = points.iter().map(|&(v, _)| v.powi(4)).sum();
    let svn: f64 = points.iter().map(|&(v, nb)| v * v * nb).sum();
    let photons_per_v2 = svn / svv;
    let watts_per_v2 = cal.photon_power_watts(photons_per_v2);

    Ok(DriveCalibration {
        exponent,
        photons_per_v2,
        watts_per_v2,
        cal: *cal,
    })
}
