//! Data-reduction procedures for device characterization: one-port reflection
//! fitting, flux-modulation spectral analysis, and qubit-as-power-meter
//! calibration arithmetic.

mod dct;
mod reflection;
mod stark;

pub use dct::{
    dct_ii, dct_iii, flux_modulation_spectrum, FluxSpectrum, SpectralPeak, BLACKMAN_3_KERNEL,
};
pub use reflection::{fit_reflection, ReflectionFit};
pub use stark::{drive_power_calibration, photons_from_stark, DriveCalibration, StarkCalibration};

use crate::error::{Error, Result};

/// A fitted resonance-vs-bias sweep.
#[derive(Debug, Clone)]
pub struct FluxSweepRecord {
    /// Bias axis (amperes or DAC units), strictly monotone.
    pub bias_values: Vec<f64>,
    /// Fitted resonant frequencies, Hz.
    pub f0_values: Vec<f64>,
    /// Optional fitted quality factors.
    pub q_values: Option<Vec<f64>>,
}

impl FluxSweepRecord {
    pub fn new(bias_values: Vec<f64>, f0_values: Vec<f64>, q_values: Option<Vec<f64>>) -> Result<Self> {
        if bias_values.len() != f0_values.len() {
            return Err(Error::NonUniformGrid(format!(
                "bias and f0 lengths differ: {} vs {}",
                bias_values.len(),
                f0_values.len()
            )));
        }
        if let Some(q) = &q_values {
            if q.len() != bias_values.len() {
                return Err(Error::NonUniformGrid(
                    "q_values length differs from bias axis".into(),
                ));
            }
        }
        let increasing = bias_values.windows(2).all(|w| w[1] > w[0]);
        let decreasing = bias_values.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) || bias_values.len() < 2 {
            return Err(Error::NonUniformGrid(
                "bias axis must be strictly monotone".into(),
            ));
        }
        Ok(Self {
            bias_values,
            f0_values,
            q_values,
        })
    }
}
