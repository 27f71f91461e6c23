//! Simulation and design-space exploration for rf-SQUID array Josephson
//! parametric amplifiers.
//!
//! The device model is a single nonlinear mode — an array of N rf SQUIDs
//! resonated by a capacitor and coupled to a resistive environment — whose
//! un-truncated classical equation of motion is integrated in the time domain
//! to a periodic steady state. On top of that sit amplifier figures of merit
//! (gain, bandwidth, 1-dB compression, pump efficiencies), grid sweeps over
//! the (L_s, Q) design space, pump phase-coupling efficiency for reactive
//! couplers, and the data-reduction utilities used to characterize real
//! devices (one-port reflection fits, flux-modulation spectra, photon-number
//! power calibration).

pub mod analysis;
pub mod circuit;
pub mod coupling;
pub mod design_space;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod units;

pub use error::{Error, Result};
