//! Discrete-cosine-transform analysis of flux-modulation sweeps: transform,
//! 20-dB truncation, 3-sample Blackman smoothing, peak extraction, and the
//! reconstruction check against the input.

use super::FluxSweepRecord;
use crate::error::{Error, Result};

use std::f64::consts::PI;

/// Orthonormal DCT-II of `x`.
pub fn dct_ii(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    (0..n)
        .map(|k| {
            let sum: f64 = x
                .iter()
                .enumerate()
                .map(|(j, &v)| v * (PI * k as f64 * (2 * j + 1) as f64 / (2.0 * n as f64)).cos())
                .sum();
            sum * if k == 0 { scale0 } else { scale }
        })
        .collect()
}

/// Orthonormal DCT-III, the exact inverse of [`dct_ii`].
pub fn dct_iii(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    let scale0 = (1.0 / n as f64).sqrt();
    let scale = (2.0 / n as f64).sqrt();
    (0..n)
        .map(|j| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let basis = (PI * k as f64 * (2 * j + 1) as f64 / (2.0 * n as f64)).cos();
                    c * basis * if k == 0 { scale0 } else { scale }
                })
                .sum()
        })
        .collect()
}

/// Normalized 3-sample smoothing kernel: the interior samples of a length-5
/// symmetric Blackman window (the length-3 window is degenerate [0, 1, 0]).
pub const BLACKMAN_3_KERNEL: [f64; 3] = [
    0.34 / 1.68, // 0.42 − 0.5·cos(π/2) + 0.08·cos(π)
    1.0 / 1.68,  // 0.42 − 0.5·cos(π)  + 0.08·cos(2π)
    0.34 / 1.68,
];

/// One retained spectral peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    /// Modulation frequency, cycles per unit bias.
    pub frequency: f64,
    /// Modulation period, bias units per cycle.
    pub period: f64,
    /// Magnitude of the (smoothed) coefficient, same units as the input.
    pub magnitude: f64,
}

/// Full output of the flux-modulation pipeline.
#[derive(Debug, Clone)]
pub struct FluxSpectrum {
    /// Frequency axis, cycles per unit bias: k/(2·N·Δ).
    pub frequencies: Vec<f64>,
    /// Raw transform magnitudes |X_k|.
    pub raw_magnitude: Vec<f64>,
    /// Spectrum after 20-dB truncation and Blackman smoothing (DC bin kept
    /// aside from both steps).
    pub processed: Vec<f64>,
    /// Peaks of the processed spectrum, strongest first.
    pub peaks: Vec<SpectralPeak>,
    /// Inverse transform of the processed spectrum.
    pub reconstruction: Vec<f64>,
    /// RMS of (reconstruction − input) over the RMS of the detrended input.
    pub reconstruction_rel_rms: f64,
    /// Bias grid actually transformed (resampled when needed).
    pub bias_grid: Vec<f64>,
    pub f0_grid: Vec<f64>,
}

/// Spacing ratio beyond which a bias grid is refused rather than resampled.
const RESAMPLE_LIMIT: f64 = 4.0;

fn resample_if_needed(record: &FluxSweepRecord) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut bias = record.bias_values.clone();
    let mut f0 = record.f0_values.clone();
    if bias[0] > *bias.last().unwrap() {
        bias.reverse();
        f0.reverse();
    }
    let spacings: Vec<f64> = bias.windows(2).map(|w| w[1] - w[0]).collect();
    let min_dx = spacings.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_dx = spacings.iter().cloned().fold(0.0, f64::max);
    if (max_dx - min_dx) <= 1e-9 * max_dx {
        return Ok((bias, f0));
    }
    if max_dx / min_dx > RESAMPLE_LIMIT {
        return Err(Error::NonUniformGrid(format!(
            "spacing ratio {:.2} exceeds the resampling limit {RESAMPLE_LIMIT}",
            max_dx / min_dx
        )));
    }
    // Linear resample onto a uniform grid with the same endpoint span.
    let n = bias.len();
    let lo = bias[0];
    let hi = *bias.last().unwrap();
    let uniform: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let mut resampled = Vec::with_capacity(n);
    let mut seg = 0usize;
    for &x in &uniform {
        while seg + 2 < bias.len() && bias[seg + 1] < x {
            seg += 1;
        }
        let (x0, x1) = (bias[seg], bias[seg + 1]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        resampled.push(f0[seg] * (1.0 - t) + f0[seg + 1] * t);
    }
    Ok((uniform, resampled))
}

/// Transform a flux sweep, retain components within 20 dB of the strongest
/// modulation peak, smooth with the 3-sample Blackman kernel, extract peaks,
/// and reconstruct for comparison with the input.
///
/// The DC coefficient (the mean resonant frequency) is never treated as a
/// modulation peak: it is excluded from the threshold and the smoothing and
/// always kept for the reconstruction.
pub fn flux_modulation_spectrum(record: &FluxSweepRecord) -> Result<FluxSpectrum> {
    let (bias, f0) = resample_if_needed(record)?;
    let n = bias.len();
    let dx = (bias[n - 1] - bias[0]) / (n - 1) as f64;

    let coeffs = dct_ii(&f0);
    let raw_magnitude: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
    let frequencies: Vec<f64> = (0..n).map(|k| k as f64 / (2.0 * n as f64 * dx)).collect();

    // Truncate 20 dB below the tallest non-DC component, with an absolute
    // significance floor so a flat sweep yields no peaks.
    let peak_max = raw_magnitude[1..].iter().cloned().fold(0.0, f64::max);
    let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let threshold = (peak_max * 0.1).max(1e-9 * norm);
    let mut truncated: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| if k > 0 && c.abs() >= threshold { c } else { 0.0 })
        .collect();

    // Smooth the modulation part; restore the mean level afterwards.
    let mut processed = vec![0.0; n];
    for k in 1..n {
        let mut acc = 0.0;
        for (o, w) in BLACKMAN_3_KERNEL.iter().enumerate() {
            let j = k as isize + o as isize - 1;
            if j >= 1 && (j as usize) < n {
                acc += w * truncated[j as usize];
            }
        }
        processed[k] = acc;
    }
    truncated[0] = coeffs[0];
    processed[0] = coeffs[0];

    // Peaks: local maxima of the processed magnitude above threshold.
    let mut peaks: Vec<SpectralPeak> = Vec::new();
    for k in 1..n {
        let mag = processed[k].abs();
        if mag < threshold * BLACKMAN_3_KERNEL[1] {
            continue;
        }
        let left = if k > 1 { processed[k - 1].abs() } else { 0.0 };
        let right = if k + 1 < n { processed[k + 1].abs() } else { 0.0 };
        if mag >= left && mag > right {
            peaks.push(SpectralPeak {
                frequency: frequencies[k],
                period: 1.0 / frequencies[k],
                magnitude: mag,
            });
        }
    }
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));

    let reconstruction = dct_iii(&processed);
    let mean = f0.iter().sum::<f64>() / n as f64;
    let err_rms = (f0
        .iter()
        .zip(&reconstruction)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let detrended_rms = (f0.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
    let reconstruction_rel_rms = if detrended_rms > 0.0 {
        err_rms / detrended_rms
    } else {
        0.0
    };

    Ok(FluxSpectrum {
        frequencies,
        raw_magnitude,
        processed,
        peaks,
        reconstruction,
        reconstruction_rel_rms,
        bias_grid: bias,
        f0_grid: f0,
    })
}
