//! Amplifier figures of merit built on steady-state runs: pump tune-up to a
//! target gain, gain-vs-frequency curves with bandwidth, 1-dB compression
//! sweeps, and pump power-added efficiency.

use rayon::prelude::*;

use crate::circuit::{CircuitParams, FluxBias};
use crate::dynamics::{
    amplitude_for_power_dbm, integrate_to_steady_state, make_two_tone, DriveSpec, SolverOptions,
    SteadyStateSolution,
};
use crate::error::{Error, Result};
use crate::units::{db_to_ratio, dbm_to_watts, ratio_to_db};

use std::f64::consts::TAU;

/// Weak-probe configuration shared by every tuned measurement.
#[derive(Debug, Clone)]
pub struct ProbeSettings {
    /// Probe power, dBm. Weak by default so the probe itself stays linear.
    pub power_dbm: f64,
    /// Probe offset from ω_p/2, Hz. Must sit on the base grid.
    pub detuning_hz: f64,
    /// Base (grid) frequency, Hz; the common period is its inverse.
    pub base_frequency_hz: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            power_dbm: -140.0,
            detuning_hz: 1e6,
            base_frequency_hz: 1e6,
        }
    }
}

/// A pump operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec {
    pub frequency_hz: f64,
    pub power_dbm: f64,
}

/// Tune-up search controls.
#[derive(Debug, Clone)]
pub struct TuneSettings {
    pub probe: ProbeSettings,
    /// Pump frequency, Hz. `None` selects 2ω₀(bias) snapped onto an even
    /// multiple of the base so that ω_p/2 stays on the grid.
    pub pump_frequency_hz: Option<f64>,
    /// First pump power tried in the coarse upward sweep, dBm.
    pub start_power_dbm: f64,
    /// Coarse sweep step, dB.
    pub coarse_step_db: f64,
    /// Hard cap on pump power, dBm.
    pub max_pump_dbm: f64,
    /// Accept gains within ± this of the target, dB.
    pub gain_tolerance_db: f64,
    pub max_bisections: u32,
    pub solver: SolverOptions,
}

impl Default for TuneSettings {
    fn default() -> Self {
        Self {
            probe: ProbeSettings::default(),
            pump_frequency_hz: None,
            start_power_dbm: -80.0,
            coarse_step_db: 3.0,
            max_pump_dbm: -30.0,
            gain_tolerance_db: 0.05,
            max_bisections: 60,
            solver: SolverOptions::default(),
        }
    }
}

/// Outcome of one pump power probe during tune-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneSample {
    pub pump_power_dbm: f64,
    /// Gain at the probe, dB; `None` when the run diverged or never settled.
    pub gain_db: Option<f64>,
}

/// A successful tune-up.
#[derive(Debug, Clone)]
pub struct TuneResult {
    pub pump_power_dbm: f64,
    pub achieved_gain_db: f64,
    pub pump_frequency_hz: f64,
    pub probe_frequency_hz: f64,
    /// Every pump power tried, in evaluation order.
    pub samples: Vec<TuneSample>,
}

/// Snap a pump frequency onto an even multiple of the base grid so both the
/// pump and ω_p/2 are representable.
pub fn snap_pump_frequency(pump_f: f64, base_f: f64) -> f64 {
    2.0 * (pump_f / (2.0 * base_f)).round() * base_f
}

/// Run one two-tone steady state and report the probe gain.
fn gain_at(
    params: &CircuitParams,
    bias: &FluxBias,
    pump_f: f64,
    pump_dbm: f64,
    probe: &ProbeSettings,
    solver: &SolverOptions,
) -> Result<(f64, SteadyStateSolution)> {
    let drive = tuned_drive(params, pump_f, pump_dbm, probe)?;
    let sol = integrate_to_steady_state(params, bias, &drive, solver)?;
    let signal_index = drive.probes().next().expect("probe tone").index;
    let gain = sol
        .reflection_gain_db(signal_index)
        .expect("probe harmonic tracked");
    Ok((gain, sol))
}

/// Build the standard pump + weak probe drive at explicit powers.
pub fn tuned_drive(
    params: &CircuitParams,
    pump_f: f64,
    pump_dbm: f64,
    probe: &ProbeSettings,
) -> Result<DriveSpec> {
    let base = probe.base_frequency_hz;
    let probe_f = pump_f / 2.0 + probe.detuning_hz;
    let pump_amp = if pump_dbm == f64::NEG_INFINITY {
        0.0
    } else {
        amplitude_for_power_dbm(pump_dbm, TAU * pump_f, params.r_env)
    };
    let probe_amp = amplitude_for_power_dbm(probe.power_dbm, TAU * probe_f, params.r_env);
    make_two_tone(pump_f, probe.detuning_hz, base, pump_amp, probe_amp)
}

fn is_unstable(err: &Error) -> bool {
    matches!(
        err,
        Error::NoConvergence { .. } | Error::DivergedTrajectory { .. }
    )
}

/// Find the lowest pump power reaching `target_gain_db` ± tolerance.
///
/// A coarse multiplicative sweep walks the pump up from `start_power_dbm`
/// until the gain crosses the target, turns over, or the run destabilizes;
/// bisection then resolves the first rising crossing. Runs that fail to
/// settle are treated as upper brackets, so the search lands on the
/// low-power branch of the gain contour.
pub fn tune_pump(
    params: &CircuitParams,
    bias: &FluxBias,
    target_gain_db: f64,
    settings: &TuneSettings,
) -> Result<TuneResult> {
    let base = settings.probe.base_frequency_hz;
    let pump_f = snap_pump_frequency(
        settings.pump_frequency_hz.unwrap_or(2.0 * bias.f0_hz()),
        base,
    );
    let probe_f = pump_f / 2.0 + settings.probe.detuning_hz;
    let mut solver = settings.solver.clone();
    solver.target_gain_hint_db = target_gain_db.max(solver.target_gain_hint_db);

    if target_gain_db <= 0.0 {
        // Unity gain needs no pump at all.
        return Ok(TuneResult {
            pump_power_dbm: f64::NEG_INFINITY,
            achieved_gain_db: 0.0,
            pump_frequency_hz: pump_f,
            probe_frequency_hz: probe_f,
            samples: Vec::new(),
        });
    }

    let mut samples = Vec::new();
    let mut max_converged_gain = f64::NEG_INFINITY;
    let run = |power_dbm: f64,
                   samples: &mut Vec<TuneSample>,
                   max_gain: &mut f64|
     -> Result<Option<f64>> {
        match gain_at(params, bias, pump_f, power_dbm, &settings.probe, &solver) {
            Ok((gain, _)) => {
                samples.push(TuneSample {
                    pump_power_dbm: power_dbm,
                    gain_db: Some(gain),
                });
                if gain > *max_gain {
                    *max_gain = gain;
                }
                Ok(Some(gain))
            }
            Err(err) if is_unstable(&err) => {
                samples.push(TuneSample {
                    pump_power_dbm: power_dbm,
                    gain_db: None,
                });
                Ok(None)
            }
            Err(err) => Err(err),
        }
    };

    // Coarse upward sweep, looking for a bracket:
    // lo converged below target, hi at/above target or unstable.
    let mut lo: Option<f64> = None;
    let hi: Option<f64>;
    let mut power = settings.start_power_dbm;
    let mut previous_gain = f64::NEG_INFINITY;
    let mut declines = 0u32;
    loop {
        if power > settings.max_pump_dbm {
            return Err(Error::MaxGainBelowTarget {
                max_gain_db: max_converged_gain,
                target_db: target_gain_db,
            });
        }
        match run(power, &mut samples, &mut max_converged_gain)? {
            Some(gain) if gain >= target_gain_db => {
                if lo.is_none() {
                    // Already above target at the first sample: walk down.
                    let mut down = power;
                    loop {
                        down -= settings.coarse_step_db;
                        if down < -160.0 {
                            return Err(Error::InvalidParameter {
                                name: "start_power_dbm",
                                value: settings.start_power_dbm,
                                requirement: "a pump window containing sub-target gain",
                            });
                        }
                        if let Some(g) = run(down, &mut samples, &mut max_converged_gain)? {
                            if g < target_gain_db {
                                lo = Some(down);
                                break;
                            }
                        }
                    }
                }
                hi = Some(power);
                break;
            }
            Some(gain) => {
                if gain < previous_gain - 0.1 {
                    declines += 1;
                    if declines >= 2 {
                        // Turnover well below target: past the usable branch.
                        hi = Some(power);
                        break;
                    }
                } else {
                    declines = 0;
                }
                previous_gain = gain;
                lo = Some(power);
            }
            None => {
                hi = Some(power);
                break;
            }
        }
        power += settings.coarse_step_db;
    }

    let mut lo = match lo {
        Some(p) => p,
        // Unstable from the very first power: nothing usable below it.
        None => {
            return Err(Error::MaxGainBelowTarget {
                max_gain_db: max_converged_gain,
                target_db: target_gain_db,
            })
        }
    };
    let mut hi = hi.expect("coarse sweep sets hi");

    // Bisection on the first rising crossing.
    for _ in 0..settings.max_bisections {
        let mid = 0.5 * (lo + hi);
        match run(mid, &mut samples, &mut max_converged_gain)? {
            Some(gain) if (gain - target_gain_db).abs() <= settings.gain_tolerance_db => {
                return Ok(TuneResult {
                    pump_power_dbm: mid,
                    achieved_gain_db: gain,
                    pump_frequency_hz: pump_f,
                    probe_frequency_hz: probe_f,
                    samples,
                });
            }
            Some(gain) if gain < target_gain_db => lo = mid,
            _ => hi = mid,
        }
        if hi - lo < 1e-9 {
            break;
        }
    }

    // The bracket collapsed without touching the target: the gain jumps from
    // below target straight into instability, i.e. the target is unreachable
    // on the stable branch.
    Err(Error::MaxGainBelowTarget {
        max_gain_db: max_converged_gain,
        target_db: target_gain_db,
    })
}

/// Gain versus probe frequency at a fixed pump.
#[derive(Debug, Clone)]
pub struct GainCurve {
    pub pump: PumpSpec,
    /// (probe frequency Hz, gain dB), sorted by frequency.
    pub points: Vec<(f64, f64)>,
    pub peak_gain_db: f64,
    /// −3 dB full width, Hz; `None` when a crossing falls outside the grid.
    pub bandwidth_3db_hz: Option<f64>,
    /// √(linear peak gain) · bandwidth, Hz.
    pub gbw_hz: Option<f64>,
}

/// Sweep the probe across `detuning_grid` (Hz offsets from ω_p/2) at a fixed
/// pump. Grid points run concurrently; divergent points are errors here
/// because a tuned pump must stay stable across its band.
pub fn gain_curve(
    params: &CircuitParams,
    bias: &FluxBias,
    pump: PumpSpec,
    detuning_grid: &[f64],
    probe: &ProbeSettings,
    solver: &SolverOptions,
) -> Result<GainCurve> {
    let mut points: Vec<(f64, f64)> = detuning_grid
        .par_iter()
        .map(|&det| {
            let p = ProbeSettings {
                detuning_hz: det,
                ..probe.clone()
            };
            let (gain, _) = gain_at(params, bias, pump.frequency_hz, pump.power_dbm, &p, solver)?;
            Ok((pump.frequency_hz / 2.0 + det, gain))
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (peak_idx, &(_, peak_gain_db)) = points
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .ok_or_else(|| Error::InvalidDrive("empty detuning grid".into()))?;

    let half_level = peak_gain_db - 3.0;
    let crossing =
        |a: (f64, f64), b: (f64, f64)| a.0 + (half_level - a.1) * (b.0 - a.0) / (b.1 - a.1);
    let left = points[..=peak_idx]
        .windows(2)
        .rev()
        .find(|w| w[0].1 < half_level && w[1].1 >= half_level)
        .map(|w| crossing(w[0], w[1]));
    let right = points[peak_idx..]
        .windows(2)
        .find(|w| w[0].1 >= half_level && w[1].1 < half_level)
        .map(|w| crossing(w[1], w[0]));
    let bandwidth_3db_hz = match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    };
    let gbw_hz = bandwidth_3db_hz.map(|b| db_to_ratio(peak_gain_db).sqrt() * b);

    Ok(GainCurve {
        pump,
        points,
        peak_gain_db,
        bandwidth_3db_hz,
        gbw_hz,
    })
}

/// One point of an input-power sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationPoint {
    pub input_power_dbm: f64,
    /// `None` when the run destabilized at this drive strength.
    pub gain_db: Option<f64>,
}

/// Result of a 1-dB compression sweep.
#[derive(Debug, Clone)]
pub struct SaturationResult {
    pub input_p1db_dbm: f64,
    pub output_p1db_dbm: f64,
    pub small_signal_gain_db: f64,
    pub sweep: Vec<SaturationPoint>,
}

/// Evenly spaced input powers for compression sweeps, dBm.
pub fn power_grid(start_dbm: f64, stop_dbm: f64, step_db: f64) -> Vec<f64> {
    let n = ((stop_dbm - start_dbm) / step_db).round() as usize;
    (0..=n).map(|i| start_dbm + i as f64 * step_db).collect()
}

/// Sweep probe input power at a fixed, pre-tuned pump and locate the input
/// power where the gain has compressed 1 dB below its small-signal value.
///
/// The small-signal gain is the gain at the lowest sweep power; the 1-dB
/// point is linearly interpolated at the first downward crossing, and the
/// output-referred point follows as input + gain − 1 dB.
pub fn saturation_sweep(
    params: &CircuitParams,
    bias: &FluxBias,
    pump: PumpSpec,
    probe: &ProbeSettings,
    input_powers_dbm: &[f64],
    solver: &SolverOptions,
) -> Result<SaturationResult> {
    if input_powers_dbm.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "input_powers_dbm",
            value: input_powers_dbm.len() as f64,
            requirement: "at least two sweep powers",
        });
    }
    let mut powers = input_powers_dbm.to_vec();
    powers.sort_by(f64::total_cmp);

    let sweep: Vec<SaturationPoint> = powers
        .par_iter()
        .map(|&p_dbm| {
            let probe_at = ProbeSettings {
                power_dbm: p_dbm,
                ..probe.clone()
            };
            match gain_at(
                params,
                bias,
                pump.frequency_hz,
                pump.power_dbm,
                &probe_at,
                solver,
            ) {
                Ok((gain, _)) => Ok(SaturationPoint {
                    input_power_dbm: p_dbm,
                    gain_db: Some(gain),
                }),
                Err(err) if is_unstable(&err) => Ok(SaturationPoint {
                    input_power_dbm: p_dbm,
                    gain_db: None,
                }),
                Err(err) => Err(err),
            }
        })
        .collect::<Result<_>>()?;

    let small_signal_gain_db = sweep[0].gain_db.ok_or(Error::NoConvergence {
        periods: 0,
        residual: f64::NAN,
    })?;
    let threshold = small_signal_gain_db - 1.0;

    let mut input_p1db = None;
    for w in sweep.windows(2) {
        match (w[0].gain_db, w[1].gain_db) {
            (Some(g0), Some(g1)) if g0 > threshold && g1 <= threshold => {
                let a = w[0].input_power_dbm;
                let b = w[1].input_power_dbm;
                input_p1db = Some(a + (threshold - g0) * (b - a) / (g1 - g0));
                break;
            }
            (_, None) => break, // destabilized before compressing
            _ => {}
        }
    }
    let input_p1db_dbm = input_p1db.ok_or(Error::NoCompressionInRange {
        max_power_dbm: *powers.last().unwrap(),
    })?;

    Ok(SaturationResult {
        input_p1db_dbm,
        output_p1db_dbm: input_p1db_dbm + small_signal_gain_db - 1.0,
        small_signal_gain_db,
        sweep,
    })
}

/// Pump power-added efficiency and its dB form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    pub linear: f64,
    pub db: f64,
}

impl Efficiency {
    pub fn from_linear(linear: f64) -> Self {
        Self {
            linear,
            db: ratio_to_db(linear),
        }
    }
}

/// η_PAE = (P_out,1dB − P_in,1dB)/P_pump, all in linear watts before the
/// ratio. Near saturation at ≥ 20 dB gain the subtracted input term is a
/// ≤ 1% correction.
pub fn pump_added_efficiency(sat: &SaturationResult, pump_power_dbm: f64) -> Efficiency {
    let p_out = dbm_to_watts(sat.output_p1db_dbm);
    let p_in = dbm_to_watts(sat.input_p1db_dbm);
    let p_pump = dbm_to_watts(pump_power_dbm);
    Efficiency::from_linear((p_out - p_in) / p_pump)
}
