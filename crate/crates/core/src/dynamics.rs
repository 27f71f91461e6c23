//! Time-domain integration of the amplifier's un-truncated equation of motion
//! to a periodic steady state, with complex harmonic amplitudes extracted by
//! inner products over exact common periods of the drive.
//!
//! The model is the one-port node-phase equation
//!
//! ```text
//! φ̈ = −γ·φ̇ − ω₀²·φ − ω_J²·[sin((φ+Δφ)/N) − sin(Δφ/N) − (φ/N)·cos(Δφ/N)] + 2γ·φ̇_in
//! ```
//!
//! written about the solved DC point, so φ here is the AC part of the node
//! phase. The incoming wave enters as 2γ·∂_t φ_in and the outgoing wave is
//! φ_out = φ − φ_in; with no internal loss channel the port accounts for all
//! dissipation, which makes Σ_ω P(φ_out, ω) = Σ_ω P(φ_in, ω) in steady state.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use num_complex::Complex64;

use crate::circuit::{CircuitParams, FluxBias};
use crate::error::{Error, Result};
use crate::units::PHI0_OVER_2PI;

use std::f64::consts::TAU;

/// Role of a drive tone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToneRole {
    Pump,
    Probe,
}

/// One drive tone, snapped onto the commensurate frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Tone {
    /// Harmonic index: frequency = index · base_frequency.
    pub index: u64,
    /// Frequency in Hz (exactly index · base_frequency).
    pub frequency: f64,
    /// Incoming-wave phase amplitude, radians.
    pub amplitude: f64,
    /// Phase offset, radians: φ_in(t) += A·cos(ωt + phase).
    pub phase: f64,
    pub role: ToneRole,
}

/// Requested tone before grid validation.
#[derive(Debug, Clone, Copy)]
pub struct ToneSpec {
    pub frequency_hz: f64,
    pub amplitude_rad: f64,
    pub phase_rad: f64,
    pub role: ToneRole,
}

/// A commensurate set of input tones sharing one base frequency.
///
/// The incoming wave is φ_in(t) = Σ_k A_k·cos(ω_k t + θ_k); every ω_k is an
/// exact integer multiple of 2π·base_frequency, so the whole drive repeats
/// with the common period 1/base_frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSpec {
    /// Common divisor of all tone frequencies, Hz.
    pub base_frequency: f64,
    pub tones: Vec<Tone>,
}

impl DriveSpec {
    pub fn new(base_frequency: f64, tones: Vec<ToneSpec>) -> Result<Self> {
        if !(base_frequency > 0.0) || !base_frequency.is_finite() {
            return Err(Error::InvalidDrive(format!(
                "base frequency {base_frequency} Hz must be finite and positive"
            )));
        }
        if tones.is_empty() {
            return Err(Error::InvalidDrive("drive needs at least one tone".into()));
        }
        let mut snapped = Vec::with_capacity(tones.len());
        let mut pump_count = 0;
        for spec in &tones {
            let ratio = spec.frequency_hz / base_frequency;
            let index = ratio.round();
            if index < 1.0 || (ratio - index).abs() > 1e-9 * index.max(1.0) {
                return Err(Error::IncommensurateDrive {
                    frequency_hz: spec.frequency_hz,
                    base_hz: base_frequency,
                });
            }
            if spec.amplitude_rad < 0.0 || !spec.amplitude_rad.is_finite() {
                return Err(Error::InvalidDrive(format!(
                    "tone amplitude {} rad must be finite and >= 0",
                    spec.amplitude_rad
                )));
            }
            if spec.role == ToneRole::Pump {
                pump_count += 1;
            }
            let index = index as u64;
            snapped.push(Tone {
                index,
                frequency: index as f64 * base_frequency,
                amplitude: spec.amplitude_rad,
                phase: spec.phase_rad,
                role: spec.role,
            });
        }
        if pump_count > 1 {
            return Err(Error::InvalidDrive(format!(
                "at most one pump tone allowed, got {pump_count}"
            )));
        }
        Ok(Self {
            base_frequency,
            tones: snapped,
        })
    }

    pub fn pump(&self) -> Option<&Tone> {
        self.tones.iter().find(|t| t.role == ToneRole::Pump)
    }

    pub fn probes(&self) -> impl Iterator<Item = &Tone> {
        self.tones.iter().filter(|t| t.role == ToneRole::Probe)
    }

    /// Harmonic index of the highest-frequency tone (the pump, when present);
    /// the integrator step is defined per period of this tone.
    pub fn reference_index(&self) -> u64 {
        self.tones.iter().map(|t| t.index).max().unwrap_or(1)
    }

    /// Common period of the whole drive, seconds.
    pub fn common_period(&self) -> f64 {
        1.0 / self.base_frequency
    }

    /// Default harmonic set to track: DC, every tone, the idler of each probe
    /// against the pump, and the pump's second harmonic.
    pub fn default_tracked_harmonics(&self) -> Vec<u64> {
        let mut set = std::collections::BTreeSet::new();
        set.insert(0);
        for tone in &self.tones {
            set.insert(tone.index);
        }
        if let Some(pump) = self.pump() {
            let pump_index = pump.index;
            set.insert(2 * pump_index);
            let probe_indices: Vec<u64> = self.probes().map(|p| p.index).collect();
            for probe_index in probe_indices {
                if probe_index < pump_index {
                    set.insert(pump_index - probe_index);
                }
            }
        }
        set.into_iter().collect()
    }
}

/// Build the standard pump + detuned-probe drive: pump at `pump_f`, probe at
/// `pump_f/2 + probe_detuning`. The pump, the probe, and the mirrored idler
/// frequency must all land on the base grid.
pub fn make_two_tone(
    pump_f: f64,
    probe_detuning: f64,
    base_f: f64,
    pump_amp: f64,
    probe_amp: f64,
) -> Result<DriveSpec> {
    let on_grid = |f: f64| {
        let ratio = f / base_f;
        (ratio - ratio.round()).abs() <= 1e-9 * ratio.round().abs().max(1.0)
    };
    let probe_f = pump_f / 2.0 + probe_detuning;
    let idler_f = pump_f / 2.0 - probe_detuning;
    for f in [pump_f, probe_f, idler_f] {
        if !on_grid(f) {
            return Err(Error::IncommensurateDrive {
                frequency_hz: f,
                base_hz: base_f,
            });
        }
    }
    DriveSpec::new(
        base_f,
        vec![
            ToneSpec {
                frequency_hz: pump_f,
                amplitude_rad: pump_amp,
                phase_rad: 0.0,
                role: ToneRole::Pump,
            },
            ToneSpec {
                frequency_hz: probe_f,
                amplitude_rad: probe_amp,
                phase_rad: 0.0,
                role: ToneRole::Probe,
            },
        ],
    )
}

/// Power carried by a wave of phase amplitude `amplitude` (radians) at
/// angular frequency `omega` into a resistance `r_env`:
/// P = (Φ₀/2π)²·ω²·|A|²/(2R).
pub fn wave_power(amplitude: f64, omega: f64, r_env: f64) -> f64 {
    let v = PHI0_OVER_2PI * omega * amplitude;
    v * v / (2.0 * r_env)
}

/// [`wave_power`] expressed in dBm.
pub fn wave_power_dbm(amplitude: f64, omega: f64, r_env: f64) -> f64 {
    crate::units::watts_to_dbm(wave_power(amplitude, omega, r_env))
}

/// Exact inverse of [`wave_power`].
pub fn amplitude_for_power(power_watts: f64, omega: f64, r_env: f64) -> f64 {
    (2.0 * r_env * power_watts).sqrt() / (PHI0_OVER_2PI * omega)
}

/// Phase amplitude that carries `power_dbm` at `omega` into `r_env`.
pub fn amplitude_for_power_dbm(power_dbm: f64, omega: f64, r_env: f64) -> f64 {
    amplitude_for_power(crate::units::dbm_to_watts(power_dbm), omega, r_env)
}

/// Optional per-step trajectory dump of the final steady-state period.
#[derive(Debug, Clone)]
pub struct TrajectoryDump {
    pub path: PathBuf,
    /// Keep every `stride`-th sample.
    pub stride: u32,
}

/// Integrator and convergence controls.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Fixed RK4 steps per reference (pump) period.
    pub steps_per_period: u32,
    /// Inter-period relative change below which a harmonic counts as settled.
    pub tolerance: f64,
    /// Warm-up in reference periods before measuring. `None` selects
    /// ceil(20·Q·√G_target): settling slows as √G near high gain.
    pub warmup_periods: Option<u64>,
    /// Gain target (dB) feeding the warm-up heuristic.
    pub target_gain_hint_db: f64,
    /// Measure at least this many common periods (≥ 2 for one residual).
    pub min_periods: u64,
    /// Give up after this many measured common periods.
    pub max_periods: u64,
    /// Harmonic indices to track beyond the defaults.
    pub extra_harmonics: Vec<u64>,
    /// Test hook: drop the nonlinear bracket, leaving the exact linear RLC.
    pub linear_response_only: bool,
    /// Starting (φ, φ̇). The operating default is (0, 0); the knob exists so
    /// tests can verify the converged state does not depend on it.
    pub initial_state: (f64, f64),
    pub trajectory_dump: Option<TrajectoryDump>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            steps_per_period: 512,
            tolerance: 1e-5,
            warmup_periods: None,
            target_gain_hint_db: 20.0,
            min_periods: 2,
            max_periods: 8,
            extra_harmonics: Vec::new(),
            linear_response_only: false,
            initial_state: (0.0, 0.0),
            trajectory_dump: None,
        }
    }
}

/// Complex amplitudes of one tracked harmonic, referenced to drive t = 0
/// with the convention x(t) = Re[A·e^{iωt}].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicAmplitudes {
    /// Node phase.
    pub phi: Complex64,
    /// Incoming wave.
    pub phi_in: Complex64,
    /// Outgoing wave, φ_out = φ − φ_in by definition.
    pub phi_out: Complex64,
}

/// Converged harmonic table plus convergence metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateSolution {
    pub base_frequency: f64,
    /// Keyed by harmonic index (frequency = index · base_frequency).
    pub harmonics: BTreeMap<u64, HarmonicAmplitudes>,
    pub converged: bool,
    /// Measured common periods (excludes warm-up).
    pub periods_integrated: u64,
    /// Warm-up length actually used, in reference periods.
    pub warmup_periods: u64,
    /// Final inter-period relative change.
    pub residual: f64,
}

/// Total tracked incoming/outgoing wave power and their mismatch.
#[derive(Debug, Clone, Copy)]
pub struct PowerBalance {
    pub p_in: f64,
    pub p_out: f64,
    /// |p_in − p_out| / p_in.
    pub relative_imbalance: f64,
}

impl SteadyStateSolution {
    pub fn frequency_hz(&self, index: u64) -> f64 {
        index as f64 * self.base_frequency
    }

    pub fn harmonic(&self, index: u64) -> Option<&HarmonicAmplitudes> {
        self.harmonics.get(&index)
    }

    /// Power reflection gain |φ_out/φ_in|² at a driven harmonic, in dB.
    pub fn reflection_gain_db(&self, index: u64) -> Option<f64> {
        let h = self.harmonics.get(&index)?;
        if h.phi_in.norm() == 0.0 {
            return None;
        }
        Some(20.0 * (h.phi_out.norm() / h.phi_in.norm()).log10())
    }

    /// Outgoing power at `index` referenced to incoming power at `reference`,
    /// in dB. Used for idler gain referenced to the probe input.
    pub fn transfer_gain_db(&self, index: u64, reference: u64, r_env: f64) -> Option<f64> {
        let out = self.harmonics.get(&index)?;
        let inc = self.harmonics.get(&reference)?;
        if inc.phi_in.norm() == 0.0 {
            return None;
        }
        let p_out = wave_power(out.phi_out.norm(), TAU * self.frequency_hz(index), r_env);
        let p_in = wave_power(inc.phi_in.norm(), TAU * self.frequency_hz(reference), r_env);
        Some(crate::units::ratio_to_db(p_out / p_in))
    }

    /// Sum tracked wave powers on both sides of the port.
    pub fn power_balance(&self, r_env: f64) -> PowerBalance {
        let mut p_in = 0.0;
        let mut p_out = 0.0;
        for (&idx, h) in &self.harmonics {
            let omega = TAU * self.frequency_hz(idx);
            p_in += wave_power(h.phi_in.norm(), omega, r_env);
            p_out += wave_power(h.phi_out.norm(), omega, r_env);
        }
        PowerBalance {
            p_in,
            p_out,
            relative_imbalance: if p_in > 0.0 {
                (p_in - p_out).abs() / p_in
            } else {
                0.0
            },
        }
    }
}

/// Precomputed coefficients of the equation of motion at one bias point.
#[derive(Debug, Clone, Copy)]
struct EomCoefficients {
    gamma: f64,
    omega0_sq: f64,
    omega_j_sq: f64,
    inv_n: f64,
    sin_d: f64,
    cos_d: f64,
    linear_only: bool,
}

impl EomCoefficients {
    fn new(params: &CircuitParams, bias: &FluxBias, linear_only: bool) -> Self {
        let (sin_d, cos_d) = bias.delta_per_squid.sin_cos();
        Self {
            gamma: params.gamma(),
            omega0_sq: bias.omega0 * bias.omega0,
            omega_j_sq: params.omega_j_sq(),
            inv_n: 1.0 / params.n_squids as f64,
            sin_d,
            cos_d,
            linear_only,
        }
    }

    /// sin(u+d) − sin(d) − u·cos(d), evaluated through half-angle identities
    /// so the O(u²) result keeps full relative precision at small u:
    /// sin_d·(cos u − 1) + cos_d·(sin u − u) with cos u − 1 = −2·sin²(u/2)
    /// and sin u = 2·sin(u/2)·cos(u/2).
    #[inline]
    fn bracket(&self, u: f64) -> f64 {
        let (s, c) = (0.5 * u).sin_cos();
        self.sin_d * (-2.0 * s * s) + self.cos_d * (2.0 * s * c - u)
    }

    #[inline]
    fn rhs(&self, phi: f64, dphi: f64, drive_velocity: f64) -> (f64, f64) {
        let nl = if self.linear_only {
            0.0
        } else {
            self.omega_j_sq * self.bracket(phi * self.inv_n)
        };
        let ddphi =
            -self.gamma * dphi - self.omega0_sq * phi - nl + 2.0 * self.gamma * drive_velocity;
        (dphi, ddphi)
    }
}

/// Right-hand side of the equation of motion at one state point.
///
/// `state` is (φ, φ̇) of the AC node phase about the DC point; the return is
/// (φ̇, φ̈). `drive_velocity` is ∂_t φ_in in rad/s.
pub fn eom_rhs(
    params: &CircuitParams,
    bias: &FluxBias,
    state: (f64, f64),
    drive_velocity: f64,
) -> (f64, f64) {
    EomCoefficients::new(params, bias, false).rhs(state.0, state.1, drive_velocity)
}

/// The nonlinear remainder sin(u+d) − sin(d) − u·cos(d) of the junction
/// restoring force, for a per-SQUID excursion `u` about per-SQUID DC phase
/// `d`. Exposed for truncation-error studies.
pub fn nonlinear_bracket(u: f64, d: f64) -> f64 {
    let (sin_d, cos_d) = d.sin_cos();
    let (s, c) = (0.5 * u).sin_cos();
    sin_d * (-2.0 * s * s) + cos_d * (2.0 * s * c - u)
}

/// Runaway guard: per-SQUID excursions beyond two full junction rotations
/// are far outside any operating point.
const PER_SQUID_PHASE_LIMIT: f64 = 2.0 * TAU;

struct HarmonicTracker {
    index: u64,
    /// e^{−iω·h} advanced once per integration step.
    step_rotation: Complex64,
    rotation: Complex64,
    acc: Complex64,
}

/// Integrate the equation of motion from (φ, φ̇) = (0, 0) until the tracked
/// harmonic amplitudes repeat period-over-period within `opts.tolerance`.
///
/// Harmonic amplitudes are inner products against e^{∓iωt} accumulated over
/// single common periods on the uniform RK4 grid; for a trajectory that is
/// periodic on the common period this is the exact DFT. Identical inputs
/// produce bit-identical tables.
pub fn integrate_to_steady_state(
    params: &CircuitParams,
    bias: &FluxBias,
    drive: &DriveSpec,
    opts: &SolverOptions,
) -> Result<SteadyStateSolution> {
    if opts.steps_per_period < 16 {
        return Err(Error::InvalidParameter {
            name: "steps_per_period",
            value: opts.steps_per_period as f64,
            requirement: ">= 16",
        });
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tolerance",
            value: opts.tolerance,
            requirement: "> 0",
        });
    }
    let min_periods = opts.min_periods.max(2);
    if opts.max_periods < min_periods {
        return Err(Error::InvalidParameter {
            name: "max_periods",
            value: opts.max_periods as f64,
            requirement: ">= min_periods",
        });
    }

    let coeffs = EomCoefficients::new(params, bias, opts.linear_response_only);
    let ref_index = drive.reference_index();
    let steps = opts.steps_per_period as u64;
    let steps_per_common = ref_index * steps;
    let t_common = drive.common_period();
    let h = t_common / steps_per_common as f64;

    // Tracked harmonic set; everything must stay well below Nyquist.
    let mut tracked = drive.default_tracked_harmonics();
    for &extra in &opts.extra_harmonics {
        if !tracked.contains(&extra) {
            tracked.push(extra);
        }
    }
    tracked.sort_unstable();
    let nyquist_index = steps_per_common / 2;
    if let Some(&too_high) = tracked.iter().find(|&&m| m >= nyquist_index) {
        return Err(Error::InvalidDrive(format!(
            "harmonic index {too_high} at or above the Nyquist index {nyquist_index}"
        )));
    }

    // Warm-up: settling time scales like Q·√G reference periods.
    let q = bias.omega0 / coeffs.gamma;
    let warmup_periods = opts.warmup_periods.unwrap_or_else(|| {
        let sqrt_gain = 10f64.powf(opts.target_gain_hint_db.max(0.0) / 20.0);
        (20.0 * q * sqrt_gain).ceil() as u64
    });
    let warmup_steps = warmup_periods * steps;

    // Active tones, with A·ω prefactors for the velocity drive.
    let active: Vec<(f64, f64, f64)> = drive
        .tones
        .iter()
        .filter(|t| t.amplitude > 0.0)
        .map(|t| {
            let omega = TAU * t.frequency;
            (omega, t.amplitude * omega, t.phase)
        })
        .collect();
    let drive_velocity = |tau: f64| -> f64 {
        let mut v = 0.0;
        for &(omega, amp_omega, phase) in &active {
            v -= amp_omega * (omega * tau + phase).sin();
        }
        v
    };

    let phi_limit = PER_SQUID_PHASE_LIMIT * params.n_squids as f64;
    let (mut phi, mut dphi) = opts.initial_state;
    let mut absolute_step: u64 = 0;

    // One RK4 step; tau is time within the current common period, so the
    // drive is evaluated exactly periodically.
    let step = |phi: &mut f64,
                    dphi: &mut f64,
                    step_in_period: u64,
                    absolute_step: &mut u64|
     -> Result<()> {
        let tau = step_in_period as f64 * h;
        let v0 = drive_velocity(tau);
        let v_half = drive_velocity(tau + 0.5 * h);
        let v_end = drive_velocity(tau + h);
        let (k1p, k1v) = coeffs.rhs(*phi, *dphi, v0);
        let (k2p, k2v) = coeffs.rhs(*phi + 0.5 * h * k1p, *dphi + 0.5 * h * k1v, v_half);
        let (k3p, k3v) = coeffs.rhs(*phi + 0.5 * h * k2p, *dphi + 0.5 * h * k2v, v_half);
        let (k4p, k4v) = coeffs.rhs(*phi + h * k3p, *dphi + h * k3v, v_end);
        *phi += h / 6.0 * (k1p + 2.0 * (k2p + k3p) + k4p);
        *dphi += h / 6.0 * (k1v + 2.0 * (k2v + k3v) + k4v);
        *absolute_step += 1;
        if !(phi.abs() < phi_limit) {
            return Err(Error::DivergedTrajectory {
                time_s: *absolute_step as f64 * h,
                phi_abs: phi.abs(),
            });
        }
        Ok(())
    };

    // Warm-up, wrapping tau at common-period boundaries.
    for _ in 0..warmup_steps {
        let local = absolute_step % steps_per_common;
        step(&mut phi, &mut dphi, local, &mut absolute_step)?;
    }

    let make_trackers = || -> Vec<HarmonicTracker> {
        tracked
            .iter()
            .map(|&m| {
                let theta = -TAU * m as f64 / steps_per_common as f64;
                HarmonicTracker {
                    index: m,
                    step_rotation: Complex64::from_polar(1.0, theta),
                    rotation: Complex64::new(1.0, 0.0),
                    acc: Complex64::new(0.0, 0.0),
                }
            })
            .collect()
    };

    // Measurement: one harmonic table per common period, compared to the
    // previous period's table.
    let window_start_step = absolute_step % steps_per_common;
    let mut previous: Option<Vec<Complex64>> = None;
    let mut current_amps: Vec<Complex64> = Vec::new();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut periods_done: u64 = 0;

    while periods_done < opts.max_periods {
        let mut trackers = make_trackers();
        for _ in 0..steps_per_common {
            for tr in trackers.iter_mut() {
                tr.acc += phi * tr.rotation;
                tr.rotation *= tr.step_rotation;
            }
            let local = absolute_step % steps_per_common;
            step(&mut phi, &mut dphi, local, &mut absolute_step)?;
        }
        let amps: Vec<Complex64> = trackers
            .iter()
            .map(|tr| {
                let norm = if tr.index == 0 { 1.0 } else { 2.0 };
                tr.acc * (norm / steps_per_common as f64)
            })
            .collect();
        periods_done += 1;

        if let Some(prev) = &previous {
            // Per-harmonic relative change, with the scale floored at 1e-6 of
            // the dominant amplitude: harmonics that far down carry ~1e-12 of
            // the dominant power and only contribute accumulator roundoff.
            let max_amp = amps
                .iter()
                .chain(prev.iter())
                .map(|a| a.norm())
                .fold(0.0, f64::max);
            let floor = (1e-6 * max_amp).max(1e-15);
            residual = amps
                .iter()
                .zip(prev.iter())
                .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(floor))
                .fold(0.0, f64::max);
            if periods_done >= min_periods && residual < opts.tolerance {
                converged = true;
                current_amps = amps;
                break;
            }
        }
        current_amps = amps.clone();
        previous = Some(amps);
    }

    if !converged {
        return Err(Error::NoConvergence {
            periods: periods_done,
            residual,
        });
    }

    // Optional dump of one extra steady-state period.
    if let Some(dump) = &opts.trajectory_dump {
        let stride = dump.stride.max(1) as u64;
        let mut out = String::from("time_s,phi_rad,dphi_rad_per_s\n");
        for j in 0..steps_per_common {
            if j % stride == 0 {
                let t = absolute_step as f64 * h;
                out.push_str(&format!("{t},{phi},{dphi}\n"));
            }
            let local = absolute_step % steps_per_common;
            step(&mut phi, &mut dphi, local, &mut absolute_step)?;
        }
        let mut file = std::fs::File::create(&dump.path).map_err(|e| Error::Io {
            path: dump.path.display().to_string(),
            message: e.to_string(),
        })?;
        file.write_all(out.as_bytes()).map_err(|e| Error::Io {
            path: dump.path.display().to_string(),
            message: e.to_string(),
        })?;
    }

    // Reference the measured amplitudes to drive t = 0. The measurement
    // window starts an exact rational fraction of a cycle into the period,
    // so the correction A_true = A_meas · e^{−iω·t_start} is computed from
    // integer arithmetic.
    let mut harmonics = BTreeMap::new();
    for (pos, &m) in tracked.iter().enumerate() {
        let cycles = ((m as u128 * window_start_step as u128) % steps_per_common as u128) as f64
            / steps_per_common as f64;
        let phase_fix = Complex64::from_polar(1.0, -TAU * cycles);
        let phi_amp = current_amps[pos] * phase_fix;
        let mut phi_in = Complex64::new(0.0, 0.0);
        for tone in &drive.tones {
            if tone.index == m {
                phi_in += Complex64::from_polar(tone.amplitude, tone.phase);
            }
        }
        harmonics.insert(
            m,
            HarmonicAmplitudes {
                phi: phi_amp,
                phi_in,
                phi_out: phi_amp - phi_in,
            },
        );
    }

    Ok(SteadyStateSolution {
        base_frequency: drive.base_frequency,
        harmonics,
        converged,
        periods_integrated: periods_done,
        warmup_periods,
        residual,
    })
}
