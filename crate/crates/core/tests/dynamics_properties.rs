//! Integrator validation against closed-form oracles: linear one-port
//! reflection, h⁴ convergence order, determinism, and initial-condition
//! independence.

use jpa_core::circuit::{max_c3_bias, solve_dc_phase, CircuitParams};
use jpa_core::dynamics::{
    amplitude_for_power_dbm, integrate_to_steady_state, DriveSpec, SolverOptions, ToneRole,
    ToneSpec,
};
use jpa_core::units;
use num_complex::Complex64;
use std::f64::consts::TAU;

fn device() -> CircuitParams {
    CircuitParams::new(
        25,
        units::ph_to_h(15.0),
        units::ph_to_h(60.0),
        units::pf_to_f(2.0),
        Some(units::pf_to_f(0.26)),
        50.0,
    )
    .unwrap()
}

fn probe_only(freq: f64, amp: f64, phase: f64) -> DriveSpec {
    DriveSpec::new(
        freq,
        vec![ToneSpec {
            frequency_hz: freq,
            amplitude_rad: amp,
            phase_rad: phase,
            role: ToneRole::Probe,
        }],
    )
    .unwrap()
}

/// Closed-form reflection of the linear one-port: with the drive entering as
/// 2γ·φ̇_in, the node response is b = 2iγω·a/(ω₀² − ω² + iγω) and
/// Γ = (b − a)/a = −(ω₀² − ω² − iγω)/(ω₀² − ω² + iγω).
fn linear_reflection(omega0: f64, gamma: f64, omega: f64) -> Complex64 {
    let detune = omega0 * omega0 - omega * omega;
    -Complex64::new(detune, -gamma * omega) / Complex64::new(detune, gamma * omega)
}

#[test]
fn linearized_run_matches_analytic_reflection_in_amplitude_and_phase() {
    let params = device();
    let bias = solve_dc_phase(&params, 0.7).unwrap();
    let omega0 = bias.omega0;
    let gamma = params.gamma();
    let f0 = omega0 / TAU;

    // Sweep across several linewidths, including far detuned points.
    for (i, rel) in [-3.0, -1.5, -0.4, 0.0, 0.3, 1.0, 2.5].iter().enumerate() {
        let linewidth_hz = gamma / TAU;
        let f = (f0 + rel * linewidth_hz).max(0.2 * f0);
        let amp = amplitude_for_power_dbm(-140.0, TAU * f, params.r_env);
        let phase = 0.11 * i as f64;
        let drive = probe_only(f, amp, phase);
        let opts = SolverOptions {
            target_gain_hint_db: 0.0,
            linear_response_only: true,
            tolerance: 1e-9,
            max_periods: 16,
            ..Default::default()
        };
        let sol = integrate_to_steady_state(&params, &bias, &drive, &opts).unwrap();
        let h = sol.harmonic(1).unwrap();
        let measured = h.phi_out / h.phi_in;
        let expected = linear_reflection(omega0, gamma, TAU * f);
        let err = (measured - expected).norm();
        assert!(
            err < 1e-6,
            "reflection mismatch {err:.3e} at {rel} linewidths (measured {measured}, expected {expected})"
        );
    }
}

#[test]
fn full_nonlinear_run_is_unity_reflection_at_weak_probe() {
    let params = device();
    let bias = max_c3_bias(&params).unwrap();
    let f0 = bias.f0_hz();
    for rel in [-2.0, 0.0, 1.0] {
        let f = f0 + rel * params.gamma() / TAU;
        let amp = amplitude_for_power_dbm(-140.0, TAU * f, params.r_env);
        let drive = probe_only(f, amp, 0.0);
        let opts = SolverOptions {
            target_gain_hint_db: 0.0,
            ..Default::default()
        };
        let sol = integrate_to_steady_state(&params, &bias, &drive, &opts).unwrap();
        let h = sol.harmonic(1).unwrap();
        let ratio = h.phi_out.norm() / h.phi_in.norm();
        assert!(
            (ratio - 1.0).abs() < 1e-6,
            "|φ_out/φ_in| = {ratio} at {rel} linewidths"
        );
    }
}

#[test]
fn integrator_error_scales_as_h4() {
    // Strongly driven nonlinear steady state; the converged harmonic
    // amplitude inherits the integrator's O(h⁴) bias. Fit the exponent from
    // step-size halvings against a fine-step reference.
    let params = device();
    let bias = max_c3_bias(&params).unwrap();
    let f = bias.f0_hz().round();
    // Drive hard enough that per-SQUID phase swings ~0.3 rad.
    let amp = amplitude_for_power_dbm(-73.0, TAU * f, params.r_env);
    let drive = probe_only(f, amp, 0.0);

    let amp_at = |steps: u32| -> Complex64 {
        let opts = SolverOptions {
            steps_per_period: steps,
            tolerance: 1e-11,
            target_gain_hint_db: 10.0,
            max_periods: 64,
            ..Default::default()
        };
        integrate_to_steady_state(&params, &bias, &drive, &opts)
            .unwrap()
            .harmonic(1)
            .unwrap()
            .phi
    };

    let reference = amp_at(1024);
    let steps = [32u32, 64, 128, 256];
    let errors: Vec<f64> = steps
        .iter()
        .map(|&s| (amp_at(s) - reference).norm() / reference.norm())
        .collect();

    // Least-squares slope of ln(err) vs ln(h).
    let xs: Vec<f64> = steps.iter().map(|&s| (1.0 / s as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xm) * (y - ym))
        .sum::<f64>()
        / xs.iter().map(|x| (x - xm) * (x - xm)).sum::<f64>();
    assert!(
        (slope - 4.0).abs() < 0.2,
        "observed order {slope:.3}, errors {errors:?}"
    );
}

#[test]
fn steady_state_independent_of_initial_condition() {
    let params = device();
    let bias = max_c3_bias(&params).unwrap();
    let f = bias.f0_hz().round();
    let amp = amplitude_for_power_dbm(-90.0, TAU * f, params.r_env);
    let drive = probe_only(f, amp, 0.0);

    let run = |initial: (f64, f64)| {
        let opts = SolverOptions {
            tolerance: 1e-8,
            max_periods: 32,
            target_gain_hint_db: 10.0,
            initial_state: initial,
            ..Default::default()
        };
        integrate_to_steady_state(&params, &bias, &drive, &opts)
            .unwrap()
            .harmonic(1)
            .unwrap()
            .phi
    };

    let from_rest = run((0.0, 0.0));
    // Small deterministic perturbations standing in for "random" kicks.
    for seed in [(1e-3, 0.0), (-2e-3, 1e7), (5e-4, -4e6)] {
        let perturbed = run(seed);
        let rel = (perturbed - from_rest).norm() / from_rest.norm();
        assert!(rel < 1e-6, "IC {seed:?} shifted steady state by {rel:.2e}");
    }
}

#[test]
fn power_balance_under_pump() {
    // Pump below threshold plus weak probe: tracked harmonics account for
    // the full wave power to better than 1%.
    let params = CircuitParams::new(
        25,
        units::ph_to_h(15.0),
        units::ph_to_h(60.0),
        pf(1.8763),
        None,
        114.5,
    )
    .unwrap();
    let bias = max_c3_bias(&params).unwrap();
    let f0 = bias.f0_hz();
    let base = 1e6;
    let pump_f = 2.0 * (f0 / base).round() * base;
    let pump_amp = amplitude_for_power_dbm(-60.0, TAU * pump_f, params.r_env);
    let probe_amp = amplitude_for_power_dbm(-140.0, TAU * (pump_f / 2.0 + base), params.r_env);
    let drive =
        jpa_core::dynamics::make_two_tone(pump_f, base, base, pump_amp, probe_amp).unwrap();
    let sol = integrate_to_steady_state(&params, &bias, &drive, &SolverOptions::default()).unwrap();
    let balance = sol.power_balance(params.r_env);
    assert!(
        balance.relative_imbalance < 0.01,
        "imbalance {:.4e} (p_in {:.4e} W, p_out {:.4e} W)",
        balance.relative_imbalance,
        balance.p_in,
        balance.p_out
    );
}

fn pf(x: f64) -> f64 {
    units::pf_to_f(x)
}
