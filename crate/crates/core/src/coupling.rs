//! Pump phase-coupling efficiency: how much of the externally supplied pump
//! power drives circulating phase across the array versus reflecting off the
//! coupling element, and the combined efficiency budget.
//!
//! For a series coupler of reactance X(ω) feeding a load of reactance X_L(ω),
//! η_PCE = (X_L/(X + X_L))². The same number falls out of the dissipated
//! power route α·ω²·|φ_p|²/P_a with P_a computed from the source-side voltage
//! division; both routes are implemented and must agree.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::{ratio_to_db, PHI0};

use std::f64::consts::TAU;

/// A purely reactive one-port element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reactance {
    /// X = −1/(ωC).
    Capacitor(f64),
    /// X = ωL.
    Inductor(f64),
    /// Parallel LC tank: X = −1/(ωC − 1/(ωL)).
    ParallelLc { c: f64, l: f64 },
}

impl Reactance {
    pub fn at(&self, omega: f64) -> f64 {
        match *self {
            Reactance::Capacitor(c) => -1.0 / (omega * c),
            Reactance::Inductor(l) => omega * l,
            Reactance::ParallelLc { c, l } => -1.0 / (omega * c - 1.0 / (omega * l)),
        }
    }
}

/// Series coupler + reactive load driven from a resistive source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactiveNetwork {
    pub coupler: Reactance,
    pub load: Reactance,
    /// Source resistance Z₀, Ω.
    pub r_source: f64,
}

impl ReactiveNetwork {
    /// The standard JPA pump path: coupling capacitor into the parallel
    /// combination of the main capacitor and the biased array inductance.
    pub fn capacitive_jpa(z0: f64, c_coupling: f64, c_main: f64, l_arr: f64) -> Self {
        Self {
            coupler: Reactance::Capacitor(c_coupling),
            load: Reactance::ParallelLc {
                c: c_main,
                l: l_arr,
            },
            r_source: z0,
        }
    }

    /// α = Φ₀²/(2·Z₀·(2π)²), the phase-to-power prefactor.
    pub fn alpha(&self) -> f64 {
        PHI0 * PHI0 / (2.0 * self.r_source * TAU * TAU)
    }

    /// Locate a zero of X(ω) + X_L(ω) within ±`band` (relative) of `omega`,
    /// if one exists. Sign changes across a pole of either reactance are not
    /// zeros and are rejected by a magnitude check.
    pub fn pole_near(&self, omega: f64, band: f64) -> Option<f64> {
        let total = |w: f64| self.coupler.at(w) + self.load.at(w);
        let lo = omega * (1.0 - band);
        let hi = omega * (1.0 + band);
        let samples = 64;
        let mut prev_w = lo;
        let mut prev_f = total(lo);
        for i in 1..=samples {
            let w = lo + (hi - lo) * i as f64 / samples as f64;
            let f = total(w);
            if prev_f == 0.0 {
                return Some(prev_w);
            }
            if prev_f.signum() != f.signum() {
                // Bisect; a genuine zero shrinks |f|, a reactance pole blows up.
                let (mut a, mut b) = (prev_w, w);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if total(a).signum() != total(mid).signum() {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                let root = 0.5 * (a + b);
                let scale = self.coupler.at(root).abs().max(1.0);
                if total(root).abs() < 1e-3 * scale {
                    return Some(root);
                }
            }
            prev_w = w;
            prev_f = f;
        }
        None
    }
}

/// Relative guard band around zeros of X + X_L where the efficiency is not
/// evaluated: a diverging efficiency implies an arbitrarily soft pump.
pub const POLE_GUARD_BAND: f64 = 1e-3;

/// Phase-coupling efficiency and its dB form at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PceValue {
    pub eta: f64,
    pub eta_db: f64,
}

/// η_PCE = (X_L/(X + X_L))² at `omega`.
///
/// Errors with [`Error::NearPole`] inside the guard band around zeros of
/// X + X_L, where the ratio diverges.
pub fn pce(network: &ReactiveNetwork, omega: f64) -> Result<PceValue> {
    if let Some(pole) = network.pole_near(omega, POLE_GUARD_BAND) {
        return Err(Error::NearPole { omega, pole });
    }
    let eta = pce_reactance_route(network, omega);
    Ok(PceValue {
        eta,
        eta_db: ratio_to_db(eta),
    })
}

/// The reactance-ratio route: (X_L/(X+X_L))².
pub fn pce_reactance_route(network: &ReactiveNetwork, omega: f64) -> f64 {
    let x = network.coupler.at(omega);
    let x_l = network.load.at(omega);
    let ratio = x_l / (x + x_l);
    ratio * ratio
}

/// The dissipated-power route: η = α·ω²·|φ_p|²/P_a with
/// P_a = (1/2Z₀)·|φ_p·(Φ₀/2π)·iω·(1 + Z/Z_L)|², evaluated with complex
/// impedances Z = iX, Z_L = iX_L. Independent of the chosen |φ_p|.
pub fn pce_power_route(network: &ReactiveNetwork, omega: f64, phi_p: f64) -> f64 {
    let z = Complex64::new(0.0, network.coupler.at(omega));
    let z_l = Complex64::new(0.0, network.load.at(omega));
    let v = Complex64::new(0.0, 1.0)
        * (phi_p * PHI0 / TAU * omega)
        * (Complex64::new(1.0, 0.0) + z / z_l);
    let p_a = v.norm_sqr() / (2.0 * network.r_source);
    network.alpha() * omega * omega * phi_p * phi_p / p_a
}

/// One grid point of a PCE spectrum.
#[derive(Debug, Clone, Copy)]
pub struct PcePoint {
    pub omega: f64,
    /// `None` inside a pole guard band.
    pub eta: Option<f64>,
    pub near_pole: bool,
}

/// Evaluate η_PCE across a frequency grid, marking guard-band points instead
/// of failing on them.
pub fn pce_spectrum(network: &ReactiveNetwork, omega_grid: &[f64]) -> Vec<PcePoint> {
    omega_grid
        .iter()
        .map(|&omega| match pce(network, omega) {
            Ok(v) => PcePoint {
                omega,
                eta: Some(v.eta),
                near_pole: false,
            },
            Err(Error::NearPole { .. }) => PcePoint {
                omega,
                eta: None,
                near_pole: true,
            },
            Err(_) => PcePoint {
                omega,
                eta: None,
                near_pole: false,
            },
        })
        .collect()
}

/// η_total = η_PCE · η_PAE; in dB the two contributions add.
pub fn total_efficiency(eta_pce: f64, eta_pae: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&eta_pce));
    debug_assert!((0.0..=1.0).contains(&eta_pae));
    eta_pce * eta_pae
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    /// Device-scale pump network: C = 2 pF, C_c = 0.26 pF, L_arr = 375 pH.
    fn network() -> ReactiveNetwork {
        ReactiveNetwork::capacitive_jpa(50.0, 0.26e-12, 2e-12, 375e-12)
    }

    fn omega0(net: &ReactiveNetwork) -> f64 {
        match net.load {
            Reactance::ParallelLc { c, l } => 1.0 / (l * c).sqrt(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn pce_at_twice_resonance() {
        // At ω = 2ω₀: X_L = −1/(1.5·ω₀·C), X = −1/(2·ω₀·C_c).
        let net = network();
        let w0 = omega0(&net);
        let v = pce(&net, 2.0 * w0).unwrap();
        assert_relative_eq!(v.eta, 0.021_824, max_relative = 1e-3);
        assert_abs_diff_eq!(v.eta_db, -16.61, epsilon = 0.02);
        // Power-route cross-check at the same frequency.
        assert_relative_eq!(
            pce_power_route(&net, 2.0 * w0, 0.37),
            v.eta,
            max_relative = 1e-10
        );
    }

    #[test]
    fn pce_short_coupler_limit() {
        // A huge coupling capacitor is a short: X → 0, η → 1.
        let net = ReactiveNetwork::capacitive_jpa(50.0, 1.0, 2e-12, 375e-12);
        let w0 = omega0(&net);
        let v = pce(&net, 2.0 * w0).unwrap();
        assert_relative_eq!(v.eta, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn pce_high_frequency_limit() {
        // ω → ∞: both reactances are capacitive, η → (C_c/(C+C_c))².
        let net = network();
        let w0 = omega0(&net);
        let expected = (0.26 / 2.26_f64).powi(2);
        assert_relative_eq!(expected, 0.013_237, max_relative = 1e-3);
        let v = pce(&net, 2_000.0 * w0).unwrap();
        assert_relative_eq!(v.eta, expected, max_relative = 1e-5);
        assert_abs_diff_eq!(ratio_to_db(expected), -18.78, epsilon = 0.02);
    }

    #[test]
    fn dual_routes_agree_on_random_reactive_networks() {
        // The reactance-ratio and dissipated-power routes are algebraically
        // identical for all-reactive Z, Z_L; check across element types.
        let cases = [
            ReactiveNetwork::capacitive_jpa(50.0, 0.26e-12, 2e-12, 375e-12),
            ReactiveNetwork {
                coupler: Reactance::Inductor(1e-9),
                load: Reactance::Capacitor(0.7e-12),
                r_source: 73.0,
            },
            ReactiveNetwork {
                coupler: Reactance::Capacitor(0.1e-12),
                load: Reactance::Inductor(0.4e-9),
                r_source: 120.0,
            },
        ];
        for net in cases {
            for rel in [0.3, 1.7, 2.0, 3.5, 9.0] {
                let omega = rel * 4e10;
                let a = pce_reactance_route(&net, omega);
                let b = pce_power_route(&net, omega, 1.0);
                if a.is_finite() && b.is_finite() {
                    assert_relative_eq!(a, b, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn pce_scale_invariance() {
        // Multiplying both reactances by a common factor leaves η unchanged:
        // scaling L and 1/C by k scales X and X_L by k at fixed ω.
        let k = 3.7;
        let base = network();
        let scaled = ReactiveNetwork::capacitive_jpa(50.0, 0.26e-12 / k, 2e-12 / k, 375e-12 * k);
        let w = 2.0 * omega0(&base);
        assert_relative_eq!(
            pce_reactance_route(&base, w),
            pce_reactance_route(&scaled, w),
            max_relative = 1e-12
        );
    }

    #[test]
    fn series_pole_detected_and_guarded() {
        // X + X_L = 0 at ω = 1/√(L_arr·(C + C_c)), below the tank resonance.
        let net = network();
        let pole = 1.0 / (375e-12_f64 * 2.26e-12).sqrt();
        let found = net.pole_near(pole * 1.0004, 1e-3).expect("pole in band");
        assert_relative_eq!(found, pole, max_relative = 1e-6);
        assert!(matches!(
            pce(&net, pole * 1.0004),
            Err(Error::NearPole { .. })
        ));
        // Far from the pole evaluation succeeds.
        assert!(pce(&net, pole * 1.05).is_ok());
    }

    #[test]
    fn spectrum_shape_above_resonance() {
        // Above the tank resonance both reactances are capacitive: η starts
        // at 1 (X_L pole) and decays monotonically toward the HF limit.
        let net = network();
        let w0 = omega0(&net);
        let grid: Vec<f64> = (0..=60).map(|i| w0 * (1.2 + i as f64 * (4.0 - 1.2) / 60.0)).collect();
        let spectrum = pce_spectrum(&net, &grid);
        let values: Vec<f64> = spectrum.iter().map(|p| p.eta.unwrap()).collect();
        for w in values.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "not monotone: {w:?}");
        }
        for v in &values {
            assert!(*v > 0.0 && *v <= 1.0);
        }
        // Far end sits within 1% of the analytic asymptote... relative to the
        // asymptote itself the grid only reaches 4ω₀, so compare against the
        // exact formula instead of the limit.
        let analytic_end = pce_reactance_route(&net, *grid.last().unwrap());
        assert_relative_eq!(*values.last().unwrap(), analytic_end, max_relative = 1e-12);
        let hf_limit = (0.26 / 2.26_f64).powi(2);
        assert_relative_eq!(values.last().unwrap(), &hf_limit, max_relative = 0.25);
        // The spectrum value at 2ω₀ matches the scalar call exactly.
        let at_2w0 = pce_spectrum(&net, &[2.0 * w0])[0].eta.unwrap();
        assert_eq!(at_2w0, pce(&net, 2.0 * w0).unwrap().eta);
    }

    #[test]
    fn eta_approaches_unity_at_load_pole() {
        // Approaching the tank resonance from either side, |X_L| → ∞ and the
        // coupler drops out: η → 1.
        let net = network();
        let w0 = omega0(&net);
        for w in [w0 * (1.0 - 1e-6), w0 * (1.0 + 1e-6)] {
            let eta = pce_reactance_route(&net, w);
            assert_abs_diff_eq!(eta, 1.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn eta_grows_toward_guard_band() {
        // Walking up to the series pole from below, η rises monotonically
        // past unity (the diverging stiff-pump regime the guard band blocks).
        let net = network();
        let pole = 1.0 / (375e-12_f64 * 2.26e-12).sqrt();
        let grid: Vec<f64> = (0..20).map(|i| pole * (0.97 + 0.001 * i as f64)).collect();
        let values: Vec<f64> = grid.iter().map(|&w| pce_reactance_route(&net, w)).collect();
        for w in values.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn total_efficiency_budget() {
        // −16.6 dB coupling on top of −20 dB core efficiency ≈ −36.6 dB.
        let eta_pce = crate::units::db_to_ratio(-16.6);
        let eta_pae = crate::units::db_to_ratio(-20.0);
        let total = total_efficiency(eta_pce, eta_pae);
        assert_abs_diff_eq!(ratio_to_db(total), -36.6, epsilon = 1e-9);
        assert_eq!(total_efficiency(1.0, eta_pae), eta_pae);
        assert_eq!(total_efficiency(0.0, eta_pae), 0.0);
        assert_eq!(total_efficiency(eta_pce, 0.0), 0.0);
    }
}
