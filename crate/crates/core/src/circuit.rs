//! Static physics of the rf-SQUID array amplifier: circuit parameters, DC
//! flux self-consistency, bias-dependent resonant frequency, and the Taylor
//! coefficients of the junction nonlinearity.
//!
//! The array is N identical rf SQUIDs (geometric shunt L_s in parallel with a
//! junction of inductance L_J) resonated by C and loaded by an environment
//! resistance r_env on resonance. Total node phase φ divides evenly over the
//! array, so the junction nonlinearity always appears through φ/N.

use crate::error::{Error, Result};

/// Physical parameters of the amplifier.
///
/// Derived quantities (β, γ, ω_L², ω_J²) are recomputed from the stored
/// fields on every call; nothing derived is cached.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitParams {
    /// Number of rf SQUIDs in the array (N).
    pub n_squids: u32,
    /// Shunt inductance per SQUID, H (L_s).
    pub l_shunt: f64,
    /// Josephson inductance per junction, H (L_J).
    pub l_junction: f64,
    /// Main shunt capacitance, F (C).
    pub c_main: f64,
    /// Coupling capacitance, F (C_c). Absent when the mode couples directly.
    pub c_coupling: Option<f64>,
    /// Effective environment resistance on resonance, Ω.
    pub r_env: f64,
}

impl CircuitParams {
    pub fn new(
        n_squids: u32,
        l_shunt: f64,
        l_junction: f64,
        c_main: f64,
        c_coupling: Option<f64>,
        r_env: f64,
    ) -> Result<Self> {
        fn positive(name: &'static str, value: f64) -> Result<()> {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    requirement: "finite and > 0",
                });
            }
            Ok(())
        }
        if n_squids < 1 {
            return Err(Error::InvalidParameter {
                name: "n_squids",
                value: n_squids as f64,
                requirement: ">= 1",
            });
        }
        positive("l_shunt", l_shunt)?;
        positive("l_junction", l_junction)?;
        positive("c_main", c_main)?;
        if let Some(cc) = c_coupling {
            positive("c_coupling", cc)?;
        }
        positive("r_env", r_env)?;
        Ok(Self {
            n_squids,
            l_shunt,
            l_junction,
            c_main,
            c_coupling,
            r_env,
        })
    }

    /// Shunting ratio β = L_s/L_J.
    pub fn beta(&self) -> f64 {
        self.l_shunt / self.l_junction
    }

    /// External decay rate γ = 1/(C·r_env), rad/s.
    pub fn gamma(&self) -> f64 {
        1.0 / (self.c_main * self.r_env)
    }

    /// ω_L² = 1/(C·L_s·N), rad²/s².
    pub fn omega_l_sq(&self) -> f64 {
        1.0 / (self.c_main * self.l_shunt * self.n_squids as f64)
    }

    /// ω_J² = 1/(C·L_J), rad²/s².
    pub fn omega_j_sq(&self) -> f64 {
        1.0 / (self.c_main * self.l_junction)
    }

    /// Quality factor at a given bias: Q = r_env·sqrt(C/L_arr).
    pub fn quality_factor(&self, bias: &FluxBias) -> f64 {
        self.r_env * (self.c_main / array_inductance(self, bias)).sqrt()
    }
}

/// A solved flux bias point.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxBias {
    /// External phase per SQUID, rad (2π·Φ_ext/Φ₀ through one loop).
    pub phi_e: f64,
    /// Total external phase across the array, N·φ_e.
    pub phi_ext_total: f64,
    /// Solved total DC node phase, rad.
    pub phi_dc: f64,
    /// Δφ = φ_DC + φ_ext, rad.
    pub delta_phi: f64,
    /// Per-SQUID internal phase Δφ/N, rad.
    pub delta_per_squid: f64,
    /// Bias-dependent resonant angular frequency, rad/s.
    pub omega0: f64,
}

impl FluxBias {
    /// Resonant frequency in Hz.
    pub fn f0_hz(&self) -> f64 {
        self.omega0 / std::f64::consts::TAU
    }
}

/// Coefficients of the restoring-force expansion ω_J²·sin((φ+Δφ)/N) about
/// φ = 0. `c2` multiplies φ, `c3` multiplies φ², `c4` multiplies φ³; units
/// are rad/s² per radᵏ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorCoefficients {
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

/// Residual of the per-SQUID DC current relation, in per-SQUID phase units:
/// r(y) = y − φ_e + β·sin(y), whose root is y = Δφ/N.
fn dc_residual(y: f64, phi_e: f64, beta: f64) -> f64 {
    y - phi_e + beta * y.sin()
}

/// Solve the DC flux relation for one rf SQUID and populate the bias point.
///
/// The per-SQUID relation is y = φ_e − β·sin(y) with y = Δφ/N; for β < 1 the
/// map has a unique root (d/dy[y + β·sin y] = 1 + β·cos y > 0) and we take
/// the branch continuous through (0, 0). Newton iteration polished to
/// |r| < 1e-13, well inside the 1e-12 contract.
pub fn solve_dc_phase(params: &CircuitParams, phi_e: f64) -> Result<FluxBias> {
    let beta = params.beta();
    if beta >= 1.0 {
        return Err(Error::BetaHysteretic { beta });
    }
    if !phi_e.is_finite() {
        return Err(Error::InvalidParameter {
            name: "phi_e",
            value: phi_e,
            requirement: "finite",
        });
    }

    // Bracket: r(φ_e − β) ≤ 0 ≤ r(φ_e + β).
    let mut lo = phi_e - beta;
    let mut hi = phi_e + beta;
    let mut y = phi_e - beta * phi_e.sin(); // one fixed-point step as the seed
    for _ in 0..100 {
        let r = dc_residual(y, phi_e, beta);
        if r.abs() < 1e-13 {
            break;
        }
        if r > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let step = r / (1.0 + beta * y.cos());
        y -= step;
        if !(lo..=hi).contains(&y) {
            y = 0.5 * (lo + hi); // fall back to bisection if Newton leaves the bracket
        }
    }
    debug_assert!(dc_residual(y, phi_e, beta).abs() < 1e-12);

    let n = params.n_squids as f64;
    let phi_dc = n * (y - phi_e);
    let mut bias = FluxBias {
        phi_e,
        phi_ext_total: n * phi_e,
        phi_dc,
        delta_phi: n * y,
        delta_per_squid: y,
        omega0: 0.0,
    };
    bias.omega0 = resonant_frequency(params, &bias)?;
    Ok(bias)
}

/// ω₀ = sqrt((1/(N·C))·[1/L_s + cos(Δφ/N)/L_J]), rad/s.
pub fn resonant_frequency(params: &CircuitParams, bias: &FluxBias) -> Result<f64> {
    let stiffness = 1.0 / params.l_shunt + bias.delta_per_squid.cos() / params.l_junction;
    if stiffness <= 0.0 {
        return Err(Error::NegativeStiffness {
            delta_per_squid: bias.delta_per_squid,
        });
    }
    Ok((stiffness / (params.n_squids as f64 * params.c_main)).sqrt())
}

/// Effective array inductance L_arr = N/(1/L_s + cos(Δφ/N)/L_J), H.
pub fn array_inductance(params: &CircuitParams, bias: &FluxBias) -> f64 {
    params.n_squids as f64 / (1.0 / params.l_shunt + bias.delta_per_squid.cos() / params.l_junction)
}

/// Exact series expansion of the junction restoring force at the bias point.
pub fn taylor_coefficients(params: &CircuitParams, bias: &FluxBias) -> TaylorCoefficients {
    let n = params.n_squids as f64;
    let wj2 = params.omega_j_sq();
    let (sin_d, cos_d) = bias.delta_per_squid.sin_cos();
    TaylorCoefficients {
        c2: wj2 / n * cos_d,
        c3: -wj2 / (2.0 * n * n) * sin_d,
        c4: -wj2 / (6.0 * n * n * n) * cos_d,
    }
}

/// Bias of maximal third-order nonlinearity |c3| over φ_e ∈ [0, π].
///
/// |c3| ∝ |sin(Δφ/N)| peaks at Δφ/N = π/2, where the DC relation gives the
/// closed form φ_e = π/2 + β.
pub fn max_c3_bias(params: &CircuitParams) -> Result<FluxBias> {
    let phi_e_star = std::f64::consts::FRAC_PI_2 + params.beta();
    solve_dc_phase(params, phi_e_star)
}

/// One point of the flux-tunability curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunabilityPoint {
    pub phi_e: f64,
    pub f0_hz: f64,
    pub l_arr: f64,
}

/// Resonant frequency and array inductance over a grid of per-SQUID biases.
pub fn tunability_curve(params: &CircuitParams, phi_e_grid: &[f64]) -> Result<Vec<TunabilityPoint>> {
    phi_e_grid
        .iter()
        .map(|&phi_e| {
            let bias = solve_dc_phase(params, phi_e)?;
            Ok(TunabilityPoint {
                phi_e,
                f0_hz: bias.f0_hz(),
                l_arr: array_inductance(params, &bias),
            })
        })
        .collect()
}

/// Exact series→parallel transform of a source resistance z0 behind a series
/// coupling capacitor, evaluated at ω. Returns (r_parallel, c_parallel).
///
/// With X_c = 1/(ω·C_c): r_p = z0·(1 + (X_c/z0)²), c_p = C_c/(1 + (z0/X_c)²).
/// Designer utility only — the dynamics module drives through a single
/// frequency-independent r_env.
pub fn effective_environment(z0: f64, c_coupling: f64, omega: f64) -> (f64, f64) {
    let x_c = 1.0 / (omega * c_coupling);
    let r_parallel = z0 * (1.0 + (x_c / z0).powi(2));
    let c_parallel = c_coupling / (1.0 + (z0 / x_c).powi(2));
    (r_parallel, c_parallel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn device(l_shunt_ph: f64) -> CircuitParams {
        CircuitParams::new(
            25,
            units::ph_to_h(l_shunt_ph),
            units::ph_to_h(60.0),
            units::pf_to_f(2.0),
            Some(units::pf_to_f(0.26)),
            50.0,
        )
        .unwrap()
    }

    /// Independent oracle: bisection on the per-SQUID DC relation to 1e-12.
    fn bisect_dc(phi_e: f64, beta: f64) -> f64 {
        let (mut lo, mut hi) = (phi_e - beta - 1e-9, phi_e + beta + 1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dc_residual(mid, phi_e, beta) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn dc_zero_bias_is_zero() {
        let bias = solve_dc_phase(&device(15.0), 0.0).unwrap();
        assert_eq!(bias.phi_dc, 0.0);
        assert_eq!(bias.delta_per_squid, 0.0);
    }

    #[test]
    fn dc_pi_bias_fixed_point() {
        let bias = solve_dc_phase(&device(15.0), PI).unwrap();
        assert_abs_diff_eq!(bias.delta_per_squid, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(bias.phi_dc, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn dc_half_quantum_matches_bisection_oracle() {
        // β = 0.25, φ_e = π/2: per-SQUID DC phase x solves 4x + cos(x) = 0.
        let params = device(15.0);
        let bias = solve_dc_phase(&params, FRAC_PI_2).unwrap();
        let x = bias.phi_dc / 25.0;
        let oracle = {
            let (mut lo, mut hi) = (-1.0_f64, 0.0_f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if 4.0 * mid + mid.cos() > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        };
        assert_abs_diff_eq!(x, oracle, epsilon = 1e-12);
        // Frozen values from the oracle.
        assert_abs_diff_eq!(x, -0.242_674_7, epsilon = 1e-6);
        assert_abs_diff_eq!(bias.phi_dc, -6.066_87, epsilon = 1e-4);
        assert_abs_diff_eq!(bias.delta_per_squid, 1.328_122, epsilon = 1e-6);
    }

    #[test]
    fn dc_residual_contract() {
        let params = device(15.0);
        for phi_e in [-2.8, -0.3, 0.7, 1.5708, 2.9, PI] {
            let bias = solve_dc_phase(&params, phi_e).unwrap();
            // Residual of the printed current relation, per-SQUID phase units.
            let r = dc_residual(bias.delta_per_squid, phi_e, params.beta());
            assert!(r.abs() < 1e-12, "residual {r:e} at phi_e = {phi_e}");
        }
    }

    #[test]
    fn dc_odd_in_phi_e() {
        let params = device(15.0);
        for phi_e in [0.1, 0.9, 1.8208, 2.7] {
            let plus = solve_dc_phase(&params, phi_e).unwrap();
            let minus = solve_dc_phase(&params, -phi_e).unwrap();
            assert_abs_diff_eq!(plus.phi_dc, -minus.phi_dc, epsilon = 1e-11);
        }
    }

    #[test]
    fn dc_agrees_with_fixed_point_iteration() {
        // Uniqueness cross-check: damped fixed-point iteration lands on the
        // same root as the Newton/bisection path.
        let params = device(15.0);
        let beta = params.beta();
        for phi_e in [0.4_f64, 1.1, 1.8208, 2.5] {
            let mut y = phi_e;
            for _ in 0..10_000 {
                y = phi_e - beta * y.sin();
            }
            let bias = solve_dc_phase(&params, phi_e).unwrap();
            assert_abs_diff_eq!(bias.delta_per_squid, y, epsilon = 1e-10);
            assert_abs_diff_eq!(bias.delta_per_squid, bisect_dc(phi_e, beta), epsilon = 1e-10);
        }
    }

    #[test]
    fn hysteretic_beta_rejected() {
        let params = CircuitParams::new(
            25,
            units::ph_to_h(60.0),
            units::ph_to_h(60.0),
            units::pf_to_f(2.0),
            None,
            50.0,
        )
        .unwrap();
        assert!(matches!(
            solve_dc_phase(&params, 0.5),
            Err(Error::BetaHysteretic { .. })
        ));
    }

    #[test]
    fn zero_bias_inductance_near_290_ph() {
        // 14.5 pH shunt: 25 · (14.5‖60) pH ≈ 292 pH.
        let params = device(14.5);
        let bias = solve_dc_phase(&params, 0.0).unwrap();
        let l_arr = array_inductance(&params, &bias);
        assert_relative_eq!(units::h_to_ph(l_arr), 291.95, max_relative = 1e-4);
    }

    #[test]
    fn resonant_frequency_closed_forms() {
        let params = device(15.0);
        // Zero bias: L_arr = 25·12 pH = 300 pH, f0 = 1/(2π√(L·C)).
        let b0 = solve_dc_phase(&params, 0.0).unwrap();
        let f0 = b0.f0_hz();
        let expect0 = 1.0 / (TAU * (300e-12_f64 * 2e-12).sqrt());
        assert_relative_eq!(f0, expect0, max_relative = 1e-12);
        assert_relative_eq!(f0, 6.4975e9, max_relative = 1e-4);
        // φ_e = π: per-SQUID 1/L = 1/15 − 1/60 = 1/20 pH⁻¹ → 500 pH total.
        let bpi = solve_dc_phase(&params, PI).unwrap();
        assert_relative_eq!(
            units::h_to_ph(array_inductance(&params, &bpi)),
            500.0,
            max_relative = 1e-9
        );
        assert_relative_eq!(bpi.f0_hz(), 5.0329e9, max_relative = 1e-4);
    }

    #[test]
    fn omega0_consistency_identity() {
        // ω₀² from the stiffness form equals ω_L² + (ω_J²/N)·cos(Δφ/N).
        let params = device(15.0);
        for phi_e in [0.0, 0.8, 1.8208, 2.9] {
            let bias = solve_dc_phase(&params, phi_e).unwrap();
            let direct = bias.omega0.powi(2);
            let split = params.omega_l_sq()
                + params.omega_j_sq() / 25.0 * bias.delta_per_squid.cos();
            assert_relative_eq!(direct, split, epsilon = 1e-12);
        }
    }

    #[test]
    fn derived_quantities_recompute_exactly() {
        let params = device(15.0);
        assert_relative_eq!(params.beta(), 0.25, epsilon = 1e-12);
        assert_relative_eq!(
            params.gamma(),
            1.0 / (2e-12 * 50.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            params.omega_l_sq(),
            1.0 / (2e-12 * 15e-12 * 25.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(params.omega_j_sq(), 1.0 / (2e-12 * 60e-12), epsilon = 1e-12);
    }

    #[test]
    fn taylor_zero_bias_c3_vanishes() {
        let params = device(15.0);
        let bias = solve_dc_phase(&params, 0.0).unwrap();
        let c = taylor_coefficients(&params, &bias);
        assert_eq!(c.c3, 0.0);
        assert!(c.c2 > 0.0);
    }

    #[test]
    fn taylor_at_max_c3_bias() {
        let params = device(15.0);
        let bias = max_c3_bias(&params).unwrap();
        // Δφ/N = π/2 exactly there, so c4 = 0 and c3 = −ω_J²/(2N²).
        assert_abs_diff_eq!(bias.delta_per_squid, FRAC_PI_2, epsilon = 1e-12);
        let c = taylor_coefficients(&params, &bias);
        let wj2 = params.omega_j_sq();
        assert_relative_eq!(c.c3, -wj2 / (2.0 * 625.0), epsilon = 1e-12);
        assert_abs_diff_eq!(c.c4 * 6.0 * 625.0 * 25.0 / wj2, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn max_c3_closed_form_and_search_agree() {
        // Independent route: |c3| ∝ |sin(Δφ/N)| is maximal where its
        // derivative vanishes, i.e. cos(Δφ/N) = 0 with Δφ/N monotone in φ_e.
        // Bisect that optimality condition instead of trusting π/2 + β.
        let params = device(15.0);
        let cos_d = |phi_e: f64| {
            solve_dc_phase(&params, phi_e)
                .unwrap()
                .delta_per_squid
                .cos()
        };
        let (mut a, mut b) = (0.0_f64, PI);
        assert!(cos_d(a) > 0.0 && cos_d(b) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if cos_d(mid) > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-13 {
                break;
            }
        }
        let numeric = 0.5 * (a + b);
        let closed = FRAC_PI_2 + params.beta();
        assert_abs_diff_eq!(numeric, closed, epsilon = 1e-9);
        let bias = max_c3_bias(&params).unwrap();
        assert_abs_diff_eq!(bias.phi_e, 1.820_796_3, epsilon = 1e-7);
        assert_abs_diff_eq!(bias.phi_e / TAU, 0.2898, epsilon = 1e-4);
    }

    #[test]
    fn max_c3_bias_inductance_window() {
        // At Δφ/N = π/2 the junction drops out: L_arr = N·L_s = 375 pH, and
        // the operating frequency lands in the expected band.
        let params = device(15.0);
        let bias = max_c3_bias(&params).unwrap();
        assert_relative_eq!(
            units::h_to_ph(array_inductance(&params, &bias)),
            375.0,
            epsilon = 1e-10
        );
        assert_relative_eq!(bias.f0_hz(), 5.811e9, max_relative = 1e-3);
        assert!(bias.f0_hz() > 5.7e9 && bias.f0_hz() < 6.1e9);
    }

    #[test]
    fn max_c3_small_beta_limit() {
        let params = CircuitParams::new(
            25,
            units::ph_to_h(0.006),
            units::ph_to_h(60.0),
            units::pf_to_f(2.0),
            None,
            50.0,
        )
        .unwrap();
        let bias = max_c3_bias(&params).unwrap();
        assert_abs_diff_eq!(bias.phi_e, FRAC_PI_2, epsilon = 1.1e-4);
    }

    #[test]
    fn q_bookkeeping_near_design_value() {
        // 14.5 pH device straight into 50 Ω: Q at the operating bias ≈ 3.7–3.8,
        // consistent with the quoted Q ≈ 4 design estimate.
        let params = device(14.5);
        let bias = max_c3_bias(&params).unwrap();
        let q = params.quality_factor(&bias);
        assert_abs_diff_eq!(q, 3.8, epsilon = 0.15);
    }

    #[test]
    fn tunability_monotone_and_even() {
        let params = device(15.0);
        let grid: Vec<f64> = (0..=40).map(|i| PI * i as f64 / 40.0).collect();
        let curve = tunability_curve(&params, &grid).unwrap();
        for pair in curve.windows(2) {
            assert!(pair[1].f0_hz <= pair[0].f0_hz + 1e-6);
        }
        let depth = curve.first().unwrap().f0_hz - curve.last().unwrap().f0_hz;
        assert_relative_eq!(depth, 1.4646e9, max_relative = 1e-3);
        // Even in bias.
        let mirrored = tunability_curve(&params, &[-0.7, 0.7]).unwrap();
        assert_relative_eq!(mirrored[0].f0_hz, mirrored[1].f0_hz, epsilon = 1e-12);
    }

    #[test]
    fn tunability_depth_grows_with_beta() {
        let depth = |l_shunt_ph: f64| {
            let params = device(l_shunt_ph);
            let curve = tunability_curve(&params, &[0.0, PI]).unwrap();
            curve[0].f0_hz - curve[1].f0_hz
        };
        assert!(depth(6.0) < depth(15.0)); // β = 0.10 vs 0.25 at fixed L_J, C, N
        assert!(depth(15.0) < depth(24.0));
    }

    #[test]
    fn effective_environment_transform() {
        let omega = TAU * 5.81e9;
        let (r_p, c_p) = effective_environment(50.0, 0.26e-12, omega);
        assert_relative_eq!(r_p, 272.0, max_relative = 2e-3);
        assert_relative_eq!(c_p, 0.212e-12, max_relative = 2e-3);

        // Exact identity: parallel pair recombines to the series original.
        let x_p = 1.0 / (omega * c_p);
        let z_re = r_p * x_p * x_p / (r_p * r_p + x_p * x_p);
        let z_im = r_p * r_p * x_p / (r_p * r_p + x_p * x_p);
        assert_relative_eq!(z_re, 50.0, max_relative = 1e-12);
        assert_relative_eq!(1.0 / (omega * z_im), 0.26e-12, max_relative = 1e-12);

        // Limits: huge C_c → short (r_p → z0); ω → 0 → open (r_p → ∞).
        let (r_short, _) = effective_environment(50.0, 1.0, omega);
        assert_relative_eq!(r_short, 50.0, max_relative = 1e-9);
        let (r_open, _) = effective_environment(50.0, 0.26e-12, 1e-3);
        assert!(r_open > 1e20);
    }
}
