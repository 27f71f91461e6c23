//! One-port reflection fitting.
//!
//! The model is a purely externally coupled (lossless) resonance
//!
//! ```text
//! S11(f) = scale · e^{−i·2π·τ·(f − f_mid)} · (f − f0 − iκ/2)/(f − f0 + iκ/2)
//! ```
//!
//! with a complex scale and a linear electrical delay as nuisance parameters.
//! Parameters are fit by Levenberg–Marquardt on the stacked re/im residuals.

use num_complex::Complex64;

use crate::error::{Error, Result};

use std::f64::consts::TAU;

/// Fitted one-port resonance.
#[derive(Debug, Clone)]
pub struct ReflectionFit {
    pub f0_hz: f64,
    /// Full linewidth κ, Hz.
    pub kappa_hz: f64,
    pub q_total: f64,
    pub scale: Complex64,
    /// Electrical delay, seconds.
    pub delay_s: f64,
    /// RMS of the complex residual, normalized to the RMS of the data.
    pub residual_rms: f64,
}

/// Internal parameter vector in normalized frequency units.
#[derive(Debug, Clone, Copy)]
struct P {
    x0: f64,     // resonance center, units of span
    w: f64,      // linewidth, units of span
    a_re: f64,
    a_im: f64,
    d: f64,      // delay phase across one span unit, radians
}

impl P {
    fn to_array(self) -> [f64; 5] {
        [self.x0, self.w, self.a_re, self.a_im, self.d]
    }
    fn from_array(a: [f64; 5]) -> Self {
        P {
            x0: a[0],
            w: a[1],
            a_re: a[2],
            a_im: a[3],
            d: a[4],
        }
    }
}

fn model(p: &P, x: f64) -> Complex64 {
    let scale = Complex64::new(p.a_re, p.a_im);
    let delay = Complex64::from_polar(1.0, -p.d * x);
    let dx = x - p.x0;
    let resonance = Complex64::new(dx, -0.5 * p.w) / Complex64::new(dx, 0.5 * p.w);
    scale * delay * resonance
}

fn residual_norm_sq(p: &P, xs: &[f64], data: &[Complex64]) -> f64 {
    xs.iter()
        .zip(data)
        .map(|(&x, s)| (model(p, x) - s).norm_sqr())
        .sum()
}

/// Solve the 5×5 normal equations by Gaussian elimination with partial
/// pivoting. Returns `None` when the system is singular.
fn solve5(mut a: [[f64; 5]; 5], mut b: [f64; 5]) -> Option<[f64; 5]> {
    for col in 0..5 {
        let pivot = (col..5).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..5 {
            let f = a[row][col] / a[col][col];
            for k in col..5 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 5];
    for col in (0..5).rev() {
        let mut acc = b[col];
        for k in (col + 1)..5 {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

fn levenberg_marquardt(start: P, xs: &[f64], data: &[Complex64]) -> (P, f64) {
    let mut p = start;
    let mut cost = residual_norm_sq(&p, xs, data);
    let mut lambda = 1e-3;
    let eps = 1e-7;

    for _ in 0..200 {
        // Numeric Jacobian of the stacked residuals, folded directly into
        // JᵀJ and Jᵀr.
        let base: Vec<Complex64> = xs.iter().map(|&x| model(&p, x)).collect();
        let mut jtj = [[0.0; 5]; 5];
        let mut jtr = [0.0; 5];
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(5);
        let arr = p.to_array();
        for k in 0..5 {
            let mut bumped = arr;
            let h = eps * arr[k].abs().max(1e-4);
            bumped[k] += h;
            let pb = P::from_array(bumped);
            cols.push(
                xs.iter()
                    .zip(&base)
                    .map(|(&x, b)| (model(&pb, x) - b) / h)
                    .collect(),
            );
        }
        for (i, (&_x, s)) in xs.iter().zip(data).enumerate() {
            let r = base[i] - s;
            for a in 0..5 {
                jtr[a] += cols[a][i].re * r.re + cols[a][i].im * r.im;
                for b in a..5 {
                    jtj[a][b] += cols[a][i].re * cols[b][i].re + cols[a][i].im * cols[b][i].im;
                }
            }
        }
        for a in 0..5 {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }

        let mut improved = false;
        for _ in 0..12 {
            let mut damped = jtj;
            for d in 0..5 {
                damped[d][d] += lambda * jtj[d][d].max(1e-12);
            }
            let neg_jtr = [-jtr[0], -jtr[1], -jtr[2], -jtr[3], -jtr[4]];
            if let Some(step) = solve5(damped, neg_jtr) {
                let mut trial = p.to_array();
                for k in 0..5 {
                    trial[k] += step[k];
                }
                let cand = P::from_array(trial);
                let cand_cost = residual_norm_sq(&cand, xs, data);
                if cand_cost.is_finite() && cand_cost < cost {
                    p = cand;
                    cost = cand_cost;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    (p, cost)
}

/// Least-squares fit of a single one-port resonance to a complex S11 trace.
///
/// Recovers (f0, Q) up to an overall complex scale and linear delay. Errors
/// with [`Error::FitDiverged`] when the optimizer fails or the fitted
/// linewidth shows the trace covers less than half a linewidth.
pub fn fit_reflection(trace: &[(f64, Complex64)]) -> Result<ReflectionFit> {
    if trace.len() < 8 {
        return Err(Error::FitDiverged {
            reason: format!("only {} points", trace.len()),
            residual: f64::NAN,
        });
    }
    let f_lo = trace.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let f_hi = trace.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = f_hi - f_lo;
    if !(span > 0.0) {
        return Err(Error::FitDiverged {
            reason: "zero frequency span".into(),
            residual: f64::NAN,
        });
    }
    let f_mid = 0.5 * (f_lo + f_hi);
    let xs: Vec<f64> = trace.iter().map(|p| (p.0 - f_mid) / span).collect();
    let data: Vec<Complex64> = trace.iter().map(|p| p.1).collect();
    let data_rms = (data.iter().map(|s| s.norm_sqr()).sum::<f64>() / data.len() as f64).sqrt();

    // Off-resonance reference: average of the trace ends. The resonance point
    // is diametrically opposite on the S11 circle, so the farthest sample
    // seeds x0.
    let edge = (data[0] + data[data.len() - 1]) * 0.5;
    let far_idx = (0..data.len())
        .max_by(|&i, &j| {
            (data[i] - edge)
                .norm()
                .total_cmp(&(data[j] - edge).norm())
        })
        .unwrap();

    // Delay seed from the unwrapped end-to-end phase: the model phase is
    // arg(scale) − d·x plus the resonance's own swing, which contributes up
    // to a full −2π across a wide trace. Branch candidates cover both.
    let mut unwrapped = 0.0;
    let mut prev = data[0].arg();
    for s in &data[1..] {
        let mut dp = s.arg() - prev;
        while dp > std::f64::consts::PI {
            dp -= TAU;
        }
        while dp < -std::f64::consts::PI {
            dp += TAU;
        }
        unwrapped += dp;
        prev = s.arg();
    }
    let x_span = xs[xs.len() - 1] - xs[0];
    let d_base = -unwrapped / x_span;
    let d_candidates = [d_base, d_base - TAU, d_base + TAU, 0.0];

    let mut best: Option<(P, f64)> = None;
    for &d_init in &d_candidates {
        for w_init in [0.02, 0.08, 0.3, 1.0] {
            let start = P {
                x0: xs[far_idx],
                w: w_init,
                a_re: edge.re,
                a_im: edge.im,
                d: d_init,
            };
            let (p, cost) = levenberg_marquardt(start, &xs, &data);
            if best.as_ref().map_or(true, |(_, c)| cost < *c) {
                best = Some((p, cost));
            }
        }
    }
    let (p, cost) = best.unwrap();
    let residual_rms = (cost / data.len() as f64).sqrt() / data_rms.max(1e-300);

    let kappa_hz = p.w.abs() * span;
    let f0_hz = f_mid + p.x0 * span;
    if !cost.is_finite() || residual_rms > 0.5 {
        return Err(Error::FitDiverged {
            reason: "optimizer failed to reduce the residual".into(),
            residual: residual_rms,
        });
    }
    if span < 0.5 * kappa_hz {
        return Err(Error::FitDiverged {
            reason: format!(
                "trace spans {:.2} linewidths; at least half a linewidth required",
                span / kappa_hz
            ),
            residual: residual_rms,
        });
    }
    if f0_hz < f_lo - span || f0_hz > f_hi + span {
        return Err(Error::FitDiverged {
            reason: "fitted resonance far outside the trace".into(),
            residual: residual_rms,
        });
    }

    Ok(ReflectionFit {
        f0_hz,
        kappa_hz,
        q_total: f0_hz / kappa_hz,
        scale: Complex64::new(p.a_re, p.a_im),
        delay_s: p.d / (TAU * span),
        residual_rms,
    })
}
