//! Grid exploration of the (L_s, Q) amplifier design space: per-cell families
//! at a fixed operating frequency, the 20 dB achievability boundary, and
//! bias-flux × pump-power gain contours with saturation and efficiency along
//! the selected branch.

use rayon::prelude::*;

use crate::circuit::{max_c3_bias, solve_dc_phase, CircuitParams, FluxBias};
use crate::error::{Error, Result};
use crate::metrics::{
    pump_added_efficiency, saturation_sweep, snap_pump_frequency, tune_pump, ProbeSettings,
    PumpSpec, TuneSettings,
};
use crate::units::ratio_to_db;

use std::f64::consts::TAU;

/// Parameters held fixed across a design map.
#[derive(Debug, Clone)]
pub struct MapFixed {
    /// Josephson inductance, H.
    pub l_junction: f64,
    pub n_squids: u32,
    /// Operating resonant frequency at the chosen bias, Hz.
    pub f0_target_hz: f64,
    pub target_gain_db: f64,
}

/// Construct one amplifier family member: bias at maximal |c3|, then C chosen
/// so ω₀(bias) hits `f0_target` exactly and r_env chosen so Q(bias) equals
/// `q_target` exactly.
///
/// At the max-|c3| bias the junction term drops out of the stiffness
/// (cos(Δφ/N) = 0), so L_arr = N·L_s in closed form and
/// C = 1/(ω₀²·L_arr), r_env = Q·√(L_arr/C).
pub fn build_family(
    l_shunt: f64,
    q_target: f64,
    l_junction: f64,
    n_squids: u32,
    f0_target: f64,
) -> Result<(CircuitParams, FluxBias)> {
    if !(q_target > 0.0) || !(f0_target > 0.0) {
        return Err(Error::InvalidParameter {
            name: "q_target/f0_target",
            value: q_target.min(f0_target),
            requirement: "> 0",
        });
    }
    let l_arr = n_squids as f64 * l_shunt;
    let omega_t = TAU * f0_target;
    let c_main = 1.0 / (omega_t * omega_t * l_arr);
    let r_env = q_target * (l_arr / c_main).sqrt();
    let params = CircuitParams::new(n_squids, l_shunt, l_junction, c_main, None, r_env)?;
    let bias = max_c3_bias(&params)?;
    Ok((params, bias))
}

/// Completion status of one design-map cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    /// Tuned to target gain with a measured 1-dB point.
    Ok,
    /// Pump tune-up topped out below the target.
    No20Db,
    /// The pipeline failed for another reason (noted per cell).
    Diverged,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::No20Db => "no_20db",
            CellStatus::Diverged => "diverged",
        }
    }
}

/// Everything measured for one (L_s, Q) grid point.
#[derive(Debug, Clone)]
pub struct DesignMapCell {
    pub l_shunt: f64,
    pub beta: f64,
    pub q_target: f64,
    /// Chosen to put ω₀(bias) at the family's operating frequency.
    pub c_main: f64,
    /// Chosen to put Q(bias) at `q_target`.
    pub r_env: f64,
    pub bias: Option<FluxBias>,
    /// Bookkeeping for the achievability boundary.
    pub beta_q_inv: f64,
    pub pump_frequency_hz: Option<f64>,
    pub pump_power_20db_dbm: Option<f64>,
    /// Achieved gain for ok cells, best gain found otherwise.
    pub max_gain_db: Option<f64>,
    pub input_p1db_dbm: Option<f64>,
    pub output_p1db_dbm: Option<f64>,
    pub eta_pae: Option<f64>,
    pub status: CellStatus,
    pub note: String,
}

/// Per-cell measurement settings for a design map.
#[derive(Debug, Clone)]
pub struct MapSettings {
    pub tune: TuneSettings,
    /// Input-power grid for the compression sweep, dBm.
    pub saturation_powers: Vec<f64>,
}

impl Default for MapSettings {
    fn default() -> Self {
        Self {
            tune: TuneSettings::default(),
            saturation_powers: crate::metrics::power_grid(-130.0, -75.0, 1.0),
        }
    }
}

fn evaluate_cell(
    l_shunt: f64,
    q_target: f64,
    fixed: &MapFixed,
    settings: &MapSettings,
) -> DesignMapCell {
    let beta = l_shunt / fixed.l_junction;
    let beta_q_inv = 1.0 / (beta * q_target);
    let mut cell = DesignMapCell {
        l_shunt,
        beta,
        q_target,
        c_main: f64::NAN,
        r_env: f64::NAN,
        bias: None,
        beta_q_inv,
        pump_frequency_hz: None,
        pump_power_20db_dbm: None,
        max_gain_db: None,
        input_p1db_dbm: None,
        output_p1db_dbm: None,
        eta_pae: None,
        status: CellStatus::Diverged,
        note: String::new(),
    };

    let (params, bias) = match build_family(
        l_shunt,
        q_target,
        fixed.l_junction,
        fixed.n_squids,
        fixed.f0_target_hz,
    ) {
        Ok(pair) => pair,
        Err(err) => {
            cell.note = format!("family construction failed: {err}");
            return cell;
        }
    };
    cell.c_main = params.c_main;
    cell.r_env = params.r_env;
    cell.bias = Some(bias.clone());

    let tune = match tune_pump(&params, &bias, fixed.target_gain_db, &settings.tune) {
        Ok(tune) => tune,
        Err(Error::MaxGainBelowTarget { max_gain_db, .. }) => {
            cell.status = CellStatus::No20Db;
            cell.max_gain_db = if max_gain_db.is_finite() {
                Some(max_gain_db)
            } else {
                None
            };
            return cell;
        }
        Err(err) => {
            cell.note = format!("tune-up failed: {err}");
            return cell;
        }
    };
    cell.pump_frequency_hz = Some(tune.pump_frequency_hz);
    cell.max_gain_db = Some(tune.achieved_gain_db);

    let pump = PumpSpec {
        frequency_hz: tune.pump_frequency_hz,
        power_dbm: tune.pump_power_dbm,
    };
    let sat = match saturation_sweep(
        &params,
        &bias,
        pump,
        &settings.tune.probe,
        &settings.saturation_powers,
        &settings.tune.solver,
    ) {
        Ok(sat) => sat,
        Err(err) => {
            cell.note = format!("saturation sweep failed: {err}");
            return cell;
        }
    };
    let pae = pump_added_efficiency(&sat, tune.pump_power_dbm);

    cell.pump_power_20db_dbm = Some(tune.pump_power_dbm);
    cell.input_p1db_dbm = Some(sat.input_p1db_dbm);
    cell.output_p1db_dbm = Some(sat.output_p1db_dbm);
    cell.eta_pae = Some(pae.linear);
    cell.status = CellStatus::Ok;
    cell
}

/// Evaluate the full (L_s, Q) grid. Cells run concurrently and never abort
/// the map; failures are captured in each cell's status. Results are
/// reproducible and independent of thread count.
pub fn design_map(
    l_shunt_grid: &[f64],
    q_grid: &[f64],
    fixed: &MapFixed,
    settings: &MapSettings,
) -> Vec<DesignMapCell> {
    let cells: Vec<(f64, f64)> = l_shunt_grid
        .iter()
        .flat_map(|&l| q_grid.iter().map(move |&q| (l, q)))
        .collect();
    cells
        .par_iter()
        .map(|&(l, q)| evaluate_cell(l, q, fixed, settings))
        .collect()
}

/// One gain sample of the bias × pump-power grid.
#[derive(Debug, Clone, Copy)]
pub struct BiasGainPoint {
    pub phi_e: f64,
    pub pump_power_dbm: f64,
    /// `None` marks a diverged/unsettled run, excluded from contours.
    pub gain_db: Option<f64>,
}

/// A target-gain crossing in pump power at one bias.
#[derive(Debug, Clone, Copy)]
pub struct BranchPoint {
    pub phi_e: f64,
    pub pump_power_dbm: f64,
}

/// Saturation and efficiency measured on the low branch.
#[derive(Debug, Clone, Copy)]
pub struct AlongBranchPoint {
    pub phi_e: f64,
    pub pump_power_dbm: f64,
    pub input_p1db_dbm: f64,
    pub output_p1db_dbm: f64,
    pub eta_pae: f64,
}

/// Gain over (φ_e × pump power) with the target-gain contour split into the
/// first-crossing (low) branch and the post-maximum (high) branch.
#[derive(Debug, Clone)]
pub struct BiasContour {
    pub grid: Vec<BiasGainPoint>,
    pub low_branch: Vec<BranchPoint>,
    pub high_branch: Vec<BranchPoint>,
    pub along_branch: Vec<AlongBranchPoint>,
}

/// Settings for [`bias_pump_map`].
#[derive(Debug, Clone)]
pub struct BiasMapSettings {
    pub probe: ProbeSettings,
    pub solver: crate::dynamics::SolverOptions,
    /// Input powers for the along-branch compression sweeps, dBm.
    pub saturation_powers: Vec<f64>,
}

impl Default for BiasMapSettings {
    fn default() -> Self {
        Self {
            probe: ProbeSettings::default(),
            solver: crate::dynamics::SolverOptions::default(),
            saturation_powers: crate::metrics::power_grid(-130.0, -75.0, 1.0),
        }
    }
}

/// Sweep gain over a flux-bias × pump-power grid, classify the target-gain
/// crossings at each bias, and measure P1dB and η_PAE along the low branch.
/// The pump retunes to 2ω₀(φ_e) at every bias.
pub fn bias_pump_map(
    params: &CircuitParams,
    phi_e_grid: &[f64],
    pump_power_grid_dbm: &[f64],
    target_gain_db: f64,
    settings: &BiasMapSettings,
) -> Result<BiasContour> {
    use std::f64::consts::PI;
    if phi_e_grid.iter().any(|&p| p <= 0.0 || p >= PI) {
        return Err(Error::InvalidParameter {
            name: "phi_e_grid",
            value: f64::NAN,
            requirement: "every bias inside (0, π)",
        });
    }
    let mut powers = pump_power_grid_dbm.to_vec();
    powers.sort_by(f64::total_cmp);

    let mut solver = settings.solver.clone();
    solver.target_gain_hint_db = solver.target_gain_hint_db.max(target_gain_db);

    struct BiasRow {
        phi_e: f64,
        points: Vec<BiasGainPoint>,
        low: Option<BranchPoint>,
        high: Option<BranchPoint>,
        along: Option<AlongBranchPoint>,
    }

    let rows: Vec<BiasRow> = phi_e_grid
        .par_iter()
        .map(|&phi_e| -> Result<BiasRow> {
            let bias = solve_dc_phase(params, phi_e)?;
            let pump_f = snap_pump_frequency(2.0 * bias.f0_hz(), settings.probe.base_frequency_hz);
            let gains: Vec<BiasGainPoint> = powers
                .par_iter()
                .map(|&p_dbm| {
                    let drive = crate::metrics::tuned_drive(params, pump_f, p_dbm, &settings.probe)?;
                    match crate::dynamics::integrate_to_steady_state(params, &bias, &drive, &solver)
                    {
                        Ok(sol) => {
                            let sig = drive.probes().next().expect("probe").index;
                            Ok(BiasGainPoint {
                                phi_e,
                                pump_power_dbm: p_dbm,
                                gain_db: sol.reflection_gain_db(sig),
                            })
                        }
                        Err(Error::NoConvergence { .. }) | Err(Error::DivergedTrajectory { .. }) => {
                            Ok(BiasGainPoint {
                                phi_e,
                                pump_power_dbm: p_dbm,
                                gain_db: None,
                            })
                        }
                        Err(err) => Err(err),
                    }
                })
                .collect::<Result<_>>()?;

            // Branch classification: first rising crossing before the gain
            // maximum is the low branch; the first falling crossing after the
            // maximum is the high branch.
            let valid: Vec<(f64, f64)> = gains
                .iter()
                .filter_map(|g| g.gain_db.map(|v| (g.pump_power_dbm, v)))
                .collect();
            let mut low = None;
            let mut high = None;
            if let Some((max_idx, _)) = valid
                .iter()
                .enumerate()
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            {
                let interp = |a: (f64, f64), b: (f64, f64)| {
                    a.0 + (target_gain_db - a.1) * (b.0 - a.0) / (b.1 - a.1)
                };
                for w in valid[..=max_idx].windows(2) {
                    if w[0].1 < target_gain_db && w[1].1 >= target_gain_db {
                        low = Some(BranchPoint {
                            phi_e,
                            pump_power_dbm: interp(w[0], w[1]),
                        });
                        break;
                    }
                }
                for w in valid[max_idx..].windows(2) {
                    if w[0].1 >= target_gain_db && w[1].1 < target_gain_db {
                        high = Some(BranchPoint {
                            phi_e,
                            pump_power_dbm: interp(w[1], w[0]),
                        });
                        break;
                    }
                }
            }

            let along = match low {
                Some(point) => {
                    let pump = PumpSpec {
                        frequency_hz: pump_f,
                        power_dbm: point.pump_power_dbm,
                    };
                    match saturation_sweep(
                        params,
                        &bias,
                        pump,
                        &settings.probe,
                        &settings.saturation_powers,
                        &solver,
                    ) {
                        Ok(sat) => {
                            let pae = pump_added_efficiency(&sat, point.pump_power_dbm);
                            Some(AlongBranchPoint {
                                phi_e,
                                pump_power_dbm: point.pump_power_dbm,
                                input_p1db_dbm: sat.input_p1db_dbm,
                                output_p1db_dbm: sat.output_p1db_dbm,
                                eta_pae: pae.linear,
                            })
                        }
                        Err(Error::NoCompressionInRange { .. }) => None,
                        Err(Error::NoConvergence { .. })
                        | Err(Error::DivergedTrajectory { .. }) => None,
                        Err(err) => return Err(err),
                    }
                }
                None => None,
            };

            Ok(BiasRow {
                phi_e,
                points: gains,
                low,
                high,
                along,
            })
        })
        .collect::<Result<_>>()?;

    let mut contour = BiasContour {
        grid: Vec::new(),
        low_branch: Vec::new(),
        high_branch: Vec::new(),
        along_branch: Vec::new(),
    };
    for row in rows {
        contour.grid.extend(row.points);
        if let Some(p) = row.low {
            contour.low_branch.push(p);
        }
        if let Some(p) = row.high {
            contour.high_branch.push(p);
        }
        if let Some(p) = row.along {
            contour.along_branch.push(p);
        }
        let _ = row.phi_e;
    }
    Ok(contour)
}

/// One fixed-(βQ)⁻¹ column of the efficiency tables, sorted by Q.
#[derive(Debug, Clone)]
pub struct EfficiencyColumn {
    pub beta_q_inv: f64,
    /// (Q, pump power for target gain dBm, η_PAE linear).
    pub entries: Vec<(f64, f64, f64)>,
    pub pump_power_increases_with_q: bool,
    pub pae_decreases_with_q: bool,
}

/// Pump-power and η_PAE tables over the map, grouped into fixed-(βQ)⁻¹
/// columns (ok cells only).
pub fn efficiency_maps(cells: &[DesignMapCell]) -> Vec<EfficiencyColumn> {
    let mut columns: Vec<EfficiencyColumn> = Vec::new();
    let mut keys: Vec<f64> = Vec::new();
    for cell in cells {
        if cell.status != CellStatus::Ok {
            continue;
        }
        let (pump, pae) = match (cell.pump_power_20db_dbm, cell.eta_pae) {
            (Some(p), Some(e)) => (p, e),
            _ => continue,
        };
        let key = cell.beta_q_inv;
        let idx = keys
            .iter()
            .position(|&k| (k - key).abs() <= 1e-9 * k.abs().max(1e-30));
        let column = match idx {
            Some(i) => &mut columns[i],
            None => {
                keys.push(key);
                columns.push(EfficiencyColumn {
                    beta_q_inv: key,
                    entries: Vec::new(),
                    pump_power_increases_with_q: true,
                    pae_decreases_with_q: true,
                });
                columns.last_mut().unwrap()
            }
        };
        column.entries.push((cell.q_target, pump, pae));
    }
    for column in &mut columns {
        column.entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        column.pump_power_increases_with_q =
            column.entries.windows(2).all(|w| w[1].1 > w[0].1);
        column.pae_decreases_with_q = column.entries.windows(2).all(|w| w[1].2 < w[0].2);
    }
    columns.sort_by(|a, b| a.beta_q_inv.total_cmp(&b.beta_q_inv));
    columns
}

/// Spread of input 1-dB points across the ok cells of a map, in dB.
pub fn input_p1db_spread_db(cells: &[DesignMapCell]) -> Option<f64> {
    let values: Vec<f64> = cells.iter().filter_map(|c| c.input_p1db_dbm).collect();
    if values.is_empty() {
        return None;
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Some(max - min)
}

/// Convenience for reporting: (βQ)⁻¹ expressed from a gain ratio in dB.
pub fn gain_db(linear: f64) -> f64 {
    ratio_to_db(linear)
}
