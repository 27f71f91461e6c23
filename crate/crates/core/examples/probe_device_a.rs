use jpa_core::circuit::array_inductance;
use jpa_core::design_space::build_family;
use jpa_core::metrics::*;
use jpa_core::units;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let (params, bias) = build_family(units::ph_to_h(15.0), 8.1, units::ph_to_h(60.0), 25, 6e9).unwrap();
    println!(
        "device-A cell: C = {:.4} pF, r_env = {:.2} ohm, f0 = {:.4} GHz, L_arr = {:.1} pH, Q = {:.3}",
        units::f_to_pf(params.c_main),
        params.r_env,
        bias.f0_hz() / 1e9,
        units::h_to_ph(array_inductance(&params, &bias)),
        params.quality_factor(&bias)
    );
    let settings = TuneSettings::default();
    match tune_pump(&params, &bias, 20.0, &settings) {
        Ok(tune) => {
            println!(
                "tuned: pump {:.3} dBm at {:.4} GHz -> {:.3} dB gain ({} runs, {:.1} s)",
                tune.pump_power_dbm,
                tune.pump_frequency_hz / 1e9,
                tune.achieved_gain_db,
                tune.samples.len(),
                t0.elapsed().as_secs_f64()
            );
            for s in &tune.samples {
                println!("  pump {:+8.3} dBm  gain {:?}", s.pump_power_dbm, s.gain_db);
            }
            let t1 = Instant::now();
            let pump = PumpSpec { frequency_hz: tune.pump_frequency_hz, power_dbm: tune.pump_power_dbm };
            let powers = power_grid(-130.0, -80.0, 1.0);
            match saturation_sweep(&params, &bias, pump, &settings.probe, &powers, &settings.solver) {
                Ok(sat) => {
                    println!(
                        "saturation: input P1dB {:.2} dBm, output {:.2} dBm, ssg {:.3} dB ({:.1} s)",
                        sat.input_p1db_dbm, sat.output_p1db_dbm, sat.small_signal_gain_db,
                        t1.elapsed().as_secs_f64()
                    );
                    let pae = pump_added_efficiency(&sat, tune.pump_power_dbm);
                    println!("eta_PAE = {:.5} ({:.2} dB)", pae.linear, pae.db);
                }
                Err(e) => println!("saturation failed: {e}"),
            }
        }
        Err(e) => println!("tune failed: {e} ({:.1} s)", t0.elapsed().as_secs_f64()),
    }
    println!("total {:.1} s", t0.elapsed().as_secs_f64());
}
