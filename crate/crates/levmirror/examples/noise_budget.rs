//! Full heating/cooling/noise budget of the default configuration at its
//! central trap, printed as JSON.
//!
//! Run with:
//!   cargo run --release --example noise_budget

use levmirror::budgets;
use levmirror::model::SimulationConfig;

fn main() -> levmirror::Result<()> {
    let cfg = SimulationConfig::default_paper();
    let report = budgets::assemble_budget(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    println!();
    println!("gas damping gamma_m     = {:.3e} 1/s", report.gas.damping_rate);
    println!("gas thermal occupation  = {:.3e}", report.gas.thermal_phonons);
    println!("intensity heating       = {:.3e} 1/s (tau_e = {:.1} s)",
        report.laser_noise.heating_rate, report.laser_noise.efold_time);
    println!("cooling minimum phonons = {:.3e}", report.cooling.min_phonons);
    println!("combined occupation     = {:.3e}", report.cooling.combined_phonons);
    println!("gravimetric precision   = {:.3e}", report.gravimetry.delta_g_over_g);
    Ok(())
}
