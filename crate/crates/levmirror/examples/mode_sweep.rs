//! Mechanical frequency of the optical spring versus trapping-beam detuning,
//! for four cavity finesses, holding the mirror at force balance (the input
//! power is re-solved at every grid point).
//!
//! Run with:
//!   cargo run --release --example mode_sweep

use levmirror::model::SimulationConfig;
use levmirror::modes;

fn main() {
    let cfg = SimulationConfig::default_paper();
    let finesses = [1000.0, 3000.0, 5000.0, 10000.0];
    let grid: Vec<f64> = (1..=19).map(|i| i as f64 / 20.0).collect();
    let rows = modes::frequency_vs_detuning(&cfg, &finesses, &grid, 1e3);

    println!("{:>10} {:>14} {:>16} {:>16}", "finesse", "delta/kappa", "f_vertical(kHz)", "P_total(W)");
    for r in &rows {
        if r.feasible {
            println!(
                "{:>10.0} {:>14.3} {:>16.2} {:>16.4}",
                r.finesse,
                r.detuning_over_kappa,
                r.omega_m_vertical / (2e3 * std::f64::consts::PI),
                r.input_power_total
            );
        } else {
            println!("{:>10.0} {:>14.3} {:>16} {:>16}", r.finesse, r.detuning_over_kappa, "infeasible", "-");
        }
    }
}
