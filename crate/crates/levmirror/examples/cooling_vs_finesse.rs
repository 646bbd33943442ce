//! Minimum phonon occupation versus cavity finesse: trapping beam at
//! delta_1 = 0.5 kappa (support power solved per point), cooling beam ten
//! times stronger at delta_2 = -omega_m. Ground-state cooling (n_min < 1)
//! switches on between F = 3000 and F = 5000.
//!
//! Run with:
//!   cargo run --release --example cooling_vs_finesse

use levmirror::budgets;
use levmirror::model::SimulationConfig;

fn main() {
    let cfg = SimulationConfig::default_paper();
    let grid = [1000.0, 1500.0, 2000.0, 3000.0, 5000.0, 7000.0, 10000.0, 20000.0];
    let rows = budgets::min_phonon_vs_finesse(&cfg, &grid, 0.1, 1e3);
    println!(
        "{:>9} {:>13} {:>13} {:>12} {:>10}",
        "finesse", "omega_m(kHz)", "kappa(kHz)", "P_total(W)", "n_min"
    );
    for r in &rows {
        if r.feasible {
            println!(
                "{:>9.0} {:>13.1} {:>13.1} {:>12.4} {:>10.4}",
                r.finesse,
                r.omega_m / (2e3 * std::f64::consts::PI),
                r.kappa / (2e3 * std::f64::consts::PI),
                r.input_power_total,
                r.min_phonons
            );
        } else {
            println!("{:>9.0} infeasible", r.finesse);
        }
    }
}
