//! Total trapping input power required to float the mirror versus the
//! normalized detuning, and its scaling with finesse and mass.
//!
//! Run with:
//!   cargo run --release --example support_power

use levmirror::model::SimulationConfig;
use levmirror::traps;

fn main() -> levmirror::Result<()> {
    let cfg = SimulationConfig::default_paper();
    println!("detuning sweep at F = 1000, m = 0.3 mg:");
    for detuning in [0.1, 0.25, 0.5, 0.75, 1.0, 2.0] {
        let p = traps::solve_support_power(&cfg, detuning, None)?;
        println!("  delta = {detuning:4.2} kappa -> P_total = {p:7.3} W");
    }

    println!("finesse sweep at delta = 0.5 kappa:");
    for finesse in [500.0, 1000.0, 3000.0, 10000.0] {
        let mut c = cfg.clone();
        for b in &mut c.drive.beams {
            b.finesse = finesse;
        }
        let p = traps::solve_support_power(&c, 0.5, None)?;
        println!("  F = {finesse:6.0} -> P_total = {p:7.4} W");
    }

    let mut heavy = cfg.clone();
    heavy.mirror.mass *= 2.0;
    let p1 = traps::solve_support_power(&cfg, 0.5, None)?;
    let p2 = traps::solve_support_power(&heavy, 0.5, None)?;
    println!("doubling the mass: {p1:.4} W -> {p2:.4} W (ratio {:.6})", p2 / p1);
    Ok(())
}
