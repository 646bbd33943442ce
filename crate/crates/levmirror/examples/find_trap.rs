//! Locate the central trap of the default configuration and print its
//! properties: position, detunings, stiffness eigenfrequencies, and the
//! isopotential extents.
//!
//! Run with:
//!   cargo run --release --example find_trap

use levmirror::model::SimulationConfig;
use levmirror::traps::{self, SolverOptions};
use nalgebra::Vector3;

fn main() -> levmirror::Result<()> {
    // Solve the input power that floats the mirror at delta = kappa/2, then
    // converge the equilibrium from the analytic seed.
    let mut cfg = SimulationConfig::default_paper();
    let p_total = traps::solve_support_power(&cfg, 0.5, None)?;
    let scale = p_total / cfg.drive.total_trap_power();
    cfg.drive.scale_trap_power(scale);
    println!("support power: {p_total:.3} W total ({:.3} W per beam)", p_total / 3.0);

    let site = traps::find_site_near(&cfg, Vector3::zeros(), &SolverOptions::default())?;
    println!("trap position: ({:.3e}, {:.3e}, {:.3e}) m", site.position.x, site.position.y, site.position.z);
    println!("residual force: {:.2e} N, stable: {}", site.residual_force, site.stable);
    for (n, d) in site.detunings.iter().enumerate() {
        println!("cavity {} detuning: {:.4} kappa", n + 1, d);
    }
    println!(
        "mode frequencies: {:.1} / {:.1} / {:.1} kHz",
        site.frequencies[0] / (2e3 * std::f64::consts::PI),
        site.frequencies[1] / (2e3 * std::f64::consts::PI),
        site.frequencies[2] / (2e3 * std::f64::consts::PI),
    );
    println!(
        "extents (half-widths): {:.1} nm / {:.1} nm horizontal, {:.2} nm vertical",
        site.extents[0] * 1e9,
        site.extents[1] * 1e9,
        site.extents[2] * 1e9
    );
    Ok(())
}
