//! Scan the triangular lattice of trap sites in a 60 um x 60 um x 40 nm
//! region around the central trap and print the nearest-neighbour spacing
//! statistics.
//!
//! Run with:
//!   cargo run --release --example trap_lattice

use levmirror::model::SimulationConfig;
use levmirror::traps::{self, Region, SolverOptions};
use nalgebra::Vector3;

fn main() -> levmirror::Result<()> {
    let mut cfg = SimulationConfig::default_paper();
    let p_total = traps::solve_support_power(&cfg, 0.5, None)?;
    let scale = p_total / cfg.drive.total_trap_power();
    cfg.drive.scale_trap_power(scale);

    let opts = SolverOptions::default();
    let central = traps::find_site_near(&cfg, Vector3::zeros(), &opts)?;
    let region = Region::centered(central.position, Vector3::new(3e-5, 3e-5, 2e-8));
    let scan = traps::scan_lattice(&cfg, region, &opts)?;

    println!("stable sites: {}", scan.sites.len());
    for s in &scan.sites {
        println!(
            "  ({:+8.2} um, {:+8.2} um, {:+7.2} nm)   delta/kappa = {:.4}",
            s.position.x * 1e6,
            s.position.y * 1e6,
            s.position.z * 1e9,
            s.detunings[0]
        );
    }
    if let Some(sp) = scan.spacing {
        println!(
            "xy nearest-neighbour spacing: mean {:.2} um (min {:.2}, max {:.2})",
            sp.mean * 1e6,
            sp.min * 1e6,
            sp.max * 1e6
        );
        let predicted = cfg.drive.beams[0].wavelength
            / (3.0_f64.sqrt() * cfg.geometry.tilt_angle.sin());
        println!("geometric prediction lambda/(sqrt(3) sin(tilt)): {:.2} um", predicted * 1e6);
    }
    Ok(())
}
