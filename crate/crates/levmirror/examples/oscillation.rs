//! Displace the mirror 0.1 nm vertically and integrate the conservative
//! quasi-static motion: the oscillation frequency matches the stiffness
//! eigenmode and the energy drift stays at the integrator level.
//!
//! Run with:
//!   cargo run --release --example oscillation

use levmirror::dynamics::{self, DynOptions, MechState};
use levmirror::model::SimulationConfig;
use levmirror::modes;
use levmirror::potential::AnchoredPotential;
use levmirror::traps::{self, SolverOptions};
use nalgebra::Vector3;

fn main() -> levmirror::Result<()> {
    let mut cfg = SimulationConfig::default_paper();
    let p_total = traps::solve_support_power(&cfg, 0.5, None)?;
    let scale = p_total / cfg.drive.total_trap_power();
    cfg.drive.scale_trap_power(scale);
    let site = traps::find_site_near(&cfg, Vector3::zeros(), &SolverOptions::default())?;
    let mset = modes::mode_frequencies(&site, cfg.mirror.mass)?;
    let (omega_v, _) = mset.vertical();
    let period = 2.0 * std::f64::consts::PI / omega_v;

    let opts = DynOptions {
        output_interval: period / 64.0,
        ..DynOptions::default()
    };
    let start = MechState::at_rest(site.position + Vector3::new(0.0, 0.0, 1e-10));
    let traj = dynamics::simulate_quasistatic(&cfg, start, 0.0, 200.0 * period, &opts)?;

    let f_measured = dynamics::vertical_crossing_frequency(&traj.samples, site.position.z).unwrap();
    let f_expected = omega_v / (2.0 * std::f64::consts::PI);
    println!("eigenmode frequency:     {f_expected:.1} Hz");
    println!("zero-crossing frequency: {f_measured:.1} Hz");
    println!("relative deviation:      {:.2e}", (f_measured / f_expected - 1.0).abs());

    let anchored = AnchoredPotential::new(
        start.position,
        &cfg.geometry,
        &cfg.drive,
        &cfg.mirror,
        cfg.constants.g0,
    )?;
    let e0 = dynamics::mechanical_energy(&cfg, &anchored, &traj.samples[0]);
    let drift = traj
        .samples
        .iter()
        .map(|s| (dynamics::mechanical_energy(&cfg, &anchored, s) - e0).abs())
        .fold(0.0_f64, f64::max);
    let u_site = anchored.value(site.position - start.position);
    println!("energy drift over 200 periods: {:.2e} relative", drift / (e0 - u_site).abs());
    println!(
        "integrator: {} accepted / {} rejected steps",
        traj.stats.accepted_steps, traj.stats.rejected_steps
    );
    Ok(())
}
