//! Dynamic cavity-field model: the blue-detuned trapping beams alone pump
//! energy into the vertical mode (anti-damping). In the resolved-sideband
//! regime a dominant red beam at delta = -omega_m turns the envelope around.
//!
//! Run with:
//!   cargo run --release --example antidamping

use levmirror::dynamics::{self, DynOptions, MechState};
use levmirror::model::SimulationConfig;
use levmirror::modes;
use levmirror::optics;
use nalgebra::Vector3;

fn build(finesse: f64) -> levmirror::Result<(SimulationConfig, levmirror::TrapSite)> {
    let cfg0 = SimulationConfig::default_paper();
    let (site, p_total) = modes::trap_at(&cfg0, finesse, 0.5, 1e3)?;
    let mut cfg = cfg0;
    for b in &mut cfg.drive.beams {
        b.finesse = finesse;
        b.detuning_trap = 0.5 * optics::linewidth(finesse, cfg.geometry.nominal_length);
    }
    let current = cfg.drive.total_trap_power();
    cfg.drive.scale_trap_power(p_total / current);
    Ok((cfg, site))
}

fn main() -> levmirror::Result<()> {
    // Blue-detuned trapping beams only at F = 1000: anti-damping.
    let (mut cfg, site) = build(1000.0)?;
    for b in &mut cfg.drive.beams {
        b.input_power_cool = 0.0;
    }
    let (omega_v, _) = modes::mode_frequencies(&site, cfg.mirror.mass)?.vertical();
    let period = 2.0 * std::f64::consts::PI / omega_v;
    let opts = DynOptions {
        output_interval: period / 64.0,
        dt_max: 1e-7,
        ..DynOptions::default()
    };
    let start = MechState::at_rest(site.position + Vector3::new(0.0, 0.0, 5e-12));
    let traj = dynamics::simulate_dynamic(&cfg, start, None, 25.0 * period, &opts)?;
    let rate = dynamics::log_envelope_rate(&traj.samples, site.position.z, 10).unwrap();
    println!("F = 1000, blue-only: envelope rate {rate:+.1} 1/s (growth)");

    // Resolved sideband (F = 20000, omega_m > kappa): a 10x red beam at
    // -omega_m damps the motion. At low finesse the same beam would sit deep
    // inside the linewidth and its anti-spring would destroy the trap.
    let (mut cfg, site) = build(20000.0)?;
    let (omega_v, _) = modes::mode_frequencies(&site, cfg.mirror.mass)?.vertical();
    for b in &mut cfg.drive.beams {
        b.input_power_cool = 10.0 * b.input_power_trap;
        b.detuning_cool = Some(-omega_v);
    }
    let period = 2.0 * std::f64::consts::PI / omega_v;
    let opts = DynOptions {
        output_interval: period / 64.0,
        dt_max: 1e-7,
        ..DynOptions::default()
    };
    let start = MechState::at_rest(site.position + Vector3::new(0.0, 0.0, 5e-11));
    let traj = dynamics::simulate_dynamic(&cfg, start, None, 25.0 * period, &opts)?;
    let peaks = dynamics::envelope_peaks(&traj.samples, site.position.z);
    println!(
        "F = 20000, red-dominant: amplitude peaks {:.2e} -> {:.2e} m over {} half-periods (decay)",
        peaks.first().map(|p| p.1).unwrap_or(0.0),
        peaks.last().map(|p| p.1).unwrap_or(0.0),
        peaks.len()
    );
    Ok(())
}
