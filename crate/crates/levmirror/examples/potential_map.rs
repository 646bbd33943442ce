//! Sample the trapping potential around the central trap on x-y and y-z
//! planes and write CSV maps for isopotential plotting.
//!
//! Run with:
//!   cargo run --release --example potential_map [out_dir]

use levmirror::model::SimulationConfig;
use levmirror::potential::{self, GridPlane};
use levmirror::traps::{self, SolverOptions};
use nalgebra::Vector3;
use std::io::Write;

fn main() -> levmirror::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out".into());
    std::fs::create_dir_all(&out)?;

    let mut cfg = SimulationConfig::default_paper();
    let p_total = traps::solve_support_power(&cfg, 0.5, None)?;
    let scale = p_total / cfg.drive.total_trap_power();
    cfg.drive.scale_trap_power(scale);
    let site = traps::find_site_near(&cfg, Vector3::zeros(), &SolverOptions::default())?;

    for (name, plane, half) in [
        ("potential_xy.csv", GridPlane::Xy, (6e-8, 6e-8)),
        ("potential_yz.csv", GridPlane::Yz, (6e-8, 1.5e-9)),
    ] {
        let grid = potential::potential_grid(&cfg, site.position, plane, half, (121, 121))?;
        let path = format!("{out}/{name}");
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(f, "x,y,z,potential")?;
        for (x, y, z, u) in grid {
            writeln!(f, "{x:e},{y:e},{z:e},{u:e}")?;
        }
        println!("wrote {path}");
    }
    println!("potential is relative to the trap centre (J)");
    Ok(())
}
