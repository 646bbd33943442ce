//! Command-line front end: configuration runs, sweeps, and figure-style
//! recipes with deterministic CSV/JSON artifacts.
//!
//! All data outputs are bit-reproducible: single-header CSV, '.' decimal,
//! 17-significant-digit floats, fixed row order (parallel sweeps merge in
//! deterministic key order). The run manifest additionally records wall-clock
//! duration and is therefore the one non-reproducible artifact.
//!
//! Exit codes: 0 success (including warnings), 2 config error, 3 numerical
//! failure, 4 i/o error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde::Serialize;

use crate::budgets;
use crate::dynamics::{self, DynOptions, MechState};
use crate::error::{Error, Result};
use crate::model::SimulationConfig;
use crate::modes;
use crate::potential::{self, GridPlane};
use crate::traps::{self, Region, SolverOptions};

/// Levitated-mirror simulator: trap lattice, optical-spring modes, dynamics,
/// and noise budgets for a mirror floated on three cavity optical springs.
#[derive(Debug, Parser)]
#[command(
    name = "levmirror",
    version,
    after_help = "Thread count: set RAYON_NUM_THREADS to override the worker pool size."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan the trap lattice and dump the site catalog and potential maps.
    TrapScan(TrapScanArgs),
    /// Mode-frequency sweep over detuning for a list of finesses.
    Modes(ModesArgs),
    /// Aggregated gas/laser/blackbody/cooling/gravimetry budget report.
    Budget(BudgetArgs),
    /// Integrate the mirror motion and dump the trajectory.
    Dynamics(DynamicsArgs),
}

#[derive(Debug, Args)]
pub struct TrapScanArgs {
    /// Configuration file (defaults apply when omitted).
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Half-width of the scan region in x and y (m).
    #[arg(long, default_value_t = 3.0e-5)]
    pub half_xy: f64,
    /// Half-height of the scan region in z (m).
    #[arg(long, default_value_t = 2.0e-8)]
    pub half_z: f64,
    /// Half-extent of the exported potential maps around the central trap (m).
    #[arg(long, default_value_t = 6.0e-8)]
    pub map_half_xy: f64,
    /// Vertical half-extent of the y-z potential map (m).
    #[arg(long, default_value_t = 1.5e-9)]
    pub map_half_z: f64,
    /// Grid points per axis of the potential maps.
    #[arg(long, default_value_t = 101)]
    pub map_points: usize,
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Comma-separated finesse list.
    #[arg(long, value_delimiter = ',', default_values_t = [1000.0, 3000.0, 5000.0, 10000.0])]
    pub finesse: Vec<f64>,
    /// Detuning grid as start:stop:count (delta/kappa) or a comma list.
    #[arg(long, default_value = "0.05:0.95:19")]
    pub detuning_grid: String,
    /// Upper end of the support-power bracket (W).
    #[arg(long, default_value_t = 1.0e3)]
    pub max_power: f64,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Detected power for the gravimetry estimate (W).
    #[arg(long, default_value_t = 0.1)]
    pub detected_power: f64,
    /// Integration time for the gravimetry estimate (s).
    #[arg(long, default_value_t = 100.0)]
    pub integration_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Quasistatic,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Beams {
    /// Trapping beams only (blue-detuned).
    Trap,
    /// Trapping plus cooling beams.
    Both,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Model::Quasistatic)]
    pub model: Model,
    /// Initial vertical displacement from the trap (nm).
    #[arg(long, default_value_t = 0.1)]
    pub displace: f64,
    /// Run duration (s); defaults to 50 vertical periods.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Which fields drive the dynamic model.
    #[arg(long, value_enum, default_value_t = Beams::Trap)]
    pub beams: Beams,
    /// Extra viscous damping rate for the quasistatic model (1/s).
    #[arg(long, default_value_t = 0.0)]
    pub damping: f64,
}

/// Parse argv and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(cmd: &Command) -> Result<()> {
    match cmd {
        Command::TrapScan(a) => cmd_trap_scan(a),
        Command::Modes(a) => cmd_modes(a),
        Command::Budget(a) => cmd_budget(a),
        Command::Dynamics(a) => cmd_dynamics(a),
    }
}

fn load(config: &Option<PathBuf>) -> Result<SimulationConfig> {
    match config {
        Some(path) => SimulationConfig::load(path),
        None => {
            let cfg = SimulationConfig::default_paper();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

/// Run manifest: resolved config snapshot and output inventory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Byte-identical re-loadable snapshot of the resolved configuration.
    pub config_snapshot: String,
    pub outputs: Vec<String>,
    pub wall_seconds: f64,
    /// Command-specific summary values.
    pub summary: serde_json::Value,
}

/// Staged output directory: files land under their final names only on
/// commit; anything staged before an error is removed.
struct OutputStage {
    dir: PathBuf,
    staged: Vec<(PathBuf, PathBuf)>,
    committed: bool,
}

impl OutputStage {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
            committed: false,
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, contents)?;
        self.staged.push((tmp, self.dir.join(name)));
        Ok(())
    }

    fn names(&self) -> Vec<String> {
        self.staged
            .iter()
            .map(|(_, f)| f.file_name().unwrap().to_string_lossy().into_owned())
            .collect()
    }

    fn commit(
        mut self,
        command: &str,
        cfg: &SimulationConfig,
        started: Instant,
        summary: serde_json::Value,
    ) -> Result<()> {
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_snapshot: cfg.serialize(),
            outputs: self.names(),
            wall_seconds: started.elapsed().as_secs_f64(),
            summary,
        };
        let manifest_tmp = self.dir.join(".manifest.json.tmp");
        std::fs::write(&manifest_tmp, serde_json::to_string_pretty(&manifest)?)?;
        self.staged
            .push((manifest_tmp, self.dir.join("manifest.json")));
        for (tmp, fin) in &self.staged {
            std::fs::rename(tmp, fin)?;
        }
        self.committed = true;
        Ok(())
    }
}

impl Drop for OutputStage {
    fn drop(&mut self) {
        if !self.committed {
            for (tmp, _) in &self.staged {
                let _ = std::fs::remove_file(tmp);
            }
        }
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn cmd_trap_scan(args: &TrapScanArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = load(&args.config)?;
    let opts = SolverOptions::default();
    let mut stage = OutputStage::new(&args.out)?;

    let mut csv = String::from(
        "x,y,z,detuning1_over_kappa,detuning2_over_kappa,detuning3_over_kappa,\
         omega1,omega2,omega3,extent1,extent2,extent3,\
         kxx,kxy,kxz,kyy,kyz,kzz,residual_force\n",
    );
    let mut summary = serde_json::Map::new();

    let region_empty = args.half_xy <= 0.0 || args.half_z <= 0.0;
    let scan = if region_empty {
        eprintln!("warning: empty scan region; producing an empty catalog");
        traps::LatticeScan {
            sites: Vec::new(),
            spacing: None,
        }
    } else {
        let central = traps::find_site_near(&cfg, Vector3::zeros(), &opts)?;
        let region = Region::centered(
            central.position,
            Vector3::new(args.half_xy, args.half_xy, args.half_z),
        );
        let scan = traps::scan_lattice(&cfg, region, &opts)?;

        // Potential maps around the central trap for isopotential plots.
        for (name, plane, half) in [
            (
                "potential_xy.csv",
                GridPlane::Xy,
                (args.map_half_xy, args.map_half_xy),
            ),
            (
                "potential_yz.csv",
                GridPlane::Yz,
                (args.map_half_xy, args.map_half_z),
            ),
        ] {
            let grid = potential::potential_grid(
                &cfg,
                central.position,
                plane,
                half,
                (args.map_points, args.map_points),
            )?;
            let mut g = String::from("x,y,z,potential\n");
            for (x, y, z, u) in grid {
                let _ = writeln!(g, "{},{},{},{}", fmt(x), fmt(y), fmt(z), fmt(u));
            }
            stage.write(name, &g)?;
        }
        summary.insert(
            "central_trap".into(),
            serde_json::json!({
                "x": central.position.x,
                "y": central.position.y,
                "z": central.position.z,
                "extents": [central.extents[0], central.extents[1], central.extents[2]],
            }),
        );
        scan
    };

    for s in &scan.sites {
        let row = [
            s.position.x,
            s.position.y,
            s.position.z,
            s.detunings[0],
            s.detunings[1],
            s.detunings[2],
            s.frequencies[0],
            s.frequencies[1],
            s.frequencies[2],
            s.extents[0],
            s.extents[1],
            s.extents[2],
            s.stiffness[(0, 0)],
            s.stiffness[(0, 1)],
            s.stiffness[(0, 2)],
            s.stiffness[(1, 1)],
            s.stiffness[(1, 2)],
            s.stiffness[(2, 2)],
            s.residual_force,
        ];
        let _ = writeln!(
            csv,
            "{}",
            row.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(",")
        );
    }
    stage.write("sites.csv", &csv)?;

    let spacing_json = serde_json::to_string_pretty(&serde_json::json!({
        "site_count": scan.sites.len(),
        "spacing": scan.spacing,
    }))?;
    stage.write("spacing.json", &spacing_json)?;

    summary.insert("site_count".into(), scan.sites.len().into());
    if let Some(sp) = scan.spacing {
        summary.insert("mean_spacing".into(), sp.mean.into());
    }
    stage.commit("trap-scan", &cfg, started, summary.into())
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::validation("detuning-grid", msg);
    if let Some((range, _)) = text.split_once(':').map(|_| (text, ())) {
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() == 3 {
            let start: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
            let stop: f64 = parts[1].parse().map_err(|_| bad("bad stop"))?;
            let count: usize = parts[2].parse().map_err(|_| bad("bad count"))?;
            if count == 0 {
                return Err(bad("count must be >= 1"));
            }
            if count == 1 {
                return Ok(vec![start]);
            }
            return Ok((0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect());
        }
    }
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("bad value")))
        .collect()
}

pub fn cmd_modes(args: &ModesArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = load(&args.config)?;
    let grid = parse_grid(&args.detuning_grid)?;
    if grid.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::validation(
            "detuning-grid",
            "detunings must be positive (blue side)",
        ));
    }
    let rows = modes::frequency_vs_detuning(&cfg, &args.finesse, &grid, args.max_power);
    let mut csv = String::from(
        "finesse,detuning_over_kappa,omega_m_vertical,omega_m_h1,omega_m_h2,\
         input_power_total,feasible\n",
    );
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            fmt(r.finesse),
            fmt(r.detuning_over_kappa),
            fmt(r.omega_m_vertical),
            fmt(r.omega_m_h1),
            fmt(r.omega_m_h2),
            fmt(r.input_power_total),
            r.feasible
        );
    }
    let infeasible = rows.iter().filter(|r| !r.feasible).count();
    let mut stage = OutputStage::new(&args.out)?;
    stage.write("modes.csv", &csv)?;
    stage.commit(
        "modes",
        &cfg,
        started,
        serde_json::json!({ "rows": rows.len(), "infeasible": infeasible }),
    )
}

pub fn cmd_budget(args: &BudgetArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = load(&args.config)?;
    let report = budgets::assemble_budget_with(&cfg, args.detected_power, args.integration_time)?;
    let mut stage = OutputStage::new(&args.out)?;
    stage.write("budget.json", &serde_json::to_string_pretty(&report)?)?;
    stage.commit(
        "budget",
        &cfg,
        started,
        serde_json::json!({
            "gamma_m": report.gas.damping_rate,
            "n_th": report.gas.thermal_phonons,
            "gamma_I": report.laser_noise.heating_rate,
            "n_min": report.cooling.min_phonons,
        }),
    )
}

pub fn cmd_dynamics(args: &DynamicsArgs) -> Result<()> {
    let started = Instant::now();
    let mut cfg = load(&args.config)?;
    if args.beams == Beams::Trap {
        for b in &mut cfg.drive.beams {
            b.input_power_cool = 0.0;
        }
    }
    let opts = SolverOptions::default();
    let site = traps::find_site_near(&cfg, Vector3::zeros(), &opts)?;
    let mset = modes::mode_frequencies(&site, cfg.mirror.mass)?;
    let (omega_v, _) = mset.vertical();
    if args.beams == Beams::Both {
        for b in &mut cfg.drive.beams {
            if b.detuning_cool.is_none() {
                b.detuning_cool = Some(-omega_v);
            }
        }
    }
    let period = 2.0 * std::f64::consts::PI / omega_v;
    let duration = args.duration.unwrap_or(50.0 * period);
    let start = MechState::at_rest(site.position + Vector3::new(0.0, 0.0, args.displace * 1e-9));
    let mut dyn_opts = DynOptions {
        output_interval: period / 64.0,
        ..DynOptions::default()
    };
    let traj = match args.model {
        Model::Quasistatic => {
            dynamics::simulate_quasistatic(&cfg, start, args.damping, duration, &dyn_opts)?
        }
        Model::Dynamic => {
            dyn_opts.dt_max = 1e-7;
            dynamics::simulate_dynamic(&cfg, start, None, duration, &dyn_opts)?
        }
    };

    let mut csv = String::from("t,x,y,z,vx,vy,vz,photons1,photons2,photons3\n");
    let rows: &[dynamics::TrajectorySample] = if duration == 0.0 { &[] } else { &traj.samples };
    for s in rows {
        let row = [
            s.time,
            s.position.x,
            s.position.y,
            s.position.z,
            s.velocity.x,
            s.velocity.y,
            s.velocity.z,
            s.photons[0],
            s.photons[1],
            s.photons[2],
        ];
        let _ = writeln!(
            csv,
            "{}",
            row.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(",")
        );
    }
    let rate = dynamics::log_envelope_rate(&traj.samples, site.position.z, 5);
    let mut stage = OutputStage::new(&args.out)?;
    stage.write("trajectory.csv", &csv)?;
    stage.commit(
        "dynamics",
        &cfg,
        started,
        serde_json::json!({
            "omega_m_vertical": omega_v,
            "duration": duration,
            "samples": traj.samples.len(),
            "accepted_steps": traj.stats.accepted_steps,
            "rejected_steps": traj.stats.rejected_steps,
            "envelope_rate_per_s": rate,
            "envelope_growing": rate.map(|r| r > 0.0),
        }),
    )
}
