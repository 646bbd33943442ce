//! Optical-spring stiffness eigenmodes and the frequency-vs-detuning sweep.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::SimulationConfig;
use crate::optics;
use crate::traps::{self, SolverOptions, TrapSite};

/// Eigenmodes of a stiffness tensor.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Stiffness tensor (J/m^2).
    pub stiffness: Matrix3<f64>,
    /// Mode angular frequencies sorted ascending (rad/s).
    pub frequencies: [f64; 3],
    /// Orthonormal mode axes, matching `frequencies`.
    pub axes: [Vector3<f64>; 3],
}

impl ModeSet {
    /// The mode most aligned with the vertical.
    pub fn vertical(&self) -> (f64, Vector3<f64>) {
        let mut best = 0;
        for i in 1..3 {
            if self.axes[i].z.abs() > self.axes[best].z.abs() {
                best = i;
            }
        }
        (self.frequencies[best], self.axes[best])
    }
}

/// Mechanical mode frequencies omega_i = sqrt(eigenvalue_i / mass) of a
/// stable site's stiffness tensor.
pub fn mode_frequencies(site: &TrapSite, mass: f64) -> Result<ModeSet> {
    mode_frequencies_of(&site.stiffness, mass)
}

/// Same, from a bare stiffness tensor.
pub fn mode_frequencies_of(stiffness: &Matrix3<f64>, mass: f64) -> Result<ModeSet> {
    if !(mass > 0.0) {
        return Err(Error::validation("mass", "must be > 0"));
    }
    let eigen = stiffness.symmetric_eigen();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
    if eigen.eigenvalues[order[0]] <= 0.0 {
        return Err(Error::UnstableSite {
            eigenvalue: eigen.eigenvalues[order[0]],
        });
    }
    let mut frequencies = [0.0; 3];
    let mut axes = [Vector3::zeros(); 3];
    for (slot, &i) in order.iter().enumerate() {
        frequencies[slot] = (eigen.eigenvalues[i] / mass).sqrt();
        axes[slot] = eigen.eigenvectors.column(i).into_owned();
    }
    Ok(ModeSet {
        stiffness: *stiffness,
        frequencies,
        axes,
    })
}

/// One grid point of the frequency-vs-detuning sweep.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SweepRow {
    pub finesse: f64,
    pub detuning_over_kappa: f64,
    /// Vertical mode angular frequency (rad/s); 0 when infeasible.
    pub omega_m_vertical: f64,
    pub omega_m_h1: f64,
    pub omega_m_h2: f64,
    /// Total trapping input power holding the force balance (W).
    pub input_power_total: f64,
    pub feasible: bool,
}

/// For each (finesse, delta/kappa) pair: solve the support power at that
/// detuning, build the trap, and report its mode frequencies. The mirror is
/// held at force balance across the sweep (the power is re-solved per grid
/// point). Infeasible points are flagged and the sweep continues.
pub fn frequency_vs_detuning(
    cfg: &SimulationConfig,
    finesse_list: &[f64],
    detuning_grid: &[f64],
    max_power: f64,
) -> Vec<SweepRow> {
    let points: Vec<(f64, f64)> = finesse_list
        .iter()
        .flat_map(|&f| detuning_grid.iter().map(move |&d| (f, d)))
        .collect();
    points
        .par_iter()
        .map(|&(finesse, detuning)| sweep_point(cfg, finesse, detuning, max_power))
        .collect()
}

fn sweep_point(cfg: &SimulationConfig, finesse: f64, detuning: f64, max_power: f64) -> SweepRow {
    let infeasible = SweepRow {
        finesse,
        detuning_over_kappa: detuning,
        omega_m_vertical: 0.0,
        omega_m_h1: 0.0,
        omega_m_h2: 0.0,
        input_power_total: 0.0,
        feasible: false,
    };
    match trap_at(cfg, finesse, detuning, max_power) {
        Ok((site, p_total)) => match mode_frequencies(&site, cfg.mirror.mass) {
            Ok(modes) => {
                let (omega_v, _) = modes.vertical();
                let mut horiz: Vec<f64> = modes
                    .frequencies
                    .iter()
                    .cloned()
                    .filter(|&f| f != omega_v)
                    .collect();
                horiz.resize(2, 0.0);
                SweepRow {
                    finesse,
                    detuning_over_kappa: detuning,
                    omega_m_vertical: omega_v,
                    omega_m_h1: horiz[0],
                    omega_m_h2: horiz[1],
                    input_power_total: p_total,
                    feasible: true,
                }
            }
            Err(_) => infeasible,
        },
        Err(_) => infeasible,
    }
}

/// Build the support-balanced trap at a given finesse and normalized
/// detuning: returns the converged site and the solved total input power.
pub fn trap_at(
    cfg: &SimulationConfig,
    finesse: f64,
    detuning_over_kappa: f64,
    max_power: f64,
) -> Result<(TrapSite, f64)> {
    let mut c = cfg.clone();
    for b in &mut c.drive.beams {
        b.finesse = finesse;
        b.detuning_trap =
            detuning_over_kappa * optics::linewidth(finesse, c.geometry.nominal_length);
    }
    let p_total = traps::solve_support_power(&c, detuning_over_kappa, Some((1e-3, max_power)))?;
    let current = c.drive.total_trap_power();
    c.drive.scale_trap_power(p_total / current);
    let site = traps::find_site_near(&c, Vector3::zeros(), &SolverOptions::default())?;
    Ok((site, p_total))
}
