//! Equilibria of the total force field: locating trap sites, classifying
//! stability, mapping the trap lattice, and solving for support power.
//!
//! Trap sites are needle-thin: the capture basin of the Newton iteration is
//! tens of nanometres in-plane and fractions of a nanometre vertically, while
//! sites are ~15 um apart. Blind grid seeding cannot reach them at any sane
//! resolution, so the lattice scan works structurally instead: it locates one
//! site from an analytic seed (equilibrium phase from the force balance,
//! positioned by sphere trilateration), enumerates neighbouring resonance
//! orders (N1, N2, N3) of the three sphere families, trilaterates each
//! candidate, and verifies every candidate with the same damped-Newton solve
//! and stability classification. Results are deduplicated, filtered to the
//! region, and returned in lexicographic position order.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::SimulationConfig;
use crate::numerics;
use crate::optics;
use crate::potential::{AnchoredPotential, HESSIAN_STEPS};

/// A located equilibrium of the radiation-pressure + gravity force field.
#[derive(Debug, Clone)]
pub struct TrapSite {
    /// Equilibrium position (m).
    pub position: Vector3<f64>,
    /// Trapping-beam normalized detunings delta_n / kappa_n at equilibrium.
    pub detunings: [f64; 3],
    /// Stiffness tensor K = Hessian of U at the site (J/m^2).
    pub stiffness: Matrix3<f64>,
    /// Mode angular frequencies, ascending (rad/s); zeros for unstable sites.
    pub frequencies: [f64; 3],
    /// Isopotential half-widths along the principal axes at the per-axis
    /// escape level (m); zeros for unstable sites.
    pub extents: Vector3<f64>,
    /// All stiffness eigenvalues positive.
    pub stable: bool,
    /// Residual |grad U| at the returned position (N).
    pub residual_force: f64,
}

/// Solver options for equilibrium finding and lattice scans.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Gradient norm for convergence (N). The f64 floor with ~1 cm
    /// geometry coordinates is ~1e-13 N; 1e-12 N is reliably attainable.
    pub grad_tol: f64,
    /// Step norm for convergence (m).
    pub step_tol: f64,
    /// Newton iteration cap.
    pub max_iter: usize,
    /// Sites closer than this are duplicates (m); below trap extent, above
    /// the Newton tolerance.
    pub dedupe_radius: f64,
    /// Lattice-scan candidate cap.
    pub candidate_cap: usize,
    /// Vertical resolution of the fallback bootstrap scan (m).
    pub bootstrap_grid_z: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-12,
            step_tol: 1e-15,
            max_iter: 200,
            dedupe_radius: 1e-9,
            candidate_cap: 1_000_000,
            bootstrap_grid_z: 2e-10,
        }
    }
}

/// Axis-aligned scan region.
#[derive(Debug, Clone, Copy)]
pub struct Region {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Region {
    pub fn centered(center: Vector3<f64>, half_extents: Vector3<f64>) -> Self {
        Self {
            min: center - half_extents,
            max: center + half_extents,
        }
    }

    pub fn center(&self) -> Vector3<f64> {
        (self.min + self.max) / 2.0
    }

    pub fn contains(&self, p: &Vector3<f64>, margin: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - margin && p[i] <= self.max[i] + margin)
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.max[i] <= self.min[i])
    }
}

/// Nearest-neighbour spacing statistics in the xy-plane.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SpacingStats {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Result of a lattice scan.
#[derive(Debug, Clone)]
pub struct LatticeScan {
    /// Unique stable sites, sorted lexicographically by (x, y, z).
    pub sites: Vec<TrapSite>,
    /// xy-plane nearest-neighbour statistics over `sites`.
    pub spacing: Option<SpacingStats>,
}

/// Damped Newton iteration on grad U = 0 from `seed`, classifying the result.
pub fn find_equilibrium(
    cfg: &SimulationConfig,
    seed: Vector3<f64>,
    opts: &SolverOptions,
) -> Result<TrapSite> {
    let anchored = AnchoredPotential::new(
        seed,
        &cfg.geometry,
        &cfg.drive,
        &cfg.mirror,
        cfg.constants.g0,
    )?;
    let w = newton(&anchored, Vector3::zeros(), opts)?;
    analyze_site(cfg, &anchored, w)
}

fn newton(
    anchored: &AnchoredPotential,
    w0: Vector3<f64>,
    opts: &SolverOptions,
) -> Result<Vector3<f64>> {
    let mut w = w0;
    let mut g = anchored.gradient(w);
    let mut gn = g.norm();
    let mut best = gn;
    let mut since_best = 0_usize;
    const TRUST: f64 = 2e-7; // never step more than 200 nm at once

    for iter in 0..opts.max_iter {
        let h = anchored.hessian(w, HESSIAN_STEPS)?;
        let u_curr = anchored.value(w);

        // Damped Newton step: raise the Levenberg-Marquardt shift until the
        // step is a descent direction of U and the line search makes
        // progress. Following raw Newton into indefinite curvature would
        // converge onto the escape saddles instead of the minimum.
        let lambda0 = (h.trace().abs() / 3.0 + 1.0) * 1e-4;
        let mut lambda = 0.0_f64;
        let mut accepted: Option<(Vector3<f64>, Vector3<f64>, f64)> = None;
        for _ in 0..12 {
            let h_eff = h + Matrix3::identity() * lambda;
            let mut dw = match h_eff.lu().solve(&(-g)) {
                Some(d) if d.iter().all(|v| v.is_finite()) => d,
                _ => -g * (1e-10 / gn.max(f64::MIN_POSITIVE)),
            };
            let dn = dw.norm();
            if dn > TRUST {
                dw *= TRUST / dn;
            }
            if g.dot(&dw) < 0.0 {
                let mut alpha = 1.0_f64;
                while alpha >= 1.0 / 1024.0 {
                    let w_try = w + dw * alpha;
                    if anchored.value(w_try) <= u_curr {
                        let g_try = anchored.gradient(w_try);
                        accepted = Some((w_try, g_try, g_try.norm()));
                        break;
                    }
                    alpha /= 2.0;
                }
            }
            if accepted.is_some() {
                break;
            }
            lambda = if lambda == 0.0 { lambda0 } else { lambda * 100.0 };
        }
        let (w_new, g_new, gn_new) = match accepted {
            Some(t) => t,
            // Nowhere downhill at any damping: stationary or stalled.
            None => (w, g, gn),
        };
        let step = (w_new - w).norm();
        w = w_new;
        g = g_new;
        gn = gn_new;
        if gn < best * 0.999 {
            best = gn;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if step < opts.step_tol && gn < opts.grad_tol {
            return Ok(w);
        }
        if since_best > 25 {
            let p = anchored.anchor() + w;
            return Err(Error::NoConvergence {
                iterations: iter + 1,
                grad_norm: gn,
                x: p.x,
                y: p.y,
                z: p.z,
            });
        }
    }
    let p = anchored.anchor() + w;
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        grad_norm: gn,
        x: p.x,
        y: p.y,
        z: p.z,
    })
}

/// Stiffness, stability class, detunings, mode frequencies, and extents at a
/// converged equilibrium displacement `w` from the anchor.
fn analyze_site(
    cfg: &SimulationConfig,
    anchored: &AnchoredPotential,
    w: Vector3<f64>,
) -> Result<TrapSite> {
    let h = anchored.hessian(w, HESSIAN_STEPS)?;
    let eigen = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
    let stable = eigen.eigenvalues.iter().all(|&v| v > 0.0);

    let mut frequencies = [0.0; 3];
    if stable {
        for (slot, &i) in frequencies.iter_mut().zip(order.iter()) {
            *slot = (eigen.eigenvalues[i] / cfg.mirror.mass).sqrt();
        }
    }

    let mut detunings = [0.0; 3];
    for (n, d) in detunings.iter_mut().enumerate() {
        let (phi, _) = anchored.phase(w, n);
        *d = optics::phase_to_normalized_detuning(phi, cfg.drive.beams[n].finesse);
    }

    let mut site = TrapSite {
        position: anchored.anchor() + w,
        detunings,
        stiffness: h,
        frequencies,
        extents: Vector3::zeros(),
        stable,
        residual_force: anchored.gradient(w).norm(),
    };
    if stable {
        site.extents = extents_at(anchored, w, &h)?;
    }
    Ok(site)
}

/// Isopotential half-widths along the principal axes at the per-axis escape
/// level (the lowest barrier on that axis).
pub fn trap_extents(cfg: &SimulationConfig, site: &TrapSite) -> Result<Vector3<f64>> {
    if !site.stable {
        return Err(Error::InvalidSite {
            msg: "extents are defined for stable sites only".into(),
        });
    }
    let anchored = AnchoredPotential::new(
        site.position,
        &cfg.geometry,
        &cfg.drive,
        &cfg.mirror,
        cfg.constants.g0,
    )?;
    extents_at(&anchored, Vector3::zeros(), &site.stiffness)
}

fn extents_at(
    anchored: &AnchoredPotential,
    w: Vector3<f64>,
    stiffness: &Matrix3<f64>,
) -> Result<Vector3<f64>> {
    let eigen = stiffness.symmetric_eigen();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
    let u0 = anchored.value(w);

    // Barriers on all six half-axes; the escape level of the trap is the
    // lowest of them (the potential "just outside" the trap). Axes whose
    // profile saturates without a local maximum report the plateau at the
    // walk cap, which never undercuts a genuine barrier.
    let mut barriers = [[(0.0_f64, 0.0_f64); 2]; 3];
    for (slot, &i) in order.iter().enumerate() {
        let axis = eigen.eigenvectors.column(i).into_owned();
        barriers[slot][0] = first_barrier(anchored, w, axis, u0)?;
        barriers[slot][1] = first_barrier(anchored, w, -axis, u0)?;
    }
    let level = barriers
        .iter()
        .flatten()
        .map(|b| b.1)
        .fold(f64::INFINITY, f64::min);

    let mut out = Vector3::zeros();
    for (slot, &i) in order.iter().enumerate() {
        let axis = eigen.eigenvectors.column(i).into_owned();
        let s_plus = crossing(anchored, w, axis, u0, level, barriers[slot][0])?;
        let s_minus = crossing(anchored, w, -axis, u0, level, barriers[slot][1])?;
        out[slot] = 0.5 * (s_plus + s_minus);
    }
    Ok(out)
}

/// Walk cap for barrier searches (m); beyond one resonance period along any
/// axis there is no lower escape path.
const BARRIER_WALK_CAP: f64 = 1.5e-6;

/// First local maximum of U along `dir` from the site: (distance, height
/// above the site value). Monotonically saturating profiles report the
/// plateau value at the walk cap.
///
/// The walk step adapts to the resonance phase structure: near a cavity
/// resonance the features are ~1/F wide in phase, so the step keeps every
/// cavity's phase advance below a quarter of that; far from resonance it
/// expands geometrically.
fn first_barrier(
    anchored: &AnchoredPotential,
    w: Vector3<f64>,
    dir: Vector3<f64>,
    u0: f64,
) -> Result<(f64, f64)> {
    let mut s = 0.0_f64;
    let mut s_before_best = 0.0_f64;
    let mut u_best = 0.0_f64;
    loop {
        let s_next = s + walk_step(anchored, w, dir, s);
        let u = anchored.value(w + dir * s_next) - u0;
        if u > u_best {
            s_before_best = s;
            u_best = u;
        } else if u_best - u > 1e-6 * u_best.abs().max(1e-25) {
            // Material drop: the first maximum sits in [s_before_best, s_next].
            return Ok(golden_max(anchored, w, dir, u0, s_before_best, s_next));
        }
        s = s_next;
        if s > BARRIER_WALK_CAP {
            // Saturating profile: report the plateau.
            return Ok((s, u_best));
        }
    }
}

/// Phase-structure-aware step along `dir` at arc position `s`.
fn walk_step(
    anchored: &AnchoredPotential,
    w: Vector3<f64>,
    dir: Vector3<f64>,
    s: f64,
) -> f64 {
    let p = w + dir * s;
    let mut step = f64::INFINITY;
    for n in 0..3 {
        let coupling = anchored.axis(p, n).dot(&dir).abs().max(1e-4);
        let (phi, _) = anchored.phase(p, n);
        let width = 1.0 / anchored.finesse(n);
        // Distance to the nearest resonance in reduced phase.
        let d_res = phi.abs().min(std::f64::consts::PI - phi.abs());
        let allowed = (d_res / 3.0).clamp(width / 4.0, std::f64::consts::PI / 8.0);
        step = step.min(allowed / (anchored.wavenumber(n) * coupling));
    }
    step.max(1e-13)
}

fn golden_max(
    anchored: &AnchoredPotential,
    w: Vector3<f64>,
    dir: Vector3<f64>,
    u0: f64,
    mut a: f64,
    mut b: f64,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let f = |s: f64| anchored.value(w + dir * s) - u0;
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..90 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = f(d);
        }
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    let s = 0.5 * (a + b);
    (s, f(s))
}

/// Distance along `dir` where U - U0 first reaches `level` (bisection on the
/// monotone rise toward the barrier at `(s_max, u_max)`).
fn crossing(
    anchored: &AnchoredPotential,
    w: Vector3<f64>,
    dir: Vector3<f64>,
    u0: f64,
    level: f64,
    (s_max, u_max): (f64, f64),
) -> Result<f64> {
    if u_max <= level * (1.0 + 1e-12) {
        // This side holds the lowest barrier; the crossing is the barrier.
        return Ok(s_max);
    }
    numerics::bisect(
        |s| (anchored.value(w + dir * s) - u0) - level,
        0.0,
        s_max,
        1e-9,
    )
}

/// Total trapping input power (W) such that the vertical force balance
/// `sum_n F_nz = m g0` holds with every cavity at the target normalized
/// detuning. Per-cavity shares keep the drive's proportions. Bisection to
/// 1e-9 relative over `bracket` (default [1 mW, 1 kW]).
pub fn solve_support_power(
    cfg: &SimulationConfig,
    detuning_over_kappa: f64,
    bracket: Option<(f64, f64)>,
) -> Result<f64> {
    if !(detuning_over_kappa > 0.0) {
        return Err(Error::infeasible(
            "target detuning must be positive (blue side)",
        ));
    }
    let (lo, hi) = bracket.unwrap_or((1e-3, 1e3));
    let total0 = cfg.drive.total_trap_power();
    let weights: [f64; 3] = if total0 > 0.0 {
        std::array::from_fn(|n| cfg.drive.beams[n].input_power_trap / total0)
    } else {
        [1.0 / 3.0; 3]
    };
    let mut axis_z = [0.0_f64; 3];
    let mut phase = [0.0_f64; 3];
    for n in 0..3 {
        let b = &cfg.drive.beams[n];
        let phi = optics::normalized_detuning_to_phase(detuning_over_kappa, b.finesse);
        if phi >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::infeasible(format!(
                "detuning {detuning_over_kappa} kappa is beyond the anti-resonance of cavity {}",
                n + 1
            )));
        }
        phase[n] = phi;
        axis_z[n] = -cfg.geometry.q[n].z / cfg.geometry.q[n].norm();
    }
    let residual = |p_total: f64| {
        let mut lift = 0.0;
        for n in 0..3 {
            let b = &cfg.drive.beams[n];
            let p = optics::circulating_power_at_phase(weights[n] * p_total, b.finesse, phase[n]);
            lift += 2.0 * p / crate::constants::C * axis_z[n];
        }
        lift - cfg.weight()
    };
    numerics::bisect(residual, lo, hi, 1e-9).map_err(|_| {
        Error::infeasible(format!(
            "no support power in [{lo:e}, {hi:e}] W at detuning {detuning_over_kappa} kappa"
        ))
    })
}

/// Analytic seed for the symmetric on-axis trap near `near`: equilibrium
/// phase from the force balance, positioned by sphere trilateration, then
/// polished by the damped Newton solve.
pub fn find_site_near(
    cfg: &SimulationConfig,
    near: Vector3<f64>,
    opts: &SolverOptions,
) -> Result<TrapSite> {
    if let Ok(seed) = analytic_seed(cfg, near) {
        if let Ok(site) = find_equilibrium(cfg, seed, opts) {
            if site.stable {
                return Ok(site);
            }
        }
    }
    // Fallback: fine 1-D vertical force-balance scan through `near`.
    bootstrap_vertical(cfg, near, opts)
}

/// Equilibrium phase on the blue branch for the current drive powers, or an
/// infeasibility error when the beams cannot support the weight.
fn equilibrium_phase(cfg: &SimulationConfig, n: usize) -> Result<f64> {
    let b = &cfg.drive.beams[n];
    let axis_z = -cfg.geometry.q[n].z / cfg.geometry.q[n].norm();
    // Assume the symmetric split: each cavity carries its own weight share
    // proportional to its input power.
    let share = cfg.weight() / 3.0;
    let p_circ_needed = share * crate::constants::C / (2.0 * axis_z);
    let ratio = b.input_power_trap * b.finesse / p_circ_needed;
    if ratio <= 1.0 {
        return Err(Error::infeasible(format!(
            "cavity {} cannot support its weight share: P_in F = {:.3e} W < {:.3e} W needed",
            n + 1,
            b.input_power_trap * b.finesse,
            p_circ_needed
        )));
    }
    let s = (ratio - 1.0).sqrt();
    Ok((s / b.finesse).asin())
}

fn analytic_seed(cfg: &SimulationConfig, near: Vector3<f64>) -> Result<Vector3<f64>> {
    let base = cfg.geometry.radius_of_curvature_bottom - cfg.mirror.radius_of_curvature_top;
    let mut target_rho = [0.0_f64; 3];
    for n in 0..3 {
        let b = &cfg.drive.beams[n];
        let k = b.wavenumber();
        let phi_eq = equilibrium_phase(cfg, n)?;
        let rho_near = (near - cfg.geometry.q[n]).norm();
        let x_near = k * (base + rho_near) + b.phase_offset;
        let order = ((x_near - phi_eq) / std::f64::consts::PI).round();
        target_rho[n] =
            (order * std::f64::consts::PI + phi_eq - b.phase_offset) / k - base;
    }
    trilaterate(cfg, near, target_rho)
}

/// Gauss-Newton solve of |r - q_n| = rho_n for the three spheres.
fn trilaterate(
    cfg: &SimulationConfig,
    start: Vector3<f64>,
    target_rho: [f64; 3],
) -> Result<Vector3<f64>> {
    let mut r = start;
    for _ in 0..30 {
        let mut jac = Matrix3::zeros();
        let mut res = Vector3::zeros();
        for n in 0..3 {
            let d = r - cfg.geometry.q[n];
            let rho = d.norm();
            if rho == 0.0 {
                return Err(Error::DegenerateGeometry { cavity: n + 1 });
            }
            let u = d / rho;
            res[n] = rho - target_rho[n];
            jac.set_row(n, &u.transpose());
        }
        let dr = jac
            .lu()
            .solve(&(-res))
            .ok_or_else(|| Error::numerical("trilateration Jacobian is singular"))?;
        r += dr;
        if dr.norm() < 1e-16 {
            break;
        }
        if (r - start).norm() > 1.0 {
            return Err(Error::numerical("trilateration diverged"));
        }
    }
    Ok(r)
}

/// Fallback bootstrap: scan the vertical force balance through `near` over
/// one resonance period, Newton from every balanced point, keep the first
/// stable site.
fn bootstrap_vertical(
    cfg: &SimulationConfig,
    near: Vector3<f64>,
    opts: &SolverOptions,
) -> Result<TrapSite> {
    let anchored = AnchoredPotential::new(
        near,
        &cfg.geometry,
        &cfg.drive,
        &cfg.mirror,
        cfg.constants.g0,
    )?;
    let lambda = cfg.drive.beams[0].wavelength;
    let span = lambda / (2.0 * cfg.geometry.tilt_angle.cos());
    let n_steps = (span / opts.bootstrap_grid_z).ceil() as usize;
    let fz = |z: f64| -anchored.gradient(Vector3::new(0.0, 0.0, z)).z;
    let mut prev_z = -span / 2.0;
    let mut prev_f = fz(prev_z);
    let mut last_err: Option<Error> = None;
    for i in 1..=n_steps {
        let z = -span / 2.0 + span * i as f64 / n_steps as f64;
        let f = fz(z);
        // A stable vertical balance has the net force decreasing through 0.
        if prev_f > 0.0 && f <= 0.0 {
            if let Ok(z_root) = numerics::bisect(fz, prev_z, z, 1e-12) {
                match find_equilibrium(cfg, near + Vector3::new(0.0, 0.0, z_root), opts) {
                    Ok(site) if site.stable => return Ok(site),
                    Ok(_) => {}
                    Err(e) => last_err = Some(e),
                }
            }
        }
        prev_z = z;
        prev_f = f;
    }
    Err(last_err.unwrap_or_else(|| {
        Error::infeasible("no stable vertical force balance near the seed")
    }))
}

/// Scan the region for stable trap sites.
pub fn scan_lattice(
    cfg: &SimulationConfig,
    region: Region,
    opts: &SolverOptions,
) -> Result<LatticeScan> {
    if region.is_empty() {
        return Ok(LatticeScan {
            sites: Vec::new(),
            spacing: None,
        });
    }
    // One reference site anywhere near the region (it may fall outside; the
    // lattice enumeration still covers the region from it).
    let reference = match find_site_near(cfg, region.center(), opts) {
        Ok(site) => site,
        Err(Error::Infeasible { .. }) => {
            return Ok(LatticeScan {
                sites: Vec::new(),
                spacing: None,
            })
        }
        Err(e) => return Err(e),
    };

    let base = cfg.geometry.radius_of_curvature_bottom - cfg.mirror.radius_of_curvature_top;

    // Resonance-order ranges covering the region: j_n = 2 u_n . d / lambda_n
    // over the region corners d (relative to the reference site).
    let mut ranges = [(0_i64, 0_i64); 3];
    for n in 0..3 {
        let u = (reference.position - cfg.geometry.q[n]).normalize();
        let half_step = std::f64::consts::PI / cfg.drive.beams[n].wavenumber();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for cx in [region.min.x, region.max.x] {
            for cy in [region.min.y, region.max.y] {
                for cz in [region.min.z, region.max.z] {
                    let d = Vector3::new(cx, cy, cz) - reference.position;
                    let j = u.dot(&d) / half_step;
                    lo = lo.min(j);
                    hi = hi.max(j);
                }
            }
        }
        ranges[n] = (lo.floor() as i64 - 1, hi.ceil() as i64 + 1);
    }
    let count: i128 = ranges
        .iter()
        .map(|(lo, hi)| (hi - lo + 1) as i128)
        .product();
    if count > opts.candidate_cap as i128 {
        return Err(Error::RegionTooLarge {
            candidates: count.min(usize::MAX as i128) as usize,
            cap: opts.candidate_cap,
        });
    }

    let mut rho0 = [0.0_f64; 3];
    for n in 0..3 {
        rho0[n] = (reference.position - cfg.geometry.q[n]).norm();
    }
    let mut candidates: Vec<[i64; 3]> = Vec::with_capacity(count as usize);
    for j0 in ranges[0].0..=ranges[0].1 {
        for j1 in ranges[1].0..=ranges[1].1 {
            for j2 in ranges[2].0..=ranges[2].1 {
                candidates.push([j0, j1, j2]);
            }
        }
    }

    let margin = 2.0 * opts.dedupe_radius;
    let mut found: Vec<TrapSite> = candidates
        .par_iter()
        .filter_map(|&j| {
            let target: [f64; 3] = std::array::from_fn(|n| {
                rho0[n]
                    + j[n] as f64 * std::f64::consts::PI / cfg.drive.beams[n].wavenumber()
            });
            // Skip targets outside the optical-stability branch.
            if target.iter().any(|&rho| rho <= 0.0 || base + rho > 0.21) {
                return None;
            }
            let guess = trilaterate(cfg, reference.position, target).ok()?;
            if !region.contains(&guess, 1e-7) {
                return None;
            }
            let site = find_equilibrium(cfg, guess, opts).ok()?;
            (site.stable && region.contains(&site.position, margin)).then_some(site)
        })
        .collect();

    // Deterministic dedupe: candidate order is the j-enumeration order.
    let mut unique: Vec<TrapSite> = Vec::new();
    for site in found.drain(..) {
        if unique
            .iter()
            .all(|s| (s.position - site.position).norm() > opts.dedupe_radius)
        {
            unique.push(site);
        }
    }
    unique.retain(|s| region.contains(&s.position, 0.0));
    unique.sort_by(|a, b| {
        (a.position.x, a.position.y, a.position.z)
            .partial_cmp(&(b.position.x, b.position.y, b.position.z))
            .unwrap()
    });

    let spacing = spacing_stats(&unique);
    Ok(LatticeScan {
        sites: unique,
        spacing,
    })
}

/// xy-plane nearest-neighbour statistics.
pub fn spacing_stats(sites: &[TrapSite]) -> Option<SpacingStats> {
    if sites.len() < 2 {
        return None;
    }
    let mut nn = Vec::with_capacity(sites.len());
    for (i, a) in sites.iter().enumerate() {
        let mut best = f64::INFINITY;
        for (k, b) in sites.iter().enumerate() {
            if i != k {
                let dx = a.position.x - b.position.x;
                let dy = a.position.y - b.position.y;
                best = best.min((dx * dx + dy * dy).sqrt());
            }
        }
        nn.push(best);
    }
    let mean = nn.iter().sum::<f64>() / nn.len() as f64;
    let min = nn.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = nn.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some(SpacingStats {
        count: sites.len(),
        mean,
        min,
        max,
    })
}

/// The central trap: stable site nearest (in xy) to the centroid of the
/// lower-mirror centres.
pub fn pick_central<'a>(sites: &'a [TrapSite], cfg: &SimulationConfig) -> Option<&'a TrapSite> {
    let c = cfg.geometry.centroid();
    sites
        .iter()
        .filter(|s| s.stable)
        .min_by(|a, b| {
            let da = (a.position.x - c.x).hypot(a.position.y - c.y);
            let db = (b.position.x - c.x).hypot(b.position.y - c.y);
            da.total_cmp(&db)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> SimulationConfig {
        SimulationConfig::default_paper()
    }

    /// Default config with the trapping power solved for delta = kappa/2.
    fn supported_cfg() -> SimulationConfig {
        let mut cfg = cfg();
        let p = solve_support_power(&cfg, 0.5, None).unwrap();
        cfg.drive.scale_trap_power(p / cfg.drive.total_trap_power());
        cfg
    }

    #[test]
    fn support_power_at_half_kappa_is_order_watts() {
        let cfg = cfg();
        let p = solve_support_power(&cfg, 0.5, None).unwrap();
        assert!((0.5..=5.0).contains(&p), "P_total = {p} W");
    }

    #[test]
    fn support_power_is_linear_in_mass() {
        let mut cfg = cfg();
        let p1 = solve_support_power(&cfg, 0.5, None).unwrap();
        cfg.mirror.mass *= 2.0;
        let p2 = solve_support_power(&cfg, 0.5, None).unwrap();
        assert_relative_eq!(p2, 2.0 * p1, max_relative = 1e-6);
    }

    #[test]
    fn support_power_halves_when_finesse_doubles() {
        let mut cfg = cfg();
        let p1 = solve_support_power(&cfg, 0.5, None).unwrap();
        for b in &mut cfg.drive.beams {
            b.finesse = 2000.0;
        }
        let p2 = solve_support_power(&cfg, 0.5, None).unwrap();
        // P_n ~ P_in F at fixed normalized detuning; the residual F^2 sin^2
        // term keeps this from being exact.
        assert_relative_eq!(p2, p1 / 2.0, max_relative = 1e-2);
    }

    #[test]
    fn equilibrium_from_analytic_seed_sits_near_half_kappa() {
        let cfg = supported_cfg();
        let opts = SolverOptions::default();
        let site = find_site_near(&cfg, Vector3::zeros(), &opts).unwrap();
        assert!(site.stable);
        assert!(site.residual_force < opts.grad_tol);
        for d in site.detunings {
            assert!((d - 0.5).abs() < 0.02, "detuning/kappa = {d}");
        }
        // On-axis by symmetry.
        assert!(site.position.x.hypot(site.position.y) < 1e-9);
    }

    #[test]
    fn beams_off_does_not_converge() {
        let mut cfg = cfg();
        cfg.drive.scale_trap_power(0.0);
        let err = find_equilibrium(&cfg, Vector3::zeros(), &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn displaced_seed_returns_to_the_same_trap() {
        let cfg = supported_cfg();
        let opts = SolverOptions::default();
        let site = find_site_near(&cfg, Vector3::zeros(), &opts).unwrap();
        let seed = site.position + Vector3::new(3e-9, -2e-9, 3e-10);
        let back = find_equilibrium(&cfg, seed, &opts).unwrap();
        assert!(
            (back.position - site.position).norm() < 1e-12,
            "drifted {:.3e} m",
            (back.position - site.position).norm()
        );
    }

    #[test]
    fn blue_side_detunings_for_all_stable_sites() {
        let cfg = supported_cfg();
        let region = Region::centered(
            find_site_near(&cfg, Vector3::zeros(), &SolverOptions::default())
                .unwrap()
                .position,
            Vector3::new(3e-5, 3e-5, 2e-8),
        );
        let scan = scan_lattice(&cfg, region, &SolverOptions::default()).unwrap();
        assert!(!scan.sites.is_empty());
        for s in &scan.sites {
            for d in s.detunings {
                assert!(d > 0.0 && d < 1.0, "normalized detuning {d}");
            }
            assert!(s.residual_force < 1e-12);
            let min_eig = s
                .stiffness
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig > 0.0);
        }
    }

    #[test]
    fn lattice_spacing_matches_the_geometric_prediction() {
        let cfg = supported_cfg();
        let opts = SolverOptions::default();
        let central = find_site_near(&cfg, Vector3::zeros(), &opts).unwrap();
        let region = Region::centered(central.position, Vector3::new(3e-5, 3e-5, 2e-8));
        let scan = scan_lattice(&cfg, region, &opts).unwrap();
        assert!(scan.sites.len() >= 7, "found {} sites", scan.sites.len());
        let stats = scan.spacing.unwrap();
        // lambda / (sqrt(3) sin(tilt)) = 17.6 um at 1064 nm and 2 degrees.
        let predicted = cfg.drive.beams[0].wavelength
            / (3.0_f64.sqrt() * cfg.geometry.tilt_angle.sin());
        assert!(
            (stats.mean / predicted - 1.0).abs() < 0.05,
            "mean {:.3e} vs predicted {:.3e}",
            stats.mean,
            predicted
        );
        assert!((1e-5..=2e-5).contains(&stats.mean));
    }

    #[test]
    fn halving_wavelength_halves_the_xy_spacing() {
        let cfg = supported_cfg();
        let opts = SolverOptions::default();
        let s1 = {
            let central = find_site_near(&cfg, Vector3::zeros(), &opts).unwrap();
            let region = Region::centered(central.position, Vector3::new(3e-5, 3e-5, 2e-8));
            scan_lattice(&cfg, region, &opts).unwrap().spacing.unwrap()
        };
        let mut cfg2 = cfg.clone();
        for b in &mut cfg2.drive.beams {
            b.wavelength /= 2.0;
        }
        let s2 = {
            let central = find_site_near(&cfg2, Vector3::zeros(), &opts).unwrap();
            let region = Region::centered(central.position, Vector3::new(3e-5, 3e-5, 2e-8));
            scan_lattice(&cfg2, region, &opts).unwrap().spacing.unwrap()
        };
        assert!(
            (s2.mean / s1.mean - 0.5).abs() < 0.05 * 0.5,
            "ratio {:.4}",
            s2.mean / s1.mean
        );
    }

    #[test]
    fn region_far_from_any_resonance_is_empty() {
        let cfg = supported_cfg();
        let opts = SolverOptions::default();
        let central = find_site_near(&cfg, Vector3::zeros(), &opts).unwrap();
        // 250 nm above the site plane, thin slab, small xy window: the
        // curvature of the site sheet only reaches this height ~70 um out.
        let region = Region::centered(
            central.position + Vector3::new(0.0, 0.0, 2.5e-7),
            Vector3::new(5e-6, 5e-6, 1e-8),
        );
        let scan = scan_lattice(&cfg, region, &opts).unwrap();
        assert!(scan.sites.is_empty());
    }

    #[test]
    fn empty_region_returns_empty_catalog() {
        let cfg = supported_cfg();
        let region = Region {
            min: Vector3::new(0.0, 0.0, 0.0),
            max: Vector3::new(0.0, 0.0, 0.0),
        };
        let scan = scan_lattice(&cfg, region, &SolverOptions::default()).unwrap();
        assert!(scan.sites.is_empty());
    }

    #[test]
    fn oversized_region_hits_the_candidate_cap() {
        let cfg = supported_cfg();
        let mut opts = SolverOptions::default();
        opts.candidate_cap = 10;
        let region = Region::centered(Vector3::zeros(), Vector3::new(1e-4, 1e-4, 1e-6));
        let err = scan_lattice(&cfg, region, &opts).unwrap_err();
        assert!(matches!(err, Error::RegionTooLarge { .. }));
    }

    #[test]
    fn scan_is_deterministic() {
        let cfg = supported_cfg();
        let opts = SolverOptions::default();
        let central = find_site_near(&cfg, Vector3::zeros(), &opts).unwrap();
        let region = Region::centered(central.position, Vector3::new(2e-5, 2e-5, 2e-8));
        let a = scan_lattice(&cfg, region, &opts).unwrap();
        let b = scan_lattice(&cfg, region, &opts).unwrap();
        assert_eq!(a.sites.len(), b.sites.len());
        for (x, y) in a.sites.iter().zip(b.sites.iter()) {
            assert_eq!(x.position, y.position);
            assert_eq!(x.frequencies, y.frequencies);
        }
    }

    #[test]
    fn site_set_is_invariant_under_120_degree_rotation() {
        let cfg = supported_cfg();
        let opts = SolverOptions::default();
        let central = find_site_near(&cfg, Vector3::zeros(), &opts).unwrap();
        let half = 2.6e-5;
        let region = Region::centered(central.position, Vector3::new(half, half, 2e-8));
        let scan = scan_lattice(&cfg, region, &opts).unwrap();
        // Restrict to the inscribed disk so the test set is rotation-closed.
        let c = cfg.geometry.centroid();
        let in_disk: Vec<_> = scan
            .sites
            .iter()
            .filter(|s| (s.position.x - c.x).hypot(s.position.y - c.y) <= half)
            .collect();
        assert!(in_disk.len() >= 7);
        let rot = nalgebra::Rotation3::from_axis_angle(
            &Vector3::z_axis(),
            2.0 * std::f64::consts::PI / 3.0,
        );
        let axis_point = Vector3::new(c.x, c.y, 0.0);
        for s in &in_disk {
            let rotated = rot * (s.position - axis_point) + axis_point;
            let nearest = in_disk
                .iter()
                .map(|t| (t.position - rotated).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-9, "rotated image off by {nearest:.3e} m");
        }
    }

    #[test]
    fn central_trap_extents_match_expected_scales() {
        let cfg = supported_cfg();
        let opts = SolverOptions::default();
        let site = find_site_near(&cfg, Vector3::zeros(), &opts).unwrap();
        let ext = site.extents;
        // Ascending stiffness order: two soft horizontal axes, stiff vertical.
        assert!(
            (1e-8..=6e-8).contains(&ext[0]) && (1e-8..=6e-8).contains(&ext[1]),
            "horizontal extents {:?}",
            ext
        );
        assert!((3e-10..=3e-9).contains(&ext[2]), "vertical extent {:?}", ext);
        let recomputed = trap_extents(&cfg, &site).unwrap();
        assert_relative_eq!(recomputed[2], ext[2], max_relative = 1e-6);
    }

    #[test]
    fn extents_grow_with_input_power() {
        let cfg = supported_cfg();
        let opts = SolverOptions::default();
        let mut prev = 0.0;
        for factor in [1.0, 2.0, 4.0] {
            let mut c = cfg.clone();
            c.drive.scale_trap_power(factor);
            let site = find_site_near(&c, Vector3::zeros(), &opts).unwrap();
            let vertical = site.extents[2];
            assert!(
                vertical > prev,
                "extent {vertical:e} did not grow at factor {factor}"
            );
            prev = vertical;
        }
    }

    #[test]
    fn extents_reject_unstable_sites() {
        let cfg = supported_cfg();
        let site = TrapSite {
            position: Vector3::zeros(),
            detunings: [0.0; 3],
            stiffness: Matrix3::identity(),
            frequencies: [0.0; 3],
            extents: Vector3::zeros(),
            stable: false,
            residual_force: 0.0,
        };
        assert!(matches!(
            trap_extents(&cfg, &site),
            Err(Error::InvalidSite { .. })
        ));
    }
}
