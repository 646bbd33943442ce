//! The generalized potential U(r), its analytic gradient, and Hessian.
//!
//! Per cavity the optical term is built from the continuous, branch-unwrapped
//! phase antiderivative `chi(x) = atan(F tan(phi)) + N pi` (with
//! `x = phi + N pi`), which is the unique continuous antiderivative of the
//! resonance profile slope `F / (cos^2 x + F^2 sin^2 x)`. Without the `N pi`
//! unwrapping the raw expression would jump at every half-wavelength.
//!
//! Sign convention: U = m g z - sum_n (2 P_n^(in)/c) chi(k L_n)/k, so that
//! -grad U equals the radiation-pressure force plus gravity and trap sites
//! are minima. The stiffness tensor K is +Hessian at a minimum
//! (K positive-definite <=> stable, restoring force -K dr).

use nalgebra::{Matrix3, Vector3};

use crate::constants::C;
use crate::error::Result;
use crate::model::{BeamDrive, MirrorPose, MirrorSpec, SimulationConfig, TripodGeometry};
use crate::optics;

/// Potential value with derivatives and per-cavity branch counters.
#[derive(Debug, Clone)]
pub struct PotentialSample {
    /// U (J).
    pub value: f64,
    /// grad U (J/m = N).
    pub gradient: Vector3<f64>,
    /// Symmetrized Hessian (J/m^2).
    pub hessian: Matrix3<f64>,
    /// Branch counters N_n of the unwrapped arctangent.
    pub branch_indices: [i64; 3],
}

/// Default finite-difference steps for the Hessian: geometric mean of trap
/// extents and machine-epsilon scales, per axis (x, y, z).
pub const HESSIAN_STEPS: [f64; 3] = [1e-10, 1e-10, 1e-12];

/// Continuous unwrapped arctangent: chi(x) = atan(F tan(phi)) + N pi for
/// x = phi + N pi, phi in (-pi/2, pi/2]. Strictly increasing in x.
pub fn unwrapped_atan(finesse: f64, x: f64) -> f64 {
    let (phi, n) = optics::reduce_phase(x);
    (finesse * phi.tan()).atan() + n as f64 * std::f64::consts::PI
}

/// d chi / d x = F / (cos^2 x + F^2 sin^2 x); pi-periodic and positive.
pub fn unwrapped_atan_slope(finesse: f64, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    finesse / (c * c + finesse * finesse * s * s)
}

/// Generalized potential U(r) (J), absolute (includes the N pi branch terms).
pub fn potential(
    pose: &MirrorPose,
    geom: &TripodGeometry,
    drive: &BeamDrive,
    mirror: &MirrorSpec,
    g0: f64,
) -> Result<f64> {
    let lengths = optics::cavity_lengths(pose, geom, mirror.radius_of_curvature_top)?;
    let mut u = mirror.mass * g0 * pose.r.z;
    for n in 0..3 {
        let b = &drive.beams[n];
        let k = b.wavenumber();
        let x = k * lengths[n] + b.phase_offset;
        u -= 2.0 * b.input_power_trap / (C * k) * unwrapped_atan(b.finesse, x);
    }
    Ok(u)
}

/// Analytic gradient of U (N): sum_n (dU_n/dL_n) u_n + (0, 0, m g0).
pub fn gradient(
    pose: &MirrorPose,
    geom: &TripodGeometry,
    drive: &BeamDrive,
    mirror: &MirrorSpec,
    g0: f64,
) -> Result<Vector3<f64>> {
    let sep = optics::separations(pose, geom)?;
    let base = geom.radius_of_curvature_bottom - mirror.radius_of_curvature_top;
    let mut g = Vector3::new(0.0, 0.0, mirror.mass * g0);
    for n in 0..3 {
        let b = &drive.beams[n];
        let k = b.wavenumber();
        let dist = sep[n].norm();
        let x = k * (base + dist) + b.phase_offset;
        let du_dl = -2.0 * b.input_power_trap / C * unwrapped_atan_slope(b.finesse, x);
        g += sep[n] * (du_dl / dist);
    }
    Ok(g)
}

/// Hessian of U (J/m^2): central finite differences of the analytic gradient,
/// symmetrized as (H + H^T)/2. Uses an evaluator anchored at `pose` so the
/// differencing is free of absolute-coordinate rounding noise.
pub fn hessian(
    pose: &MirrorPose,
    geom: &TripodGeometry,
    drive: &BeamDrive,
    mirror: &MirrorSpec,
    g0: f64,
) -> Result<Matrix3<f64>> {
    let anchored = AnchoredPotential::new(pose.r, geom, drive, mirror, g0)?;
    anchored.hessian(Vector3::zeros(), HESSIAN_STEPS)
}

/// Full sample: value, gradient, Hessian, and branch counters.
pub fn sample(
    pose: &MirrorPose,
    geom: &TripodGeometry,
    drive: &BeamDrive,
    mirror: &MirrorSpec,
    g0: f64,
) -> Result<PotentialSample> {
    let value = potential(pose, geom, drive, mirror, g0)?;
    let grad = gradient(pose, geom, drive, mirror, g0)?;
    let hess = hessian(pose, geom, drive, mirror, g0)?;
    let lengths = optics::cavity_lengths(pose, geom, mirror.radius_of_curvature_top)?;
    let mut branch = [0_i64; 3];
    for n in 0..3 {
        let b = &drive.beams[n];
        let (_, order) = optics::reduce_phase(b.wavenumber() * lengths[n] + b.phase_offset);
        branch[n] = order;
    }
    Ok(PotentialSample {
        value,
        gradient: grad,
        hessian: hess,
        branch_indices: branch,
    })
}

/// Potential evaluator anchored at a reference position.
///
/// Displacements from the anchor are tracked exactly: the per-cavity length
/// change is computed as (2 e.w + |w|^2)/(rho + rho0), which avoids the
/// catastrophic cancellation of differencing two ~0.18 m lengths. All local
/// work (Newton polishing, Hessians, trajectory forces, extent bisections)
/// goes through this type; the absolute-pose entry points above are the thin
/// wrappers the rest of the crate re-exports.
#[derive(Debug, Clone)]
pub struct AnchoredPotential {
    anchor: Vector3<f64>,
    /// e_n = anchor - q_n.
    e: [Vector3<f64>; 3],
    rho0: [f64; 3],
    /// Reduced phase at the anchor.
    phi0: [f64; 3],
    order0: [i64; 3],
    /// 2 P_n^(in) / (c k_n): optical energy per radian of chi (J).
    coef: [f64; 3],
    k: [f64; 3],
    finesse: [f64; 3],
    /// m g0 (N).
    weight: f64,
}

impl AnchoredPotential {
    pub fn new(
        anchor: Vector3<f64>,
        geom: &TripodGeometry,
        drive: &BeamDrive,
        mirror: &MirrorSpec,
        g0: f64,
    ) -> Result<Self> {
        let pose = MirrorPose::at(anchor);
        let sep = optics::separations(&pose, geom)?;
        let base = geom.radius_of_curvature_bottom - mirror.radius_of_curvature_top;
        let mut e = [Vector3::zeros(); 3];
        let mut rho0 = [0.0; 3];
        let mut phi0 = [0.0; 3];
        let mut order0 = [0_i64; 3];
        let mut coef = [0.0; 3];
        let mut k = [0.0; 3];
        let mut finesse = [0.0; 3];
        for n in 0..3 {
            let b = &drive.beams[n];
            e[n] = sep[n];
            rho0[n] = sep[n].norm();
            k[n] = b.wavenumber();
            let (phi, order) = optics::reduce_phase(k[n] * (base + rho0[n]) + b.phase_offset);
            phi0[n] = phi;
            order0[n] = order;
            coef[n] = 2.0 * b.input_power_trap / (C * k[n]);
            finesse[n] = b.finesse;
        }
        Ok(Self {
            anchor,
            e,
            rho0,
            phi0,
            order0,
            coef,
            k,
            finesse,
            weight: mirror.mass * g0,
        })
    }

    pub fn anchor(&self) -> Vector3<f64> {
        self.anchor
    }

    pub fn finesse(&self, n: usize) -> f64 {
        self.finesse[n]
    }

    pub fn wavenumber(&self, n: usize) -> f64 {
        self.k[n]
    }

    /// Exact cavity-length change rho_n(w) - rho_n(0) (m), cancellation-free.
    pub fn delta_rho(&self, w: Vector3<f64>, n: usize) -> f64 {
        let rho = (self.e[n] + w).norm();
        (2.0 * self.e[n].dot(&w) + w.norm_squared()) / (rho + self.rho0[n])
    }

    /// Cavity axis unit vector (from q_n toward the mirror) at displacement `w`.
    pub fn axis(&self, w: Vector3<f64>, n: usize) -> Vector3<f64> {
        (self.e[n] + w).normalize()
    }

    /// Per-cavity reduced phase and branch order at displacement `w`.
    pub fn phase(&self, w: Vector3<f64>, n: usize) -> (f64, i64) {
        let drho = self.delta_rho(w, n);
        let (phi, shift) = optics::reduce_phase(self.phi0[n] + self.k[n] * drho);
        (phi, self.order0[n] + shift)
    }

    /// U(anchor + w) - U_optical-reference, i.e. the potential with each
    /// cavity's chi measured relative to the anchor branch. Differs from the
    /// absolute potential by a constant; use for energies and level sets.
    pub fn value(&self, w: Vector3<f64>) -> f64 {
        let mut u = self.weight * (self.anchor.z + w.z);
        for n in 0..3 {
            let v = self.e[n] + w;
            let rho = v.norm();
            let drho = (2.0 * self.e[n].dot(&w) + w.norm_squared()) / (rho + self.rho0[n]);
            let x = self.phi0[n] + self.k[n] * drho;
            u -= self.coef[n]
                * (unwrapped_atan(self.finesse[n], x) - unwrapped_atan(self.finesse[n], self.phi0[n]));
        }
        u
    }

    /// grad U at anchor + w (N).
    pub fn gradient(&self, w: Vector3<f64>) -> Vector3<f64> {
        let mut g = Vector3::new(0.0, 0.0, self.weight);
        for n in 0..3 {
            let v = self.e[n] + w;
            let rho = v.norm();
            let drho = (2.0 * self.e[n].dot(&w) + w.norm_squared()) / (rho + self.rho0[n]);
            let x = self.phi0[n] + self.k[n] * drho;
            let du_dl = -self.coef[n] * self.k[n] * unwrapped_atan_slope(self.finesse[n], x);
            g += v * (du_dl / rho);
        }
        g
    }

    /// Optical force + gravity at anchor + w (N): -grad U.
    pub fn force(&self, w: Vector3<f64>) -> Vector3<f64> {
        -self.gradient(w)
    }

    /// Central finite differences of the analytic gradient, symmetrized.
    pub fn hessian(&self, w: Vector3<f64>, steps: [f64; 3]) -> Result<Matrix3<f64>> {
        let mut h = Matrix3::zeros();
        for i in 0..3 {
            let hi = steps[i];
            if !(hi > 0.0) || hi < 1e-18 * (1.0 + w[i].abs()) {
                return Err(crate::error::Error::numerical(format!(
                    "hessian step {hi:e} underflows relative to coordinate {:e}",
                    w[i]
                )));
            }
            let mut dp = w;
            dp[i] += hi;
            let mut dm = w;
            dm[i] -= hi;
            let gd = (self.gradient(dp) - self.gradient(dm)) / (2.0 * hi);
            for j in 0..3 {
                h[(j, i)] = gd[j];
            }
        }
        Ok((h + h.transpose()) / 2.0)
    }
}

/// Plane selector for potential map exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPlane {
    /// Vary x and y at fixed z.
    Xy,
    /// Vary y and z at fixed x.
    Yz,
}

/// Sample U - U(center) on a regular grid in the given plane through
/// `center`. Returns (x, y, z, U) records in row-major order.
pub fn potential_grid(
    cfg: &SimulationConfig,
    center: Vector3<f64>,
    plane: GridPlane,
    half_extents: (f64, f64),
    points: (usize, usize),
) -> Result<Vec<(f64, f64, f64, f64)>> {
    let anchored = AnchoredPotential::new(
        center,
        &cfg.geometry,
        &cfg.drive,
        &cfg.mirror,
        cfg.constants.g0,
    )?;
    let u0 = anchored.value(Vector3::zeros());
    let (na, nb) = points;
    let mut out = Vec::with_capacity(na * nb);
    for ia in 0..na {
        let fa = if na > 1 {
            ia as f64 / (na - 1) as f64 * 2.0 - 1.0
        } else {
            0.0
        };
        for ib in 0..nb {
            let fb = if nb > 1 {
                ib as f64 / (nb - 1) as f64 * 2.0 - 1.0
            } else {
                0.0
            };
            let w = match plane {
                GridPlane::Xy => Vector3::new(fa * half_extents.0, fb * half_extents.1, 0.0),
                GridPlane::Yz => Vector3::new(0.0, fa * half_extents.0, fb * half_extents.1),
            };
            let p = center + w;
            out.push((p.x, p.y, p.z, anchored.value(w) - u0));
        }
    }
    Ok(out)
}
