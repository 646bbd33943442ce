//! Time-domain integration of the mirror's translational motion.
//!
//! Two models:
//! - quasi-static: the cavity fields follow the mirror instantaneously, so
//!   the force is -grad U(r) (conservative apart from optional viscous
//!   damping). Demonstrates self-locking stability.
//! - dynamic: each cavity field obeys the driven single-mode equation
//!   `da/dt = (i (delta + G u) - kappa/2) a + eps`, where `u` is the mirror
//!   displacement along the cavity axis (lengthening positive) and
//!   `G = omega_c / L` the frequency pull per metre. The radiation force is
//!   `hbar G |a|^2` along the axis, normalized so the static solution
//!   reproduces the quasi-static circulating-power force (|a|^2 equals the
//!   round-trip photon number 2 P L / (hbar omega_c c)). The field lag makes
//!   blue detuning anti-damp and red detuning damp the motion.
//!
//! Stochastic heating is handled analytically in `budgets`; no noise is
//! injected here.

use nalgebra::{SVector, Vector3};
use num_complex::Complex64;

use crate::constants::{C, HBAR};
use crate::error::Result;
use crate::model::SimulationConfig;
use crate::numerics::{self, OdeOptions, OdeStats};
use crate::optics;
use crate::potential::AnchoredPotential;

/// Mechanical state of the mirror.
#[derive(Debug, Clone, Copy)]
pub struct MechState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub time: f64,
}

impl MechState {
    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            time: 0.0,
        }
    }
}

/// Intracavity field amplitudes, |a|^2 = round-trip photon number.
#[derive(Debug, Clone, Copy)]
pub struct FieldState {
    pub trap: [Complex64; 3],
    pub cool: [Complex64; 3],
}

/// One output record.
#[derive(Debug, Clone, Copy)]
pub struct TrajectorySample {
    pub time: f64,
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    /// Per-cavity total intracavity photon number.
    pub photons: [f64; 3],
}

/// Sampled trajectory with integrator statistics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub stats: OdeStats,
}

/// Integration options.
#[derive(Debug, Clone)]
pub struct DynOptions {
    /// Relative tolerance of the adaptive integrator.
    pub rtol: f64,
    /// Absolute error floor on positions (m). Trap-scale displacements are
    /// ~1e-10 m, so this is the knob that actually sets the step count.
    pub atol_pos: f64,
    /// Absolute error floor on velocities (m/s).
    pub atol_vel: f64,
    /// Step-size cap (s).
    pub dt_max: f64,
    /// Output sampling interval (s); 0 means 1000 samples over the run.
    pub output_interval: f64,
    /// Freeze the mirror (field-response studies).
    pub clamp_mirror: bool,
}

impl Default for DynOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol_pos: 1e-15,
            atol_vel: 1e-9,
            dt_max: 1e-6,
            output_interval: 0.0,
            clamp_mirror: false,
        }
    }
}

/// Per-cavity, per-field constants of the dynamic model at a given anchor.
struct FieldModel {
    kappa: f64,
    /// Detuning of this field at the anchor pose (rad/s).
    delta0: f64,
    /// Frequency pull per metre of lengthening, omega_c / L (rad/s/m).
    pull: f64,
    /// Real drive amplitude.
    drive: f64,
    /// Steady-state photon number at the anchor.
    n_ss: f64,
}

impl FieldModel {
    /// Steady-state amplitude at axial displacement u.
    fn steady(&self, u: f64) -> Complex64 {
        let delta = self.delta0 + self.pull * u;
        Complex64::new(self.drive, 0.0) / Complex64::new(self.kappa / 2.0, -delta)
    }
}

fn field_models(cfg: &SimulationConfig, anchored: &AnchoredPotential) -> [(FieldModel, FieldModel); 3] {
    std::array::from_fn(|n| {
        let b = &cfg.drive.beams[n];
        let l = cfg.geometry.nominal_length;
        let kappa = optics::linewidth(b.finesse, l);
        let omega_c = cfg.omega_c(n);
        let pull = omega_c / l;
        let (phi_trap, _) = anchored.phase(Vector3::zeros(), n);
        let delta_trap = optics::detuning_from_phase(phi_trap, l);
        // The cooling laser is offset from the trapping laser by the design
        // detuning difference; its absolute detuning follows the same cavity.
        let delta_cool_design = b.detuning_cool.unwrap_or(0.0);
        let delta_cool = delta_trap + (delta_cool_design - b.detuning_trap);
        let make = |input_power: f64, delta: f64| {
            let phi = optics::phase_from_detuning(delta, l);
            let p_circ = optics::circulating_power_at_phase(input_power, b.finesse, phi);
            let n_ss = 2.0 * p_circ * l / (HBAR * omega_c * C);
            let drive = (n_ss * ((kappa / 2.0) * (kappa / 2.0) + delta * delta)).sqrt();
            FieldModel {
                kappa,
                delta0: delta,
                pull,
                drive,
                n_ss,
            }
        };
        (
            make(b.input_power_trap, delta_trap),
            make(b.input_power_cool, delta_cool),
        )
    })
}

/// Integrate m r'' = -grad U(r) - m gamma r' with the adaptive scheme.
/// With `extra_damping = 0` the dynamics is conservative.
pub fn simulate_quasistatic(
    cfg: &SimulationConfig,
    initial: MechState,
    extra_damping: f64,
    duration: f64,
    opts: &DynOptions,
) -> Result<Trajectory> {
    let anchored = AnchoredPotential::new(
        initial.position,
        &cfg.geometry,
        &cfg.drive,
        &cfg.mirror,
        cfg.constants.g0,
    )?;
    let inv_mass = 1.0 / cfg.mirror.mass;
    let rhs = |_t: f64, y: &SVector<f64, 6>| {
        let w = Vector3::new(y[0], y[1], y[2]);
        let v = Vector3::new(y[3], y[4], y[5]);
        let a = anchored.force(w) * inv_mass - v * extra_damping;
        SVector::<f64, 6>::from_column_slice(&[v.x, v.y, v.z, a.x, a.y, a.z])
    };
    let y0 = SVector::<f64, 6>::from_column_slice(&[
        0.0,
        0.0,
        0.0,
        initial.velocity.x,
        initial.velocity.y,
        initial.velocity.z,
    ]);
    let (ap, av) = (opts.atol_pos, opts.atol_vel);
    let atol = SVector::<f64, 6>::from_column_slice(&[ap, ap, ap, av, av, av]);
    let ode = OdeOptions::new(opts.rtol, atol, opts.dt_max);

    let interval = effective_interval(opts, duration);
    let mut sampler = Sampler::new(initial.time, interval, duration);
    let (y_end, stats) = numerics::integrate(rhs, initial.time, y0, initial.time + duration, &ode, |step| {
        sampler.drain(&step, |t, y| sample_quasistatic(cfg, &anchored, t, y));
    })?;
    let mut samples = sampler.finish();
    if duration == 0.0 || samples.last().map(|s| s.time) != Some(initial.time + duration) {
        samples.push(sample_quasistatic(cfg, &anchored, initial.time + duration, &y_end));
    }
    Ok(Trajectory { samples, stats })
}

fn sample_quasistatic(
    cfg: &SimulationConfig,
    anchored: &AnchoredPotential,
    t: f64,
    y: &SVector<f64, 6>,
) -> TrajectorySample {
    let w = Vector3::new(y[0], y[1], y[2]);
    let mut photons = [0.0; 3];
    for n in 0..3 {
        let b = &cfg.drive.beams[n];
        let (phi, _) = anchored.phase(w, n);
        let p = optics::circulating_power_at_phase(b.input_power_trap, b.finesse, phi);
        photons[n] = 2.0 * p * cfg.geometry.nominal_length / (HBAR * cfg.omega_c(n) * C);
    }
    TrajectorySample {
        time: t,
        position: anchored.anchor() + w,
        velocity: Vector3::new(y[3], y[4], y[5]),
        photons,
    }
}

/// Integrate the coupled mirror + cavity-field model. The fields start at
/// their steady state for the initial pose unless `fields` is given.
pub fn simulate_dynamic(
    cfg: &SimulationConfig,
    initial: MechState,
    fields: Option<FieldState>,
    duration: f64,
    opts: &DynOptions,
) -> Result<Trajectory> {
    if cfg
        .drive
        .beams
        .iter()
        .any(|b| b.input_power_cool > 0.0 && b.detuning_cool.is_none())
    {
        return Err(crate::error::Error::validation(
            "beam.detuning_cool",
            "resolve `auto` (e.g. to -omega_m of the trap) before dynamic simulation",
        ));
    }
    let anchored = AnchoredPotential::new(
        initial.position,
        &cfg.geometry,
        &cfg.drive,
        &cfg.mirror,
        cfg.constants.g0,
    )?;
    let models = field_models(cfg, &anchored);
    let inv_mass = 1.0 / cfg.mirror.mass;
    let weight = cfg.weight();
    let clamp = opts.clamp_mirror;

    let init_fields = fields.unwrap_or_else(|| FieldState {
        trap: std::array::from_fn(|n| models[n].0.steady(0.0)),
        cool: std::array::from_fn(|n| models[n].1.steady(0.0)),
    });
    let mut y0 = SVector::<f64, 18>::zeros();
    for i in 0..3 {
        y0[3 + i] = initial.velocity[i];
    }
    for n in 0..3 {
        y0[6 + 2 * n] = init_fields.trap[n].re;
        y0[7 + 2 * n] = init_fields.trap[n].im;
        y0[12 + 2 * n] = init_fields.cool[n].re;
        y0[13 + 2 * n] = init_fields.cool[n].im;
    }
    let amp_scale = models
        .iter()
        .flat_map(|(t, c)| [t.n_ss.sqrt(), c.n_ss.sqrt()])
        .fold(1.0_f64, f64::max);

    // State layout: [w(3), v(3), re/im a_trap(6), re/im a_cool(6)].
    let anchored_rhs = anchored.clone();
    let rhs = move |_t: f64, y: &SVector<f64, 18>| {
        let anchored = &anchored_rhs;
        let w = Vector3::new(y[0], y[1], y[2]);
        let v = Vector3::new(y[3], y[4], y[5]);
        let mut dy = SVector::<f64, 18>::zeros();
        let mut force = Vector3::new(0.0, 0.0, -weight);
        for n in 0..3 {
            let u = anchored.delta_rho(w, n);
            let axis = anchored.axis(w, n);
            let (trap_model, cool_model) = &models[n];
            for (which, model) in [(0, trap_model), (1, cool_model)] {
                let idx = 6 + n * 2 + which * 6;
                let a = Complex64::new(y[idx], y[idx + 1]);
                let delta = model.delta0 + model.pull * u;
                let da = Complex64::new(-model.kappa / 2.0, delta) * a + model.drive;
                dy[idx] = da.re;
                dy[idx + 1] = da.im;
                force += axis * (HBAR * model.pull * a.norm_sqr());
            }
        }
        if !clamp {
            let accel = force * inv_mass;
            dy[0] = v.x;
            dy[1] = v.y;
            dy[2] = v.z;
            dy[3] = accel.x;
            dy[4] = accel.y;
            dy[5] = accel.z;
        }
        dy
    };

    let mut atol = SVector::<f64, 18>::repeat(amp_scale * 1e-12);
    for i in 0..3 {
        atol[i] = opts.atol_pos;
        atol[3 + i] = opts.atol_vel;
    }
    let ode = OdeOptions::new(opts.rtol, atol, opts.dt_max);

    let interval = effective_interval(opts, duration);
    let mut sampler = Sampler::new(initial.time, interval, duration);
    let (y_end, stats) = numerics::integrate(rhs, initial.time, y0, initial.time + duration, &ode, |step| {
        sampler.drain(&step, |t, y| sample_dynamic(&anchored, t, y));
    })?;
    let mut samples = sampler.finish();
    if duration == 0.0 || samples.last().map(|s| s.time) != Some(initial.time + duration) {
        samples.push(sample_dynamic(&anchored, initial.time + duration, &y_end));
    }
    Ok(Trajectory { samples, stats })
}

fn sample_dynamic(anchored: &AnchoredPotential, t: f64, y: &SVector<f64, 18>) -> TrajectorySample {
    let w = Vector3::new(y[0], y[1], y[2]);
    let photons = std::array::from_fn(|n| {
        let trap = Complex64::new(y[6 + 2 * n], y[7 + 2 * n]).norm_sqr();
        let cool = Complex64::new(y[12 + 2 * n], y[13 + 2 * n]).norm_sqr();
        trap + cool
    });
    TrajectorySample {
        time: t,
        position: anchored.anchor() + w,
        velocity: Vector3::new(y[3], y[4], y[5]),
        photons,
    }
}

fn effective_interval(opts: &DynOptions, duration: f64) -> f64 {
    if opts.output_interval > 0.0 {
        opts.output_interval
    } else {
        duration / 1000.0
    }
}

/// Uniform-interval sampler fed from accepted integrator steps.
struct Sampler<const N: usize> {
    next_t: f64,
    interval: f64,
    t_end: f64,
    out: Vec<TrajectorySample>,
    make: std::marker::PhantomData<[f64; N]>,
}

impl<const N: usize> Sampler<N> {
    fn new(t0: f64, interval: f64, duration: f64) -> Self {
        Self {
            next_t: t0,
            interval,
            t_end: t0 + duration,
            out: Vec::new(),
            make: std::marker::PhantomData,
        }
    }

    fn drain(
        &mut self,
        step: &numerics::Step<'_, N>,
        mut make: impl FnMut(f64, &SVector<f64, N>) -> TrajectorySample,
    ) {
        if self.interval <= 0.0 {
            return;
        }
        while self.next_t <= step.t1 && self.next_t <= self.t_end {
            let y = if self.next_t <= step.t0 {
                step.y0.to_owned()
            } else {
                step.interpolate(self.next_t)
            };
            self.out.push(make(self.next_t, &y));
            self.next_t += self.interval;
        }
    }

    fn finish(self) -> Vec<TrajectorySample> {
        self.out
    }
}

/// Mechanical energy relative to the trap: kinetic + U(r) - U(reference).
pub fn mechanical_energy(
    cfg: &SimulationConfig,
    anchored: &AnchoredPotential,
    sample: &TrajectorySample,
) -> f64 {
    let w = sample.position - anchored.anchor();
    0.5 * cfg.mirror.mass * sample.velocity.norm_squared() + anchored.value(w)
}

/// Per-half-period amplitude extrema of `z - z_ref`: (time, |extremum|)
/// pairs, one per velocity sign change.
pub fn envelope_peaks(samples: &[TrajectorySample], z_ref: f64) -> Vec<(f64, f64)> {
    let mut extrema: Vec<(f64, f64)> = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    let mut prev_sign = 0.0_f64;
    for s in samples {
        let dz = s.position.z - z_ref;
        let sign = s.velocity.z.signum();
        if prev_sign != 0.0 && sign != prev_sign {
            if let Some(b) = best.take() {
                extrema.push(b);
            }
        }
        if best.map(|(_, a)| dz.abs() > a).unwrap_or(true) {
            best = Some((s.time, dz.abs()));
        }
        prev_sign = sign;
    }
    extrema
}

/// Least-squares slope of ln|envelope| over time: the amplitude growth rate
/// (1/s), positive for anti-damping. Extrema of `z - z_ref` are collected per
/// half period from the sampled trajectory; the first `discard` extrema are
/// dropped (transient).
pub fn log_envelope_rate(samples: &[TrajectorySample], z_ref: f64, discard: usize) -> Option<f64> {
    let extrema = envelope_peaks(samples, z_ref);
    if extrema.len() < discard + 4 {
        return None;
    }
    let pts: Vec<(f64, f64)> = extrema
        .into_iter()
        .skip(discard)
        .filter(|(_, a)| *a > 0.0)
        .map(|(t, a)| (t, a.ln()))
        .collect();
    let n = pts.len() as f64;
    let st: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let stt: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sty: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * stt - st * st;
    (denom != 0.0).then(|| (n * sty - st * sy) / denom)
}

/// Oscillation frequency (Hz) of z about `z_ref` from interpolated
/// zero crossings of the sampled trajectory.
pub fn vertical_crossing_frequency(samples: &[TrajectorySample], z_ref: f64) -> Option<f64> {
    let mut crossings: Vec<f64> = Vec::new();
    for pair in samples.windows(2) {
        let a = pair[0].position.z - z_ref;
        let b = pair[1].position.z - z_ref;
        if a == 0.0 {
            crossings.push(pair[0].time);
        } else if a.signum() != b.signum() && b != 0.0 {
            let frac = a / (a - b);
            crossings.push(pair[0].time + frac * (pair[1].time - pair[0].time));
        }
    }
    if crossings.len() < 3 {
        return None;
    }
    let n = crossings.len();
    Some((n - 1) as f64 / (2.0 * (crossings[n - 1] - crossings[0])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes;

    fn supported_cfg(finesse: f64) -> (SimulationConfig, crate::traps::TrapSite) {
        let cfg = SimulationConfig::default_paper();
        let (site, p) = modes::trap_at(&cfg, finesse, 0.5, 1e3).unwrap();
        let mut cfg = cfg;
        for b in &mut cfg.drive.beams {
            b.finesse = finesse;
            b.detuning_trap = 0.5 * optics::linewidth(finesse, cfg.geometry.nominal_length);
            b.detuning_cool = Some(-site.frequencies[2]);
        }
        let current = cfg.drive.total_trap_power();
        cfg.drive.scale_trap_power(p / current);
        (cfg, site)
    }

    #[test]
    fn resting_at_the_trap_stays_put() {
        let (cfg, site) = supported_cfg(1000.0);
        let period = 2.0 * std::f64::consts::PI / site.frequencies[2];
        let opts = DynOptions::default();
        let traj = simulate_quasistatic(
            &cfg,
            MechState::at_rest(site.position),
            0.0,
            20.0 * period,
            &opts,
        )
        .unwrap();
        for s in &traj.samples {
            assert!(
                (s.position - site.position).norm() < 1e-13,
                "wandered {:.3e} m",
                (s.position - site.position).norm()
            );
        }
    }

    #[test]
    fn oscillation_frequency_matches_the_stiffness_eigenmode() {
        // 0.03 nm amplitude keeps the oscillation in the linear regime of the
        // support-solved trap (vertical extent ~0.4 nm); at 0.1 nm the
        // anharmonic softening alone is ~1.3%.
        let (cfg, site) = supported_cfg(1000.0);
        let mset = modes::mode_frequencies(&site, cfg.mirror.mass).unwrap();
        let (omega_v, _) = mset.vertical();
        let period = 2.0 * std::f64::consts::PI / omega_v;
        let mut opts = DynOptions::default();
        opts.output_interval = period / 64.0;
        let traj = simulate_quasistatic(
            &cfg,
            MechState::at_rest(site.position + Vector3::new(0.0, 0.0, 3e-11)),
            0.0,
            60.0 * period,
            &opts,
        )
        .unwrap();
        let f = vertical_crossing_frequency(&traj.samples, site.position.z).unwrap();
        let expected = omega_v / (2.0 * std::f64::consts::PI);
        assert!(
            (f / expected - 1.0).abs() < 0.005,
            "measured {f:.1} Hz vs eigenmode {expected:.1} Hz"
        );
    }

    #[test]
    fn undamped_energy_is_conserved() {
        let (cfg, site) = supported_cfg(1000.0);
        let period = 2.0 * std::f64::consts::PI / site.frequencies[2];
        let mut opts = DynOptions::default();
        opts.rtol = 1e-12;
        opts.atol_pos = 1e-18;
        opts.atol_vel = 1e-12;
        // Sample densely: the cubic Hermite output interpolation itself
        // carries ~(interval x omega)^4 energy error, which at period/8
        // would swamp the integrator drift.
        opts.output_interval = period / 128.0;
        let start = MechState::at_rest(site.position + Vector3::new(0.0, 0.0, 1e-10));
        let traj = simulate_quasistatic(&cfg, start, 0.0, 100.0 * period, &opts).unwrap();
        let anchored = AnchoredPotential::new(
            start.position,
            &cfg.geometry,
            &cfg.drive,
            &cfg.mirror,
            cfg.constants.g0,
        )
        .unwrap();
        let u_trap = anchored.value(site.position - start.position);
        let e0 = mechanical_energy(&cfg, &anchored, &traj.samples[0]) - u_trap;
        for s in &traj.samples {
            let e = mechanical_energy(&cfg, &anchored, s) - u_trap;
            assert!(
                ((e - e0) / e0).abs() < 1e-6,
                "energy drift {:.3e}",
                ((e - e0) / e0).abs()
            );
        }
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let (cfg, site) = supported_cfg(1000.0);
        let period = 2.0 * std::f64::consts::PI / site.frequencies[2];
        let opts = DynOptions::default();
        let start = MechState::at_rest(site.position + Vector3::new(2e-11, -1e-11, 8e-11));
        let forward = simulate_quasistatic(&cfg, start, 0.0, 7.3 * period, &opts).unwrap();
        let end = forward.samples.last().unwrap();
        let back = simulate_quasistatic(
            &cfg,
            MechState {
                position: end.position,
                velocity: -end.velocity,
                time: 0.0,
            },
            0.0,
            7.3 * period,
            &opts,
        )
        .unwrap();
        let fin = back.samples.last().unwrap();
        assert!(
            (fin.position - start.position).norm() < 1e-8,
            "missed start by {:.3e} m",
            (fin.position - start.position).norm()
        );
    }

    #[test]
    fn clamped_mirror_fields_reach_the_airy_steady_state() {
        let (cfg, site) = supported_cfg(1000.0);
        let kappa = cfg.kappa(0);
        let mut opts = DynOptions::default();
        opts.clamp_mirror = true;
        opts.dt_max = 1e-7;
        // Start the fields from zero to exercise the ring-up. The amplitude
        // residual decays as exp(-kappa t / 2), so 30/kappa puts the photon
        // number within ~1e-6 of steady state (20/kappa alone leaves 9e-5).
        let zero_fields = FieldState {
            trap: [Complex64::new(0.0, 0.0); 3],
            cool: [Complex64::new(0.0, 0.0); 3],
        };
        let traj = simulate_dynamic(
            &cfg,
            MechState::at_rest(site.position),
            Some(zero_fields),
            30.0 / kappa,
            &opts,
        )
        .unwrap();
        let anchored = AnchoredPotential::new(
            site.position,
            &cfg.geometry,
            &cfg.drive,
            &cfg.mirror,
            cfg.constants.g0,
        )
        .unwrap();
        let models = field_models(&cfg, &anchored);
        let last = traj.samples.last().unwrap();
        for n in 0..3 {
            let expected = models[n].0.n_ss + models[n].1.n_ss;
            assert!(
                (last.photons[n] / expected - 1.0).abs() < 1e-6,
                "cavity {n}: {:.6e} vs {:.6e}",
                last.photons[n],
                expected
            );
            assert!(last.photons[n] >= 0.0);
        }
    }

    #[test]
    fn blue_only_drive_antidamps() {
        let (mut cfg, site) = supported_cfg(1000.0);
        for b in &mut cfg.drive.beams {
            b.input_power_cool = 0.0;
        }
        let (omega_v, _) = modes::mode_frequencies(&site, cfg.mirror.mass)
            .unwrap()
            .vertical();
        let period = 2.0 * std::f64::consts::PI / omega_v;
        let mut opts = DynOptions::default();
        opts.output_interval = period / 64.0;
        opts.dt_max = 1e-7;
        let traj = simulate_dynamic(
            &cfg,
            MechState::at_rest(site.position + Vector3::new(0.0, 0.0, 5e-12)),
            None,
            25.0 * period,
            &opts,
        )
        .unwrap();
        let rate = log_envelope_rate(&traj.samples, site.position.z, 10).unwrap();
        assert!(rate > 0.0, "expected growth, rate = {rate:.3e} 1/s");
    }

    #[test]
    fn dominant_red_beam_damps() {
        // The resolved-sideband regime (omega_m > kappa at F = 20000): the
        // red beam's negative optical-spring stiffness is far below the trap
        // stiffness, so the combined system stays trapped, and the red field
        // damps the motion. At F ~ 1000 a 10x red beam at -omega_m sits deep
        // inside the linewidth and its anti-spring destabilizes the trap
        // entirely; no decay test is possible there.
        let (mut cfg, site) = supported_cfg(20000.0);
        let (omega_v, _) = modes::mode_frequencies(&site, cfg.mirror.mass)
            .unwrap()
            .vertical();
        for b in &mut cfg.drive.beams {
            b.input_power_cool = 10.0 * b.input_power_trap;
            b.detuning_cool = Some(-omega_v);
        }
        let period = 2.0 * std::f64::consts::PI / omega_v;
        let mut opts = DynOptions::default();
        opts.output_interval = period / 64.0;
        opts.dt_max = 1e-7;
        opts.atol_pos = 1e-17;
        opts.atol_vel = 1e-11;
        // The dynamic trap at F = 20000 is only ~13 pm wide (the detuning
        // sweeps a linewidth per kappa/G = 27 pm), so displace well inside.
        let traj = simulate_dynamic(
            &cfg,
            MechState::at_rest(site.position + Vector3::new(0.0, 0.0, 5e-12)),
            None,
            25.0 * period,
            &opts,
        )
        .unwrap();
        // Strong damping runs out of cycles for a log-envelope fit; assert
        // the monotone decay of the first several amplitude peaks instead.
        let peaks = envelope_peaks(&traj.samples, site.position.z);
        assert!(peaks.len() >= 5, "only {} extrema", peaks.len());
        for pair in peaks.windows(2).take(5) {
            assert!(
                pair[1].1 < pair[0].1,
                "amplitude grew: {:.3e} -> {:.3e}",
                pair[0].1,
                pair[1].1
            );
        }
        assert!(peaks[4].1 < 0.9 * peaks[0].1, "decay too weak: {peaks:?}");
    }

    #[test]
    fn adiabatic_regime_approaches_the_quasistatic_envelope() {
        // kappa >> omega_m: the dynamic envelope converges on the quasistatic
        // one as 1/kappa^2 (residual anti-damping gamma T ~ 800 pi G^2 n /
        // kappa^2 ~ F^{3/2}). At F = 30 the 25-period envelope agrees within
        // 2.5%; at F = 100 the measured residual is ~13% over 25 periods and
        // is asserted as such (documented model behaviour, not an error).
        for (finesse, bound) in [(30.0, 0.025), (100.0, 0.20)] {
            let (mut cfg, site) = supported_cfg(finesse);
            for b in &mut cfg.drive.beams {
                b.input_power_cool = 0.0;
            }
            let (omega_v, _) = modes::mode_frequencies(&site, cfg.mirror.mass)
                .unwrap()
                .vertical();
            let period = 2.0 * std::f64::consts::PI / omega_v;
            let mut opts = DynOptions::default();
            opts.output_interval = period / 64.0;
            opts.dt_max = 2e-8;
            let start = MechState::at_rest(site.position + Vector3::new(0.0, 0.0, 5e-12));
            let duration = 25.0 * period;
            let dynamic = simulate_dynamic(&cfg, start, None, duration, &opts).unwrap();
            let quasi = simulate_quasistatic(&cfg, start, 0.0, duration, &opts).unwrap();
            let rate_d = log_envelope_rate(&dynamic.samples, site.position.z, 5).unwrap();
            let rate_q = log_envelope_rate(&quasi.samples, site.position.z, 5).unwrap();
            let envelope_ratio = ((rate_d - rate_q) * duration).exp();
            assert!(
                (envelope_ratio - 1.0).abs() < bound,
                "F = {finesse}: envelope ratio {envelope_ratio:.4} exceeds {bound}"
            );
        }
    }

    #[test]
    fn zero_duration_yields_single_sample() {
        let (cfg, site) = supported_cfg(1000.0);
        let traj = simulate_quasistatic(
            &cfg,
            MechState::at_rest(site.position),
            0.0,
            0.0,
            &DynOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.stats.accepted_steps, 0);
    }

    /// Verify the trap solver against an independent observable: a trajectory
    /// launched slightly off-site oscillates instead of falling.
    #[test]
    fn displaced_start_stays_bounded() {
        let (cfg, site) = supported_cfg(1000.0);
        let period = 2.0 * std::f64::consts::PI / site.frequencies[2];
        let opts = DynOptions::default();
        let traj = simulate_quasistatic(
            &cfg,
            MechState::at_rest(site.position + Vector3::new(0.0, 0.0, 1e-10)),
            0.0,
            30.0 * period,
            &opts,
        )
        .unwrap();
        for s in &traj.samples {
            let dz = (s.position.z - site.position.z).abs();
            assert!(dz < 2e-10, "escaped to {dz:.3e} m");
        }
    }
}
