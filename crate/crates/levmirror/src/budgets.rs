//! Analytic heating, damping, cooling, and sensitivity budgets: background
//! gas collisions, laser intensity noise, blackbody balance, resolved-sideband
//! cooling, phonon occupations, and gravimetric precision.
//!
//! All frequencies in these APIs are angular (rad/s). The only place a cyclic
//! reading enters is the laser-noise reproduction chain, where the caller
//! passes the cyclic value explicitly (see `intensity_heating`).

use serde::Serialize;

use crate::constants::{PhysicalConstants, C, HBAR};
use crate::error::{Error, Result};
use crate::model::{Environment, MirrorSpec, SimulationConfig};
use crate::modes;
use crate::numerics;
use crate::optics;
use crate::traps::TrapSite;

/// Background-gas damping and heating summary.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GasBudget {
    /// Mechanical dissipation rate gamma_m = 2 rho_g v_g S / m (1/s).
    pub damping_rate: f64,
    /// Collision rate at the mean one-dimensional speed, P S v_g / (k_B T) (1/s).
    pub collision_rate: f64,
    /// Collisional heating power dE_g/dt (W).
    pub heating_power: f64,
    /// <n_th> = (dE_g/dt) / (gamma_m hbar omega_m).
    pub thermal_phonons: f64,
    /// Q = omega_m / gamma_m (angular convention).
    pub quality_factor: f64,
    /// Knudsen number (mean free path / mirror diameter).
    pub knudsen: f64,
    /// Free-molecular-flow validity (Kn >> 1); a warning flag, not an error.
    pub free_molecular: bool,
}

/// Laser intensity-noise (parametric heating) summary.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaserNoiseBudget {
    /// Ground-state parametric rates R_{0->2} and R_{0->-2} (1/s).
    pub parametric_rate_up: f64,
    pub parametric_rate_down: f64,
    /// gamma_I = (omega_m^2 / 4) S_eps(2 omega_m) (1/s).
    pub heating_rate: f64,
    /// Energy e-folding time 1/gamma_I (s); infinite when noiseless.
    pub efold_time: f64,
    /// RMS fractional intensity noise bound for a 10 s e-folding time over
    /// the configured band.
    pub rms_requirement: f64,
}

/// Blackbody absorption/emission balance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThermalBudget {
    /// Blackbody absorption from the environment (W).
    pub bb_absorption_power: f64,
    /// Blackbody emission at the internal temperature (W).
    pub bb_emission_power: f64,
    /// Laser power absorbed in the coating (W).
    pub laser_absorbed_power: f64,
    /// Internal temperature solving the balance (K).
    pub internal_temperature: f64,
    /// T_int - T_env (K).
    pub delta_t: f64,
}

/// Resolved-sideband cooling summary for one cavity of the trap.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoolingSummary {
    /// Optomechanical coupling G = omega_c sqrt(hbar/(2 m omega_m)) / L_0 (rad/s).
    pub coupling: f64,
    /// Mechanical frequency used (vertical mode, rad/s).
    pub omega_m: f64,
    /// Cavity decay rate (rad/s).
    pub kappa: f64,
    /// Noise-spectrum values S_lambda(+omega_m), S_lambda(-omega_m) (s).
    pub s_trap_plus: f64,
    pub s_trap_minus: f64,
    pub s_cool_plus: f64,
    pub s_cool_minus: f64,
    /// Net laser cooling rate (1/s); positive means net cooling.
    pub cooling_rate: f64,
    /// Minimum phonon occupation from the sideband balance; infinite when
    /// heating dominates.
    pub min_phonons: f64,
    /// Combined occupation including the gas bath.
    pub combined_phonons: f64,
    /// Intracavity photon numbers of the trapping and cooling fields.
    pub photon_number_trap: f64,
    pub photon_number_cool: f64,
    pub heating_dominated: bool,
}

/// Gas damping rate gamma_m = 2 rho_g v_g S / m (1/s).
pub fn gas_damping(env: &Environment, mirror: &MirrorSpec, k_b: f64) -> f64 {
    let v_g = (2.0 * k_b * env.temperature / env.gas_molecule_mass).sqrt();
    2.0 * env.mass_density(k_b) * v_g * mirror.cross_section / mirror.mass
}

/// Knudsen number: gas mean free path over the mirror diameter.
pub fn knudsen_number(env: &Environment, mirror: &MirrorSpec, k_b: f64) -> f64 {
    if env.pressure == 0.0 {
        return f64::INFINITY;
    }
    let d = env.gas_kinetic_diameter;
    let mfp = k_b * env.temperature
        / (std::f64::consts::SQRT_2 * std::f64::consts::PI * d * d * env.pressure);
    mfp / mirror.diameter
}

/// Collisional heating power (W): adaptive quadrature of
/// dE_g/dt = int dv Gamma(v) D(v) (2 m_g^2 / m) v^2 over the one-dimensional
/// Maxwell-Boltzmann speed density D(v).
pub fn gas_heating_power(env: &Environment, mirror: &MirrorSpec, k_b: f64) -> Result<f64> {
    if env.pressure == 0.0 {
        return Ok(0.0);
    }
    let sigma = (k_b * env.temperature / env.gas_molecule_mass).sqrt();
    let n_flux = env.pressure * mirror.cross_section / (k_b * env.temperature);
    let prefactor = 2.0 * env.gas_molecule_mass * env.gas_molecule_mass / mirror.mass;
    // D(v) = sqrt(2/pi)/sigma exp(-v^2 / 2 sigma^2), v >= 0 (unit mass).
    let density = |v: f64| {
        (2.0 / std::f64::consts::PI).sqrt() / sigma * (-v * v / (2.0 * sigma * sigma)).exp()
    };
    let integrand = |v: f64| n_flux * v * density(v) * prefactor * v * v;
    numerics::integrate_simpson(&integrand, 0.0, 12.0 * sigma, 1e-12)
}

/// Closed form of the same integral: the third Gaussian moment,
/// int v^3 D(v) dv = 2 sqrt(2/pi) sigma^3.
pub fn gas_heating_power_closed_form(env: &Environment, mirror: &MirrorSpec, k_b: f64) -> f64 {
    let sigma = (k_b * env.temperature / env.gas_molecule_mass).sqrt();
    let n_flux = env.pressure * mirror.cross_section / (k_b * env.temperature);
    let prefactor = 2.0 * env.gas_molecule_mass * env.gas_molecule_mass / mirror.mass;
    let v3_moment = 2.0 * (2.0 / std::f64::consts::PI).sqrt() * sigma.powi(3);
    n_flux * prefactor * v3_moment
}

/// Full gas budget at a mechanical frequency `omega_m` (rad/s).
pub fn gas_budget(
    env: &Environment,
    mirror: &MirrorSpec,
    omega_m: f64,
    k_b: f64,
) -> Result<GasBudget> {
    if !(omega_m > 0.0) {
        return Err(Error::validation("omega_m", "must be > 0"));
    }
    let damping = gas_damping(env, mirror, k_b);
    let heating = gas_heating_power(env, mirror, k_b)?;
    let v_g = (2.0 * k_b * env.temperature / env.gas_molecule_mass).sqrt();
    let collision = env.pressure * mirror.cross_section * v_g / (k_b * env.temperature);
    let thermal = if damping > 0.0 {
        heating / (damping * HBAR * omega_m)
    } else {
        0.0
    };
    let kn = knudsen_number(env, mirror, k_b);
    Ok(GasBudget {
        damping_rate: damping,
        collision_rate: collision,
        heating_power: heating,
        thermal_phonons: thermal,
        quality_factor: if damping > 0.0 {
            omega_m / damping
        } else {
            f64::INFINITY
        },
        knudsen: kn,
        free_molecular: kn > 10.0,
    })
}

/// Parametric transition rates R_{n -> n+-2} = (pi omega_m^2 / 16)
/// S_eps(2 omega_m) (n + 1 +- 1)(n +- 1): returns (up, down).
pub fn parametric_rates(n: u64, omega_m: f64, s_eps_at_2omega: f64) -> (f64, f64) {
    let n = n as f64;
    let base = std::f64::consts::PI * omega_m * omega_m / 16.0 * s_eps_at_2omega;
    (base * (n + 2.0) * (n + 1.0), base * n * (n - 1.0).max(0.0))
}

/// Intensity-noise heating rate gamma_I = (omega_m^2 / 4) S_eps(2 omega_m)
/// and the energy e-folding time 1/gamma_I.
pub fn intensity_heating(omega_m: f64, s_eps_at_2omega: f64) -> (f64, f64) {
    let gamma = omega_m * omega_m / 4.0 * s_eps_at_2omega;
    let tau = if gamma > 0.0 { 1.0 / gamma } else { f64::INFINITY };
    (gamma, tau)
}

/// RMS fractional intensity noise bound so the e-folding time over a flat
/// band of `bandwidth` Hz reaches `tau_target`: sqrt(4 B / (tau omega^2)).
pub fn rms_noise_bound(tau_target: f64, omega_m: f64, bandwidth: f64) -> f64 {
    (4.0 * bandwidth / (tau_target * omega_m * omega_m)).sqrt()
}

/// Closed-form blackbody absorption rate pi^2 S eps (k_B T)^4 / (60 c^2 hbar^3).
pub fn blackbody_power_closed_form(
    cross_section: f64,
    emissivity: f64,
    temperature: f64,
    k: &PhysicalConstants,
) -> f64 {
    std::f64::consts::PI.powi(2) * cross_section * emissivity * (k.k_b * temperature).powi(4)
        / (60.0 * k.c * k.c * k.hbar.powi(3))
}

/// The same rate by adaptive quadrature of the mode sum
/// (S / 4 pi^2) int dk hbar c^2 k^3 n_k eps with n_k the Planck occupation.
pub fn blackbody_power_quadrature(
    cross_section: f64,
    emissivity: f64,
    temperature: f64,
    k: &PhysicalConstants,
) -> Result<f64> {
    let theta = k.k_b * temperature / (k.hbar * k.c); // wavevector scale
    let planck = |x: f64| {
        if x < 1e-8 {
            // x^3 / (e^x - 1) -> x^2 (1 - x/2) as x -> 0
            x * x * (1.0 - 0.5 * x)
        } else {
            x.powi(3) / (x.exp() - 1.0)
        }
    };
    let integral = numerics::integrate_simpson(&planck, 0.0, 60.0, 1e-10)?;
    Ok(cross_section / (4.0 * std::f64::consts::PI.powi(2))
        * k.hbar
        * k.c
        * k.c
        * emissivity
        * theta.powi(4)
        * integral)
}

/// Solve laser_absorbed + absorb(T_env) = emit(T_int) for the internal
/// temperature by bisection over [T_env, T_env + 1e4 K].
pub fn blackbody_balance(
    env: &Environment,
    mirror: &MirrorSpec,
    laser_absorbed_power: f64,
    k: &PhysicalConstants,
) -> Result<ThermalBudget> {
    if !(laser_absorbed_power >= 0.0) {
        return Err(Error::validation("laser_absorbed_power", "must be >= 0"));
    }
    let absorb =
        blackbody_power_closed_form(mirror.cross_section, mirror.emissivity, env.temperature, k);
    let t_int = if laser_absorbed_power == 0.0 {
        env.temperature
    } else {
        let residual = |t: f64| {
            blackbody_power_closed_form(mirror.cross_section, mirror.emissivity, t, k)
                - absorb
                - laser_absorbed_power
        };
        let hi = env.temperature + 1e4;
        if residual(hi) < 0.0 {
            return Err(Error::infeasible(format!(
                "no radiative balance below {hi} K for {laser_absorbed_power:e} W absorbed"
            )));
        }
        numerics::bisect(residual, env.temperature, hi, 1e-12)?
    };
    Ok(ThermalBudget {
        bb_absorption_power: absorb,
        bb_emission_power: blackbody_power_closed_form(
            mirror.cross_section,
            mirror.emissivity,
            t_int,
            k,
        ),
        laser_absorbed_power,
        internal_temperature: t_int,
        delta_t: t_int - env.temperature,
    })
}

/// Cavity noise spectrum S(omega) = n_photon kappa / ((kappa/2)^2 + (omega + delta)^2).
pub fn sideband_spectrum(n_photon: f64, kappa: f64, delta: f64, omega: f64) -> f64 {
    n_photon * kappa / ((kappa / 2.0) * (kappa / 2.0) + (omega + delta) * (omega + delta))
}

/// Sideband balance of an arbitrary set of (photon number, detuning) fields:
/// returns (S_total(+omega_m), S_total(-omega_m), min phonons or infinity).
pub fn sideband_occupation(
    kappa: f64,
    omega_m: f64,
    fields: &[(f64, f64)],
) -> (f64, f64, f64) {
    let s_plus: f64 = fields
        .iter()
        .map(|&(n, d)| sideband_spectrum(n, kappa, d, omega_m))
        .sum();
    let s_minus: f64 = fields
        .iter()
        .map(|&(n, d)| sideband_spectrum(n, kappa, d, -omega_m))
        .sum();
    let ratio = s_plus / s_minus;
    let n_min = if ratio > 1.0 {
        1.0 / (ratio - 1.0)
    } else {
        f64::INFINITY
    };
    (s_plus, s_minus, n_min)
}

/// Combined occupation from laser cooling and the gas bath:
/// <N> = (gamma_rp <n>_min + gamma_m <n_th>) / (gamma_rp + gamma_m).
pub fn combined_occupation(gamma_rp: f64, n_min: f64, gamma_m: f64, n_th: f64) -> f64 {
    if gamma_m == 0.0 {
        return n_min;
    }
    if gamma_rp <= 0.0 || !n_min.is_finite() {
        return f64::INFINITY;
    }
    (gamma_rp * n_min + gamma_m * n_th) / (gamma_rp + gamma_m)
}

/// Full cooling summary for a stable trap site. Photon numbers follow the
/// standing-wave convention n = P_circ L / (hbar omega_c c); the Eq.-(4)
/// ratio is independent of that convention (it cancels between the fields),
/// which only scales `cooling_rate`.
pub fn cooling_summary(
    cfg: &SimulationConfig,
    site: &TrapSite,
    gas: &GasBudget,
) -> Result<CoolingSummary> {
    if !site.stable {
        return Err(Error::InvalidSite {
            msg: "cooling summary requires a stable site".into(),
        });
    }
    let b = &cfg.drive.beams[0];
    let l0 = cfg.geometry.nominal_length;
    let kappa = cfg.kappa(0);
    let omega_c = cfg.omega_c(0);
    let mset = modes::mode_frequencies(site, cfg.mirror.mass)?;
    let (omega_m, _) = mset.vertical();
    let coupling = omega_c * (HBAR / (2.0 * cfg.mirror.mass * omega_m)).sqrt() / l0;

    let delta_trap = site.detunings[0] * kappa;
    let phi_trap = optics::normalized_detuning_to_phase(site.detunings[0], b.finesse);
    let p_trap = optics::circulating_power_at_phase(b.input_power_trap, b.finesse, phi_trap);
    let n_trap = p_trap * l0 / (HBAR * omega_c * C);

    let delta_cool = b.detuning_cool.unwrap_or(-omega_m);
    let phi_cool = optics::phase_from_detuning(delta_cool, l0);
    let p_cool = optics::circulating_power_at_phase(b.input_power_cool, b.finesse, phi_cool);
    let n_cool = p_cool * l0 / (HBAR * omega_c * C);

    let s_trap_plus = sideband_spectrum(n_trap, kappa, delta_trap, omega_m);
    let s_trap_minus = sideband_spectrum(n_trap, kappa, delta_trap, -omega_m);
    let s_cool_plus = sideband_spectrum(n_cool, kappa, delta_cool, omega_m);
    let s_cool_minus = sideband_spectrum(n_cool, kappa, delta_cool, -omega_m);
    let s_plus = s_trap_plus + s_cool_plus;
    let s_minus = s_trap_minus + s_cool_minus;
    let ratio = s_plus / s_minus;
    let heating_dominated = ratio <= 1.0;
    let min_phonons = if heating_dominated {
        f64::INFINITY
    } else {
        1.0 / (ratio - 1.0)
    };
    let cooling_rate = coupling * coupling * (s_plus - s_minus);
    let combined = combined_occupation(
        cooling_rate,
        min_phonons,
        gas.damping_rate,
        gas.thermal_phonons,
    );
    Ok(CoolingSummary {
        coupling,
        omega_m,
        kappa,
        s_trap_plus,
        s_trap_minus,
        s_cool_plus,
        s_cool_minus,
        cooling_rate,
        min_phonons,
        combined_phonons: combined,
        photon_number_trap: n_trap,
        photon_number_cool: n_cool,
        heating_dominated,
    })
}

/// One row of the minimum-phonon-number-vs-finesse sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhononRow {
    pub finesse: f64,
    pub omega_m: f64,
    pub kappa: f64,
    pub input_power_total: f64,
    pub min_phonons: f64,
    pub feasible: bool,
}

/// For each finesse: support the mirror at delta_1 = 0.5 kappa, read off the
/// trap's vertical omega_m, set the cooling beam at delta_2 = -omega_m with
/// input power trap/power_ratio, and evaluate the minimum phonon number.
pub fn min_phonon_vs_finesse(
    cfg: &SimulationConfig,
    finesse_grid: &[f64],
    power_ratio: f64,
    max_power: f64,
) -> Vec<PhononRow> {
    use rayon::prelude::*;
    finesse_grid
        .par_iter()
        .map(|&finesse| {
            let row = |omega_m: f64, kappa: f64, p: f64, n_min: f64, ok: bool| PhononRow {
                finesse,
                omega_m,
                kappa,
                input_power_total: p,
                min_phonons: n_min,
                feasible: ok,
            };
            match modes::trap_at(cfg, finesse, 0.5, max_power) {
                Ok((site, p_total)) => {
                    let mut c = cfg.clone();
                    for b in &mut c.drive.beams {
                        b.finesse = finesse;
                        b.detuning_trap = 0.5 * optics::linewidth(finesse, c.geometry.nominal_length);
                        b.input_power_trap = p_total / 3.0;
                        b.input_power_cool = p_total / 3.0 / power_ratio;
                        b.detuning_cool = None; // resolved to -omega_m below
                    }
                    let gas = gas_budget(
                        &c.environment,
                        &c.mirror,
                        site.frequencies[2],
                        c.constants.k_b,
                    )
                    .expect("omega_m > 0 for a stable site");
                    match cooling_summary(&c, &site, &gas) {
                        Ok(summary) => row(
                            summary.omega_m,
                            summary.kappa,
                            p_total,
                            summary.min_phonons,
                            true,
                        ),
                        Err(_) => row(0.0, 0.0, p_total, f64::NAN, false),
                    }
                }
                Err(_) => row(0.0, 0.0, 0.0, f64::NAN, false),
            }
        })
        .collect()
}

/// Gravimetric precision dg/g = 1/sqrt(n_ph) with
/// n_ph = P t lambda / (2 pi hbar c) detected photons.
pub fn gravimetric_precision(detected_power: f64, integration_time: f64, wavelength: f64) -> f64 {
    let n_ph = detected_power * integration_time * wavelength
        / (2.0 * std::f64::consts::PI * HBAR * C);
    1.0 / n_ph.sqrt()
}

/// Gravimetry inputs and result for the aggregated report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GravimetrySummary {
    pub detected_power: f64,
    pub integration_time: f64,
    pub wavelength: f64,
    pub delta_g_over_g: f64,
}

/// Aggregated budget report for one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct BudgetReport {
    /// Trap the budget was evaluated at.
    pub trap_position: [f64; 3],
    pub trap_detunings: [f64; 3],
    /// Vertical mechanical mode (rad/s).
    pub omega_m: f64,
    pub gas: GasBudget,
    pub laser_noise: LaserNoiseBudget,
    pub thermal: ThermalBudget,
    pub cooling: CoolingSummary,
    pub gravimetry: GravimetrySummary,
}

/// Evaluate the complete budget at the central trap of the configuration,
/// with the gravimetry defaults (100 mW detected, 100 s integration).
pub fn assemble_budget(cfg: &SimulationConfig) -> Result<BudgetReport> {
    assemble_budget_with(cfg, 0.1, 100.0)
}

/// Evaluate the complete budget at the central trap of the configuration.
pub fn assemble_budget_with(
    cfg: &SimulationConfig,
    detected_power: f64,
    integration_time: f64,
) -> Result<BudgetReport> {
    let site = crate::traps::find_site_near(
        cfg,
        nalgebra::Vector3::zeros(),
        &crate::traps::SolverOptions::default(),
    )?;
    let mset = modes::mode_frequencies(&site, cfg.mirror.mass)?;
    let (omega_m, _) = mset.vertical();

    let gas = gas_budget(&cfg.environment, &cfg.mirror, omega_m, cfg.constants.k_b)?;

    let s_eps = cfg.environment.intensity_noise_psd(2.0 * omega_m);
    let (gamma_i, tau_e) = intensity_heating(omega_m, s_eps);
    let (r_up, r_down) = parametric_rates(0, omega_m, s_eps);
    let laser_noise = LaserNoiseBudget {
        parametric_rate_up: r_up,
        parametric_rate_down: r_down,
        heating_rate: gamma_i,
        efold_time: tau_e,
        rms_requirement: rms_noise_bound(10.0, omega_m, cfg.environment.intensity_noise_bandwidth),
    };

    // Laser heat load: coating absorption of all trapping-field circulating
    // power incident on the levitated mirror.
    let pose = crate::model::MirrorPose::at(site.position);
    let (_, states) = optics::radiation_force(
        &pose,
        &cfg.geometry,
        &cfg.drive,
        cfg.mirror.radius_of_curvature_top,
        0.0,
    )?;
    let circulating_total: f64 = states.iter().map(|s| s.circulating_power).sum();
    let absorbed = cfg.mirror.coating_absorption_fraction * circulating_total;
    let thermal = blackbody_balance(&cfg.environment, &cfg.mirror, absorbed, &cfg.constants)?;

    let cooling = cooling_summary(cfg, &site, &gas)?;
    let wavelength = cfg.drive.beams[0].wavelength;
    let gravimetry = GravimetrySummary {
        detected_power,
        integration_time,
        wavelength,
        delta_g_over_g: gravimetric_precision(detected_power, integration_time, wavelength),
    };
    Ok(BudgetReport {
        trap_position: [site.position.x, site.position.y, site.position.z],
        trap_detunings: site.detunings,
        omega_m,
        gas,
        laser_noise,
        thermal,
        cooling,
        gravimetry,
    })
}
