//! Parameter records, configuration loading, validation, and defaults.
//!
//! All quantities are SI internally (metres, kilograms, seconds, watts,
//! pascals, kelvin, radians, rad/s). The config file accepts unit suffixes
//! (`mg`, `cm`, `bar`, `deg`, ...) which are normalized at load.
//!
//! Coordinate frame: the z-axis is vertical (gravity along −z) and the
//! origin is placed at the nominal pose of the levitated mirror's centre of
//! curvature, so the lower-mirror centres of curvature sit ~1 cm below the
//! origin. Trap-scale coordinates then stay small, which keeps the
//! equilibrium solver's step tolerance resolvable in f64.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Levitated mirror: mass, curvature, size, and absorption properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorSpec {
    /// Mass (kg).
    pub mass: f64,
    /// Radius of curvature of the (convex) levitated mirror, R_t (m).
    pub radius_of_curvature_top: f64,
    /// Mirror diameter (m).
    pub diameter: f64,
    /// Cross-section S = pi (diameter/2)^2 (m^2); derived, not configurable.
    pub cross_section: f64,
    /// Blackbody emissivity epsilon_b (dimensionless).
    pub emissivity: f64,
    /// Bulk absorption coefficient (1/m). Metadata: the substrate path for
    /// intracavity light through a back-coated HR mirror is not modelled.
    pub absorption_coefficient: f64,
    /// Fraction of circulating power absorbed per reflection at the coating.
    pub coating_absorption_fraction: f64,
}

impl MirrorSpec {
    pub fn with_diameter(mut self, diameter: f64) -> Self {
        self.diameter = diameter;
        self.cross_section = PI * (diameter / 2.0) * (diameter / 2.0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::validation("mirror.mass", "must be > 0"));
        }
        if !(self.emissivity > 0.0 && self.emissivity <= 1.0) {
            return Err(Error::validation("mirror.emissivity", "must be in (0, 1]"));
        }
        if !(self.diameter > 0.0) {
            return Err(Error::validation("mirror.diameter", "must be > 0"));
        }
        if !(self.radius_of_curvature_top > 0.0) {
            return Err(Error::validation(
                "mirror.radius_of_curvature_top",
                "must be > 0",
            ));
        }
        let expected = PI * (self.diameter / 2.0) * (self.diameter / 2.0);
        if (self.cross_section - expected).abs() > 1e-12 * expected {
            return Err(Error::validation(
                "mirror.cross_section",
                "must equal pi (diameter/2)^2",
            ));
        }
        if !(self.absorption_coefficient >= 0.0) || !(self.coating_absorption_fraction >= 0.0) {
            return Err(Error::validation(
                "mirror.absorption",
                "absorption parameters must be >= 0",
            ));
        }
        Ok(())
    }
}

/// Positions of the three lower-mirror centres of curvature and the cavity
/// frame they define.
///
/// Built by [`TripodGeometry::tripod`]: the three centres sit at distance
/// `d0 = L0 - (R_b - R_t)` from the origin, each along a direction tilted
/// `tilt_angle` from straight down, at azimuths 0, 120 and 240 degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripodGeometry {
    /// Centres of curvature of the lower mirrors (m).
    pub q: [Vector3<f64>; 3],
    /// Radius of curvature of the lower mirrors, R_b (m).
    pub radius_of_curvature_bottom: f64,
    /// Nominal cavity length L_0 (m).
    pub nominal_length: f64,
    /// Tilt of each cavity axis from vertical (rad).
    pub tilt_angle: f64,
}

impl TripodGeometry {
    /// Construct the symmetric tripod for nominal length `l0`, axis tilt
    /// `tilt` and mirror curvatures `r_b` (bottom) and `r_t` (top).
    pub fn tripod(l0: f64, tilt: f64, r_b: f64, r_t: f64) -> Self {
        let d0 = l0 - (r_b - r_t);
        let (s, c) = tilt.sin_cos();
        let q = std::array::from_fn(|n| {
            let az = 2.0 * PI * n as f64 / 3.0;
            Vector3::new(d0 * s * az.cos(), d0 * s * az.sin(), -d0 * c)
        });
        Self {
            q,
            radius_of_curvature_bottom: r_b,
            nominal_length: l0,
            tilt_angle: tilt,
        }
    }

    /// Centroid of the three lower centres of curvature.
    pub fn centroid(&self) -> Vector3<f64> {
        (self.q[0] + self.q[1] + self.q[2]) / 3.0
    }

    pub fn validate(&self, mirror: &MirrorSpec) -> Result<()> {
        // 120-degree symmetry about the vertical axis through the centroid.
        let c = self.centroid();
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * PI / 3.0);
        for n in 0..3 {
            let got = rot * (self.q[n] - c);
            let want = self.q[(n + 1) % 3] - c;
            if (got - want).norm() > 1e-9 * self.nominal_length.max(1e-3) {
                return Err(Error::validation(
                    "geometry.q",
                    "lower-mirror centres are not 120-degree symmetric about the vertical axis",
                ));
            }
        }
        // Optical stability window for the cavity lengths at the nominal pose.
        let r_t = mirror.radius_of_curvature_top;
        for (n, qn) in self.q.iter().enumerate() {
            let l = self.radius_of_curvature_bottom - r_t + qn.norm();
            if !(0.17..=0.20).contains(&l) {
                return Err(Error::validation(
                    "geometry.nominal_length",
                    format!(
                        "cavity {} length {:.4} m at the nominal pose is outside the optical \
                         stability window [0.17, 0.20] m",
                        n + 1,
                        l
                    ),
                ));
            }
        }
        Ok(())
    }
}

/// Position (and trivial orientation) of the levitated mirror's centre of
/// curvature. The generalized potential is independent of the alpha and
/// gamma Euler angles and the reduced model fixes beta = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorPose {
    /// Centre of curvature position (m).
    pub r: Vector3<f64>,
    /// z-x-z Euler angles (alpha, beta, gamma); beta is always 0.
    pub euler: (f64, f64, f64),
}

impl MirrorPose {
    pub fn at(r: Vector3<f64>) -> Self {
        Self {
            r,
            euler: (0.0, 0.0, 0.0),
        }
    }

    /// Pose with free alpha/gamma angles; beta is pinned to zero.
    pub fn with_angles(r: Vector3<f64>, alpha: f64, gamma: f64) -> Self {
        Self {
            r,
            euler: (alpha, 0.0, gamma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.euler.1 != 0.0 {
            return Err(Error::validation("pose.euler", "beta must be 0"));
        }
        if !self.r.iter().all(|v| v.is_finite()) {
            return Err(Error::validation("pose.r", "components must be finite"));
        }
        Ok(())
    }
}

/// Per-cavity drive fields: trapping beam, cooling beam, and cavity optics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Trapping-beam input power (W).
    pub input_power_trap: f64,
    /// Trapping-beam detuning delta_1 (rad/s), blue positive.
    pub detuning_trap: f64,
    /// Cooling-beam input power (W).
    pub input_power_cool: f64,
    /// Cooling-beam detuning delta_2 (rad/s); `None` means "auto": resolved
    /// to -omega_m of the trap under test.
    pub detuning_cool: Option<f64>,
    /// Laser wavelength (m).
    pub wavelength: f64,
    /// Cavity finesse.
    pub finesse: f64,
    /// Additional resonance phase offset (rad) for lattice scanning; models a
    /// small fractional laser-frequency shift for this cavity.
    pub phase_offset: f64,
}

impl BeamParams {
    /// Optical wavenumber k = 2 pi / lambda (1/m).
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

/// Drive for all three cavities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamDrive {
    pub beams: [BeamParams; 3],
}

impl BeamDrive {
    pub fn validate(&self) -> Result<()> {
        for (n, b) in self.beams.iter().enumerate() {
            let tag = |f: &str| format!("beam{}.{}", n + 1, f);
            if !(b.input_power_trap >= 0.0) {
                return Err(Error::validation(tag("input_power_trap"), "must be >= 0"));
            }
            if !(b.input_power_cool >= 0.0) {
                return Err(Error::validation(tag("input_power_cool"), "must be >= 0"));
            }
            if !(b.finesse > 1.0) {
                return Err(Error::validation(tag("finesse"), "must be > 1"));
            }
            if !(b.wavelength > 0.0) {
                return Err(Error::validation(tag("wavelength"), "must be > 0"));
            }
            if !b.detuning_trap.is_finite() || !b.phase_offset.is_finite() {
                return Err(Error::validation(tag("detuning_trap"), "must be finite"));
            }
        }
        Ok(())
    }

    /// Total trapping-beam input power across the three cavities (W).
    pub fn total_trap_power(&self) -> f64 {
        self.beams.iter().map(|b| b.input_power_trap).sum()
    }

    /// Scale every trapping-beam input power by `factor`.
    pub fn scale_trap_power(&mut self, factor: f64) {
        for b in &mut self.beams {
            b.input_power_trap *= factor;
        }
    }
}

/// Vacuum and laser-noise environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// Gas pressure (Pa).
    pub pressure: f64,
    /// Gas temperature (K).
    pub temperature: f64,
    /// Gas molecule mass (kg). Default: N2.
    pub gas_molecule_mass: f64,
    /// Gas kinetic diameter (m), used only for the Knudsen-number check.
    pub gas_kinetic_diameter: f64,
    /// Root-mean-square fractional intensity noise of the laser.
    pub intensity_noise_rms: f64,
    /// Bandwidth (Hz) over which the intensity noise is evenly distributed.
    pub intensity_noise_bandwidth: f64,
}

impl Environment {
    /// One-sided fractional intensity-noise power spectrum S_eps (1/Hz),
    /// flat: rms^2 / bandwidth. The band sets the normalization only; the
    /// spectrum is evaluated as flat at any frequency.
    pub fn intensity_noise_psd(&self, _omega: f64) -> f64 {
        if self.intensity_noise_rms == 0.0 {
            0.0
        } else {
            self.intensity_noise_rms * self.intensity_noise_rms / self.intensity_noise_bandwidth
        }
    }

    /// Gas number density from the ideal-gas law (1/m^3).
    pub fn number_density(&self, k_b: f64) -> f64 {
        self.pressure / (k_b * self.temperature)
    }

    /// Gas mass density (kg/m^3).
    pub fn mass_density(&self, k_b: f64) -> f64 {
        self.number_density(k_b) * self.gas_molecule_mass
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pressure >= 0.0) {
            return Err(Error::validation("env.pressure", "must be >= 0"));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::validation("env.temperature", "must be > 0"));
        }
        if !(self.gas_molecule_mass > 0.0) {
            return Err(Error::validation("env.gas_molecule_mass", "must be > 0"));
        }
        if !(self.intensity_noise_rms >= 0.0) {
            return Err(Error::validation("env.intensity_noise_rms", "must be >= 0"));
        }
        if !(self.intensity_noise_bandwidth > 0.0) {
            return Err(Error::validation(
                "env.intensity_noise_bandwidth",
                "must be > 0",
            ));
        }
        Ok(())
    }
}

/// Complete, validated simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub constants: PhysicalConstants,
    pub mirror: MirrorSpec,
    pub geometry: TripodGeometry,
    pub drive: BeamDrive,
    pub environment: Environment,
}

/// Mass of an N2 molecule (kg).
pub const N2_MOLECULE_MASS: f64 = 4.65e-26;

/// Kinetic diameter of N2 (m).
pub const N2_KINETIC_DIAMETER: f64 = 3.7e-10;

impl SimulationConfig {
    /// The nominal parameter set: 0.3 mg mirror (R_t = 3 cm, 2 mm diameter),
    /// R_b = 20 cm, L_0 = 18 cm, finesse 1000, 3 W total trapping power split
    /// equally, lambda = 1064 nm, 2-degree tilt, N2 at 1e-3 Pa and 300 K.
    pub fn default_paper() -> Self {
        let diameter = 2.0e-3;
        let mirror = MirrorSpec {
            mass: 3.0e-7,
            radius_of_curvature_top: 0.03,
            diameter,
            cross_section: PI * (diameter / 2.0) * (diameter / 2.0),
            emissivity: 2.0e-4,
            absorption_coefficient: 1.0e-5,
            coating_absorption_fraction: 1.0e-6,
        };
        let l0 = 0.18;
        let tilt = 2.0_f64.to_radians();
        let geometry = TripodGeometry::tripod(l0, tilt, 0.20, mirror.radius_of_curvature_top);
        let finesse = 1000.0;
        let kappa = PI * crate::constants::C / (finesse * l0);
        let beam = BeamParams {
            input_power_trap: 1.0,
            detuning_trap: 0.5 * kappa,
            input_power_cool: 10.0,
            detuning_cool: None,
            wavelength: 1.064e-6,
            finesse,
            phase_offset: 0.0,
        };
        Self {
            constants: PhysicalConstants::default(),
            mirror,
            geometry,
            drive: BeamDrive { beams: [beam; 3] },
            environment: Environment {
                pressure: 1.0e-3,
                temperature: 300.0,
                gas_molecule_mass: N2_MOLECULE_MASS,
                gas_kinetic_diameter: N2_KINETIC_DIAMETER,
                intensity_noise_rms: 7.0e-4,
                intensity_noise_bandwidth: 3.0e5,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.mirror.validate()?;
        self.geometry.validate(&self.mirror)?;
        self.drive.validate()?;
        self.environment.validate()?;
        Ok(())
    }

    /// Cavity decay rate kappa = pi c / (F L_0) for cavity `n` (rad/s).
    pub fn kappa(&self, n: usize) -> f64 {
        crate::optics::linewidth(self.drive.beams[n].finesse, self.geometry.nominal_length)
    }

    /// Cavity resonance angular frequency omega_c = 2 pi c / lambda (rad/s).
    pub fn omega_c(&self, n: usize) -> f64 {
        2.0 * PI * self.constants.c / self.drive.beams[n].wavelength
    }

    /// Mirror weight m g0 (N).
    pub fn weight(&self) -> f64 {
        self.mirror.mass * self.constants.g0
    }

    /// Load and validate a configuration from a key-value file.
    /// Unspecified keys take the documented defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Parse the key-value format (see `serialize` for the canonical form).
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::ConfigParse {
                line: line_no,
                msg: "expected `key = value`".into(),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::ConfigParse {
                    line: line_no,
                    msg: "empty key".into(),
                });
            }
            kv.insert(key, (line_no, value.trim().to_string()));
        }
        Self::from_entries(kv)
    }

    fn from_entries(mut kv: BTreeMap<String, (usize, String)>) -> Result<Self> {
        fn num(
            kv: &mut BTreeMap<String, (usize, String)>,
            key: &str,
            default: f64,
        ) -> Result<f64> {
            match kv.remove(key) {
                Some((line, v)) => {
                    parse_quantity(&v).map_err(|msg| Error::ConfigParse { line, msg })
                }
                None => Ok(default),
            }
        }
        fn over(
            kv: &mut BTreeMap<String, (usize, String)>,
            key: &str,
            slot: &mut f64,
        ) -> Result<()> {
            if let Some((line, v)) = kv.remove(key) {
                *slot = parse_quantity(&v).map_err(|msg| Error::ConfigParse { line, msg })?;
            }
            Ok(())
        }
        let kv = &mut kv;

        let d = Self::default_paper();
        let mass = num(kv, "mirror.mass", d.mirror.mass)?;
        let r_t = num(
            kv,
            "mirror.radius_of_curvature_top",
            d.mirror.radius_of_curvature_top,
        )?;
        let diameter = num(kv, "mirror.diameter", d.mirror.diameter)?;
        let emissivity = num(kv, "mirror.emissivity", d.mirror.emissivity)?;
        let absorption = num(
            kv,
            "mirror.absorption_coefficient",
            d.mirror.absorption_coefficient,
        )?;
        let coating = num(
            kv,
            "mirror.coating_absorption_fraction",
            d.mirror.coating_absorption_fraction,
        )?;
        let mirror = MirrorSpec {
            mass,
            radius_of_curvature_top: r_t,
            diameter,
            cross_section: PI * (diameter / 2.0) * (diameter / 2.0),
            emissivity,
            absorption_coefficient: absorption,
            coating_absorption_fraction: coating,
        };

        let r_b = num(
            kv,
            "geometry.radius_of_curvature_bottom",
            d.geometry.radius_of_curvature_bottom,
        )?;
        let l0 = num(kv, "geometry.nominal_length", d.geometry.nominal_length)?;
        let tilt = num(kv, "geometry.tilt_angle", d.geometry.tilt_angle)?;
        let geometry = TripodGeometry::tripod(l0, tilt, r_b, r_t);

        // Shared beam keys with per-cavity overrides (beam1.*, beam2.*, ...).
        let wavelength = num(kv, "beam.wavelength", d.drive.beams[0].wavelength)?;
        let finesse = num(kv, "beam.finesse", d.drive.beams[0].finesse)?;
        let kappa = PI * crate::constants::C / (finesse * l0);
        let p_trap = num(kv, "beam.input_power_trap", d.drive.beams[0].input_power_trap)?;
        let det_trap = num(kv, "beam.detuning_trap", 0.5 * kappa)?;
        let p_cool = num(kv, "beam.input_power_cool", d.drive.beams[0].input_power_cool)?;
        let phase_offset = num(kv, "beam.phase_offset", 0.0)?;
        let det_cool_shared = match kv.remove("beam.detuning_cool") {
            None => None,
            Some((line, v)) if v == "auto" => {
                let _ = line;
                None
            }
            Some((line, v)) => {
                Some(parse_quantity(&v).map_err(|msg| Error::ConfigParse { line, msg })?)
            }
        };

        let mut beams = [BeamParams {
            input_power_trap: p_trap,
            detuning_trap: det_trap,
            input_power_cool: p_cool,
            detuning_cool: det_cool_shared,
            wavelength,
            finesse,
            phase_offset,
        }; 3];
        for (n, beam) in beams.iter_mut().enumerate() {
            let pre = format!("beam{}.", n + 1);
            over(kv, &format!("{pre}input_power_trap"), &mut beam.input_power_trap)?;
            over(kv, &format!("{pre}detuning_trap"), &mut beam.detuning_trap)?;
            over(kv, &format!("{pre}input_power_cool"), &mut beam.input_power_cool)?;
            over(kv, &format!("{pre}wavelength"), &mut beam.wavelength)?;
            over(kv, &format!("{pre}finesse"), &mut beam.finesse)?;
            over(kv, &format!("{pre}phase_offset"), &mut beam.phase_offset)?;
            if let Some((line, v)) = kv.remove(&format!("{pre}detuning_cool")) {
                beam.detuning_cool = if v == "auto" {
                    None
                } else {
                    Some(parse_quantity(&v).map_err(|msg| Error::ConfigParse { line, msg })?)
                };
            }
        }

        let environment = Environment {
            pressure: num(kv, "env.pressure", d.environment.pressure)?,
            temperature: num(kv, "env.temperature", d.environment.temperature)?,
            gas_molecule_mass: num(kv, "env.gas_molecule_mass", d.environment.gas_molecule_mass)?,
            gas_kinetic_diameter: num(
            kv,
                "env.gas_kinetic_diameter",
                d.environment.gas_kinetic_diameter,
            )?,
            intensity_noise_rms: num(kv, "env.intensity_noise_rms", d.environment.intensity_noise_rms)?,
            intensity_noise_bandwidth: num(
            kv,
                "env.intensity_noise_bandwidth",
                d.environment.intensity_noise_bandwidth,
            )?,
        };

        if let Some((key, (line, _))) = kv.iter().next() {
            return Err(Error::ConfigParse {
                line: *line,
                msg: format!("unknown key `{key}`"),
            });
        }

        let cfg = Self {
            constants: PhysicalConstants::default(),
            mirror,
            geometry,
            drive: BeamDrive { beams },
            environment,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical serialization: plain SI values, fixed key order. Parsing the
    /// output reproduces the config exactly (f64 round-trip formatting).
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# levmirror configuration (SI units)");
        let _ = writeln!(s, "mirror.mass = {}", self.mirror.mass);
        let _ = writeln!(
            s,
            "mirror.radius_of_curvature_top = {}",
            self.mirror.radius_of_curvature_top
        );
        let _ = writeln!(s, "mirror.diameter = {}", self.mirror.diameter);
        let _ = writeln!(s, "mirror.emissivity = {}", self.mirror.emissivity);
        let _ = writeln!(
            s,
            "mirror.absorption_coefficient = {}",
            self.mirror.absorption_coefficient
        );
        let _ = writeln!(
            s,
            "mirror.coating_absorption_fraction = {}",
            self.mirror.coating_absorption_fraction
        );
        let _ = writeln!(
            s,
            "geometry.radius_of_curvature_bottom = {}",
            self.geometry.radius_of_curvature_bottom
        );
        let _ = writeln!(
            s,
            "geometry.nominal_length = {}",
            self.geometry.nominal_length
        );
        let _ = writeln!(s, "geometry.tilt_angle = {}", self.geometry.tilt_angle);
        for (n, b) in self.drive.beams.iter().enumerate() {
            let p = format!("beam{}", n + 1);
            let _ = writeln!(s, "{p}.input_power_trap = {}", b.input_power_trap);
            let _ = writeln!(s, "{p}.detuning_trap = {}", b.detuning_trap);
            let _ = writeln!(s, "{p}.input_power_cool = {}", b.input_power_cool);
            match b.detuning_cool {
                Some(v) => {
                    let _ = writeln!(s, "{p}.detuning_cool = {v}");
                }
                None => {
                    let _ = writeln!(s, "{p}.detuning_cool = auto");
                }
            }
            let _ = writeln!(s, "{p}.wavelength = {}", b.wavelength);
            let _ = writeln!(s, "{p}.finesse = {}", b.finesse);
            let _ = writeln!(s, "{p}.phase_offset = {}", b.phase_offset);
        }
        let e = &self.environment;
        let _ = writeln!(s, "env.pressure = {}", e.pressure);
        let _ = writeln!(s, "env.temperature = {}", e.temperature);
        let _ = writeln!(s, "env.gas_molecule_mass = {}", e.gas_molecule_mass);
        let _ = writeln!(s, "env.gas_kinetic_diameter = {}", e.gas_kinetic_diameter);
        let _ = writeln!(s, "env.intensity_noise_rms = {}", e.intensity_noise_rms);
        let _ = writeln!(
            s,
            "env.intensity_noise_bandwidth = {}",
            e.intensity_noise_bandwidth
        );
        s
    }
}

/// Parse `number [unit]`, normalizing the unit suffix to SI.
pub fn parse_quantity(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    if t.is_empty() {
        return Err("empty value".into());
    }
    let (num_str, unit) = match t.find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
        Some(pos) => (t[..pos].trim(), t[pos..].trim()),
        None => (t, ""),
    };
    let value: f64 = num_str
        .parse()
        .map_err(|_| format!("cannot parse number from `{t}`"))?;
    let scale = unit_scale(unit).ok_or_else(|| format!("unknown unit `{unit}`"))?;
    Ok(value * scale)
}

fn unit_scale(unit: &str) -> Option<f64> {
    Some(match unit {
        "" => 1.0,
        // length
        "m" => 1.0,
        "cm" => 1e-2,
        "mm" => 1e-3,
        "um" => 1e-6,
        "nm" => 1e-9,
        "pm" => 1e-12,
        // mass
        "kg" => 1.0,
        "g" => 1e-3,
        "mg" => 1e-6,
        "ug" => 1e-9,
        // pressure
        "Pa" => 1.0,
        "kPa" => 1e3,
        "mbar" => 1e2,
        "bar" => 1e5,
        // power
        "W" => 1.0,
        "kW" => 1e3,
        "mW" => 1e-3,
        "uW" => 1e-6,
        // temperature
        "K" => 1.0,
        // frequency (1/s) and angular rate
        "Hz" => 1.0,
        "kHz" => 1e3,
        "MHz" => 1e6,
        "rad/s" => 1.0,
        "krad/s" => 1e3,
        "Mrad/s" => 1e6,
        // angle
        "rad" => 1.0,
        "mrad" => 1e-3,
        "deg" => std::f64::consts::PI / 180.0,
        // time
        "s" => 1.0,
        "ms" => 1e-3,
        "us" => 1e-6,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_defaults_match_quoted_values() {
        let cfg = SimulationConfig::default_paper();
        assert_eq!(cfg.mirror.mass, 3.0e-7);
        assert_eq!(cfg.geometry.radius_of_curvature_bottom, 0.20);
        assert_eq!(cfg.environment.pressure, 1.0e-3);
        assert_eq!(cfg.drive.total_trap_power(), 3.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn default_config_survives_serialize_parse_round_trip() {
        let cfg = SimulationConfig::default_paper();
        let text = cfg.serialize();
        let back = SimulationConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unit_suffixes_normalize() {
        // The paper's stated values in their natural units.
        assert_eq!(parse_quantity("0.3 mg").unwrap(), 3.0e-7);
        assert_eq!(parse_quantity("1e-8 bar").unwrap(), 1.0e-3);
        assert_eq!(parse_quantity("20 cm").unwrap(), 0.20);
        assert_eq!(parse_quantity("1064 nm").unwrap(), 1.064e-6);
        assert!((parse_quantity("2 deg").unwrap() - 0.034906585039886591).abs() < 1e-18);
    }

    #[test]
    fn explicit_values_echo_through_load() {
        let text = "mirror.mass = 3.0e-7 kg\nbeam.finesse = 1000\n";
        let cfg = SimulationConfig::parse(text).unwrap();
        assert_eq!(cfg.mirror.mass, 3.0e-7);
        assert_eq!(cfg.drive.beams[0].finesse, 1000.0);
        assert_eq!(cfg.drive.beams[2].finesse, 1000.0);
    }

    #[test]
    fn empty_file_gives_full_defaults_in_stability_window() {
        let cfg = SimulationConfig::parse("").unwrap();
        for q in &cfg.geometry.q {
            let l = cfg.geometry.radius_of_curvature_bottom
                - cfg.mirror.radius_of_curvature_top
                + q.norm();
            assert!((0.17..=0.20).contains(&l), "L = {l}");
        }
    }

    #[test]
    fn bad_finesse_names_the_field() {
        let err = SimulationConfig::parse("beam.finesse = 0.5\n").unwrap_err();
        match err {
            Error::Validation { field, .. } => assert!(field.contains("finesse")),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn parse_error_carries_line_number() {
        let err = SimulationConfig::parse("mirror.mass = 3e-7\nwhat is this\n").unwrap_err();
        match err {
            Error::ConfigParse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let err = SimulationConfig::parse("mirror.masss = 3e-7\n").unwrap_err();
        match err {
            Error::ConfigParse { msg, .. } => assert!(msg.contains("unknown key")),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn tripod_centres_are_symmetric_and_below_origin() {
        let cfg = SimulationConfig::default_paper();
        let c = cfg.geometry.centroid();
        assert!(c.z < 0.0);
        assert!(c.xy().norm() < 1e-18);
        for q in &cfg.geometry.q {
            assert!((q.norm() - 0.01).abs() < 1e-15);
        }
    }
}
