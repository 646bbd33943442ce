//! Cavity geometry and steady-state optical response.
//!
//! Each cavity forms between the centre of curvature of the levitated mirror
//! (`r`) and a lower-mirror centre of curvature (`q_n`), with length
//! `L_n = R_b - R_t + |q_n - r|`. The circulating power follows the
//! resonance profile `P = P_in F / (1 + F^2 sin^2(k L))` and pushes the
//! levitated mirror along the cavity axis away from the lower mirror with
//! magnitude `2 P / c`.
//!
//! Two linewidth-like scales coexist in this model and are kept deliberately
//! distinct: the decay rate `kappa = pi c / (F L_0)` is canonical for all
//! cooling and noise computations, while the power profile above (half width
//! `delta = c / (F L)`, a factor pi/2 narrower) is canonical for forces and
//! potentials. Normalized detunings are always `delta / kappa`.

use nalgebra::Vector3;

use crate::constants::C;
use crate::error::{Error, Result};
use crate::model::{BeamDrive, MirrorPose, TripodGeometry};

/// Steady-state optical state of one cavity at a given pose.
#[derive(Debug, Clone, Copy)]
pub struct CavityState {
    /// Cavity length L_n (m).
    pub length: f64,
    /// Unit vector from q_n toward r.
    pub axis: Vector3<f64>,
    /// Resonance phase k L_n (+ offset), reduced mod pi to (-pi/2, pi/2].
    pub phase: f64,
    /// Resonance order: k L_n + offset = phase + N pi.
    pub order: i64,
    /// Circulating power P_n (W).
    pub circulating_power: f64,
    /// Radiation force on the levitated mirror (N), parallel to `axis`.
    pub force: Vector3<f64>,
}

/// Separation vectors r - q_n, rejecting coincident points.
pub fn separations(pose: &MirrorPose, geom: &TripodGeometry) -> Result<[Vector3<f64>; 3]> {
    let mut out = [Vector3::zeros(); 3];
    for n in 0..3 {
        let d = pose.r - geom.q[n];
        if d.norm() == 0.0 {
            return Err(Error::DegenerateGeometry { cavity: n + 1 });
        }
        out[n] = d;
    }
    Ok(out)
}

/// Cavity lengths L_n = R_b - R_t + |q_n - r| (m).
pub fn cavity_lengths(
    pose: &MirrorPose,
    geom: &TripodGeometry,
    radius_of_curvature_top: f64,
) -> Result<[f64; 3]> {
    let sep = separations(pose, geom)?;
    let base = geom.radius_of_curvature_bottom - radius_of_curvature_top;
    Ok([
        base + sep[0].norm(),
        base + sep[1].norm(),
        base + sep[2].norm(),
    ])
}

/// Reduce a total resonance phase `x` to (phi, N) with `x = phi + N pi` and
/// `phi` in (-pi/2, pi/2].
pub fn reduce_phase(x: f64) -> (f64, i64) {
    let n = (x / std::f64::consts::PI - 0.5).ceil();
    (x - n * std::f64::consts::PI, n as i64)
}

/// Circulating power P = P_in F / (1 + F^2 sin^2(k L)) (W).
pub fn circulating_power(input_power: f64, finesse: f64, k: f64, length: f64) -> f64 {
    circulating_power_at_phase(input_power, finesse, k * length)
}

/// Same resonance profile evaluated at an explicit phase.
pub fn circulating_power_at_phase(input_power: f64, finesse: f64, phase: f64) -> f64 {
    let s = phase.sin();
    input_power * finesse / (1.0 + finesse * finesse * s * s)
}

/// Cavity decay rate kappa = pi c / (F L_0) (rad/s).
pub fn linewidth(finesse: f64, nominal_length: f64) -> f64 {
    std::f64::consts::PI * C / (finesse * nominal_length)
}

/// Phase offset equivalent to a detuning: phi = delta L / c (rad).
pub fn phase_from_detuning(detuning: f64, length: f64) -> f64 {
    detuning * length / C
}

/// Inverse of [`phase_from_detuning`].
pub fn detuning_from_phase(phase: f64, length: f64) -> f64 {
    phase * C / length
}

/// Normalized detuning delta/kappa for a given phase: phi F / pi.
pub fn phase_to_normalized_detuning(phase: f64, finesse: f64) -> f64 {
    phase * finesse / std::f64::consts::PI
}

/// Phase for a normalized detuning delta/kappa: pi (delta/kappa) / F.
pub fn normalized_detuning_to_phase(detuning_over_kappa: f64, finesse: f64) -> f64 {
    std::f64::consts::PI * detuning_over_kappa / finesse
}

/// Per-cavity trapping-field state and the total force on the mirror.
///
/// `gravity_weight` is the weight m g0 (N) to subtract along z; pass 0 to get
/// the purely optical force. Only the trapping fields contribute: the cooling
/// field enters the rate equations (budgets) and the dynamic field model, not
/// the static force balance.
pub fn radiation_force(
    pose: &MirrorPose,
    geom: &TripodGeometry,
    drive: &BeamDrive,
    radius_of_curvature_top: f64,
    gravity_weight: f64,
) -> Result<(Vector3<f64>, [CavityState; 3])> {
    let sep = separations(pose, geom)?;
    let base = geom.radius_of_curvature_bottom - radius_of_curvature_top;
    let mut total = Vector3::new(0.0, 0.0, -gravity_weight);
    let mut states = [CavityState {
        length: 0.0,
        axis: Vector3::zeros(),
        phase: 0.0,
        order: 0,
        circulating_power: 0.0,
        force: Vector3::zeros(),
    }; 3];
    for n in 0..3 {
        let beam = &drive.beams[n];
        let dist = sep[n].norm();
        let axis = sep[n] / dist;
        let length = base + dist;
        let (phase, order) = reduce_phase(beam.wavenumber() * length + beam.phase_offset);
        let power = circulating_power_at_phase(beam.input_power_trap, beam.finesse, phase);
        let force = axis * (2.0 * power / C);
        total += force;
        states[n] = CavityState {
            length,
            axis,
            phase,
            order,
            circulating_power: power,
            force,
        };
    }
    Ok((total, states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SimulationConfig;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn length_is_rb_minus_rt_plus_separation() {
        let cfg = SimulationConfig::default_paper();
        // |q_n - r| = 0.01 at the nominal pose by construction.
        let lengths = cavity_lengths(
            &MirrorPose::at(Vector3::zeros()),
            &cfg.geometry,
            cfg.mirror.radius_of_curvature_top,
        )
        .unwrap();
        for l in lengths {
            assert_relative_eq!(l, 0.18, max_relative = 1e-14);
        }
    }

    #[test]
    fn nominal_lengths_equal_and_inside_stability_window() {
        let cfg = SimulationConfig::default_paper();
        let l = cavity_lengths(
            &MirrorPose::at(Vector3::zeros()),
            &cfg.geometry,
            cfg.mirror.radius_of_curvature_top,
        )
        .unwrap();
        assert_eq!(l[0], l[1]);
        assert_eq!(l[1], l[2]);
        assert!((0.17..=0.20).contains(&l[0]));
    }

    #[test]
    fn displacement_along_axis_adds_to_length() {
        let cfg = SimulationConfig::default_paper();
        let pose0 = MirrorPose::at(Vector3::zeros());
        let l0 = cavity_lengths(&pose0, &cfg.geometry, cfg.mirror.radius_of_curvature_top).unwrap();
        let axis = (pose0.r - cfg.geometry.q[0]).normalize();
        let pose1 = MirrorPose::at(pose0.r + axis * 1e-6);
        let l1 = cavity_lengths(&pose1, &cfg.geometry, cfg.mirror.radius_of_curvature_top).unwrap();
        assert!((l1[0] - l0[0] - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn coincident_pose_is_degenerate() {
        let cfg = SimulationConfig::default_paper();
        let err = cavity_lengths(
            &MirrorPose::at(cfg.geometry.q[1]),
            &cfg.geometry,
            cfg.mirror.radius_of_curvature_top,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry { cavity: 2 }));
    }

    #[test]
    fn power_on_resonance_is_input_times_finesse() {
        for n in [0_i32, 1, 7, 338_397] {
            let p = circulating_power(1.0, 1000.0, 1.0, n as f64 * PI);
            assert_relative_eq!(p, 1000.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn power_at_half_maximum_condition() {
        let finesse = 1000.0;
        let phi = (1.0_f64 / finesse).asin();
        let p = circulating_power_at_phase(1.0, finesse, phi);
        assert_relative_eq!(p, 500.0, max_relative = 1e-12);
    }

    #[test]
    fn power_at_antiresonance() {
        let p = circulating_power_at_phase(1.0, 1000.0, PI / 2.0);
        assert_relative_eq!(p, 1000.0 / (1.0 + 1.0e6), max_relative = 1e-12);
        assert!((p - 1.0e-3).abs() < 2e-6);
    }

    #[test]
    fn linewidth_values_and_scaling() {
        let k1 = linewidth(1000.0, 0.18);
        assert_relative_eq!(k1, PI * C / 180.0, max_relative = 1e-15);
        assert_relative_eq!(k1, 5.236e6, max_relative = 1e-3);
        assert_relative_eq!(linewidth(2000.0, 0.18), k1 / 2.0, max_relative = 1e-15);
        assert_relative_eq!(linewidth(10000.0, 0.18), 5.236e5, max_relative = 1e-3);
    }

    #[test]
    fn detuning_phase_map_round_trip() {
        let f = 1000.0;
        let l = 0.18;
        let kappa = linewidth(f, l);
        let phi = phase_from_detuning(0.5 * kappa, l);
        assert_relative_eq!(phi, PI / (2.0 * f), max_relative = 1e-12);
        assert_relative_eq!(phi, 1.5708e-3, max_relative = 1e-4);
        assert_eq!(phase_from_detuning(0.0, l), 0.0);
        let delta = 1.234e6;
        let back = detuning_from_phase(phase_from_detuning(delta, l), l);
        assert_relative_eq!(back, delta, max_relative = 1e-12);
        assert_relative_eq!(
            phase_to_normalized_detuning(phi, f),
            0.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn force_magnitude_is_two_p_over_c() {
        // 147 W circulating supports one third of the 0.3 mg mirror's weight.
        let f_mag = 2.0 * 147.0 / C;
        assert_relative_eq!(f_mag, 9.8e-7, max_relative = 2e-3);

        let cfg = SimulationConfig::default_paper();
        let pose = MirrorPose::at(Vector3::new(3e-9, -2e-9, 1e-9));
        let (_, states) =
            radiation_force(&pose, &cfg.geometry, &cfg.drive, 0.03, cfg.weight()).unwrap();
        for s in states {
            assert_relative_eq!(
                s.force.norm(),
                2.0 * s.circulating_power / C,
                max_relative = 1e-12
            );
            // Force is parallel to the axis and pushes away from the lower mirror.
            assert!(s.force.dot(&s.axis) > 0.0);
            assert_relative_eq!(s.force.cross(&s.axis).norm(), 0.0, epsilon = 1e-25);
            assert_relative_eq!(s.axis.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn beams_off_leaves_weight() {
        let mut cfg = SimulationConfig::default_paper();
        cfg.drive.scale_trap_power(0.0);
        let (total, _) = radiation_force(
            &MirrorPose::at(Vector3::zeros()),
            &cfg.geometry,
            &cfg.drive,
            cfg.mirror.radius_of_curvature_top,
            cfg.weight(),
        )
        .unwrap();
        assert_eq!(total.x, 0.0);
        assert_eq!(total.y, 0.0);
        assert_relative_eq!(total.z, -2.94e-6, max_relative = 1e-3);
    }

    #[test]
    fn symmetric_pose_cancels_horizontal_force() {
        let cfg = SimulationConfig::default_paper();
        for z in [0.0, 1e-9, -3e-8] {
            let (total, _) = radiation_force(
                &MirrorPose::at(Vector3::new(0.0, 0.0, z)),
                &cfg.geometry,
                &cfg.drive,
                cfg.mirror.radius_of_curvature_top,
                0.0,
            )
            .unwrap();
            assert!(total.x.abs() < 1e-18, "Fx = {}", total.x);
            assert!(total.y.abs() < 1e-18, "Fy = {}", total.y);
        }
    }

    #[test]
    fn reduce_phase_keeps_half_open_interval() {
        let (phi, n) = reduce_phase(PI / 2.0);
        assert_eq!(n, 0);
        assert_relative_eq!(phi, PI / 2.0);
        let (phi, n) = reduce_phase(-PI / 2.0);
        assert_eq!(n, -1);
        assert_relative_eq!(phi, PI / 2.0);
        let (phi, n) = reduce_phase(7.0 * PI + 0.3);
        assert_eq!(n, 7);
        assert_relative_eq!(phi, 0.3, epsilon = 1e-12);
    }
}
