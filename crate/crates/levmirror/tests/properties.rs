//! Property tests for the structural invariants of the optics and model
//! layers.

use std::f64::consts::PI;

use levmirror::budgets;
use levmirror::model::{MirrorPose, SimulationConfig};
use levmirror::optics;
use levmirror::potential;
use nalgebra::Vector3;
use proptest::prelude::*;

proptest! {
    /// Circulating power is pi-periodic in k L and even about resonance.
    #[test]
    fn circulating_power_periodic_and_even(
        phi in -1.5_f64..1.5,
        n in -400_000_i64..400_000,
        finesse in 10.0_f64..50_000.0,
    ) {
        let p0 = optics::circulating_power_at_phase(1.0, finesse, phi);
        let shifted = optics::circulating_power_at_phase(1.0, finesse, phi + n as f64 * PI);
        let mirrored = optics::circulating_power_at_phase(1.0, finesse, -phi);
        prop_assert!((p0 - shifted).abs() <= 1e-6 * p0.abs());
        prop_assert!((p0 - mirrored).abs() <= 1e-9 * p0.abs());
    }

    /// The unwrapped arctangent is increasing and continuous across branch
    /// points.
    #[test]
    fn unwrapped_atan_monotone(
        x in -20.0_f64..20.0,
        dx in 1e-6_f64..0.3,
        finesse in 10.0_f64..10_000.0,
    ) {
        let a = potential::unwrapped_atan(finesse, x);
        let b = potential::unwrapped_atan(finesse, x + dx);
        prop_assert!(b > a, "chi({}) = {a} !< chi({}) = {b}", x, x + dx);
        // Bounded by the comb structure: chi stays within pi/2 of x.
        prop_assert!((a - x).abs() <= PI / 2.0 + 1e-12);
    }

    /// Rotating the pose by 120 degrees about the tripod axis rotates the
    /// total optical force by 120 degrees.
    #[test]
    fn radiation_force_equivariant_under_tripod_rotation(
        x in -3e-8_f64..3e-8,
        y in -3e-8_f64..3e-8,
        z in -3e-7_f64..3e-7,
    ) {
        let cfg = SimulationConfig::default_paper();
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), 2.0 * PI / 3.0);
        let r = Vector3::new(x, y, z);
        let (f0, _) = optics::radiation_force(
            &MirrorPose::at(r),
            &cfg.geometry,
            &cfg.drive,
            cfg.mirror.radius_of_curvature_top,
            0.0,
        )
        .unwrap();
        let (f1, _) = optics::radiation_force(
            &MirrorPose::at(rot * r),
            &cfg.geometry,
            &cfg.drive,
            cfg.mirror.radius_of_curvature_top,
            0.0,
        )
        .unwrap();
        let expected = rot * f0;
        prop_assert!(
            (f1 - expected).norm() <= 1e-9 * f0.norm().max(1e-30),
            "rotated force mismatch {:e}",
            (f1 - expected).norm()
        );
    }

    /// Detuning/phase conversion round-trips.
    #[test]
    fn detuning_phase_round_trip(delta in -1e9_f64..1e9, length in 0.05_f64..0.5) {
        let phi = optics::phase_from_detuning(delta, length);
        let back = optics::detuning_from_phase(phi, length);
        prop_assert!((back - delta).abs() <= 1e-12 * delta.abs().max(1.0));
    }

    /// Config serialization round-trips exactly for arbitrary valid values.
    #[test]
    fn config_round_trip(
        mass in 1e-8_f64..1e-5,
        finesse in 2.0_f64..1e5,
        pressure in 0.0_f64..10.0,
        power in 0.0_f64..100.0,
        l0 in 0.175_f64..0.195,
    ) {
        let mut cfg = SimulationConfig::default_paper();
        cfg.mirror.mass = mass;
        cfg.environment.pressure = pressure;
        cfg.geometry = levmirror::model::TripodGeometry::tripod(
            l0,
            cfg.geometry.tilt_angle,
            cfg.geometry.radius_of_curvature_bottom,
            cfg.mirror.radius_of_curvature_top,
        );
        for b in &mut cfg.drive.beams {
            b.finesse = finesse;
            b.input_power_trap = power;
        }
        let text = cfg.serialize();
        let back = SimulationConfig::parse(&text).unwrap();
        prop_assert_eq!(cfg, back);
    }

    /// The combined occupation is a weighted mean: it lies between the
    /// laser-cooling floor and the gas-bath occupation.
    #[test]
    fn combined_occupation_is_bounded(
        gamma_rp in 1e-6_f64..1e6,
        n_min in 1e-4_f64..1e3,
        gamma_m in 0.0_f64..1e3,
        n_th in 1.0_f64..1e9,
    ) {
        let n = budgets::combined_occupation(gamma_rp, n_min, gamma_m, n_th);
        let lo = n_min.min(n_th);
        let hi = n_min.max(n_th);
        prop_assert!(n >= lo * (1.0 - 1e-12) && n <= hi * (1.0 + 1e-12), "N = {n} outside [{lo}, {hi}]");
    }

    /// Flipping both detunings swaps the sideband weights exactly.
    #[test]
    fn sideband_ratio_inverts_under_detuning_flip(
        kappa in 1e4_f64..1e8,
        omega_ratio in 0.01_f64..10.0,
        n1 in 1e6_f64..1e14,
        n2 in 1e6_f64..1e14,
        d1 in -2.0_f64..2.0,
        d2 in -2.0_f64..2.0,
    ) {
        let omega = kappa * omega_ratio;
        let fields = [(n1, d1 * kappa), (n2, d2 * kappa)];
        let flipped = [(n1, -d1 * kappa), (n2, -d2 * kappa)];
        let (sp, sm, _) = budgets::sideband_occupation(kappa, omega, &fields);
        let (fp, fm, _) = budgets::sideband_occupation(kappa, omega, &flipped);
        prop_assert!((sp - fm).abs() <= 1e-9 * sp.abs());
        prop_assert!((sm - fp).abs() <= 1e-9 * sm.abs());
    }
}
