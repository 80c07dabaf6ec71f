//! Property tests over the geometry, kinematics and controller laws.

use std::f64::consts::PI;

use navkit::bina::{self, BinaParams};
use navkit::math::{
    ccw_angle_from_to, diff_drive_from_unicycle, integrate_step, min_turn_radius,
    unicycle_from_diff_drive, wrap_angle, ControlInput, DiffDriveParams, Pose, RobotLimits, Vec2,
};
use navkit::sensing::{self, VisionConeReading};
use navkit::world::{Environment, MotionLaw, Obstacle, Shape};
use proptest::prelude::*;

fn finite_angle() -> impl Strategy<Value = f64> {
    -50.0..50.0f64
}

proptest! {
    #[test]
    fn wrap_is_idempotent_and_periodic(a in finite_angle(), k in -10i32..=10) {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI);
        prop_assert_eq!(wrap_angle(w), w);
        let shifted = wrap_angle(a + k as f64 * 2.0 * PI);
        prop_assert!((shifted - w).abs() < 1e-9 * (1.0 + k.abs() as f64));
    }

    #[test]
    fn ccw_angle_antisymmetric_off_the_cut(a in 0.0..(2.0 * PI), b in 0.0..(2.0 * PI)) {
        let r1 = Vec2::from_angle(a);
        let r2 = Vec2::from_angle(b);
        let g12 = ccw_angle_from_to(r1, r2);
        if g12 != PI {
            let g21 = ccw_angle_from_to(r2, r1);
            prop_assert!((g12 + g21).abs() < 1e-12);
        }
    }

    #[test]
    fn integration_preserves_heading_and_position(
        x in -10.0..10.0f64, y in -10.0..10.0f64, th in -PI..PI,
        v in 0.0..2.0f64, u in -2.0..2.0f64, dt in 0.001..0.5f64,
    ) {
        let p = Pose::new(x, y, th);
        // u = 0 preserves heading exactly.
        let straight = integrate_step(p, ControlInput::new(v, 0.0), dt);
        prop_assert_eq!(straight.theta, p.theta);
        // v = 0 preserves position exactly.
        let spin = integrate_step(p, ControlInput::new(0.0, u), dt);
        prop_assert_eq!((spin.x, spin.y), (p.x, p.y));
    }

    #[test]
    fn integration_second_order_in_dt(
        th in -PI..PI, v in 0.1..1.5f64, u in -1.5..1.5f64,
    ) {
        // Two half steps against one full step: both are exact for held
        // controls, so they agree to rounding; this guards the arc algebra.
        let p = Pose::new(0.0, 0.0, th);
        let c = ControlInput::new(v, u);
        let dt = 0.2;
        let full = integrate_step(p, c, dt);
        let half = integrate_step(integrate_step(p, c, dt / 2.0), c, dt / 2.0);
        prop_assert!((full.x - half.x).abs() < 1e-10);
        prop_assert!((full.y - half.y).abs() < 1e-10);
        prop_assert!((wrap_angle(full.theta - half.theta)).abs() < 1e-10);
    }

    #[test]
    fn diff_drive_round_trip(v in 0.0..0.9f64, u in -0.7..0.7f64) {
        let p = DiffDriveParams::new(0.275, 0.175, 10.0).unwrap();
        let (wl, wr) = diff_drive_from_unicycle(ControlInput::new(v, u), &p).unwrap();
        prop_assert!(wl.abs() <= 10.0 && wr.abs() <= 10.0);
        let back = unicycle_from_diff_drive(wl, wr, &p);
        prop_assert!((back.v - v).abs() <= 1e-12);
        prop_assert!((back.u - u).abs() <= 1e-12);
    }

    #[test]
    fn turn_radius_scales(v in 0.0..3.0f64, u in 0.01..3.0f64) {
        let r = min_turn_radius(v, u);
        prop_assert!((r * u - v).abs() < 1e-12);
    }
}

fn random_env(seeds: &[(f64, f64, f64)]) -> Environment {
    let obstacles = seeds
        .iter()
        .enumerate()
        .map(|(id, (x, y, r))| Obstacle {
            id,
            shape: Shape::Disc {
                center: Vec2::new(*x, *y),
                radius: r.abs().max(0.2),
            },
            motion: MotionLaw::Static,
        })
        .collect();
    Environment::new(obstacles, 1.0, 0.4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_field_is_lipschitz(
        seeds in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64, 0.2..2.0f64), 1..4),
        ax in -12.0..12.0f64, ay in -12.0..12.0f64,
        bx in -12.0..12.0f64, by in -12.0..12.0f64,
    ) {
        let env = random_env(&seeds);
        let a = Vec2::new(ax, ay);
        let b = Vec2::new(bx, by);
        let da = env.distance_to_environment(0.0, a).distance;
        let db = env.distance_to_environment(0.0, b).distance;
        prop_assert!((da - db).abs() <= a.distance(b) + 1e-9);
    }

    #[test]
    fn distance_field_is_lipschitz_in_time(
        speed in 0.05..0.5f64, dir in -PI..PI,
        t1 in 0.0..20.0f64, dt in 0.01..2.0f64,
        px in -12.0..12.0f64, py in -12.0..12.0f64,
    ) {
        let env = Environment::new(
            vec![Obstacle {
                id: 0,
                shape: Shape::Disc { center: Vec2::new(3.0, 1.0), radius: 0.8 },
                motion: MotionLaw::ConstantVelocity { velocity: Vec2::from_angle(dir) * speed },
            }],
            1.0,
            0.4,
        );
        let p = Vec2::new(px, py);
        let d1 = env.distance_to_environment(t1, p).distance;
        let d2 = env.distance_to_environment(t1 + dt, p).distance;
        prop_assert!((d1 - d2).abs() <= env.max_obstacle_speed() * dt + 1e-9);
    }

    #[test]
    fn clusters_monotone_in_threshold(
        seeds in prop::collection::vec((-8.0..8.0f64, -8.0..8.0f64, 0.2..1.2f64), 2..6),
        gap_lo in 0.0..1.0f64, extra in 0.1..2.0f64,
    ) {
        let mut env = random_env(&seeds);
        env.interpolation_gap = gap_lo;
        let fine = env.interpolate_clusters(0.0);
        env.interpolation_gap = gap_lo + extra;
        let coarse = env.interpolate_clusters(0.0);
        // Raising the threshold never splits a group: every fine group is
        // contained in one coarse group.
        for f in &fine {
            let home = coarse.iter().filter(|c| {
                f.members.iter().all(|m| c.members.iter().any(|cm| cm.id == m.id))
            }).count();
            prop_assert_eq!(home, 1);
        }
        prop_assert!(coarse.len() <= fine.len());
    }

    #[test]
    fn motion_laws_respect_their_speed_bound(
        speed in 0.05..0.5f64, dir in -PI..PI, amp in 0.1..1.0f64,
        freq in 0.1..1.0f64, rate in -0.5..0.5f64, t1 in 0.0..20.0f64, dt in 0.01..1.0f64,
    ) {
        let laws = vec![
            MotionLaw::ConstantVelocity { velocity: Vec2::from_angle(dir) * speed },
            MotionLaw::Sinusoid { base_velocity: Vec2::from_angle(dir) * speed, amplitude: amp, frequency: freq },
            MotionLaw::Rotation { pivot: Vec2::new(1.0, -2.0), angular_rate: rate },
        ];
        for (id, motion) in laws.into_iter().enumerate() {
            let ob = Obstacle {
                id,
                shape: Shape::Disc { center: Vec2::new(3.0, 1.0), radius: 0.5 },
                motion,
            };
            let bound = ob.max_speed();
            // Sampled displacement speed never exceeds the declared bound.
            let s1 = ob.placed_at(t1);
            let s2 = ob.placed_at(t1 + dt);
            if let (Shape::Disc { center: c1, .. }, Shape::Disc { center: c2, .. }) = (&s1, &s2) {
                let rate = c1.distance(*c2) / dt;
                prop_assert!(rate <= bound + 1e-6, "rate {} > bound {}", rate, bound);
            }
        }
    }

    #[test]
    fn sector_scans_respect_half_plane_invariant(
        ox in 1.0..8.0f64, oy in -4.0..4.0f64, r in 0.3..1.5f64,
        theta in -PI..PI, ds in 1.0..6.0f64,
    ) {
        let env = random_env(&[(ox, oy, r)]);
        let pose = Pose::new(0.0, 0.0, theta);
        let scan = sensing::sense_sectors(&env, 0.0, &pose, ds, PI / 180.0);
        for (offset, occupied) in scan.offsets.iter().zip(&scan.occupied) {
            if offset.abs() >= PI / 2.0 {
                prop_assert!(!occupied);
            }
        }
    }

    #[test]
    fn bina_commands_stay_inside_the_bounds(
        a1 in -PI..0.0f64, width in 0.05..1.0f64, alpha0 in 0.1..1.4f64,
        vx in -0.4..0.4f64, vy in -0.4..0.4f64, heading in -PI..PI,
    ) {
        let limits = RobotLimits::new(0.0, 1.0, 1.5).unwrap();
        let params = BinaParams {
            avoiding_angle: alpha0,
            trigger_distance: 3.0,
            d_safe: 0.4,
            obstacle_speed_bound: 0.6,
            limits,
        };
        let reading = VisionConeReading {
            distance: 2.0,
            alpha1: a1,
            alpha2: a1 + width,
            velocity: Vec2::new(vx, vy),
            group_id: 0,
        };
        let c = bina::avoid_control(&reading, &params, Vec2::from_angle(heading));
        prop_assert!(c.v >= 0.0 && c.v <= limits.v_max + 1e-12);
        prop_assert!(c.u.abs() <= limits.u_max + 1e-12);
        let p = bina::pursuit_control(&limits, a1, heading);
        prop_assert!(p.v >= 0.0 && p.v <= limits.v_max + 1e-12);
        prop_assert!(p.u.abs() <= limits.u_max + 1e-12);
    }
}
