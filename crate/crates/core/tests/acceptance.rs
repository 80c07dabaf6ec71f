//! Acceptance suite: one test per shipping criterion, each printing a
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the per-criterion summaries.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use navkit::bina::{self, BinaParams};
use navkit::ena::EnaParams;
use navkit::formation::{self, ConsensusState, FormationConfig, GraphSchedule};
use navkit::math::{integrate_step, wrap_angle, ControlInput, Pose, RobotLimits, Vec2};
use navkit::naier::{self, NaierParams};
use navkit::scenario;
use navkit::sensing;
use navkit::sim::{
    self, run_formation, run_formation_escalating, run_with_controller, ControllerKind, Mode,
    RobotSpec, Scenario, Terminal,
};
use navkit::world::{Environment, MotionLaw, Obstacle, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> scenario::Loaded {
    scenario::load_path(&scenario_dir().join(format!("{name}.toml")))
        .unwrap_or_else(|e| panic!("loading {name}: {e}"))
}

fn load_nav(name: &str) -> Scenario {
    load(name)
        .nav
        .unwrap_or_else(|| panic!("{name} has no nav section"))
}

/// The bundled validated scenario library: every entry must be solved by all
/// three avoidance laws.
const LIBRARY: [&str; 16] = [
    "empty_field",
    "ena_static_disc",
    "single_disc_crossing",
    "multi_disc_field",
    "arc_obstacle",
    "sinusoid_obstacle",
    "radius_growth",
    "static_block",
    "rotating_cross",
    "snake_chain",
    "corridor",
    "irregular_static",
    "crowd_seek",
    "rect_compare",
    "wheelchair_hall",
    "flexbed_ward",
];

#[test]
fn criterion_01_safety_suite() {
    let started = Instant::now();
    let mut clearances: Vec<(String, f64)> = Vec::new();
    for name in LIBRARY {
        let nav = load_nav(name);
        for kind in sim::BATCH_CONTROLLERS {
            let (_, metrics) = run_with_controller(&nav, kind)
                .unwrap_or_else(|e| panic!("{name}/{}: {e}", kind.name()));
            assert!(
                metrics.terminal.reached(),
                "{name}/{}: expected TargetReached, got {:?}",
                kind.name(),
                metrics.terminal
            );
            assert!(
                metrics.min_clearance >= nav.environment.d_safe,
                "{name}/{}: clearance {:.3} below d_safe {:.3}",
                kind.name(),
                metrics.min_clearance,
                nav.environment.d_safe
            );
            clearances.push((format!("{name}/{}", kind.name()), metrics.min_clearance));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < 60.0,
        "safety suite took {elapsed:.1} s (budget 60 s)"
    );
    // Anchor comparison: the wide-margin scenes report clearances of the same
    // magnitude as the reported hardware minima (0.832 m and 0.816 m).
    let flexbed: Vec<&(String, f64)> = clearances
        .iter()
        .filter(|(n, _)| n.starts_with("flexbed"))
        .collect();
    println!(
        "acceptance 01 safety-suite: PASS - {} scenarios x 3 laws in {elapsed:.1} s; \
         flexbed-scene clearances {:?} (hardware anchors 0.832 / 0.816 m)",
        LIBRARY.len(),
        flexbed
            .iter()
            .map(|(_, c)| (c * 1000.0).round() / 1000.0)
            .collect::<Vec<_>>()
    );
}

#[test]
fn criterion_02_ena_standoff_tracking() {
    // Static convex obstacle with d0 = 1.5 m.
    let nav = load_nav("static_block");
    let d0 = nav.robot.ena.unwrap().standoff;
    assert_eq!(d0, 1.5);
    let (log, metrics) = run_with_controller(&nav, ControllerKind::Ena).unwrap();
    let mean = metrics
        .standoff_mean_abs_error
        .expect("avoidance must settle");
    assert!(
        mean <= 0.15,
        "post-settling mean |d - d0| = {mean:.3} > 0.15"
    );

    // Running 5 s window mean after settling stays under 0.1 d0.
    let dt = nav.control_period;
    let window = (5.0 / dt) as usize;
    let series: Vec<f64> = log
        .records
        .iter()
        .filter(|r| r.mode == Mode::Avoid)
        .filter_map(|r| r.aux)
        .skip_while(|aux| aux.abs() > 0.3)
        .collect();
    assert!(series.len() > window, "too little settled data");
    let mut worst: f64 = 0.0;
    for chunk in series.windows(window) {
        let m = chunk.iter().map(|a| a.abs()).sum::<f64>() / window as f64;
        worst = worst.max(m);
    }
    assert!(
        worst <= 0.1 * d0,
        "worst 5 s window mean {worst:.3} > {:.3}",
        0.1 * d0
    );
    println!(
        "acceptance 02 ena-standoff: PASS - mean |d-d0| {mean:.3} m, worst 5 s window {worst:.3} m \
         (bound {:.2} m)",
        0.1 * d0
    );
}

#[test]
fn criterion_03_bina_avoiding_angle() {
    // Moving disc: avoiding-angle constancy during an avoidance episode
    // against a slow mover (the regime of the reported hardware measurement,
    // where the boundary swing asin(|v_obs| / |l|) stays small).
    let limits = RobotLimits::new(0.0, 1.0, 1.5).unwrap();
    let moving = Scenario {
        label: "slow-mover-angle".into(),
        environment: Environment::new(
            vec![Obstacle {
                id: 0,
                shape: Shape::Disc {
                    center: Vec2::new(9.0, 2.2),
                    radius: 1.0,
                },
                motion: MotionLaw::ConstantVelocity {
                    velocity: Vec2::new(-0.03, -0.06),
                },
            }],
            1.0,
            0.4,
        ),
        robot: RobotSpec {
            pose: Pose::new(0.0, 0.0, 0.0),
            limits,
            controller: ControllerKind::Bina,
            bina: Some(BinaParams {
                avoiding_angle: 0.95,
                trigger_distance: 3.0,
                d_safe: 0.4,
                obstacle_speed_bound: 0.1,
                limits,
            }),
            ena: None,
            naier: None,
            naier_target_reaching: true,
            sensing_range: None,
        },
        target: Vec2::new(18.0, 0.0),
        capture_radius: 0.1,
        duration: 150.0,
        control_period: 0.02,
        substeps: 2,
        seed: 0,
    };
    let (_, metrics) = run_with_controller(&moving, ControllerKind::Bina).unwrap();
    assert!(
        metrics.terminal.reached(),
        "slow-mover run must finish: {:?}",
        metrics.terminal
    );
    let std = metrics
        .avoiding_angle_std
        .expect("avoidance phase required");
    let mean = metrics.avoiding_angle_mean.unwrap();
    assert!(std <= 0.10, "avoiding-angle std {std:.4} > 0.10 rad");

    // Static disc: the orbit radius converges to R / cos(alpha_0).
    let limits = RobotLimits::new(0.0, 1.0, 1.5).unwrap();
    let radius = 1.0;
    let alpha0 = 0.9;
    let center = Vec2::new(8.0, 0.0);
    let scenario = Scenario {
        label: "static-orbit".into(),
        environment: Environment::new(
            vec![Obstacle {
                id: 0,
                shape: Shape::Disc { center, radius },
                motion: MotionLaw::Static,
            }],
            1.0,
            0.4,
        ),
        robot: RobotSpec {
            pose: Pose::new(0.0, 0.0, 0.0),
            limits,
            controller: ControllerKind::Bina,
            bina: Some(BinaParams {
                avoiding_angle: alpha0,
                trigger_distance: 3.5,
                d_safe: 0.4,
                obstacle_speed_bound: 0.3,
                limits,
            }),
            ena: None,
            naier: None,
            naier_target_reaching: true,
            sensing_range: None,
        },
        target: Vec2::new(16.0, 0.0),
        capture_radius: 0.1,
        duration: 120.0,
        control_period: 0.02,
        substeps: 2,
        seed: 0,
    };
    let (log, m) = run_with_controller(&scenario, ControllerKind::Bina).unwrap();
    assert!(
        m.terminal.reached(),
        "static-orbit run must finish: {:?}",
        m.terminal
    );
    // Convergence check: the settled tail of the avoidance span.
    let avoid: Vec<f64> = log
        .records
        .iter()
        .filter(|r| r.mode == Mode::Avoid)
        .map(|r| r.pose.position().distance(center))
        .collect();
    let tail = (5.0 / scenario.control_period) as usize;
    assert!(avoid.len() > tail, "orbit phase too short");
    let orbit = &avoid[avoid.len() - tail..];
    let mean_orbit = orbit.iter().sum::<f64>() / orbit.len() as f64;
    let ideal = radius / alpha0.cos();
    let rel = (mean_orbit - ideal).abs() / ideal;
    assert!(
        rel <= 0.05,
        "orbit radius {mean_orbit:.3} vs R/cos(a0) {ideal:.3}: {:.1}%",
        rel * 100.0
    );
    println!(
        "acceptance 03 bina-avoiding-angle: PASS - moving-disc std {std:.4} rad (mean {mean:.3}), \
         static orbit {mean_orbit:.3} m vs {ideal:.3} m ({:.1}%)",
        rel * 100.0
    );
}

#[test]
fn criterion_04_naier_decision_safety() {
    let mut checked_instants = 0usize;
    for name in ["crowd_seek", "multi_disc_field", "irregular_static"] {
        let nav = load_nav(name);
        let params = nav.robot.naier.unwrap();
        let delta = params.decision_period;
        let dt = nav.control_period;
        let (log, _) = run_with_controller(&nav, ControllerKind::Naier).unwrap();

        let per_window = (delta / dt).round() as usize;
        for (i, r) in log.records.iter().enumerate() {
            let k = (r.t / delta + 0.5).floor();
            let at_decision = (r.t - k * delta).abs() < 0.5 * dt.min(delta);
            if at_decision && r.mode == Mode::Steer {
                let commanded = r.aux.expect("steer mode logs the commanded bearing");
                assert!(
                    !sensing::bearing_occupied(
                        &nav.environment,
                        r.t,
                        &r.pose,
                        params.disc_diameter,
                        commanded
                    ),
                    "{name}: commanded bearing occupied at t={:.2}",
                    r.t
                );
                checked_instants += 1;
            }
            // Sampled-data hold: u constant across the window.
            if at_decision {
                for j in 1..per_window {
                    if let Some(next) = log.records.get(i + j) {
                        let k2 = (next.t / delta + 0.5).floor();
                        if k2 as u64 == k as u64 {
                            assert_eq!(
                                next.control.u, r.control.u,
                                "{name}: u not held tick-exactly inside a decision window"
                            );
                        }
                    }
                }
            }
        }
    }
    assert!(
        checked_instants > 50,
        "too few blocked decision instants exercised"
    );
    println!(
        "acceptance 04 naier-decision-safety: PASS - {checked_instants} blocked decision \
         instants all commanded free bearings; hold verified tick-exactly"
    );
}

#[test]
fn criterion_05_consensus_convergence() {
    for n in [3usize, 5, 8] {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + n as u64);
        let positions: Vec<Vec2> = (0..n)
            .map(|_| Vec2::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)))
            .collect();
        let mut states: Vec<ConsensusState> = (0..n)
            .map(|_| ConsensusState {
                theta: rng.gen_range(0.0..PI),
                x_ofs: rng.gen_range(-3.0..3.0),
                y_ofs: rng.gen_range(-3.0..3.0),
                v: rng.gen_range(0.3..1.0),
            })
            .collect();
        let schedule = GraphSchedule::RandomJointlyConnected {
            window: 5,
            extra_edge_prob: 0.1,
        };
        assert!(schedule.jointly_connected(n, 200, 5, 77 + n as u64));

        let mut prev = sim::consensus_spread(&states, &positions);
        let mut instant_of_convergence = None;
        for k in 0..200 {
            let adj = schedule.adjacency(n, k, 77 + n as u64);
            states = formation::consensus_step(&states, &positions, &positions, &adj);
            let spread = sim::consensus_spread(&states, &positions);
            for (i, (s, p)) in spread.iter().zip(&prev).enumerate() {
                assert!(
                    *s <= p + 1e-12,
                    "n={n}: consensus quantity {i} spread grew at instant {k}: {s} > {p}"
                );
            }
            prev = spread;
            if instant_of_convergence.is_none() && spread.iter().all(|s| *s < 1e-6) {
                instant_of_convergence = Some(k + 1);
            }
        }
        let at = instant_of_convergence
            .unwrap_or_else(|| panic!("n={n}: spread not below 1e-6 within 200 instants"));
        println!("  consensus n={n}: all spreads < 1e-6 after {at} instants, monotone throughout");
    }
    println!(
        "acceptance 05 consensus-convergence: PASS - n in {{3,5,8}} jointly connected schedules"
    );
}

#[test]
fn criterion_06_formation_accuracy() {
    let base = load("formation_square").formation.unwrap();
    let mut worst: f64 = 0.0;
    for seed in 1..=10u64 {
        let mut spec = base.clone();
        spec.seed = seed;
        let log = run_formation(&spec);
        assert!(
            log.converged_at.is_some(),
            "seed {seed}: square formation did not converge"
        );
        for (ex, ey) in &log.pair_errors {
            assert!(
                ex.abs() <= 0.15 && ey.abs() <= 0.15,
                "seed {seed}: pair error ({ex:.3}, {ey:.3}) above 0.15 m"
            );
            worst = worst.max(ex.abs()).max(ey.abs());
        }
    }
    println!(
        "acceptance 06 formation-accuracy: PASS - 10 seeded side-5 squares converged, \
         worst |error| {worst:.3} m (bound 0.15; reported hardware means <= 0.031)"
    );
}

#[test]
fn criterion_07_anonymous_formation() {
    // 100 seeded contended runs must all settle into a permutation and converge.
    let base = load("formation_square_anonymous").formation.unwrap();
    let mut permutation_events = 0usize;
    for seed in 1..=100u64 {
        let mut spec = base.clone();
        spec.seed = seed;
        let log = run_formation_escalating(&spec, 3);
        assert!(
            log.converged_at.is_some(),
            "seed {seed}: anonymous run did not converge"
        );
        let mut sorted = log.final_assignment.clone();
        sorted.sort_unstable();
        assert_eq!(
            sorted,
            vec![0, 1, 2, 3],
            "seed {seed}: final assignment not a permutation"
        );
        if log.assignment_trace.len() > 1 {
            permutation_events += 1;
        }
    }
    assert!(
        permutation_events > 0,
        "contended starts must exhibit reassignment events"
    );

    // Uniform-draw chi-square on the randomized rule: |S| = 3 candidates.
    let config = FormationConfig {
        slots: vec![
            Vec2::ZERO,
            Vec2::new(4.0, 0.0),
            Vec2::new(0.0, 4.0),
            Vec2::new(40.0, 40.0),
        ],
        lead: 5.0,
        detection_range: 10.0,
        epsilon: 0.5,
        periods_per_round: 20,
    };
    let (adj, _) = formation::slot_graph(&config);
    // Slot 3 is isolated; slot 0 connects to slots 1 and 2 only.
    assert_eq!(adj[0].len(), 2);
    let states = vec![
        ConsensusState {
            theta: 0.0,
            x_ofs: 0.0,
            y_ofs: 0.0,
            v: 0.0
        };
        2
    ];
    let positions = vec![Vec2::new(9.0, 9.0), Vec2::new(0.0, 0.1)];
    let states = vec![
        ConsensusState {
            theta: 0.0,
            x_ofs: -9.0,
            y_ofs: -9.0,
            v: 0.0,
        },
        states[1],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_810);
    let mut counts = [0usize; 4];
    let trials = 100_000usize;
    for _ in 0..trials {
        let out =
            formation::reassign_slots(&[0, 1], &positions, &states, &config, &adj, 0.0, &mut rng);
        counts[out.assignment[0]] += 1;
    }
    assert_eq!(counts[3], 0, "unreachable slot must never be drawn");
    let expected = trials as f64 / 3.0;
    let chi2: f64 = counts[..3]
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    // 2 degrees of freedom, p = 0.01 critical value.
    assert!(
        chi2 < 9.210,
        "chi-square {chi2:.2} rejects uniformity at p = 0.01"
    );
    println!(
        "acceptance 07 anonymous-formation: PASS - 100/100 seeded contended runs converged to \
         permutations ({permutation_events} with reassignment events); chi2 {chi2:.2} < 9.21 \
         over 10^5 draws"
    );
}

#[test]
fn criterion_08_comparison_harness() {
    // Constant-velocity batch: full table shape plus win-rate, not asserted.
    let loaded = load("batch_constant");
    let nav = loaded.nav.unwrap();
    let spec = loaded.batch.unwrap();
    assert_eq!(spec.runs, 25);
    let table = sim::run_batch(&nav, &spec, nav.seed);
    assert_eq!(table.rows.len(), 25, "25-run table expected");
    for row in &table.rows {
        assert_eq!(row.times.len(), 3);
    }
    let wins = table.wins;
    let reached: usize = table
        .rows
        .iter()
        .map(|r| r.times.iter().filter(|t| t.is_some()).count())
        .sum();
    println!(
        "  constant batch: wins bina/ena/naier = {}/{}/{} ({:.0}% bina win-rate; the reported \
         92% is informational, not asserted), {reached}/75 runs reached",
        wins[0],
        wins[1],
        wins[2],
        100.0 * wins[0] as f64 / 25.0
    );

    // Nonlinear batch: only collision-freeness is asserted.
    let loaded = load("batch_nonlinear");
    let nav = loaded.nav.unwrap();
    let spec = loaded.batch.unwrap();
    assert_eq!(spec.runs, 20);
    assert!(spec.nonlinear);
    let table = sim::run_batch(&nav, &spec, nav.seed);
    assert_eq!(table.rows.len(), 20);
    for row in &table.rows {
        for (i, outcome) in row.outcomes.iter().enumerate() {
            assert!(
                !matches!(outcome, Terminal::Collision { .. }),
                "nonlinear batch run {} controller {}: collision",
                row.run,
                i
            );
        }
    }
    println!(
        "acceptance 08 comparison-harness: PASS - 25-run table with best column and win-rate; \
         20-run nonlinear batch collision-free (no winner asserted)"
    );
}

#[test]
fn criterion_09_oracle_equivalences() {
    // (a) Vision cone vs boundary-sampling oracle, <= 1e-3 rad.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_cone = 0.0f64;
    for case in 0..200 {
        let shape = match case % 3 {
            0 => Shape::Disc {
                center: Vec2::new(rng.gen_range(3.0..9.0), rng.gen_range(-4.0..4.0)),
                radius: rng.gen_range(0.4..2.0),
            },
            1 => {
                let cx = rng.gen_range(4.0..9.0);
                let cy = rng.gen_range(-3.0..3.0);
                let w = rng.gen_range(0.8..2.5);
                let h = rng.gen_range(0.8..2.5);
                Shape::ConvexPolygon {
                    vertices: vec![
                        Vec2::new(cx - w, cy - h),
                        Vec2::new(cx + w, cy - h),
                        Vec2::new(cx + w, cy + h),
                        Vec2::new(cx - w, cy + h),
                    ],
                }
            }
            _ => Shape::Chain {
                points: vec![
                    Vec2::new(rng.gen_range(4.0..7.0), rng.gen_range(-3.0..0.0)),
                    Vec2::new(rng.gen_range(7.0..10.0), rng.gen_range(0.0..3.0)),
                ],
                half_width: rng.gen_range(0.2..0.8),
            },
        };
        let env = Environment::new(
            vec![Obstacle {
                id: 0,
                shape,
                motion: MotionLaw::Static,
            }],
            1.0,
            0.3,
        );
        let groups = env.interpolate_clusters(0.0);
        let Ok((a1, a2)) = sensing::vision_cone(&groups[0], Vec2::ZERO) else {
            continue;
        };
        // Oracle: bearings of 1e4 sampled boundary points.
        let reference = (groups[0].distance_to_point(Vec2::ZERO).closest).angle();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for m in &groups[0].members {
            for p in m.shape.boundary_samples(10_000) {
                let b = reference + wrap_angle(p.angle() - reference);
                lo = lo.min(b);
                hi = hi.max(b);
            }
        }
        worst_cone = worst_cone.max((a1 - lo).abs()).max((a2 - hi).abs());
    }
    assert!(
        worst_cone <= 1e-3,
        "cone oracle disagreement {worst_cone:.2e} rad"
    );

    // (b) Sector predicate vs disc-membership oracle, exact on 1e4 cases.
    let mut rng = ChaCha8Rng::seed_from_u64(123);
    let mut hits = 0usize;
    for _ in 0..10_000 {
        let pose = Pose::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-PI..PI),
        );
        let q = Vec2::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0));
        if q.distance(pose.position()) < 1e-6 {
            continue;
        }
        let d_s = rng.gen_range(1.0..6.0);
        let env = Environment::new(
            vec![Obstacle {
                id: 0,
                shape: Shape::Disc {
                    center: q,
                    radius: 1e-7,
                },
                motion: MotionLaw::Static,
            }],
            1.0,
            0.0,
        );
        let bearing = (q - pose.position()).angle();
        let got = sensing::bearing_occupied(&env, 0.0, &pose, d_s, bearing);
        // Membership route: is the point inside the look-ahead disc of
        // diameter D_s centered D_s/2 ahead?
        let center = pose.position() + pose.heading() * (d_s / 2.0);
        let offset = wrap_angle(bearing - pose.theta);
        let expectation = q.distance(center) <= d_s / 2.0 && offset.abs() < PI / 2.0;
        assert_eq!(
            got, expectation,
            "sector/membership mismatch: pose {pose:?} q {q:?} D_s {d_s}"
        );
        hits += usize::from(got);
    }
    assert!(hits > 100, "degenerate sector test draw");

    // (c) Arc integrator vs 1e4-substep RK4, <= 1e-9.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_arc = 0.0f64;
    for _ in 0..50 {
        let p = Pose::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-PI..PI),
        );
        let c = ControlInput::new(rng.gen_range(0.0..1.5), rng.gen_range(-2.0..2.0));
        let dt = rng.gen_range(0.05..2.0);
        let exact = integrate_step(p, c, dt);
        let brute = rk4_unicycle(p, c, dt, 10_000);
        worst_arc = worst_arc
            .max((exact.x - brute.x).abs())
            .max((exact.y - brute.y).abs())
            .max(wrap_angle(exact.theta - brute.theta).abs());
    }
    assert!(worst_arc <= 1e-9, "arc vs RK4 disagreement {worst_arc:.2e}");
    println!(
        "acceptance 09 oracle-equivalences: PASS - cone {worst_cone:.2e} rad (<= 1e-3), \
         sector membership exact on 10^4 cases ({hits} occupied), arc vs RK4 {worst_arc:.2e} (<= 1e-9)"
    );
}

/// Independent integrator for the oracle cross-check: classic RK4 with many
/// substeps on the raw unicycle ODE (heading integrated without wrapping).
fn rk4_unicycle(p: Pose, c: ControlInput, dt: f64, n: usize) -> Pose {
    let h = dt / n as f64;
    let (mut x, mut y, mut th) = (p.x, p.y, p.theta);
    let f = |th: f64| (c.v * th.cos(), c.v * th.sin(), c.u);
    for _ in 0..n {
        let (k1x, k1y, k1t) = f(th);
        let (k2x, k2y, k2t) = f(th + 0.5 * h * k1t);
        let (k3x, k3y, k3t) = f(th + 0.5 * h * k2t);
        let (k4x, k4y, k4t) = f(th + h * k3t);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        th += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    }
    Pose::new(x, y, th)
}

#[test]
fn criterion_10_validator_margins() {
    // Vision-cone controller inequalities on three hand-built cases.
    let bina_cases = [
        // (radius, d_safe, v_obs, v_max, u_max, alpha0, trigger)
        (1.0, 1.0, 0.5, 1.0, 1.0, PI / 3.0, 10.0),
        (0.6, 0.4, 0.2, 0.9, 1.2, 1.0, 8.0),
        (1.5, 0.5, 0.3, 1.2, 1.5, 0.8, 12.0),
    ];
    for (radius, d_safe, v_obs, v_max, u_max, alpha0, trigger) in bina_cases {
        let limits = RobotLimits::new(0.0, v_max, u_max).unwrap();
        let env = Environment::new(
            vec![Obstacle {
                id: 0,
                shape: Shape::Disc {
                    center: Vec2::new(30.0, 0.0),
                    radius,
                },
                motion: MotionLaw::ConstantVelocity {
                    velocity: Vec2::new(0.0, v_obs),
                },
            }],
            1.0,
            d_safe,
        );
        let params = BinaParams {
            avoiding_angle: alpha0,
            trigger_distance: trigger,
            d_safe,
            obstacle_speed_bound: v_obs,
            limits,
        };
        let report = bina::validate_assumptions(&env, &params, Vec2::new(90.0, 0.0), 1.0);
        // Independent margin transcriptions.
        let rd = radius + d_safe;
        let f_i = (v_obs + v_max) * radius / (rd * rd * (1.0 - radius * radius / (rd * rd)).sqrt());
        let a_i = radius / alpha0.cos() - radius;
        let expect_cons3 = u_max - f_i;
        let expect_cons2 = trigger - (PI * v_max / (u_max - f_i) + 1.1 * a_i);
        let expect_cons5 = alpha0 - (radius / rd).acos();
        let margin = |needle: &str| {
            report
                .items
                .iter()
                .find(|i| i.name.contains(needle))
                .unwrap_or_else(|| panic!("missing {needle}"))
                .margin
        };
        assert!((margin("u_max > F_i") - expect_cons3).abs() < 1e-9);
        assert!((margin("trigger C >=") - expect_cons2).abs() < 1e-9);
        assert!((margin("alpha_0 >=") - expect_cons5).abs() < 1e-9);
    }
    // Reference value: F_i = 0.4330 for R=1, d_safe=1, V_i=0.5, v_max=1.
    let f_ref = bina::turn_rate_demand(0.5, 1.0, 1.0, 1.0);
    assert!((f_ref - 0.433_012_701_9).abs() < 1e-9);

    // Sector-controller inequalities on three hand-built cases.
    let naier_cases = [
        // (v, v_e, delta, u_max, d_s)
        (1.0, 0.0, 0.1, 1.0, 4.0),
        (1.0, 0.3, 0.1, 1.0, 4.0),
        (1.0, 0.0, 0.1, 1.0, 0.2), // Ase2 boundary: strict inequality fails
    ];
    for (v, v_e, delta, u_max, d_s) in naier_cases {
        let limits = RobotLimits::new(0.0, v, u_max).unwrap();
        let params = NaierParams {
            desired_direction: 0.0,
            disc_diameter: d_s,
            d_safe: 0.3,
            decision_period: delta,
            resolution: PI / 360.0,
            environment_speed: v_e,
            limits,
        };
        let env = Environment::new(vec![], 1.0, 0.3);
        let report = naier::validate_assumptions(&params, &env, None, 1.0);
        let expect = [
            v * (u_max * delta).sin() / u_max - v_e * delta,
            d_s - 2.0 * (v + v_e) * delta,
            (d_s - 2.0 * v * delta) * (u_max * delta).sin() - 2.0 * v_e * delta,
            (d_s - 2.0 * v * delta) * (1.0 - (u_max * delta).cos()) - 2.0 * v_e * delta,
        ];
        for (item, want) in report.items.iter().zip(expect) {
            assert!(
                (item.margin - want).abs() < 1e-12,
                "{}: margin {} vs independent {}",
                item.name,
                item.margin,
                want
            );
            assert_eq!(item.pass, want > 0.0, "{} strictness", item.name);
        }
    }
    // Spot values from the worked example: sin(0.1) = 0.09983 > 0.03.
    assert!((1.0f64 * 0.1f64.sin() / 1.0 - 0.099_833_416_6).abs() < 1e-9);

    // Formation lead inequality on three cases; the bound is strict.
    let formation_cases = [
        (1.0, 1.0, 2.2, true),
        (1.0, 1.0, 2.0, false),
        (0.9, PI / 4.0, 2.3, true),
    ];
    for (v_max, omega, lead, expect_pass) in formation_cases {
        let limits = RobotLimits::new(0.3, v_max, omega).unwrap();
        let config = FormationConfig {
            slots: vec![Vec2::ZERO, Vec2::new(3.0, 0.0)],
            lead,
            detection_range: 10.0,
            epsilon: 1.0,
            periods_per_round: 20,
        };
        let report = config.validate(&limits);
        let item = &report.items[0];
        assert_eq!(item.pass, expect_pass, "lead {lead} vs 2*{v_max}/{omega}");
        assert!((item.margin - (lead - 2.0 * v_max / omega)).abs() < 1e-12);
    }
    println!(
        "acceptance 10 validator-margins: PASS - all inequality margins match independent \
         transcriptions on 3 cases each (incl. F_i = {f_ref:.4})"
    );
}

#[test]
fn ena_params_defaults_match_shipping_values() {
    // The library defaults advertised for the range controller.
    let nav = load_nav("empty_field");
    let ena: EnaParams = nav.robot.ena.unwrap();
    assert_eq!(ena.gain, 1.0);
    assert_eq!(ena.saturation_width, 0.3);
    assert_eq!(ena.exit_mismatch, 0.1);
}
