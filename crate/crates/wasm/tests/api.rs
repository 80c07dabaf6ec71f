//! The demo operations run on any target; drive them with inline scenarios.

const NAV: &str = r#"
[sim]
ts = 0.05
duration = 60.0

[world]
d_safe = 0.4

[[world.obstacles]]
shape = { type = "disc", center = [6.0, 0.5], radius = 0.8 }

[robot]
pose = [0.0, 0.0, 0.0]
v_max = 1.0
u_max = 1.5
controller = "ena"

[robot.bina]
avoiding_angle = 0.95
trigger = 3.0

[robot.ena]
standoff = 1.0
trigger = 2.2

[robot.naier]
disc_diameter = 4.0

[target]
position = [12.0, 0.0]
"#;

const FORMATION: &str = r#"
[sim]
ts = 0.02
duration = 240.0
seed = 3

[robot]
pose = [0, 0, 0]
v_min = 0.3
v_max = 1.0
u_max = 1.0
controller = "pursuit"

[target]
position = [1, 0]

[formation]
slots = [[0.0, 0.0], [0.0, 5.0], [5.0, 0.0], [5.0, 5.0]]
detection_range = 10.0
epsilon = 1.0
anonymous = true
initial_assignment = [0, 0, 1, 1]
"#;

#[test]
fn run_scenario_emits_svg_and_metrics() {
    let out = navkit_wasm::api::run_scenario(NAV).unwrap();
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["controller"], "ena");
    assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
    assert!(v["navigation_time"].as_f64().unwrap() > 0.0);
}

#[test]
fn compare_runs_all_three() {
    let out = navkit_wasm::api::compare_controllers(NAV).unwrap();
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let names: Vec<&str> = rows
        .iter()
        .map(|r| r["controller"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["bina", "ena", "naier"]);
}

#[test]
fn formation_reports_trace_and_errors() {
    let out = navkit_wasm::api::run_formation(FORMATION, 4).unwrap();
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["converged_at"].as_f64().is_some());
    assert_eq!(v["pair_errors"].as_array().unwrap().len(), 4);
    assert!(v["svg"].as_str().unwrap().contains("class=\"slot\""));
}

#[test]
fn errors_are_strings_not_panics() {
    assert!(navkit_wasm::api::run_scenario("not toml [").is_err());
    assert!(
        navkit_wasm::api::run_formation(NAV, 1).is_err(),
        "no [formation] section"
    );
}
