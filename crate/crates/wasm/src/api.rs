//! Target-independent implementations of the demo operations. The
//! wasm-bindgen wrappers in the crate root convert the error strings to
//! JavaScript values; these functions are testable on any target.

use navkit::report::{self, SvgScene};
use navkit::scenario;
use navkit::sim::{self, run_with_controller, ControllerKind, Terminal, BATCH_CONTROLLERS};

fn terminal_label(t: &Terminal) -> String {
    match t {
        Terminal::TargetReached { t } => format!("target reached at {t:.1} s"),
        Terminal::Collision { t } => format!("collision at {t:.1} s"),
        Terminal::Timeout => "timeout".into(),
    }
}

fn run_to_json(nav: &sim::Scenario, kind: ControllerKind) -> Result<serde_json::Value, String> {
    let (log, metrics) = run_with_controller(nav, kind).map_err(|e| e.to_string())?;
    let scene = SvgScene {
        environment: Some(&nav.environment),
        robot_paths: report::robot_paths(&log.records),
        target: Some(nav.target),
        slots: vec![],
        duration: log.records.last().map(|r| r.t).unwrap_or(nav.duration),
    };
    Ok(serde_json::json!({
        "controller": kind.name(),
        "outcome": terminal_label(&metrics.terminal),
        "navigation_time": metrics.navigation_time,
        "min_clearance": metrics.min_clearance,
        "path_length": metrics.path_length,
        "avoid_fraction": metrics.avoid_fraction,
        "svg": report::render_svg(&scene),
    }))
}

/// Run the scenario's configured controller; JSON out with an `svg` plot.
pub fn run_scenario(toml_text: &str) -> Result<String, String> {
    let loaded = scenario::load_str(toml_text, Some("web")).map_err(|e| e.to_string())?;
    let nav = loaded
        .nav
        .ok_or("scenario has no [robot]/[target] sections")?;
    Ok(run_to_json(&nav, nav.robot.controller)?.to_string())
}

/// Run all three avoidance laws on the identical world; JSON array out.
pub fn compare_controllers(toml_text: &str) -> Result<String, String> {
    let loaded = scenario::load_str(toml_text, Some("web")).map_err(|e| e.to_string())?;
    let mut nav = loaded
        .nav
        .ok_or("scenario has no [robot]/[target] sections")?;
    nav.robot.naier_target_reaching = true;
    let mut rows = Vec::new();
    for kind in BATCH_CONTROLLERS {
        rows.push(run_to_json(&nav, kind)?);
    }
    Ok(serde_json::Value::Array(rows).to_string())
}

/// Run the formation protocol with an explicit seed; JSON out with the
/// trajectory SVG, convergence time, pair errors and assignment trace.
pub fn run_formation(toml_text: &str, seed: u64) -> Result<String, String> {
    let loaded = scenario::load_str(toml_text, Some("web")).map_err(|e| e.to_string())?;
    let mut spec = loaded
        .formation
        .ok_or("scenario has no [formation] section")?;
    spec.seed = seed;
    let log = sim::run_formation_escalating(&spec, 3);
    let scene = SvgScene {
        environment: None,
        robot_paths: report::formation_paths(&log.records),
        target: None,
        slots: spec.config.slots.clone(),
        duration: spec.duration,
    };
    let trace: Vec<serde_json::Value> = log
        .assignment_trace
        .iter()
        .map(|(round, a)| {
            serde_json::json!({
                "round": round,
                "indices": a.iter().map(|i| i + 1).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(serde_json::json!({
        "converged_at": log.converged_at,
        "pair_errors": log.pair_errors,
        "assignment_trace": trace,
        "svg": report::render_svg(&scene),
    })
    .to_string())
}
