//! Report artifacts: assumption-check reports, trajectory CSV, SVG plots and
//! the human-readable metrics/batch summaries.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::math::Vec2;
use crate::sim::{BatchTable, FormationTick, Metrics, Terminal, TickRecord, BATCH_CONTROLLERS};
use crate::world::{Environment, MotionLaw, Shape};

/// One checked inequality: pass/fail plus the numeric margin
/// (left-hand side minus the bound; positive means satisfied).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
}

impl CheckItem {
    pub fn new(name: impl Into<String>, pass: bool, margin: f64) -> Self {
        CheckItem {
            name: name.into(),
            pass,
            margin,
        }
    }
}

/// Assumption-validator output for one controller configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub controller: String,
    pub items: Vec<CheckItem>,
    /// Conditions outside the checked inequalities (coverage caveats etc).
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn new(controller: &str) -> Self {
        ValidationReport {
            controller: controller.into(),
            ..Default::default()
        }
    }

    pub fn all_pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn render(&self) -> String {
        let mut out = format!("[{}] assumption checks\n", self.controller);
        for item in &self.items {
            out.push_str(&format!(
                "  {:<44} {}  margin {:+.4}\n",
                item.name,
                if item.pass { "pass" } else { "FAIL" },
                item.margin
            ));
        }
        for note in &self.notes {
            out.push_str(&format!("  note: {note}\n"));
        }
        out
    }
}

pub const CSV_HEADER: &str = "t,robot_id,x,y,theta,v,u,mode,clearance";

/// Render tick records as the trajectory CSV. Floats are written in Rust's
/// shortest exact decimal form, so parsing reproduces the logged values
/// bit for bit.
pub fn trajectory_csv(records: &[TickRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.robot,
            r.pose.x,
            r.pose.y,
            r.pose.theta,
            r.control.v,
            r.control.u,
            r.mode.as_str(),
            r.clearance
        );
    }
    out
}

/// Formation runs share the CSV schema; clearance is the nearest-robot gap.
pub fn formation_csv(records: &[FormationTick]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},formation,{}",
            r.t, r.robot, r.pose.x, r.pose.y, r.pose.theta, r.control.v, r.control.u, r.clearance
        );
    }
    out
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub robot: usize,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub u: f64,
    pub mode: String,
    pub clearance: f64,
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<CsvRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("bad CSV header: {other:?}")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(format!(
                "line {}: expected 9 fields, got {}",
                i + 2,
                fields.len()
            ));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", i + 2));
        rows.push(CsvRow {
            t: num(fields[0])?,
            robot: fields[1]
                .parse()
                .map_err(|e| format!("line {}: {e}", i + 2))?,
            x: num(fields[2])?,
            y: num(fields[3])?,
            theta: num(fields[4])?,
            v: num(fields[5])?,
            u: num(fields[6])?,
            mode: fields[7].to_string(),
            clearance: num(fields[8])?,
        });
    }
    Ok(rows)
}

/// Input to the SVG plotter.
pub struct SvgScene<'a> {
    pub environment: Option<&'a Environment>,
    /// (robot id, polyline) per robot.
    pub robot_paths: Vec<(usize, Vec<Vec2>)>,
    pub target: Option<Vec2>,
    pub slots: Vec<Vec2>,
    /// Time span used to sample moving-obstacle paths.
    pub duration: f64,
}

const ROBOT_COLORS: [&str; 6] = [
    "#1f77b4", "#2ca02c", "#9467bd", "#e377c2", "#17becf", "#bcbd22",
];

/// Render the scene: solid robot paths, obstacle outlines at start and end,
/// moving-obstacle reference paths dashed, the target as a cross marker.
pub fn render_svg(scene: &SvgScene) -> String {
    let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |p: Vec2, pad: f64| {
        min.x = min.x.min(p.x - pad);
        min.y = min.y.min(p.y - pad);
        max.x = max.x.max(p.x + pad);
        max.y = max.y.max(p.y + pad);
    };
    for (_, path) in &scene.robot_paths {
        for p in path {
            grow(*p, 0.5);
        }
    }
    if let Some(t) = scene.target {
        grow(t, 1.0);
    }
    for s in &scene.slots {
        grow(*s, 1.0);
    }
    if let Some(env) = scene.environment {
        for t in [0.0, scene.duration] {
            for placed in env.occupied_at(t) {
                for p in placed.shape.boundary_samples(16) {
                    grow(p, 0.5);
                }
            }
        }
    }
    if !min.x.is_finite() {
        min = Vec2::new(-1.0, -1.0);
        max = Vec2::new(1.0, 1.0);
    }
    let w = (max.x - min.x).max(1e-6);
    let h = (max.y - min.y).max(1e-6);
    let scale = 640.0 / w.max(h);
    let px = |p: Vec2| -> (f64, f64) {
        (
            ((p.x - min.x) * scale * 100.0).round() / 100.0,
            ((max.y - p.y) * scale * 100.0).round() / 100.0,
        )
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {:.2} {:.2}">"#,
        w * scale,
        h * scale
    );
    let _ = writeln!(
        svg,
        r##"<rect width="100%" height="100%" fill="#ffffff"/>"##
    );

    if let Some(env) = scene.environment {
        // Obstacle outlines at t = 0 (solid) and t = duration (faint).
        for (t, opacity) in [(0.0, 0.9), (scene.duration, 0.25)] {
            for placed in env.occupied_at(t) {
                svg.push_str(&shape_svg(&placed.shape, &px, opacity));
            }
        }
        // Dashed reference paths for moving obstacles.
        for ob in &env.obstacles {
            if matches!(ob.motion, MotionLaw::Static) {
                continue;
            }
            let steps = 64;
            let mut d = String::from("M");
            for i in 0..=steps {
                let t = scene.duration * i as f64 / steps as f64;
                let reference = match &ob.placed_at(t) {
                    Shape::Disc { center, .. } => *center,
                    Shape::ConvexPolygon { vertices } => {
                        let mut c = Vec2::ZERO;
                        for v in vertices {
                            c = c + *v;
                        }
                        c * (1.0 / vertices.len() as f64)
                    }
                    Shape::Chain { points, .. } => points[0],
                };
                let (x, y) = px(reference);
                let _ = write!(d, " {x} {y}");
                if i == 0 {
                    d.push_str(" L");
                }
            }
            let _ = writeln!(
                svg,
                r##"<path class="obstacle-path" d="{d}" fill="none" stroke="#555555" stroke-width="1.5" stroke-dasharray="6 4"/>"##
            );
        }
    }

    for s in &scene.slots {
        let (x, y) = px(*s);
        let _ = writeln!(
            svg,
            r##"<circle class="slot" cx="{x}" cy="{y}" r="5" fill="none" stroke="#d62728" stroke-width="1.5"/>"##
        );
    }

    for (idx, (robot, path)) in scene.robot_paths.iter().enumerate() {
        if path.is_empty() {
            continue;
        }
        let color = ROBOT_COLORS[idx % ROBOT_COLORS.len()];
        let mut d = String::from("M");
        for (i, p) in path.iter().enumerate() {
            let (x, y) = px(*p);
            let _ = write!(d, " {x} {y}");
            if i == 0 {
                d.push_str(" L");
            }
        }
        let _ = writeln!(
            svg,
            r#"<path class="robot" id="robot-{robot}" d="{d}" fill="none" stroke="{color}" stroke-width="2"/>"#
        );
        let (x0, y0) = px(path[0]);
        let _ = writeln!(svg, r#"<circle cx="{x0}" cy="{y0}" r="4" fill="{color}"/>"#);
    }

    if let Some(t) = scene.target {
        let (x, y) = px(t);
        let _ = writeln!(
            svg,
            r##"<g class="target" stroke="#d62728" stroke-width="2"><line x1="{}" y1="{y}" x2="{}" y2="{y}"/><line x1="{x}" y1="{}" x2="{x}" y2="{}"/></g>"##,
            x - 7.0,
            x + 7.0,
            y - 7.0,
            y + 7.0,
            x = x,
            y = y
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn shape_svg(shape: &Shape, px: &dyn Fn(Vec2) -> (f64, f64), opacity: f64) -> String {
    match shape {
        Shape::Disc { center, radius } => {
            let (x, y) = px(*center);
            let (x2, _) = px(*center + Vec2::new(*radius, 0.0));
            let r = (x2 - x).abs();
            format!(
                "<circle class=\"obstacle\" cx=\"{x}\" cy=\"{y}\" r=\"{r:.2}\" fill=\"#333333\" fill-opacity=\"{opacity}\"/>\n"
            )
        }
        Shape::ConvexPolygon { vertices } => {
            let pts: Vec<String> = vertices
                .iter()
                .map(|v| {
                    let (x, y) = px(*v);
                    format!("{x},{y}")
                })
                .collect();
            format!(
                "<polygon class=\"obstacle\" points=\"{}\" fill=\"#333333\" fill-opacity=\"{opacity}\"/>\n",
                pts.join(" ")
            )
        }
        Shape::Chain { points, half_width } => {
            let (x0, y0) = px(points[0]);
            let (xw, _) = px(points[0] + Vec2::new(*half_width, 0.0));
            let width = ((xw - x0).abs() * 2.0).max(1.0);
            let mut d = format!("M {x0} {y0} L");
            for p in &points[1..] {
                let (x, y) = px(*p);
                let _ = write!(d, " {x} {y}");
            }
            format!(
                "<path class=\"obstacle\" d=\"{d}\" fill=\"none\" stroke=\"#333333\" stroke-opacity=\"{opacity}\" stroke-width=\"{width:.2}\" stroke-linecap=\"round\" stroke-linejoin=\"round\"/>\n"
            )
        }
    }
}

/// Minimal well-formedness check used by the artifact tests: every opened tag
/// is closed in order.
pub fn svg_is_well_formed(svg: &str) -> bool {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = svg;
    while let Some(start) = rest.find('<') {
        rest = &rest[start + 1..];
        let Some(end) = rest.find('>') else {
            return false;
        };
        let tag = &rest[..end];
        rest = &rest[end + 1..];
        if tag.starts_with('?') || tag.starts_with('!') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name.trim() => {}
                _ => return false,
            }
        } else if !tag.ends_with('/') {
            let name: String = tag
                .split_whitespace()
                .next()
                .unwrap_or("")
                .chars()
                .collect();
            stack.push(name);
        }
    }
    stack.is_empty()
}

pub fn render_metrics(label: &str, controller: &str, m: &Metrics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {label}");
    let _ = writeln!(out, "controller: {controller}");
    let outcome = match m.terminal {
        Terminal::TargetReached { t } => format!("target reached at {t:.2} s"),
        Terminal::Collision { t } => format!("COLLISION at {t:.2} s"),
        Terminal::Timeout => "timeout".into(),
    };
    let _ = writeln!(out, "outcome: {outcome}");
    if let Some(t) = m.navigation_time {
        let _ = writeln!(out, "navigation_time_s: {t:.2}");
    }
    let _ = writeln!(out, "min_clearance_m: {:.4}", m.min_clearance);
    let _ = writeln!(out, "path_length_m: {:.3}", m.path_length);
    let _ = writeln!(out, "avoid_time_fraction: {:.3}", m.avoid_fraction);
    if let (Some(mean), Some(std)) = (m.avoiding_angle_mean, m.avoiding_angle_std) {
        let _ = writeln!(out, "avoiding_angle_mean_rad: {mean:.4}");
        let _ = writeln!(out, "avoiding_angle_std_rad: {std:.4}");
    }
    if let Some(e) = m.standoff_mean_abs_error {
        let _ = writeln!(out, "standoff_mean_abs_error_m: {e:.4}");
    }
    if m.blocked_ticks > 0 {
        let _ = writeln!(out, "blocked_ticks: {}", m.blocked_ticks);
    }
    out
}

pub fn render_compare(label: &str, results: &[(&str, &Metrics)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "comparison: {label}");
    let _ = writeln!(
        out,
        "{:<8} {:>14} {:>14} {:>12}",
        "law", "nav_time_s", "min_clear_m", "outcome"
    );
    for (name, m) in results {
        let time = m
            .navigation_time
            .map(|t| format!("{t:.2}"))
            .unwrap_or_else(|| "-".into());
        let outcome = match m.terminal {
            Terminal::TargetReached { .. } => "reached",
            Terminal::Collision { .. } => "collision",
            Terminal::Timeout => "timeout",
        };
        let _ = writeln!(
            out,
            "{name:<8} {time:>14} {:>14.4} {outcome:>12}",
            m.min_clearance
        );
    }
    if let Some((best, m)) = results
        .iter()
        .filter(|(_, m)| m.navigation_time.is_some())
        .min_by(|a, b| {
            a.1.navigation_time
                .unwrap()
                .total_cmp(&b.1.navigation_time.unwrap())
        })
    {
        let _ = writeln!(out, "best: {best} ({:.2} s)", m.navigation_time.unwrap());
    }
    out
}

pub fn render_batch(table: &BatchTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>10} {:>10} {:>10}  {:<10}",
        "run", "bina", "ena", "naier", "best"
    );
    for row in &table.rows {
        let cell = |t: Option<f64>, outcome: &Terminal| match (t, outcome) {
            (Some(t), _) => format!("{t:.1}"),
            (None, Terminal::Collision { .. }) => "collision".into(),
            (None, _) => "timeout".into(),
        };
        let best = row.best.map(|k| k.name()).unwrap_or("-");
        let _ = writeln!(
            out,
            "{:<12} {:>10} {:>10} {:>10}  {:<10}",
            format!("run {}", row.run + 1),
            cell(row.times[0], &row.outcomes[0]),
            cell(row.times[1], &row.outcomes[1]),
            cell(row.times[2], &row.outcomes[2]),
            best
        );
    }
    let total = table.rows.len().max(1);
    let _ = writeln!(out, "---");
    for (i, kind) in BATCH_CONTROLLERS.iter().enumerate() {
        let mean = table.means[i]
            .map(|m| format!("{m:.1}"))
            .unwrap_or_else(|| "-".into());
        let std = table.stds[i]
            .map(|s| format!("{s:.1}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<8} wins {:>3}/{} ({:>5.1}%)  mean {}  std {}",
            kind.name(),
            table.wins[i],
            total,
            100.0 * table.wins[i] as f64 / total as f64,
            mean,
            std
        );
    }
    out
}

/// Batch table as CSV.
pub fn batch_csv(table: &BatchTable) -> String {
    let mut out = String::from("run,bina_s,ena_s,naier_s,best\n");
    for row in &table.rows {
        let cell = |t: Option<f64>| t.map(|t| format!("{t}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.run + 1,
            cell(row.times[0]),
            cell(row.times[1]),
            cell(row.times[2]),
            row.best.map(|k| k.name()).unwrap_or("")
        );
    }
    out
}

/// Extract per-robot polylines from tick records.
pub fn robot_paths(records: &[TickRecord]) -> Vec<(usize, Vec<Vec2>)> {
    let mut map: std::collections::BTreeMap<usize, Vec<Vec2>> = Default::default();
    for r in records {
        map.entry(r.robot).or_default().push(r.pose.position());
    }
    map.into_iter().collect()
}

pub fn formation_paths(records: &[FormationTick]) -> Vec<(usize, Vec<Vec2>)> {
    let mut map: std::collections::BTreeMap<usize, Vec<Vec2>> = Default::default();
    for r in records {
        map.entry(r.robot).or_default().push(r.pose.position());
    }
    map.into_iter().collect()
}
