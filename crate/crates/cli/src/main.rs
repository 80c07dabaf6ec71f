//! navkit: scenario runner for the reactive-navigation and formation library.
//!
//! Exit codes: 0 tool success, 1 usage or scenario-parse error, 2 internal
//! error. Physics outcomes (collision, timeout) are reported in the metrics,
//! not through the exit code.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use navkit::report::{self, SvgScene};
use navkit::scenario::{self, Loaded};
use navkit::sim::{
    self, run_batch, run_formation_escalating, run_with_controller, ControllerKind, Scenario,
    BATCH_CONTROLLERS,
};

#[derive(Parser)]
#[command(
    name = "navkit",
    version,
    about = "Reactive navigation and formation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the control period T_s (seconds).
    #[arg(long)]
    ts: Option<f64>,
    /// Write only the SVG plot (plus the report).
    #[arg(long)]
    svg: bool,
    /// Write only the trajectory CSV (plus the report).
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's configured controller and write the artifacts.
    Run(CommonArgs),
    /// Run all three controllers on the identical world and compare times.
    Compare(CommonArgs),
    /// Run the randomized comparison batch described by the `[batch]` section.
    Batch(CommonArgs),
    /// Check every applicable theorem assumption and print the margins.
    Validate(CommonArgs),
    /// Run the multi-robot formation protocol described by the `[formation]` section.
    Formation(CommonArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version output is not an error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (common, run): (&CommonArgs, fn(&CommonArgs, Loaded) -> Result<()>) = match &cli.command {
        Command::Run(a) => (a, cmd_run),
        Command::Compare(a) => (a, cmd_compare),
        Command::Batch(a) => (a, cmd_batch),
        Command::Validate(a) => (a, cmd_validate),
        Command::Formation(a) => (a, cmd_formation),
    };
    let loaded = match load(common) {
        Ok(loaded) => loaded,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match run(common, loaded) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(args: &CommonArgs) -> Result<Loaded> {
    let mut loaded = scenario::load_path(&args.scenario)
        .with_context(|| format!("loading {}", args.scenario.display()))?;
    if let Some(nav) = &mut loaded.nav {
        if let Some(seed) = args.seed {
            nav.seed = seed;
        }
        if let Some(ts) = args.ts {
            nav.control_period = ts;
        }
    }
    if let Some(f) = &mut loaded.formation {
        if let Some(seed) = args.seed {
            f.seed = seed;
        }
        if let Some(ts) = args.ts {
            f.control_period = ts;
        }
    }
    Ok(loaded)
}

fn want(args: &CommonArgs) -> (bool, bool) {
    // Default: both artifacts. Passing --svg/--csv narrows the selection.
    if args.svg || args.csv {
        (args.csv, args.svg)
    } else {
        (true, true)
    }
}

fn outdir(args: &CommonArgs) -> Result<&Path> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    Ok(&args.out)
}

fn nav_scenario(loaded: &Loaded) -> Result<&Scenario> {
    loaded
        .nav
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("scenario has no [robot]/[target] run configuration"))
}

#[allow(clippy::too_many_arguments)]
fn write_run_artifacts(
    dir: &Path,
    stem: &str,
    scenario: &Scenario,
    log: &sim::RunLog,
    metrics: &sim::Metrics,
    controller: &str,
    want_csv: bool,
    want_svg: bool,
) -> Result<()> {
    let mut report_text = report::render_metrics(&scenario.label, controller, metrics);
    for v in &log.validations {
        if !v.all_pass() {
            report_text.push_str("warning: assumption checks failed\n");
        }
        report_text.push_str(&v.render());
    }
    std::fs::write(dir.join(format!("{stem}_metrics.txt")), &report_text)?;
    if want_csv {
        std::fs::write(
            dir.join(format!("{stem}.csv")),
            report::trajectory_csv(&log.records),
        )?;
    }
    if want_svg {
        let scene = SvgScene {
            environment: Some(&scenario.environment),
            robot_paths: report::robot_paths(&log.records),
            target: Some(scenario.target),
            slots: vec![],
            duration: log.records.last().map(|r| r.t).unwrap_or(scenario.duration),
        };
        std::fs::write(dir.join(format!("{stem}.svg")), report::render_svg(&scene))?;
    }
    Ok(())
}

fn cmd_run(args: &CommonArgs, loaded: Loaded) -> Result<()> {
    let scenario = nav_scenario(&loaded)?;
    let (want_csv, want_svg) = want(args);
    let dir = outdir(args)?;
    let (log, metrics) = sim::run(scenario).context("run failed")?;
    let controller = scenario.robot.controller.name();
    write_run_artifacts(
        dir,
        &loaded.label,
        scenario,
        &log,
        &metrics,
        controller,
        want_csv,
        want_svg,
    )?;
    print!(
        "{}",
        report::render_metrics(&scenario.label, controller, &metrics)
    );
    for v in &log.validations {
        if !v.all_pass() {
            println!("warning: assumption checks failed (see metrics report)");
        }
    }
    println!("artifacts written to {}", dir.display());
    Ok(())
}

fn cmd_compare(args: &CommonArgs, loaded: Loaded) -> Result<()> {
    let scenario = nav_scenario(&loaded)?;
    let (want_csv, want_svg) = want(args);
    let dir = outdir(args)?;
    let mut results = Vec::new();
    for kind in BATCH_CONTROLLERS {
        let mut variant = scenario.clone();
        // The sector controller compares in its target-reaching variant.
        variant.robot.naier_target_reaching = true;
        match run_with_controller(&variant, kind) {
            Ok((log, metrics)) => {
                write_run_artifacts(
                    dir,
                    &format!("{}_{}", loaded.label, kind.name()),
                    scenario,
                    &log,
                    &metrics,
                    kind.name(),
                    want_csv,
                    want_svg,
                )?;
                results.push((kind.name(), metrics));
            }
            Err(e) => eprintln!("{}: hard failure: {e}", kind.name()),
        }
    }
    let borrowed: Vec<(&str, &sim::Metrics)> = results.iter().map(|(n, m)| (*n, m)).collect();
    let text = report::render_compare(&loaded.label, &borrowed);
    std::fs::write(dir.join(format!("{}_compare.txt", loaded.label)), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_batch(args: &CommonArgs, loaded: Loaded) -> Result<()> {
    let scenario = nav_scenario(&loaded)?;
    let batch = loaded
        .batch
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("scenario has no [batch] section"))?;
    let dir = outdir(args)?;
    let table = run_batch(scenario, batch, args.seed.unwrap_or(scenario.seed));
    let text = report::render_batch(&table);
    std::fs::write(dir.join(format!("{}_batch.txt", loaded.label)), &text)?;
    std::fs::write(
        dir.join(format!("{}_batch.csv", loaded.label)),
        report::batch_csv(&table),
    )?;
    print!("{text}");
    Ok(())
}

fn cmd_validate(args: &CommonArgs, loaded: Loaded) -> Result<()> {
    let mut printed = false;
    if let Some(scenario) = &loaded.nav {
        for kind in [ControllerKind::Bina, ControllerKind::Naier] {
            for v in sim::validate_scenario(scenario, kind) {
                print!("{}", v.render());
                printed = true;
            }
        }
    }
    if let Some(f) = &loaded.formation {
        print!("{}", f.config.validate(&f.limits).render());
        printed = true;
    }
    if !printed {
        println!("no applicable assumption checks (no bina/naier params, no formation)");
    }
    let _ = args;
    Ok(())
}

fn cmd_formation(args: &CommonArgs, loaded: Loaded) -> Result<()> {
    let f = loaded
        .formation
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("scenario has no [formation] section"))?;
    let (want_csv, want_svg) = want(args);
    let dir = outdir(args)?;
    let log = run_formation_escalating(f, 3);

    let mut text = String::new();
    text.push_str(&f.config.validate(&f.limits).render());
    text.push_str(&match log.converged_at {
        Some(t) => format!("converged at {t:.1} s\n"),
        None => "did not converge within the horizon\n".to_string(),
    });
    if f.anonymous {
        text.push_str("assignment trace (round: indices, 1-based):\n");
        for (round, assignment) in &log.assignment_trace {
            let pretty: Vec<String> = assignment.iter().map(|a| (a + 1).to_string()).collect();
            text.push_str(&format!("  round {:>3}: [{}]\n", round, pretty.join(", ")));
        }
    }
    text.push_str("final pair errors (dx, dy) per consecutive pair:\n");
    for (i, (ex, ey)) in log.pair_errors.iter().enumerate() {
        let j = (i + 1) % log.pair_errors.len();
        text.push_str(&format!(
            "  pair {}-{}: ({ex:+.4}, {ey:+.4})\n",
            i + 1,
            j + 1
        ));
    }
    std::fs::write(dir.join(format!("{}_formation.txt", loaded.label)), &text)?;

    if want_csv {
        std::fs::write(
            dir.join(format!("{}.csv", loaded.label)),
            report::formation_csv(&log.records),
        )?;
    }
    if want_svg {
        let scene = SvgScene {
            environment: None,
            robot_paths: report::formation_paths(&log.records),
            target: None,
            slots: f.config.slots.clone(),
            duration: f.duration,
        };
        std::fs::write(
            dir.join(format!("{}.svg", loaded.label)),
            report::render_svg(&scene),
        )?;
    }
    print!("{text}");
    println!("artifacts written to {}", dir.display());
    Ok(())
}
