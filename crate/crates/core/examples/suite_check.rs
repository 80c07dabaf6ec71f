use navkit::scenario;
use navkit::sim::{run_with_controller, Terminal, BATCH_CONTROLLERS};
use std::time::Instant;

fn main() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map_or(false, |e| e == "toml"))
        .collect();
    files.sort();
    let t0 = Instant::now();
    let mut all_ok = true;
    for f in &files {
        let loaded = match scenario::load_path(&f) {
            Ok(l) => l,
            Err(e) => {
                println!(
                    "{:<24} PARSE ERROR: {e}",
                    f.file_stem().unwrap().to_string_lossy()
                );
                all_ok = false;
                continue;
            }
        };
        let Some(nav) = loaded.nav else {
            println!("{:<24} (no nav)", loaded.label);
            continue;
        };
        print!("{:<24}", loaded.label);
        for kind in BATCH_CONTROLLERS {
            match run_with_controller(&nav, kind) {
                Ok((_, m)) => {
                    let ok = m.terminal.reached() && m.min_clearance >= nav.environment.d_safe;
                    if !ok {
                        all_ok = false;
                    }
                    let sym = match (m.terminal, ok) {
                        (Terminal::TargetReached { t }, true) => {
                            format!("{}:{:>6.1}s c{:.2} OK ", kind.name(), t, m.min_clearance)
                        }
                        (Terminal::TargetReached { t }, false) => {
                            format!("{}:{:>6.1}s c{:.2} LOW", kind.name(), t, m.min_clearance)
                        }
                        (Terminal::Collision { t }, _) => {
                            format!("{}: CRASH@{:.0}s     ", kind.name(), t)
                        }
                        (Terminal::Timeout, _) => {
                            format!("{}: TIMEOUT c{:.2}  ", kind.name(), m.min_clearance)
                        }
                    };
                    print!(" | {sym}");
                }
                Err(e) => {
                    print!(" | {}: ERR {e}", kind.name());
                    all_ok = false;
                }
            }
        }
        println!();
    }
    println!("total {:.1}s  all_ok={all_ok}", t0.elapsed().as_secs_f64());
}
