//! Runs every command on a JSON config, as the `hamsfl` binary does.
//!
//! `cargo run --release --example run_config [configs/scalar_ramp.json]`

use hamsfl::cli::{execute, parse_config, render, Command};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/scalar_ramp.json").into());
    let text = std::fs::read_to_string(&path).expect("readable config");
    let cfg = parse_config(&text).unwrap_or_else(|e| panic!("{e}"));
    for cmd in [Command::Oracle, Command::Sfl, Command::Monodromy, Command::Certify] {
        match execute(cmd, &cfg) {
            Ok(out) => {
                println!("{cmd:?}: exit {}", out.exit_code());
                for c in &out.report.checks {
                    println!("  {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
                }
            }
            Err(e) => println!("{cmd:?}: exit {} ({e})", e.exit_code()),
        }
    }
    let out = execute(Command::Sfl, &cfg).unwrap();
    let json = render(&out.report, cfg.output.format).unwrap();
    println!("sfl report is {} bytes", json.len());
}
