use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use triproj_cli::config::{validate_with, Overrides};
use triproj_cli::report::Record;
use triproj_cli::{run_experiment, EXIT_CONFIG};

/// Build the three-projection construction and write its certificates.
#[derive(Debug, Parser)]
#[command(name = "triproj", version)]
struct Args {
    /// TOML file with any of: stages, reserve, eps_scale, dimension_cap, output_dir, emit_trajectory, seed.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.jsonl and trajectory.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    stages: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    reserve: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    eps_scale: Option<f64>,
    #[arg(long)]
    emit_trajectory: bool,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let raw = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: config: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => String::new(),
    };
    let overrides = Overrides {
        stages: args.stages,
        reserve: args.reserve,
        eps_scale: args.eps_scale,
        output_dir: args.out,
        emit_trajectory: args.emit_trajectory,
    };
    let cfg = match validate_with(&raw, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: cannot write to {}: {e}", cfg.output_dir.display());
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if !args.quiet {
        for line in summarize(&outcome.records) {
            println!("{line}");
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}

/// One line per record kind: how many of its verdicts passed.
fn summarize(records: &[Record]) -> Vec<String> {
    let mut kinds: Vec<(&str, usize, usize)> = Vec::new();
    for r in records {
        let Some(pass) = r.pass() else { continue };
        match kinds.iter_mut().find(|(k, _, _)| *k == r.kind) {
            Some(entry) => {
                entry.1 += pass as usize;
                entry.2 += 1;
            }
            None => kinds.push((r.kind, pass as usize, 1)),
        }
    }
    let mut lines: Vec<String> =
        kinds.iter().map(|(k, ok, n)| format!("{} {k}: {ok}/{n}", if ok == n { "PASS" } else { "FAIL" })).collect();
    for r in records.iter().filter(|r| r.kind == "construction") {
        lines.push(r.to_json());
    }
    lines.push(format!("overall: {}", if records.iter().all(|r| r.pass() != Some(false)) { "pass" } else { "fail" }));
    lines
}
