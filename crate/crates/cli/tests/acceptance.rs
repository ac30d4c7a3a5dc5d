//! Runs the full default suite and prints one line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use resolvent_lab::suite::{run_suite, SuiteOptions};
use resolvent_lab::ConfigFile;

fn main() -> ExitCode {
    let out = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let opts = SuiteOptions {
        filter: None,
        allow_wraparound: false,
        output: Some(out),
    };
    let start = Instant::now();
    let summary = match run_suite(&ConfigFile::empty(), &opts, |m| eprintln!("  {m}")) {
        Ok((s, _)) => s,
        Err(e) => {
            println!("acceptance suite could not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    for c in &summary.criteria {
        let detail: Vec<String> = c
            .checks
            .iter()
            .map(|v| format!("{} = {:.4e} {}", v.check, v.measured, v.bound_text()))
            .chain(c.errors.iter().cloned())
            .collect();
        println!(
            "{} {}: {} [{}]",
            if c.passed { "PASS" } else { "FAIL" },
            c.criterion,
            c.title,
            detail.join("; ")
        );
    }
    println!("suite time {:.1} s", start.elapsed().as_secs_f64());
    if summary.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
