use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use resolvent_lab::config::{ConfigFile, ExperimentId};
use resolvent_lab::error::{CliError, Result};
use resolvent_lab::report::Report;
use resolvent_lab::suite::{run_suite, SuiteOptions, DEFAULT_SEED};
use resolvent_lab::{init_threads, plot, run_experiment, RunContext};

#[derive(Parser)]
#[command(
    name = "resolvent-lab",
    version,
    about = "Numerical experiments on free and perturbed resolvents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        allow_wraparound: bool,
    },
    /// Run the acceptance checks and print a pass/fail table.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        filter: Option<String>,
        #[arg(long)]
        allow_wraparound: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Draw the series of a report as a log-log SVG chart.
    Plot { report: PathBuf, out: PathBuf },
}

fn run(config: &Path, allow_flag: bool) -> Result<i32> {
    let cfg = ConfigFile::load(config)?;
    let root = cfg.without(&[]);
    let id: ExperimentId = match cfg.get("experiment") {
        Some(toml::Value::String(s)) => s.parse()?,
        Some(_) => return Err(CliError::Config("experiment must be a string".into())),
        None => return Err(CliError::Config("missing key 'experiment'".into())),
    };
    let seed = root.u64("seed", DEFAULT_SEED)?;
    let allow = root.bool("allow_wraparound", false)? || allow_flag;
    let output = PathBuf::from(root.string("output", &format!("results/{id}"))?);
    let params = cfg.without(&["experiment", "seed", "allow_wraparound", "output"]);
    let ctx = RunContext {
        seed,
        allow_wraparound: allow,
        criteria: None,
    };
    let report = run_experiment(id, &params, &ctx)?;
    report.write(&output)?;
    for v in &report.verdicts {
        println!(
            "{} {} {}: {:.6e} ({})",
            v.criterion,
            if v.passed { "ok  " } else { "FAIL" },
            v.check,
            v.measured,
            v.bound_text()
        );
    }
    println!(
        "wrote {} ({:.1} s)",
        output.display(),
        report.total_seconds()
    );
    Ok(0)
}

fn verify(
    config: Option<&Path>,
    filter: Option<String>,
    allow: bool,
    output: Option<PathBuf>,
) -> Result<i32> {
    let cfg = match config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::empty(),
    };
    let opts = SuiteOptions {
        filter,
        allow_wraparound: allow,
        output,
    };
    let (summary, dir) = run_suite(&cfg, &opts, |m| eprintln!("{m}"))?;
    print!("{}", summary.table());
    let total: f64 = summary.seconds.iter().map(|s| s.1).sum();
    println!(
        "summary written to {} ({total:.1} s)",
        dir.join("summary.json").display()
    );
    Ok(if summary.passed() { 0 } else { 1 })
}

fn plot_cmd(report: &Path, out: &Path) -> Result<i32> {
    let r = Report::read(report)?;
    plot::emit_report_plot(&r, out)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = init_threads().and_then(|_| match cli.command {
        Command::Run {
            config,
            allow_wraparound,
        } => run(&config, allow_wraparound),
        Command::Verify {
            config,
            filter,
            allow_wraparound,
            output,
        } => verify(config.as_deref(), filter, allow_wraparound, output),
        Command::Plot { report, out } => plot_cmd(&report, &out),
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
