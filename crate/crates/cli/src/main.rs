use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use abp_verify::run::Series;
use abp_verify::{catalog, load_config, run_config, svg, write_outputs, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abp-verify", version, about = "Numerical verification of ABP-type geometric inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for report.json, CSV tables and plots.
        #[arg(long, default_value = "abp-out")]
        out: PathBuf,
        /// Worker threads (defaults to the number of cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Overrides the config's global seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the available checks.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Render one series of an existing report as SVG.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        series: String,
        /// Defaults to `<series>.svg` next to the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// Like `println!`, but a closed pipe is not an error.
macro_rules! outln {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

const EXIT_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, jobs, seed } => run(&config, &out, jobs, seed),
        Command::List { json } => list(json),
        Command::Plot { report, series, out } => match plot(&report, &series, out) {
            Ok(path) => {
                outln!("wrote {}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_ERROR)
            }
        },
    }
}

fn run(config: &Path, out: &Path, jobs: Option<usize>, seed: Option<u64>) -> ExitCode {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let started = Instant::now();
    let report = run_config(&cfg, RunOptions { jobs, seed });
    let elapsed = started.elapsed();
    for s in &report.scenarios {
        let status = if s.passed { "PASS" } else { "FAIL" };
        outln!("{status}  {:<32} {:<26} {}", s.name, s.check, s.messages.join("; "));
    }
    if let Err(e) = write_outputs(&report, out) {
        eprintln!("error: writing {}: {e}", out.display());
        return ExitCode::from(EXIT_ERROR);
    }
    outln!(
        "{}/{} scenarios passed (seed {}, {:.2}s); outputs in {}",
        report.passed_count,
        report.scenario_count,
        report.seed,
        elapsed.as_secs_f64(),
        out.display()
    );
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn list(json: bool) -> ExitCode {
    let entries = catalog();
    if json {
        outln!("{}", serde_json::to_string_pretty(&entries).expect("catalog serialises"));
        return ExitCode::SUCCESS;
    }
    for e in entries {
        outln!("{}  [{}]", e.id, e.theorem);
        outln!("    {}", e.statement);
        outln!("    required: {}", if e.required.is_empty() { "-".into() } else { e.required.join(", ") });
        outln!("    optional: {}", e.optional.join(", "));
    }
    ExitCode::SUCCESS
}

fn plot(report: &Path, name: &str, out: Option<PathBuf>) -> Result<PathBuf, String> {
    let text = std::fs::read_to_string(report).map_err(|e| format!("{}: {e}", report.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", report.display()))?;
    let all: Vec<&serde_json::Value> = value["scenarios"]
        .as_array()
        .ok_or("report has no scenarios")?
        .iter()
        .filter_map(|s| s["series"].as_array())
        .flatten()
        .collect();
    let found = all
        .iter()
        .find(|s| s["name"] == name)
        .ok_or_else(|| {
            let names: Vec<&str> = all.iter().filter_map(|s| s["name"].as_str()).collect();
            format!("unknown series `{name}`; available: {}", names.join(", "))
        })?;
    let series: Series = serde_json::from_value((*found).clone()).map_err(|e| e.to_string())?;
    let path = out.unwrap_or_else(|| report.with_file_name(format!("{name}.svg")));
    std::fs::write(&path, svg::render(&series)).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(path)
}
