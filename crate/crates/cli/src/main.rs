use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hyperfront_cli::output::write_timeseries;
use hyperfront_cli::run::run;
use hyperfront_cli::scenario::{load_scenario, piston_offset, Physics};
use rayon::prelude::*;

#[derive(Debug, Parser)]
#[command(name = "hyperfront", version, about = "Run free-boundary hyperbolic scenarios from TOML files")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Scenario file to run.
    scenario: Option<PathBuf>,
    /// Output directory; each run writes `<stem>.csv` and `<stem>.json` there.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Refuse initial data whose corner compatibility residual exceeds 1e-6.
    #[arg(long)]
    strict_compat: bool,
    /// Seed recorded in the run metadata. The solvers are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run several scenarios in parallel, writing `<stem>.csv` into a directory.
    Batch {
        scenarios: Vec<PathBuf>,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        strict_compat: bool,
    },
}

fn output_path(dir: &Path, scenario: &Path) -> PathBuf {
    let stem = scenario.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    dir.join(format!("{stem}.csv"))
}

/// Exit status for invalid input; run outcomes use their own codes.
const INPUT_ERROR: u8 = 1;

fn run_one(path: &Path, out: &Path, strict: bool, seed: Option<u64>) -> Result<i32, String> {
    let mut text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if strict {
        text = force_strict(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let scenario = load_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Physics::Piston(p) = &scenario.physics {
        println!("{}: equilibrium offset x_eq - l0 = {:.12e}", path.display(), piston_offset(p));
    }
    let mut record = run(&scenario);
    if let Some(seed) = seed {
        record.summary.insert("seed".into(), seed as f64);
    }
    write_timeseries(&record, out).map_err(|e| e.to_string())?;
    for d in &record.diagnostics {
        eprintln!("{}: t = {:.6e}: {}", path.display(), d.t, d.message);
    }
    Ok(record.outcome.exit_code())
}

/// Turn on strict compatibility in the scenario text itself.
fn force_strict(text: &str) -> Result<String, String> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    let numerics = doc.entry("numerics").or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match numerics {
        toml::Value::Table(t) => {
            t.insert("strict_compat".into(), toml::Value::Boolean(true));
        }
        _ => return Err("[numerics] must be a table".into()),
    }
    toml::to_string(&doc).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match (cli.command, cli.scenario) {
        (Some(Command::Batch { scenarios, out, strict_compat }), _) => {
            let codes: Vec<i32> = scenarios
                .par_iter()
                .map(|path| {
                    run_one(path, &output_path(&out, path), strict_compat, cli.seed).unwrap_or_else(|e| {
                        eprintln!("error: {e}");
                        i32::from(INPUT_ERROR)
                    })
                })
                .collect();
            codes.into_iter().max().unwrap_or(0)
        }
        (None, Some(path)) => {
            run_one(&path, &output_path(&cli.out, &path), cli.strict_compat, cli.seed).unwrap_or_else(|e| {
                eprintln!("error: {e}");
                i32::from(INPUT_ERROR)
            })
        }
        (None, None) => {
            eprintln!("error: no scenario given (see --help)");
            i32::from(INPUT_ERROR)
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(INPUT_ERROR))
}
