use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde_json::json;

use edgesim::metrics::{compare, read_summary_json};
use edgesim::runner::{
    load_scenario, preset, run_experiment, sweep, write_bundle, Architecture, RunnerError,
};

#[derive(Parser)]
#[command(
    name = "edgesim",
    version,
    about = "Cloud-edge 5G core placement simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its result bundle.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write trace.jsonl.
        #[arg(long)]
        trace: bool,
    },
    /// Run a scenario once per value of a numeric field.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Dotted path into the resolved scenario, e.g. latency.dc_cloudlet.
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ratio report of candidate bundles against a baseline bundle.
    Compare {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        candidate: Vec<PathBuf>,
    },
    /// Print the architecture presets.
    Presets,
}

fn default_out(scenario_out: &Option<String>, name: &str) -> PathBuf {
    scenario_out
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new("out").join(name))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            trace,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let bundle = run_experiment(&s, trace)?;
            let dir = out.unwrap_or_else(|| default_out(&s.output, &s.name));
            write_bundle(&bundle, &dir)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "out": dir,
                    "summaries": bundle.summaries,
                }))?
            );
        }
        Command::Sweep {
            scenario,
            param,
            values,
            out,
        } => {
            let s = load_scenario(&scenario)?;
            let result = sweep(&s, &param, &values)?;
            let dir = out.unwrap_or_else(|| default_out(&s.output, &format!("{}-sweep", s.name)));
            for (point, bundle) in result.report.points.iter().zip(&result.bundles) {
                write_bundle(bundle, &dir.join(format!("{param}={}", point.value)))?;
            }
            let report = serde_json::to_string_pretty(&result.report)?;
            std::fs::write(dir.join("sweep.json"), format!("{report}\n"))
                .with_context(|| format!("writing {}", dir.display()))?;
            println!("{report}");
        }
        Command::Compare {
            baseline,
            candidate,
        } => {
            let read = |dir: &Path| -> anyhow::Result<_> {
                let p = dir.join("summary.json");
                let f =
                    std::fs::File::open(&p).with_context(|| format!("opening {}", p.display()))?;
                Ok(read_summary_json(f)?)
            };
            let base = read(&baseline)?;
            let mut rows = Vec::new();
            for dir in &candidate {
                rows.extend(compare(&base, &read(dir)?)?);
            }
            println!("{}", serde_json::to_string_pretty(&rows)?);
        }
        Command::Presets => {
            println!(
                "{:<10} {:>6} {:>6} {:>6} {:>6} {:>12}",
                "preset", "N2", "N3", "N4", "N6", "DC-Cloudlet"
            );
            for arch in Architecture::PRESETS {
                let l = preset(arch).expect("preset").latency;
                println!(
                    "{:<10} {:>6} {:>6} {:>6} {:>6} {:>12}",
                    arch.as_str(),
                    l.n2,
                    l.n3,
                    l.n4,
                    l.n6,
                    l.dc_cloudlet
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = match e.downcast_ref::<RunnerError>() {
                Some(r) => json!({"error": r.kind(), "path": r.path(), "message": r.to_string()}),
                None => json!({"error": "other", "path": null, "message": format!("{e:#}")}),
            };
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
