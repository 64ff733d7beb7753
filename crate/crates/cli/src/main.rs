use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use phononbus_cli::{config, run, CliError, RunOptions, Task};

/// Spin-phonon gate calculator.
#[derive(Debug, Parser)]
#[command(name = "phononbus", version, about)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Task to run; overrides `task` in the config.
    #[arg(long, value_enum)]
    task: Option<Task>,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    jobs: Option<usize>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match real_main(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phononbus: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn real_main(args: &Args) -> Result<(), CliError> {
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let scenario = config::load(&args.config)?;
    let opts = RunOptions {
        task: args.task,
        out_dir: args.out.clone(),
        tolerance: args.tolerance,
        base_dir: args.config.parent().map(PathBuf::from).unwrap_or_default(),
    };
    let report = run(&scenario, &opts)?;
    for note in &report.output.notes {
        eprintln!("note: {note}");
    }
    if report.task == Task::Validate {
        if let Some(t) = report.output.table("report.csv") {
            for r in &t.rows {
                println!("{:<16} {:<9} {}", r[0], r[1], r[2]);
            }
        }
    }
    for a in &report.manifest.artifacts {
        println!("{}/{} rows={} sha256={}", report.out_dir.display(), a.file, a.rows, a.sha256);
    }
    Ok(())
}
