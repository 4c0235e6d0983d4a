use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fluxguide_cli::output::write_atomic;
use fluxguide_cli::{compare_report, run_scenario, Outcome, Scenario, Stage, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK};

#[derive(Parser)]
#[command(name = "fluxguide", version, about = "Flux-guided formation path planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the planners and write path.csv and metrics.json.
    Plan(ScenarioArgs),
    /// Parameterise and track the path planned earlier in the output directory.
    Simulate(ScenarioArgs),
    /// Plan, parameterise and simulate.
    Run(ScenarioArgs),
    /// Tabulate combined path lengths from metrics files.
    Report {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        /// Also write the table as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ScenarioArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn summary(o: &Outcome) -> String {
    let m = &o.metrics;
    let mut lines = vec![format!("outputs in {}", o.out_dir.display())];
    for (method, mm) in &m.per_method {
        let flag = if mm.converged { "" } else { " (not converged)" };
        lines.push(format!(
            "{method}: combined length {:.1} m, {} iterations{flag}",
            mm.combined_length_m.unwrap_or(f64::NAN),
            mm.iterations
        ));
    }
    if let (Some(v), Some(a), Some(e)) = (m.max_speed_mps, m.max_accel_mps2, m.max_tracking_error_m) {
        lines.push(format!("max speed {v:.2} m/s, max accel {a:.2} m/s^2, max tracking error {e:.3} m"));
    }
    lines.push(format!("wall time {:.2} s", o.wall_time_s));
    lines.join("\n")
}

fn run(cli: Cli) -> fluxguide_cli::Result<i32> {
    let (stage, args) = match cli.command {
        Command::Plan(a) => (Stage::Plan, a),
        Command::Simulate(a) => (Stage::Simulate, a),
        Command::Run(a) => (Stage::Run, a),
        Command::Report { metrics, out } => {
            let report = compare_report(&metrics)?;
            if !cli.quiet {
                print!("{}", report.to_text());
            }
            if let Some(out) = out {
                write_atomic(&out, &report.to_csv()?)?;
            }
            return Ok(EXIT_OK);
        }
    };
    let scenario = Scenario::load(&args.scenario)?;
    let outcome = run_scenario(&scenario, stage, args.out.as_deref())?;
    if !cli.quiet {
        println!("{}", summary(&outcome));
    }
    Ok(if outcome.converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
