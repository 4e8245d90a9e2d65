use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use surfhj_cli::report::{write_outputs, Relation, RunReport, Status, Timing};
use surfhj_cli::scenario::{ConfigError, Operation, Overrides, Scenario};

#[derive(Parser)]
#[command(name = "surfhj", version, about = "Scenario runner for the surface Hamilton-Jacobi verification suite")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; defaults to the scenario's `out`, then `out/<name>`.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Nodes on the curve, K.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Number of refinement levels, doubling from the coarsest.
    #[arg(long, global = true)]
    levels: Option<usize>,
    /// Parallel node sweeps inside a check.
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Verify an identity or equation of the theory.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Run a solver and export its output.
    Run {
        #[command(subcommand)]
        what: Run,
    },
    /// Convergence sweep described by a scenario file.
    Sweep { scenario: Option<PathBuf> },
}

#[derive(Subcommand, Clone, Copy)]
enum Verify {
    Legendre,
    ActionVariation,
    Hj,
    Cauchy,
    Quasiclassics,
}

#[derive(Subcommand, Clone, Copy)]
enum Run {
    Characteristics,
    Field,
}

fn operation(cmd: &Command) -> Operation {
    match cmd {
        Command::Verify { what } => match what {
            Verify::Legendre => Operation::VerifyLegendre,
            Verify::ActionVariation => Operation::VerifyActionVariation,
            Verify::Hj => Operation::VerifyHj,
            Verify::Cauchy => Operation::VerifyCauchy,
            Verify::Quasiclassics => Operation::VerifyQuasiclassics,
        },
        Command::Run { what } => match what {
            Run::Characteristics => Operation::RunCharacteristics,
            Run::Field => Operation::RunField,
        },
        Command::Sweep { .. } => Operation::Sweep,
    }
}

fn load(cli: &Cli) -> Result<Scenario, ConfigError> {
    let op = operation(&cli.command);
    let path = match &cli.command {
        Command::Sweep { scenario } => scenario.clone().or_else(|| cli.flags.config.clone()),
        _ => cli.flags.config.clone(),
    };
    let mut sc = match &path {
        Some(p) => Scenario::load(p)?,
        None if op == Operation::Sweep => return Err(ConfigError("sweep needs a scenario file".into())),
        None => Scenario::default_for(op),
    };
    if sc.operation != op {
        return Err(ConfigError(format!(
            "scenario {:?} is a {} scenario, not {}",
            sc.name,
            sc.operation.label(),
            op.label()
        )));
    }
    let f = &cli.flags;
    sc.apply(&Overrides { seed: f.seed, grid: f.grid, levels: f.levels, out: f.out.clone(), parallel: f.parallel });
    sc.validate()?;
    Ok(sc)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sc = match load(&cli) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
    let clock = Instant::now();
    let outcome = match surfhj_cli::ops::run(&sc) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{}: {e:#}", sc.name);
            return ExitCode::from(1);
        }
    };
    let timing = Timing { started_unix_ms, wall_clock_s: clock.elapsed().as_secs_f64() };
    let report = RunReport::new(&sc, &outcome, timing);
    let dir = PathBuf::from(sc.out.clone().unwrap_or_else(|| format!("out/{}", sc.name)));
    if let Err(e) = write_outputs(&dir, &report, &outcome.artifacts) {
        eprintln!("writing {}: {e:#}", dir.display());
        return ExitCode::from(1);
    }
    for c in &report.checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Floor => "FLOOR",
            Status::Error => "ERROR",
        };
        let value = c.value.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"));
        let bound = match c.relation {
            Relation::Below => format!("< {:e}", c.threshold),
            Relation::AtLeast => format!(">= {:e}", c.threshold),
            Relation::Within { target } => format!("{target} ± {}", c.threshold),
        };
        println!("{status:5} {:<10} {:<40} {value:>10}  {bound}", c.eq, c.name);
    }
    println!(
        "{}: {} in {:.2} s -> {}",
        sc.name,
        if report.pass { "pass" } else { "FAIL" },
        report.timing.wall_clock_s,
        dir.display()
    );
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
