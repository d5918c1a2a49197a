use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use orbifoldkit_core::analysis::InstanceSpec;
use orbifoldkit_core::cli::{self, CliError, EXIT_CHECK, EXIT_OK};
use orbifoldkit_core::orbifold::RamifiedPortrait;
use orbifoldkit_core::sweep::{run_sweep, PrecomposeTag, SweepConfig, SweepReport};

#[derive(Parser)]
#[command(name = "orbifoldkit", version, about = "Exact orbifold analysis of quotients of torus endomorphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full analysis of one instance.
    Analyze {
        spec: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Add wall-clock time to the report.
        #[arg(long)]
        timing: bool,
    },
    /// Quotient by H until the pair is pi-injective.
    Quotient {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Verify every instance of a parameter range.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = vec![2, 3, 4, 6])]
        orders: Vec<u32>,
        #[arg(long)]
        det_max: u64,
        #[arg(long)]
        entry_max: i64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![PrecomposeTag::Identity, PrecomposeTag::F])]
        precompose: Vec<PrecomposeTag>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Write summary and per-instance rows as JSON.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Ramification data of an abstract portrait.
    Portrait {
        portrait: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Schematic SVG of an instance.
    Figure {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn status(passed: bool) -> i32 {
    if passed {
        EXIT_OK
    } else {
        EXIT_CHECK
    }
}

fn print_table(report: &SweepReport) {
    let s = &report.summary;
    println!("instances      {}", s.instances);
    println!("failures       {}", s.failures);
    println!("pi-injective   {}", s.injective);
    println!("non-injective  {}", s.non_injective);
    println!("quotient steps {}", s.quotient_steps);
    for (sig, n) in &s.signatures {
        println!("signature {sig:<12} {n}");
    }
    for (name, n) in &s.failed_checks {
        println!("failed {name:<24} {n}");
    }
    for row in report.rows.iter().filter(|r| !r.passed) {
        println!(
            "FAIL n={} A={} b={} Q={}: {}",
            row.key.order,
            row.key.a,
            row.key.b,
            row.key.precompose,
            row.failed_checks.join(", ")
        );
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Analyze { spec, samples, seed, output, timing } => {
            let spec: InstanceSpec = cli::read_json(&spec)?;
            let start = Instant::now();
            let mut report = cli::run_analyze(&spec, samples, seed)?;
            if timing {
                report.timing_ms = Some(start.elapsed().as_millis());
            }
            cli::write_output(output.as_deref(), &cli::to_json(&report))?;
            for name in report.failed_checks() {
                eprintln!("check failed: {name}");
            }
            Ok(status(report.passed()))
        }
        Command::Quotient { spec, seed, output } => {
            let spec: InstanceSpec = cli::read_json(&spec)?;
            let report = cli::run_quotient(&spec, seed)?;
            cli::write_output(output.as_deref(), &cli::to_json(&report))?;
            Ok(status(report.passed()))
        }
        Command::Sweep { orders, det_max, entry_max, precompose, jobs, seed, samples, output } => {
            if det_max < 2 {
                return Err(CliError::Input("--det-max must be at least 2".into()));
            }
            if entry_max < 0 {
                return Err(CliError::Input("--entry-max must be nonnegative".into()));
            }
            let defaults = SweepConfig::default();
            let cfg = SweepConfig {
                orders,
                det_max,
                entry_max,
                precompose,
                seed: cli::resolve_seed(seed, None)?.unwrap_or(defaults.seed),
                samples: samples.unwrap_or(defaults.samples),
                jobs,
            };
            let report = run_sweep(&cfg).map_err(CliError::Input)?;
            print_table(&report);
            if let Some(path) = output {
                cli::write_output(Some(&path), &cli::to_json(&report))?;
            }
            Ok(status(report.passed()))
        }
        Command::Portrait { portrait, output } => {
            let portrait: RamifiedPortrait = cli::read_json(&portrait)?;
            let report = cli::run_portrait(&portrait)?;
            cli::write_output(output.as_deref(), &cli::to_json(&report))?;
            Ok(status(report.passed()))
        }
        Command::Figure { spec, output, seed } => {
            let spec: InstanceSpec = cli::read_json(&spec)?;
            let svg = cli::emit_figure(&spec, seed)?;
            cli::write_output(Some(&output), &svg)?;
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
