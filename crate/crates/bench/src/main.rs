use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rankone::designs::write_design;
use rankone_bench::config::{ExperimentConfig, Kind};
use rankone_bench::design_report::{build_design, run_design_report, BuildMethod, BuildParams};
use rankone_bench::output::write_text;
use rankone_bench::verify::run_verify_suite;
use rankone_bench::{run_noise_sweep, run_phase_diagram, run_tomography, Result};

/// Low-rank recovery experiments from rank-one measurements.
#[derive(Parser)]
#[command(name = "r1", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Success rates over an (n, r, m) grid.
    Phase(RunArgs),
    /// Recovery error against noise level.
    Noise(RunArgs),
    /// Density-matrix recovery with the PSD program.
    Tomo(RunArgs),
    /// Build or certify weighted designs.
    #[command(subcommand)]
    Design(DesignCommand),
    /// Run every registered analysis check.
    Verify {
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// directory for <kind>.csv and <kind>_summary.json; stdout otherwise
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DesignCommand {
    /// Construct a weighted t-design and write it as JSON.
    Build {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        candidates: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// auto, moment_matching or phase_orbit
        #[arg(long, default_value = "auto")]
        method: BuildMethod,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report moment gaps and frame statistics of a design file.
    Certify {
        file: PathBuf,
        #[arg(long, visible_alias = "k", default_value_t = 4)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit_json(value: &impl serde::Serialize, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_experiment(args: &RunArgs, kind: Kind) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let output = match kind {
        Kind::PhaseDiagram => run_phase_diagram(&cfg)?,
        Kind::NoiseSweep => run_noise_sweep(&cfg)?,
        _ => run_tomography(&cfg)?,
    };
    let csv = output.to_csv()?;
    let summary = serde_json::to_string_pretty(&output.summary)? + "\n";
    match &args.out {
        Some(dir) => {
            let stem = serde_json::to_value(kind)?.as_str().unwrap_or("run").to_string();
            write_text(&dir.join(format!("{stem}.csv")), &csv)?;
            write_text(&dir.join(format!("{stem}_summary.json")), &summary)?;
            print!("{summary}");
        }
        None => {
            print!("{csv}");
            eprint!("{summary}");
        }
    }
    Ok(output.summary.all_pass)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Phase(a) => run_experiment(&a, Kind::PhaseDiagram),
        Command::Noise(a) => run_experiment(&a, Kind::NoiseSweep),
        Command::Tomo(a) => run_experiment(&a, Kind::Tomography),
        Command::Design(DesignCommand::Build {
            n,
            t,
            candidates,
            seed,
            tol,
            method,
            out,
        }) => {
            let (d, meta) = build_design(&BuildParams {
                n,
                t,
                candidates,
                seed,
                tol,
                method,
            })?;
            write_design(&out, &d, Some(meta))?;
            eprintln!("wrote {} vectors to {} (theta_inf {:e})", d.len(), out.display(), meta.theta_inf);
            Ok(true)
        }
        Command::Design(DesignCommand::Certify { file, k_max, out }) => {
            let report = run_design_report(&file, k_max)?;
            emit_json(&report, out.as_deref())?;
            Ok(report.all_pass)
        }
        Command::Verify { quick, seed, out } => {
            let mut cfg = ExperimentConfig::new(Kind::VerifySuite);
            cfg.quick = quick;
            cfg.seed = seed.unwrap_or(0);
            let report = run_verify_suite(&cfg)?;
            for f in report.failures() {
                eprintln!("FAIL {}: {} vs {}", f.quantity, f.estimate, f.bound);
            }
            emit_json(&report, out.as_deref())?;
            Ok(report.all_pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
