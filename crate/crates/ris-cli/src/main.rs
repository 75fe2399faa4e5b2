//! `ris`: run, sweep, inspect and verify repeated interaction scenarios.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use ris_core::par::{self, Execution};
use ris_core::scenario::{output, write_point, Scenario, ScenarioConfig};

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "RIS_OUT_DIR";
const DEFAULT_OUT: &str = "ris-out";

#[derive(Parser, Debug)]
#[command(name = "ris", version, about = "Repeated interaction systems with slowly varying probes")]
struct Cli {
    /// Output directory. Falls back to the config, then $RIS_OUT_DIR, then ./ris-out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads. 1 runs sequentially.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Seed for randomized norm estimates. Overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the first coupling at the first schedule length and write its ledger.
    Run { config: PathBuf },
    /// Run every (T, lambda) point and write ledgers plus a summary.
    Sweep { config: PathBuf },
    /// Spectral data of the one-step channel at a single s.
    Spectrum {
        config: PathBuf,
        #[arg(long)]
        s: f64,
    },
    /// Check channel, spectral and ledger invariants. Exits with 2 on failure.
    Verify { config: PathBuf },
}

impl Command {
    fn config(&self) -> &Path {
        match self {
            Command::Run { config } | Command::Sweep { config } | Command::Verify { config } => config,
            Command::Spectrum { config, .. } => config,
        }
    }
}

enum Outcome {
    Success,
    VerificationFailed,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let workers = cli.workers;
    match par::with_workers(workers, || execute(&cli)) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn out_dir(cli: &Cli, cfg: &ScenarioConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(|d| cfg.base_dir.join(d)))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn execute(cli: &Cli) -> ris_core::Result<Outcome> {
    let mut cfg = ScenarioConfig::from_path(cli.command.config())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let exec = if cli.workers == Some(1) { Execution::Sequential } else { Execution::Parallel };
    let out = out_dir(cli, &cfg);
    let svg = cfg.output.svg;
    let scenario = Scenario::new(cfg)?;

    match &cli.command {
        Command::Run { .. } => {
            let lambda = scenario.cfg.lambdas()[0];
            let t = scenario.cfg.t_list[0];
            let m = scenario.resolve_m(lambda, exec)?;
            let point = scenario.run_point(lambda, t, m, exec)?;
            let csv = write_point(&out, &point, svg)?;
            let l = &point.ledger;
            println!(
                "T={t} lambda={lambda} m={m} sigma_tot={:.6e} landauer_gap={:.6e} max_balance_residual={:.3e} ledger={}",
                l.sigma_tot,
                l.landauer_gap,
                l.max_balance_residual,
                out.join(csv).display()
            );
            if !l.complete {
                return Err(ris_core::Error::Precondition(l.error.clone().unwrap_or_else(|| "run stopped early".into())));
            }
        }
        Command::Sweep { .. } => {
            let result = scenario.sweep(exec, Some(&out))?;
            for row in &result.rows {
                println!(
                    "T={} lambda={} m={} sigma_tot={:.6e} max_adiabatic_error={} runtime_s={:.2}",
                    row.t,
                    row.lambda,
                    row.m,
                    row.sigma_tot,
                    row.max_adiabatic_error.map_or("n/a".into(), |e| format!("{e:.3e}")),
                    row.runtime_s
                );
            }
            info!("wrote {}", out.join("sweep.json").display());
        }
        Command::Spectrum { s, .. } => {
            let lambda = scenario.cfg.lambdas()[0];
            let report = scenario.spectrum(lambda, *s, exec)?;
            output::write_json(&out.join(format!("spectrum_s{s}.json")), &report)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Verify { .. } => {
            let report = scenario.verify(exec)?;
            output::write_json(&out.join("verify.json"), &report)?;
            for c in &report.checks {
                let status = if c.passed { "PASS" } else if c.required { "FAIL" } else { "WARN" };
                println!("{status} {} value={:.3e} threshold={:.3e}", c.name, c.value, c.threshold);
            }
            println!("x_verdict={:?} entropy_verdict={:?}", report.x_verdict, report.entropy_verdict);
            if !report.passed {
                return Ok(Outcome::VerificationFailed);
            }
        }
    }
    Ok(Outcome::Success)
}
