//! `jrc`: command-line driver for the simulator's experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nearfield_jrc::experiments::config::w_to_dbm;
use nearfield_jrc::experiments::sweeps::{
    detection_table, optimum_table, run_detection_sweep, run_optimize, run_scnr_sweep, run_tradeoff, validate_detection,
};
use nearfield_jrc::experiments::{emit_outputs, load_scenario, OutputFormat, ScenarioConfig, Table};
use nearfield_jrc::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "jrc", version, about = "Near-field joint radar and communication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Average SCNR against transmit power for each array size, carrier and
    /// clutter level, plus the per-cell summary table.
    ScnrSweep(Common),
    /// Analytic and simulated false-alarm and detection probabilities over
    /// the threshold grid.
    DetectionSweep(Common),
    /// Best rate and detection per power level and the least-power feasible
    /// point.
    Tradeoff(Common),
    /// Least total power meeting the rate, false-alarm and detection targets.
    Optimize(Common),
    /// Agreement of analytic probabilities with simulation.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per hypothesis.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

impl Common {
    fn resolve(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => load_scenario(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.detection.trials = trials;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Serialization(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

fn emit(cfg: &ScenarioConfig, common: &Common, command: &str, tables: Vec<Table>) -> Result<(), Error> {
    let hash = cfg.hash();
    let tables: Vec<Table> = tables.into_iter().map(|t| t.with_provenance(cfg.seed, &hash)).collect();
    let config = serde_json::to_value(cfg).map_err(|e| Error::Serialization(e.to_string()))?;
    for path in emit_outputs(
        &tables,
        common.format,
        &cfg.output_dir,
        command,
        cfg.seed,
        &hash,
        config,
    )? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Runs one subcommand; `Ok(false)` means the optimisation was infeasible.
fn run(command: &Command) -> Result<bool, Error> {
    let (name, common) = match command {
        Command::ScnrSweep(c) => ("scnr-sweep", c),
        Command::DetectionSweep(c) => ("detection-sweep", c),
        Command::Tradeoff(c) => ("tradeoff", c),
        Command::Optimize(c) => ("optimize", c),
        Command::Validate(c) => ("validate", c),
    };
    let cfg = common.resolve()?;
    let mut feasible = true;
    let tables = match command {
        Command::ScnrSweep(_) => run_scnr_sweep(&cfg)?.tables(),
        Command::DetectionSweep(_) => vec![detection_table(&run_detection_sweep(&cfg)?)],
        Command::Tradeoff(_) => {
            let run = run_tradeoff(&cfg)?;
            feasible = run.optimum.feasible;
            match run.marked() {
                Some(m) => println!("first feasible grid power: {:.2} dBm", w_to_dbm(m.summary.power)),
                None => println!("no feasible grid power"),
            }
            run.tables()
        }
        Command::Optimize(_) => {
            let o = run_optimize(&cfg)?;
            feasible = o.feasible;
            if o.feasible {
                println!(
                    "P* = {:.6e} W ({:.3} dBm), rho = {:.3}, kappa = {:.4e}, rate = {:.3} bits/s/Hz, P_D = {:.4}, P_FA = {:.3e}",
                    o.p_star,
                    w_to_dbm(o.p_star),
                    o.rho,
                    o.kappa_star,
                    o.achieved.rate,
                    o.achieved.pd,
                    o.achieved.pfa
                );
            }
            vec![optimum_table(&o, None)]
        }
        Command::Validate(_) => {
            let report = validate_detection(&run_detection_sweep(&cfg)?);
            println!(
                "{} of {} judged probabilities within 3 standard errors of simulation",
                report.agreed, report.judged
            );
            vec![report.table()]
        }
    };
    emit(&cfg, common, name, tables)?;
    if !feasible {
        eprintln!("optimisation infeasible within the power budget");
    }
    Ok(feasible)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_INFEASIBLE),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
