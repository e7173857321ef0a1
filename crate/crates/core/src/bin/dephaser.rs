use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dephaser::cli::{
    cmd_bound, cmd_evolve, cmd_rates, cmd_verify, load_scenario, write_atomic, BoundTarget, System, VerifyOptions,
    DEFAULT_SEED, DEFAULT_TRIALS, DEFAULT_VERIFY_QUBITS,
};
use dephaser::presets::PresetName;
use dephaser::register::BasisState;
use dephaser::{Error, Result, Tolerances};

#[derive(Parser)]
#[command(name = "dephaser", version, about = "Lindblad phase-damping simulator and dephasing-bound checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; without it results go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form decay rates, shifts and frequencies for a diagonal scenario.
    Rates(ScenarioArgs),
    /// Integrate the master equation and fit the tracked coherences.
    Evolve {
        #[command(flatten)]
        io: ScenarioArgs,
        /// Override the scenario's t_max.
        #[arg(long)]
        tmax: Option<f64>,
        /// Override the scenario's step count.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Chain bound between two basis states or along the GHZ chain.
    Bound {
        #[command(flatten)]
        io: ScenarioArgs,
        #[arg(long, conflicts_with = "pair", required_unless_present = "pair")]
        ghz: bool,
        /// Endpoints as two bitstrings, e.g. `uu,dd`.
        #[arg(long, value_parser = parse_pair)]
        pair: Option<(BasisState, BasisState)>,
    },
    /// Randomized checks of the rate formulas, population preservation and the chain bound.
    Verify {
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_VERIFY_QUBITS)]
        qubits: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List preset names.
    Presets,
}

fn parse_pair(s: &str) -> std::result::Result<(BasisState, BasisState), String> {
    let (a, b) = s.split_once(',').ok_or("expected two bitstrings separated by ','")?;
    let a = a.parse::<BasisState>().map_err(|e| e.to_string())?;
    let b = b.parse::<BasisState>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn emit(out: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    match out {
        Some(dir) => write_atomic(dir, name, contents.as_bytes()),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn system(args: &ScenarioArgs, tol: &Tolerances) -> Result<System> {
    load_scenario(&args.scenario)?.build(tol)
}

fn run(cli: Cli, tol: &Tolerances) -> Result<()> {
    match cli.command {
        Command::Rates(io) => {
            let table = cmd_rates(&system(&io, tol)?, tol)?;
            match &io.out {
                Some(dir) => {
                    write_atomic(dir, "rates.csv", table.to_csv().as_bytes())?;
                    write_atomic(dir, "rates.json", json(&table)?.as_bytes())
                }
                None => emit(None, "", &table.to_csv()),
            }
        }
        Command::Evolve { io, tmax, steps } => {
            let mut scenario = load_scenario(&io.scenario)?;
            if let Some(t) = tmax {
                scenario.t_max = t;
            }
            if steps.is_some() {
                scenario.steps = steps;
            }
            let output = cmd_evolve(&scenario.build(tol)?, tol)?;
            let report = json(&output.report)?;
            match &io.out {
                Some(dir) => {
                    write_atomic(dir, "trajectory.csv", output.trajectory_csv()?.as_bytes())?;
                    write_atomic(dir, "fits.csv", output.report.fits_csv().as_bytes())?;
                    write_atomic(dir, "report.json", report.as_bytes())
                }
                None => emit(None, "", &report),
            }
        }
        Command::Bound { io, ghz, pair } => {
            let target = match (ghz, pair) {
                (_, Some((a, b))) => BoundTarget::Pair(a, b),
                _ => BoundTarget::Ghz,
            };
            let result = cmd_bound(&system(&io, tol)?, &target, tol)?;
            emit(io.out.as_deref(), "bound.json", &json(&result)?)
        }
        Command::Verify {
            trials,
            seed,
            qubits,
            out,
        } => {
            let options = VerifyOptions {
                trials,
                seed,
                n_qubits: qubits,
            };
            let summary = cmd_verify(&options, tol)?;
            emit(out.as_deref(), "verify.json", &json(&summary)?)
        }
        Command::Presets => {
            for p in PresetName::ALL {
                println!("{:<20} {}", p.as_str(), p.description());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Tolerances::from_env().and_then(|tol| run(cli, &tol));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if let Error::NotPopulationPreserving(report) = &err {
                if let Ok(text) = json(report.as_ref()) {
                    print!("{text}");
                }
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
