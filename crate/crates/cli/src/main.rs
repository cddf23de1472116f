//! `netpin` — simulate and certify error-feedback pinning control.
//!
//! Subcommands: `simulate` (run one scenario, write CSV/summary/plots),
//! `certify` (evaluate the stability certificate), `sweep` (gain grid),
//! `reproduce` (run the bundled experiments against their thresholds).
//!
//! Exit codes are a stable contract:
//! `0` success / certified, `1` not certified (or a failed reproduction
//! check), `2` assumption-estimation failure, `64` bad arguments or
//! invalid scenario, `70` runtime fault (integration blow-up, I/O).

mod output;
mod plot;
mod reproduce;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use netpin_core::certify::{certify_scenario, CertifyError};
use netpin_core::simulate::{check_proof_bounds, simulate, SimError};
use netpin_core::{BuiltScenario, Scenario};

const EXIT_OK: u8 = 0;
const EXIT_NOT_CERTIFIED: u8 = 1;
const EXIT_ESTIMATION: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_RUNTIME: u8 = 70;

#[derive(Parser)]
#[command(
    name = "netpin",
    version,
    about = "Pinning-control simulation and Lyapunov certification for networked nonlinear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Override integration step size (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Override integration horizon (s).
    #[arg(long)]
    t_end: Option<f64>,
    /// Override controller gain.
    #[arg(long)]
    gain: Option<f64>,
    /// Override estimator seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, scenario: &mut Scenario) {
        if let Some(dt) = self.dt {
            scenario.integration.dt = dt;
        }
        if let Some(t_end) = self.t_end {
            scenario.integration.t_end = t_end;
        }
        if let Some(gain) = self.gain {
            scenario.controller.gain = gain;
        }
        if let Some(seed) = self.seed {
            scenario.estimation.seed = seed;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write timeseries.csv, summary.toml and plots.
    Simulate {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// Output directory (default: $NETPIN_OUT or ./runs, plus the
        /// scenario name).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Evaluate the stability certificate for a scenario.
    Certify {
        scenario: PathBuf,
        /// Override the estimator sample budget.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a grid of gains; append one summary row per gain.
    Sweep {
        scenario: PathBuf,
        /// Gain grid as start:stop:step (inclusive).
        #[arg(long)]
        gains: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default 4, capped by the grid size).
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the bundled experiments and check their thresholds.
    Reproduce {
        /// Also copy the bundled scenario files here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Simulate {
            scenario,
            out,
            overrides,
        } => cmd_simulate(&scenario, out.as_deref(), &overrides),
        Command::Certify {
            scenario,
            samples,
            overrides,
        } => cmd_certify(&scenario, samples, &overrides),
        Command::Sweep {
            scenario,
            gains,
            out,
            workers,
            overrides,
        } => cmd_sweep(&scenario, &gains, out.as_deref(), workers, &overrides),
        Command::Reproduce { out } => cmd_reproduce(out.as_deref()),
    };
    ExitCode::from(code)
}

fn load_scenario(path: &std::path::Path, overrides: &Overrides) -> Result<BuiltScenario, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_USAGE
    })?;
    let mut scenario = Scenario::parse(&text).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;
    overrides.apply(&mut scenario);
    scenario.build().map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

fn certify_exit(e: &CertifyError) -> u8 {
    eprintln!("error: {e}");
    EXIT_ESTIMATION
}

fn cmd_simulate(
    path: &std::path::Path,
    out: Option<&std::path::Path>,
    overrides: &Overrides,
) -> u8 {
    let built = match load_scenario(path, overrides) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let dir = output::run_directory(out, &built.name);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_RUNTIME;
    }

    let record = match simulate(&built) {
        Ok(r) => r,
        Err(SimError::BlowUp { time, partial, .. }) => {
            eprintln!("error: integration blew up at t = {time} s");
            // Keep what we have for post-mortems.
            if !partial.is_empty() {
                let _ = output::write_timeseries(&partial, &dir.join("timeseries.csv"));
                eprintln!("note: partial record written to {}", dir.display());
            }
            return EXIT_RUNTIME;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };

    let certificate = match certify_scenario(&built) {
        Ok(c) => c,
        Err(e) => return certify_exit(&e),
    };
    let bounds = check_proof_bounds(&record, &certificate);
    let summary = output::RunSummary::new(
        &built.name,
        built.estimation.seed,
        &record,
        certificate,
        &bounds,
    );

    // CSV first, then the summary, then plots; a plot failure must not
    // corrupt the data files.
    if let Err(e) = output::write_timeseries(&record, &dir.join("timeseries.csv")) {
        eprintln!("error: {e}");
        return EXIT_RUNTIME;
    }
    if let Err(e) = output::write_summary(&summary, &dir.join("summary.toml")) {
        eprintln!("error: {e}");
        return EXIT_RUNTIME;
    }
    if let Err(e) = plot::emit_plots(&record, &dir) {
        eprintln!("error: plots failed ({e}); timeseries.csv and summary.toml are intact");
        return EXIT_RUNTIME;
    }

    println!("wrote {}", dir.display());
    println!(
        "initial error {:.6e} -> final error {:.6e}; {}",
        summary.initial_error_norm,
        summary.final_error_norm,
        if summary.certificate.certified {
            "certified"
        } else {
            "not certified"
        }
    );
    EXIT_OK
}

fn cmd_certify(
    path: &std::path::Path,
    samples: Option<usize>,
    overrides: &Overrides,
) -> u8 {
    let mut built = match load_scenario(path, overrides) {
        Ok(b) => b,
        Err(code) => return code,
    };
    if let Some(samples) = samples {
        built.estimation.samples = samples;
    }
    match certify_scenario(&built) {
        Ok(certificate) => {
            println!("{certificate}");
            if certificate.certified {
                EXIT_OK
            } else {
                EXIT_NOT_CERTIFIED
            }
        }
        Err(e) => certify_exit(&e),
    }
}

fn cmd_sweep(
    path: &std::path::Path,
    gains: &str,
    out: Option<&std::path::Path>,
    workers: usize,
    overrides: &Overrides,
) -> u8 {
    let built = match load_scenario(path, overrides) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let grid = match sweep::parse_gain_grid(gains) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let dir = output::run_directory(out, &built.name);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_RUNTIME;
    }
    let target = dir.join("sweep.csv");
    match sweep::run_sweep(&built, &grid, &target, workers) {
        Ok(rows) => {
            println!("appended {rows} rows to {}", target.display());
            EXIT_OK
        }
        Err(e) => {
            if e.downcast_ref::<CertifyError>().is_some() {
                eprintln!("error: {e}");
                EXIT_ESTIMATION
            } else {
                eprintln!("error: {e}");
                EXIT_RUNTIME
            }
        }
    }
}

fn cmd_reproduce(out: Option<&std::path::Path>) -> u8 {
    if let Some(dir) = out {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return EXIT_RUNTIME;
        }
        for (name, text) in [
            ("kuramoto_paper", reproduce::KURAMOTO_TOML),
            ("jansen_rit_paper", reproduce::JANSEN_RIT_TOML),
        ] {
            let file = dir.join(format!("{name}.toml"));
            if let Err(e) = output::write_atomic(&file, text) {
                eprintln!("error: {e}");
                return EXIT_RUNTIME;
            }
        }
    }
    match reproduce::run_reproduction() {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_NOT_CERTIFIED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
