use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::{
    run_ao_trace, run_aoa_error_sweep, run_convergence, run_gain_map, run_power_sweep, run_user_sweep,
    write_positions_csv, write_records_csv, ExperimentConfig, ResultRecord,
};
use crate::channel::write_gain_map_csv;
use crate::error::{Error, Result};
use crate::pso::write_trace_csv;
use crate::sca::write_ao_trace_csv;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ma-aircomp", version, about = "Movable-antenna AirComp experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output CSV
    #[arg(long)]
    out: PathBuf,
    /// Override the master seed from the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores); results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
    /// Record wall-clock times instead of zeros
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TraceScheme {
    Pso,
    Ao,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// CMSE versus transmit power cap
    PowerSweep(Common),
    /// CMSE versus number of users
    UserSweep(Common),
    /// CMSE versus maximum AoA error
    AoaSweep(Common),
    /// Per-iteration trace of a single optimizer run
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "pso")]
        scheme: TraceScheme,
    },
    /// Average channel gain over the moving region
    GainMap {
        #[command(flatten)]
        common: Common,
        /// Also optimize with PSO and write the final antenna positions here
        #[arg(long)]
        positions: Option<PathBuf>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::PowerSweep(c) | Command::UserSweep(c) | Command::AoaSweep(c) => c,
            Command::Converge { common, .. } | Command::GainMap { common, .. } => common,
        }
    }
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Config(Error::io(path, e)))
}

fn write_with<F>(path: &Path, body: F) -> std::result::Result<(), Failure>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut out = create(path)?;
    body(&mut out).map_err(Failure::Runtime)?;
    out.flush().map_err(|e| Failure::Runtime(Error::io(path, e)))
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Config(_) | Error::Io { .. } | Error::Json(_) => Failure::Config(e),
        other => Failure::Runtime(other),
    }
}

fn sweep_output(path: &Path, records: Vec<ResultRecord>) -> std::result::Result<(), Failure> {
    let failed = records.iter().filter(|r| r.is_error()).count();
    for r in records.iter().filter(|r| r.is_error()) {
        eprintln!(
            "cell {} p_c={} k={} mu={} seed={} failed: {}",
            r.scheme,
            r.p_c_dbm,
            r.k_users,
            r.mu,
            r.seed,
            r.error.as_deref().unwrap_or("")
        );
    }
    write_with(path, |out| write_records_csv(&records, out))?;
    if !records.is_empty() && failed == records.len() {
        return Err(Failure::Runtime(Error::Config("every cell failed".into())));
    }
    Ok(())
}

fn execute(command: &Command, cfg: &ExperimentConfig) -> std::result::Result<(), Failure> {
    let out = &command.common().out;
    match command {
        Command::PowerSweep(_) => sweep_output(out, run_power_sweep(cfg).map_err(classify)?),
        Command::UserSweep(_) => sweep_output(out, run_user_sweep(cfg).map_err(classify)?),
        Command::AoaSweep(_) => sweep_output(out, run_aoa_error_sweep(cfg).map_err(classify)?),
        Command::Converge { scheme, .. } => match scheme {
            TraceScheme::Pso => {
                let run = run_convergence(cfg).map_err(classify)?;
                write_with(out, |w| write_trace_csv(&run.trace, w))
            }
            TraceScheme::Ao => {
                let trace = run_ao_trace(cfg).map_err(classify)?;
                write_with(out, |w| write_ao_trace_csv(&trace, w))
            }
        },
        Command::GainMap { positions, .. } => {
            let map = run_gain_map(cfg).map_err(classify)?;
            write_with(out, |w| write_gain_map_csv(&map, w))?;
            if let Some(path) = positions {
                let run = run_convergence(cfg).map_err(classify)?;
                write_with(path, |w| write_positions_csv(&run.apv, w))?;
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let common = cli.command.common();
    let mut cfg = match ExperimentConfig::load(&common.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    cfg.record_timing |= common.timing;

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| execute(&cli.command, &cfg)) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}
