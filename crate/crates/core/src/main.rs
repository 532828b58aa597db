use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use esvqe::driver::{self, RunConfig};
use esvqe::fci::{ground_energy_seeded, Sector};
use esvqe::molecule::Molecule;
use esvqe::{Error, Result};

#[derive(Parser)]
#[command(
    name = "esvqe",
    version,
    about = "Compact VQE ansätze by Energy Sorting and ExcitationSolve"
)]
struct Cli {
    /// Worker threads for landscape sweeps.
    #[arg(long, env = "ESVQE_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and optimize an ansatz, writing trace.jsonl, summary.json and selection.csv.
    Run(ConfigArgs),
    /// Rank first-layer doubles from the integrals alone.
    Select {
        fcidump: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Selected operators across a series of inputs given as LABEL=FCIDUMP.
    Scan {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<String>,
    },
    /// Exact ground energy.
    Fci {
        fcidump: PathBuf,
        /// Search all particle numbers instead of the reference sector.
        #[arg(long)]
        all_sectors: bool,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
    },
    /// Print the operator pool as JSON.
    Pool(ConfigArgs),
    /// Log-log scaling of evaluations to chemical accuracy from summary files.
    SpeedupReport {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// key = value configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    fcidump: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    pool: Option<String>,
    #[arg(long)]
    eps_a: Option<f64>,
    #[arg(long)]
    eps_conv: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    max_ops: Option<usize>,
    #[arg(long)]
    screening_rounds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Rank first-layer doubles on the simulator instead of from the integrals.
    #[arg(long)]
    quantum_doubles: bool,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let overrides: [(&str, Option<String>); 10] = [
            (
                "fcidump",
                self.fcidump.as_ref().map(|p| p.display().to_string()),
            ),
            ("method", self.method.clone()),
            ("pool", self.pool.clone()),
            ("eps_a", self.eps_a.map(|v| v.to_string())),
            ("eps_conv", self.eps_conv.map(|v| v.to_string())),
            ("max_sweeps", self.max_sweeps.map(|v| v.to_string())),
            ("max_ops", self.max_ops.map(|v| v.to_string())),
            (
                "screening_rounds",
                self.screening_rounds.map(|v| v.to_string()),
            ),
            ("seed", self.seed.map(|v| v.to_string())),
            (
                "output",
                self.output.as_ref().map(|p| p.display().to_string()),
            ),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                c.set(key, &v)?;
            }
        }
        if self.quantum_doubles {
            c.classical = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Serialize(e.to_string()))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let summary = driver::run(&config)?;
            emit(&(summary.to_json()? + "\n"), None)
        }
        Command::Select { fcidump, output } => {
            let molecule = Molecule::load(&fcidump)?;
            emit(&driver::preselect_csv(&molecule)?, output.as_deref())
        }
        Command::Scan { config, inputs } => {
            let config = config.resolve()?;
            let labelled = inputs
                .iter()
                .map(|s| {
                    s.split_once('=')
                        .map(|(l, p)| (l.to_string(), PathBuf::from(p)))
                        .ok_or_else(|| {
                            Error::Config(format!("scan input '{s}' is not LABEL=FCIDUMP"))
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            let matrix = driver::scan(&config, &labelled)?;
            let dir = &config.output;
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            emit(&matrix.to_csv()?, Some(&dir.join("selection_matrix.csv")))?;
            emit(&matrix.similarity_csv()?, Some(&dir.join("similarity.csv")))?;
            emit(&matrix.similarity_csv()?, None)
        }
        Command::Fci {
            fcidump,
            all_sectors,
            seed,
        } => {
            let molecule = Molecule::load(&fcidump)?;
            let sector = (!all_sectors).then_some(Sector {
                n_elec: molecule.integrals.n_elec,
                ms2: Some(molecule.integrals.ms2),
            });
            let result = ground_energy_seeded(&molecule.hamiltonian, sector, seed)?;
            emit(&json(&result)?, None)
        }
        Command::Pool(args) => {
            let config = args.resolve()?;
            let path = config
                .fcidump
                .clone()
                .ok_or_else(|| Error::Config("no FCIDUMP given".into()))?;
            let molecule = Molecule::load(&path)?;
            emit(
                &(driver::build_pool(&config, &molecule)?.to_json()? + "\n"),
                None,
            )
        }
        Command::SpeedupReport { summaries, output } => {
            let loaded = summaries
                .iter()
                .map(|p| driver::load_summary(p))
                .collect::<Result<Vec<_>>>()?;
            let report = driver::speedup_report(&loaded)?;
            emit(&report.to_csv()?, output.as_deref())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 4,
        Error::NotConverged { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("esvqe: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("esvqe: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
