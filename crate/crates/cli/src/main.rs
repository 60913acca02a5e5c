//! `heislab`: batch runner for the Monte Carlo laboratory.
//!
//! Exit status: 0 when every verdict holds or is inconclusive, 1 when any
//! verdict is violated, 2 on usage, configuration or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use heislab::config::ExperimentConfig;
use heislab::experiment::{self, Bank, Outcome};
use heislab::rng::with_threads;
use heislab::sampler::{read_bank, write_bank};
use heislab::{CarnotSpec, Error};

#[derive(Debug, Parser)]
#[command(name = "heislab", version, about = "Monte Carlo checks of entropy inequalities on the Heisenberg group")]
struct Cli {
    /// Experiment configuration (TOML). Built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (0 = all cores). Does not change any output.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Output directory; overrides the configuration and HEISLAB_OUT_DIR.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Group axioms, field commutators and Gamma2 identities.
    Selftest,
    /// Moment panel of the rescaled random walk and Levy-area variance.
    Clt,
    /// Inequality checks by name (all registered checks when none given).
    Lsi {
        /// Check name; repeat for several. See `heislab lsi --list`.
        #[arg(long = "name")]
        names: Vec<String>,
        /// Vertical noise level; repeat for several. Overrides lsi.betas.
        #[arg(long = "beta")]
        betas: Vec<f64>,
        /// Use the paths stored in this bank instead of simulating.
        #[arg(long, conflicts_with = "write_bank")]
        read_bank: Option<PathBuf>,
        /// Save the simulated paths to this bank file.
        #[arg(long)]
        write_bank: Option<PathBuf>,
        /// List registered checks and exit.
        #[arg(long)]
        list: bool,
    },
    /// Bridge-control fit and the planar bridge oracle.
    Bridge,
    /// Pointwise curvature sweep and left/right endpoint comparison.
    Curvature,
    /// Entropy inequality on a Carnot group given by a spec file.
    Carnot {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Merge JSON report files into one table.
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn write_outputs(dir: &Path, outcome: &Outcome) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    for a in &outcome.artifacts {
        let path = dir.join(&a.file);
        std::fs::write(&path, &a.contents)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    let outcome = match cli.command {
        Command::Selftest => experiment::selftest(&cfg)?,
        Command::Clt => experiment::clt(&cfg)?,
        Command::Lsi {
            names,
            betas,
            read_bank: read,
            write_bank: write,
            list,
        } => {
            if list {
                let mut summary = String::new();
                for c in heislab::inequalities::registry() {
                    summary.push_str(&format!("{:<14} {}\n", c.name(), c.describe()));
                }
                return Ok(Outcome {
                    artifacts: Vec::new(),
                    summary,
                    violated: false,
                });
            }
            if !betas.is_empty() {
                cfg.lsi.betas = betas;
                cfg.validate()?;
            }
            if let Some(path) = read {
                let (header, paths) = read_bank(&path)?;
                experiment::lsi(&cfg, &names, Bank::Paths {
                    paths: &paths,
                    plan: header.plan,
                })?
            } else if let Some(path) = write {
                let (plan, pc, paths) = experiment::lsi_bank(&cfg)?;
                write_bank(&path, plan, &pc, &paths)?;
                eprintln!("wrote bank {}", path.display());
                experiment::lsi(&cfg, &names, Bank::Paths { paths: &paths, plan })?
            } else {
                experiment::lsi(&cfg, &names, Bank::Simulate)?
            }
        }
        Command::Bridge => experiment::bridge(&cfg)?,
        Command::Curvature => experiment::curvature(&cfg)?,
        Command::Carnot { spec } => experiment::carnot(&cfg, &CarnotSpec::load(&spec)?)?,
        Command::Report { files } => {
            let texts = files
                .iter()
                .map(|f| Ok((f.display().to_string(), std::fs::read_to_string(f)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            experiment::report(&texts)?
        }
    };
    write_outputs(&cfg.output.dir, &outcome)?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    match with_threads(threads, move || run(cli)).and_then(|r| r) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.violated {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("heislab: {e}");
            ExitCode::from(2)
        }
    }
}
