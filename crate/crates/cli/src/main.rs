//! `mutsample`: generate mutants, run them, sample and analyse the results.
//!
//! Exit codes: 0 success, 1 operational failure, 2 usage error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use mutsample::analysis::{DEFAULT_CRITICAL, DEFAULT_REPETITIONS};
use mutsample::mutator::Operator;
use mutsample::sampler::{Approach, WeightBasis};
use mutsample::synth::{Adequacy, SizeDistribution};

use commands::UsageError;
use config::FileConfig;

#[derive(Debug, Parser)]
#[command(name = "mutsample", version, about = "Mutation testing with sampled mutant sets")]
struct Cli {
    /// Project configuration file (TOML). Flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan sources and write the mutant catalog to a fresh store.
    Generate {
        #[arg(long)]
        root: Option<PathBuf>,
        #[arg(long)]
        store: Option<PathBuf>,
        /// Glob of production files, relative to the root (repeatable).
        #[arg(long)]
        include: Vec<String>,
        /// Glob of files to skip (repeatable).
        #[arg(long)]
        exclude: Vec<String>,
        /// Comma-separated operator names, e.g. ROR,COR.
        #[arg(long, value_delimiter = ',')]
        operators: Vec<Operator>,
        /// Also write the tab-separated mutant list here (`-` for stdout).
        #[arg(long)]
        list: Option<PathBuf>,
        /// Replace an existing store that holds a different catalog.
        #[arg(long)]
        force: bool,
    },
    /// Execute the test command against every mutant without a result.
    Run {
        #[arg(long)]
        root: Option<PathBuf>,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long = "test-cmd")]
        test_cmd: Option<String>,
        #[arg(long = "build-cmd")]
        build_cmd: Option<String>,
        /// Per-mutant timeout floor in seconds.
        #[arg(long)]
        timeout: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Continue a run whose store already holds results.
        #[arg(long)]
        resume: bool,
        /// Mutate the project in place and restore each file (serial).
        #[arg(long = "in-place")]
        in_place: bool,
    },
    /// Draw one sampled mutant set and write its ids.
    Sample {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value = "uniform")]
        approach: Approach,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "weight-basis", default_value = "mutants")]
        weight_basis: WeightBasis,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Representativeness curves over sampling rates 1%..100%.
    Sweep {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long = "approach", value_delimiter = ',', default_value = "uniform,weighted")]
        approaches: Vec<Approach>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
        repetitions: usize,
        #[arg(long, default_value_t = DEFAULT_CRITICAL)]
        critical: f64,
        #[arg(long = "out-dir", default_value = ".")]
        out_dir: PathBuf,
        /// Drop classes the sample missed instead of scoring them 0.
        #[arg(long = "exclude-unsampled")]
        exclude_unsampled: bool,
        #[arg(long = "honor-overrides")]
        honor_overrides: bool,
        #[arg(long = "weight-basis", default_value = "mutants")]
        weight_basis: WeightBasis,
    },
    /// Project and per-class mutation coverage.
    Report {
        #[arg(long)]
        store: Option<PathBuf>,
        /// Exclude mutants marked equivalent.
        #[arg(long = "honor-overrides")]
        honor_overrides: bool,
    },
    /// Write a synthetic store.
    Synth {
        #[arg(long)]
        classes: usize,
        /// constant:K, uniform:LO,HI or lognormal:MU,SIGMA
        #[arg(long, default_value = "lognormal:2.0,1.0")]
        sizes: SizeDistribution,
        /// One kill probability, or one per class separated by commas.
        #[arg(long, default_value = "0.8")]
        adequacy: Adequacy,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Mark mutants as equivalent (or clear the mark with --unset).
    Equivalent {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(required = true)]
        ids: Vec<u64>,
        #[arg(long)]
        unset: bool,
    },
}

fn dispatch(cli: Cli, cancel: &AtomicBool) -> anyhow::Result<()> {
    let config = FileConfig::load_optional(cli.config.as_deref())?;
    match cli.command {
        Command::Generate {
            root,
            store,
            include,
            exclude,
            operators,
            list,
            force,
        } => commands::generate(
            &config,
            commands::GenerateArgs {
                root,
                store,
                include,
                exclude,
                operators,
                list,
                force,
            },
        ),
        Command::Run {
            root,
            store,
            test_cmd,
            build_cmd,
            timeout,
            jobs,
            resume,
            in_place,
        } => commands::run(
            &config,
            commands::RunArgs {
                root,
                store,
                test_cmd,
                build_cmd,
                timeout,
                jobs,
                resume,
                in_place,
            },
            cancel,
        ),
        Command::Sample {
            store,
            approach,
            rate,
            seed,
            weight_basis,
            out,
        } => commands::sample_cmd(
            &config,
            commands::SampleArgs {
                store,
                approach,
                rate,
                seed,
                weight_basis,
                out,
            },
        ),
        Command::Sweep {
            store,
            approaches,
            seed,
            repetitions,
            critical,
            out_dir,
            exclude_unsampled,
            honor_overrides,
            weight_basis,
        } => commands::sweep_cmd(
            &config,
            commands::SweepArgs {
                store,
                approaches,
                seed,
                repetitions,
                critical,
                out_dir,
                exclude_unsampled,
                honor_overrides,
                weight_basis,
            },
        ),
        Command::Report { store, honor_overrides } => commands::report(&config, store, honor_overrides),
        Command::Synth {
            classes,
            sizes,
            adequacy,
            seed,
            store,
        } => commands::synth_cmd(
            &config,
            commands::SynthArgs {
                classes,
                sizes,
                adequacy,
                seed,
                store,
            },
        ),
        Command::Equivalent { store, ids, unset } => commands::equivalent(&config, store, &ids, unset),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let cancel = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&cancel);
    if let Err(e) = ctrlc::set_handler(move || {
        if flag.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
        eprintln!("interrupt: finishing in-flight mutants (press again to abort)");
    }) {
        log::warn!("could not install interrupt handler: {e}");
    }

    match dispatch(cli, &cancel) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
