use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use uav_steering::experiment::{
    self, sweep_outage, sweep_payoff, sweep_transfers, validate_outage, write_partition_csv, SweepSpec,
};
use uav_steering::{generate_topology, Error, GameContext, ScenarioConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "uav-steer", version, about = "Multi-operator connection steering for cellular-connected UAVs")]
struct Cli {
    /// Scenario file (TOML key = value); defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides `rng_seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    parallel: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trials per cell; overrides `trials` from the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated UAV counts.
    #[arg(long, value_delimiter = ',')]
    uavs: Option<Vec<usize>>,
    /// Comma-separated MNO counts.
    #[arg(long, value_delimiter = ',')]
    mnos: Option<Vec<usize>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Random baseline and coalition game on one scenario.
    Run {
        /// Directory receiving topology.csv, partition.csv and trace.csv.
        #[arg(long)]
        out: PathBuf,
        /// Also write the serving-link statistics to links.csv.
        #[arg(long)]
        dump_links: bool,
    },
    /// Mean outage per (UAV count, MNO count, trial) for both methods.
    SweepOutage(SweepArgs),
    /// Total payoff per (MNO count, trial) for both methods at one UAV count.
    SweepPayoff(SweepArgs),
    /// Number of transfers per (UAV count, MNO count, trial).
    SweepTransfers(SweepArgs),
    /// Closed-form outage against Monte Carlo on random instances.
    ValidateOutage {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Report as CSV instead of a table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration.
    ShowConfig,
}

fn load_config(cli: &Cli) -> anyhow::Result<ScenarioConfig> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path).with_context(|| format!("reading config {}", path.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.rng_seed = seed;
    }
    Ok(config)
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn spec(args: &SweepArgs, config: &ScenarioConfig, default_uavs: &[usize], default_mnos: &[usize]) -> anyhow::Result<SweepSpec> {
    let spec = SweepSpec {
        uav_counts: args.uavs.clone().unwrap_or_else(|| default_uavs.to_vec()),
        mno_counts: args.mnos.clone().unwrap_or_else(|| default_mnos.to_vec()),
        trials: args.trials.unwrap_or(config.trials),
        base_seed: config.rng_seed,
        output_path: None,
    };
    spec.validate()?;
    Ok(spec)
}

fn create(dir: &Path, name: &str) -> anyhow::Result<File> {
    let path = dir.join(name);
    File::create(&path).with_context(|| format!("creating {}", path.display()))
}

fn run_single(config: &ScenarioConfig, out: &Path, dump_links: bool) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let (topology_seed, assignment_seed) = experiment::cell_seeds(config.rng_seed, config.uav_count, config.mno_count, 0);
    let topology = generate_topology(config, topology_seed)?;
    let ctx = GameContext::new(&topology, config)?;
    let baseline = ctx.random_assignment(assignment_seed)?;
    let (game, trace) = ctx.run_from(baseline.clone())?;
    topology.write_csv(create(out, "topology.csv")?)?;
    write_partition_csv(&baseline, &game, create(out, "partition.csv")?)?;
    trace.write_csv(create(out, "trace.csv")?)?;
    if dump_links {
        ctx.links.write_serving_csv(&topology, create(out, "links.csv")?)?;
    }
    println!(
        "uavs={} mnos={} random_mean_outage={:e} game_mean_outage={:e} random_sum_payoff={:.6} game_sum_payoff={:.6} transfers={} passes={}",
        config.uav_count,
        config.mno_count,
        baseline.mean_outage(),
        game.mean_outage(),
        baseline.sum_payoff(),
        game.sum_payoff(),
        trace.transfers.len(),
        trace.passes
    );
    Ok(())
}

const SWEEP_UAVS: [usize; 6] = [20, 40, 60, 80, 100, 120];
const SWEEP_MNOS: [usize; 3] = [2, 3, 4];

/// Ok(true) when the command succeeded, Ok(false) on a validation failure.
fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Run { out, dump_links } => run_single(&config, out, *dump_links)?,
        Command::SweepOutage(args) => {
            let rows = sweep_outage(&spec(args, &config, &SWEEP_UAVS, &SWEEP_MNOS)?, &config)?;
            experiment::write_rows(&rows, output(&args.out)?)?;
        }
        Command::SweepPayoff(args) => {
            let spec = spec(args, &config, &[120], &SWEEP_MNOS)?;
            if spec.uav_counts.len() != 1 {
                bail!("sweep-payoff takes exactly one UAV count");
            }
            let rows = sweep_payoff(&spec, &config)?;
            experiment::write_rows(&rows, output(&args.out)?)?;
        }
        Command::SweepTransfers(args) => {
            let rows = sweep_transfers(&spec(args, &config, &SWEEP_UAVS, &SWEEP_MNOS)?, &config)?;
            experiment::write_rows(&rows, output(&args.out)?)?;
        }
        Command::ValidateOutage { instances, samples, out } => {
            let report = validate_outage(*instances, *samples, config.rng_seed, config.laguerre_order)?;
            match out {
                Some(_) => experiment::write_rows(&report.rows, output(out)?)?,
                None => report.write_table(io::stdout().lock())?,
            }
            if !report.is_pass() {
                eprintln!("validation failed: {}/{} instances within tolerance", report.passed(), report.rows.len());
                return Ok(false);
            }
        }
        Command::ShowConfig => print!("{}", config.to_toml_string()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.parallel > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.parallel).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = matches!(
                e.downcast_ref::<Error>(),
                Some(Error::NumericalInstability { .. } | Error::NonConvergence { .. } | Error::DegeneratePoles { .. })
            );
            ExitCode::from(if numerical { EXIT_VALIDATION } else { EXIT_USAGE })
        }
    }
}
