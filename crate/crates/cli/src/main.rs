use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qfreq_cli::commands::{
    cmd_bounds, cmd_optimize_base, cmd_plot, cmd_run, BoundsArgs, BoundsSchedule, OptimizeArgs, Overrides,
    DEFAULT_BASES,
};
use qfreq_cli::Format;
use qfreq_core::StrategyKind;

#[derive(Parser)]
#[command(name = "qfreq", version, about = "Single-qubit frequency estimation: Bayes-risk curves and bounds")]
struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per cell; overrides the config file.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory; overrides the config file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a plan file and write risk tables, schedules, fits, and an optional plot.
    Run {
        config: PathBuf,
    },
    /// Print the Cramér-Rao, dephasing, and information-theoretic bounds.
    Bounds(BoundsCli),
    /// Render risk tables (one panel each) to SVG.
    Plot {
        #[arg(required = true)]
        tables: Vec<PathBuf>,
        #[arg(long, short, default_value = "risk.svg")]
        out: PathBuf,
    },
    /// Search exponential bases t_k = b^k for the lowest MLE Bayes risk.
    OptimizeBase {
        #[arg(long, default_value_t = 124)]
        n: usize,
        /// Comma-separated bases or inclusive start:stop:step ranges.
        #[arg(long, default_value = DEFAULT_BASES)]
        bases: String,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value = "inf")]
        t2: String,
    },
}

#[derive(Args)]
struct BoundsCli {
    /// t_k = π.
    #[arg(long, group = "schedule")]
    fixed: bool,
    /// t_k = kπ.
    #[arg(long, group = "schedule")]
    linear: bool,
    /// t_k = base^k.
    #[arg(long, group = "schedule", value_name = "BASE")]
    exponential: Option<f64>,
    /// Explicit comma-separated times.
    #[arg(long, group = "schedule", value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Only the dephasing bound e²/(Nη²T₂²); needs --n.
    #[arg(long)]
    ultimate: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Dephasing time: a number, `inf`, or e.g. `1e4pi`.
    #[arg(long, default_value = "inf")]
    t2: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides { seed: cli.seed, trials: cli.trials, out_dir: cli.out_dir.clone(), format: cli.format };
    let code = match cli.command {
        Command::Run { config } => cmd_run(&config, &overrides),
        Command::Bounds(b) => {
            let schedule = if b.fixed {
                Some(BoundsSchedule::Kind(StrategyKind::Fixed))
            } else if b.linear {
                Some(BoundsSchedule::Kind(StrategyKind::LinearGrid))
            } else if let Some(base) = b.exponential {
                Some(BoundsSchedule::Kind(StrategyKind::Exponential { base }))
            } else {
                b.times.map(BoundsSchedule::Times)
            };
            // --ultimate ignores any schedule: the dephasing bound and floor depend only on N.
            let schedule = if b.ultimate { None } else { schedule };
            let args = BoundsArgs { schedule, n: b.n, eta: b.eta, t2: b.t2, format: cli.format.unwrap_or_default() };
            cmd_bounds(&args, cli.out_dir.as_deref())
        }
        Command::Plot { tables, out } => {
            let out = match &cli.out_dir {
                Some(dir) if out.is_relative() => dir.join(out),
                _ => out,
            };
            cmd_plot(&tables, &out)
        }
        Command::OptimizeBase { n, bases, eta, t2 } => {
            let args = OptimizeArgs {
                n,
                bases,
                eta,
                t2,
                trials: cli.trials.unwrap_or(qfreq_core::strategies::MIN_BASE_SEARCH_TRIALS),
                seed: cli.seed.unwrap_or(0),
                format: cli.format.unwrap_or_default(),
            };
            cmd_optimize_base(&args, cli.out_dir.as_deref())
        }
    };
    ExitCode::from(code)
}
