use clap::{Args, Parser, Subcommand};
use pep_cli::commands::{parse_thresholds, run, Input, RunConfig, Task, Thresholds};
use pep_cli::report::{emit, Format};
use pep_cli::{exit, CliError};

#[derive(Parser)]
#[command(name = "pep", version, about = "Reduction, heights and counting for purely exponential polynomial maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Box radius (sup norm) for enumeration-based commands.
    #[arg(long = "box", global = true)]
    box_radius: Option<i64>,
    /// Geometric thresholds as T0:factor:count.
    #[arg(long, global = true, value_parser = parse_thresholds)]
    thresholds: Option<Thresholds>,
    /// Requested bits for archimedean logarithms; values are computed in
    /// double precision.
    #[arg(long, global = true, default_value_t = 128)]
    precision: u32,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed for Monte Carlo volumes.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    /// Monte Carlo samples.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    samples: u64,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Split into reduced pieces on cosets.
    Reduce { input: String },
    /// Rank of the image.
    Rank { input: String },
    /// Height seminorm, its kernel and unit-ball volume.
    Norm {
        input: String,
        /// Evaluate at a point, e.g. --at=1,-1.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<i64>>,
    },
    /// Image points by height threshold.
    Count { input: String },
    /// Counts with the fitted growth law.
    Fit { input: String },
    /// Zero locus in a box, explained by verified cosets.
    Zeros { input: String },
    /// Fiber sizes of g over the values of the input.
    Fibers {
        input: String,
        #[arg(long)]
        against: String,
    },
    /// Degeneracy partition of a box.
    Partition { input: String },
    /// Problem file of a bounded-generation product of commuting generators.
    Bg { input: String },
    /// SL2(Z) points by entry bound.
    Sl2Baseline,
    /// Counts against SL2(Z) or explicit ambient counts.
    Sparseness {
        input: String,
        /// Ambient counts, one per threshold.
        #[arg(long, value_delimiter = ',')]
        ambient_counts: Option<Vec<u64>>,
    },
    /// Word growth of two matrices.
    Words {
        input: String,
        #[arg(long, default_value_t = 8)]
        length: usize,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    if c.threads > 0 {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(c.threads).build_global();
    }
    let cfg = RunConfig {
        box_radius: c.box_radius,
        thresholds: c.thresholds.clone().map(|t| t.0),
        precision: c.precision,
        seed: c.seed,
        samples: c.samples,
        format: c.format,
    };
    let (task, input) = match &cli.command {
        Command::Reduce { input } => (Task::Reduce, Some(input)),
        Command::Rank { input } => (Task::Rank, Some(input)),
        Command::Norm { input, at } => (Task::Norm { at: at.clone() }, Some(input)),
        Command::Count { input } => (Task::Count, Some(input)),
        Command::Fit { input } => (Task::Fit, Some(input)),
        Command::Zeros { input } => (Task::Zeros, Some(input)),
        Command::Fibers { input, against } => (Task::Fibers { against: Input::read(against)? }, Some(input)),
        Command::Partition { input } => (Task::Partition, Some(input)),
        Command::Bg { input } => (Task::Bg, Some(input)),
        Command::Sl2Baseline => (Task::Sl2Baseline, None),
        Command::Sparseness { input, ambient_counts } => (Task::Sparseness { ambient_counts: ambient_counts.clone() }, Some(input)),
        Command::Words { input, length } => (Task::Words { length: *length }, Some(input)),
    };
    let input = input.map(|p| Input::read(p)).transpose()?;
    let text = run(&task, input.as_ref(), &cfg)?;
    emit(c.out.as_deref(), &text)
}

fn main() {
    let code = match dispatch(Cli::parse()) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("pep: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
