use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pseudosense::pipeline::{
    cmd_detect, cmd_eval, cmd_neighbors, cmd_train_project, render_summary, RunConfig,
    SpaceSelector,
};
use pseudosense::projector::RepresentativeMode;

/// Detect and eliminate pseudo multi-sense in multi-sense word embeddings
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find same-meaning sense pairs and write pairs.tsv / groups.tsv
    Detect(Common),
    /// Train the transition matrix on a groups file and project the space
    TrainProject(Common),
    /// Score the original and/or projected space on the given datasets
    Eval(Common),
    /// Print each sense's neighbors, top domains, top hypernyms and verdicts
    Neighbors {
        word: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Rep {
    Mean,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Space {
    Original,
    Projected,
    Both,
}

#[derive(Args, Debug)]
struct Common {
    /// embeddings in the canonical text format
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    synsets: Option<PathBuf>,
    #[arg(long)]
    hypernyms: Option<PathBuf>,
    #[arg(long)]
    domains: Option<PathBuf>,
    /// WordSim-353 style CSV
    #[arg(long)]
    wordsim: Option<PathBuf>,
    /// SCWS TSV
    #[arg(long)]
    scws: Option<PathBuf>,
    /// analogy questions file
    #[arg(long)]
    analogy: Option<PathBuf>,
    /// groups file for train-project (default: <out-dir>/groups.tsv)
    #[arg(long)]
    groups: Option<PathBuf>,
    /// projected embeddings for eval (default: <out-dir>/projected.txt)
    #[arg(long)]
    projected: Option<PathBuf>,
    /// labels compared per profile
    #[arg(long, default_value_t = 5)]
    top_n: usize,
    /// detection threshold on the summed similarity
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// nearest neighbors per sense
    #[arg(long, default_value_t = 10)]
    neighbors: usize,
    #[arg(long, value_enum, default_value_t = Rep::Mean)]
    rep: Rep,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// sense posterior temperature
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// context tokens per side
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, value_enum, default_value_t = Space::Both)]
    space: Space,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// record wall-clock timings in the report
    #[arg(long, default_value_t = false)]
    timings: bool,
}

impl From<Common> for RunConfig {
    fn from(c: Common) -> Self {
        RunConfig {
            embeddings: c.embeddings,
            synsets: c.synsets,
            hypernyms: c.hypernyms,
            domains: c.domains,
            wordsim: c.wordsim,
            scws: c.scws,
            analogy: c.analogy,
            groups: c.groups,
            projected: c.projected,
            top_n: c.top_n,
            lambda: c.lambda,
            neighbors: c.neighbors,
            rep: match c.rep {
                Rep::Mean => RepresentativeMode::Mean,
                Rep::Random => RepresentativeMode::Random,
            },
            lr: c.lr,
            epochs: c.epochs,
            seed: c.seed,
            tau: c.tau,
            window: c.window,
            space: match c.space {
                Space::Original => SpaceSelector::Original,
                Space::Projected => SpaceSelector::Projected,
                Space::Both => SpaceSelector::Both,
            },
            out_dir: c.out_dir,
            timings: c.timings,
        }
    }
}

fn run(cli: Cli) -> pseudosense::Result<()> {
    let report = match cli.command {
        Command::Detect(c) => cmd_detect(&c.into())?,
        Command::TrainProject(c) => cmd_train_project(&c.into())?,
        Command::Eval(c) => cmd_eval(&c.into())?,
        Command::Neighbors { word, common } => {
            print!("{}", cmd_neighbors(&common.into(), &word)?);
            return Ok(());
        }
    };
    print!("{}", render_summary(&report));
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::FAILURE
        }
    }
}
