use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use handover_sim::control::camera_pose;
use handover_sim::harness::{format_table, read_results_csv, replay, run_batch, thread_cap, BatchError, BatchOptions, ReplayError, ResultsError, Scenario};
use handover_sim::pgm;
use handover_sim::scene::render;
use handover_sim::trace::{read_jsonl, ReadError};

#[derive(Parser)]
#[command(name = "handover-sim", version, about = "Simulated human-to-robot handover trials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded trials and write results.csv, summary.csv and logs/.
    Run {
        /// Scenario JSON file; repeat for several scenarios.
        #[arg(long, required = true)]
        scenario: Vec<PathBuf>,
        /// Trials per scenario; defaults to each scenario's own count.
        #[arg(long)]
        trials: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Reclassify a trial log and check that rerunning it reproduces the log.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Only reclassify; skip the rerun.
        #[arg(long)]
        no_rerun: bool,
    },
    /// Render the scene seen from the home pose at time T.
    Render {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        time: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        class: PathBuf,
    },
    /// Print the outcome table for a results CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

enum Failure {
    Parse(String),
    Io(String),
    Other(String),
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Io(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Parse(m) | Failure::Io(m) | Failure::Other(m) => m,
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    Scenario::load(path).map_err(|e| if e.is_io() { Failure::Io(e.to_string()) } else { Failure::Parse(e.to_string()) })
}

fn run(scenarios: &[PathBuf], trials: Option<u32>, seed: u64, out_dir: &Path) -> Result<(), Failure> {
    let loaded = scenarios.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    let opts = BatchOptions { trials, seed, threads: thread_cap() };
    let results = run_batch(&loaded, &opts, out_dir).map_err(|e| match e {
        BatchError::Io { .. } => Failure::Io(e.to_string()),
        _ => Failure::Other(e.to_string()),
    })?;
    print!("{}", format_table(&results));
    Ok(())
}

fn replay_log(path: &Path, rerun: bool) -> Result<(), Failure> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    let log = read_jsonl(BufReader::new(file)).map_err(|e| match e {
        ReadError::Io(e) => Failure::io(path, e),
        e @ ReadError::Parse { .. } => Failure::Parse(format!("{}: {e}", path.display())),
    })?;
    let r = replay(&log, rerun).map_err(|e| match e {
        ReplayError::MissingHeader | ReplayError::Scenario(_) => Failure::Parse(format!("{}: {e}", path.display())),
        e => Failure::Other(e.to_string()),
    })?;
    let res = &r.result;
    println!("scenario:   {}", res.scenario);
    println!("trial:      {} (seed {})", res.trial, r.seed);
    println!("outcome:    {}", res.outcome.as_str());
    match res.initiation_time_s {
        Some(t) => println!("initiation: {t:.6} s"),
        None => println!("initiation: -"),
    }
    println!("total:      {:.6} s", res.total_time_s);
    println!("aborts:     {}", res.abort_count);
    if let Some((d, t)) = r.min_clearance {
        println!("clearance:  {d:.4} m at {t:.3} s");
    }
    match r.reproduced {
        Some(true) => println!("rerun:      identical"),
        Some(false) => return Err(Failure::Other("rerun differs from the stored log".into())),
        None => {}
    }
    Ok(())
}

fn render_scene(path: &Path, time: f64, seed: u64, depth: &Path, class: &Path) -> Result<(), Failure> {
    let scenario = load(path)?;
    let resolved = scenario.resolve().map_err(Failure::Parse)?;
    let scene = scenario.scene_for(seed).map_err(Failure::Parse)?;
    let cam = resolved.base.compose(&camera_pose(&resolved.home));
    let out = render(&scene.scene_at(time), &cam, &resolved.intrinsics);
    let f = File::create(depth).map_err(|e| Failure::io(depth, e))?;
    pgm::write_depth(BufWriter::new(f), &out.depth).map_err(|e| Failure::io(depth, e))?;
    let f = File::create(class).map_err(|e| Failure::io(class, e))?;
    pgm::write_classes(BufWriter::new(f), &out).map_err(|e| Failure::io(class, e))?;
    Ok(())
}

fn report(path: &Path) -> Result<(), Failure> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    let results = read_results_csv(BufReader::new(file)).map_err(|e| match e {
        ResultsError::Csv(c) if c.is_io_error() => Failure::Io(format!("{}: {c}", path.display())),
        e => Failure::Parse(format!("{}: {e}", path.display())),
    })?;
    print!("{}", format_table(&results));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { scenario, trials, seed, out_dir } => run(scenario, *trials, *seed, out_dir),
        Command::Replay { log, no_rerun } => replay_log(log, !no_rerun),
        Command::Render { scenario, time, seed, depth, class } => render_scene(scenario, *time, *seed, depth, class),
        Command::Report { input } => report(input),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
