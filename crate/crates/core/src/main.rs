use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use conslaw::benchmarks::{make_dataset, DatasetConfig, Problem, TrajectoryDataset};
use conslaw::metrics::{emit_report, evaluate_model, EvalSetup};
use conslaw::networks::load_checkpoint;
use conslaw::training::{train, CheckpointInfo, TrainConfig};

#[derive(Parser)]
#[command(name = "conslaw", version, about = "Learn conservation laws from trajectory data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training dataset with the reference solver.
    Gen {
        #[arg(long)]
        problem: Problem,
        /// Number of training trajectories.
        #[arg(long)]
        traj: usize,
        /// Relative noise level xi.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Cells per axis, e.g. `128` or `32,32`.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Simulated steps per trajectory.
        #[arg(long)]
        steps: Option<usize>,
        /// Validation trajectories.
        #[arg(long)]
        val: Option<usize>,
    },
    /// Train a model on a dataset directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// JSON training config; problem defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Roll a checkpoint out from the test initial condition and write metrics.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        problem: Option<Problem>,
        #[arg(long)]
        tfinal: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant checks.
    Selftest,
}

fn gen(
    problem: Problem,
    traj: usize,
    noise: f64,
    seed: u64,
    out: PathBuf,
    n: Option<Vec<usize>>,
    steps: Option<usize>,
    val: Option<usize>,
) -> Result<()> {
    let mut cfg = DatasetConfig::new(problem, traj, noise, seed);
    if let Some(n) = n {
        cfg.n = n;
    }
    if let Some(s) = steps {
        cfg.steps = s;
        cfg.window = cfg.window.min(s);
    }
    if let Some(v) = val {
        cfg.n_val = v;
    }
    let data = make_dataset(&cfg)?;
    data.save(&out).with_context(|| format!("writing {}", out.display()))?;
    eprintln!("wrote {} windows of {} cells to {}", data.n_windows(), data.n_cells(), out.display());
    Ok(())
}

fn run_train(data: PathBuf, config: Option<PathBuf>, out: PathBuf) -> Result<()> {
    let dataset = TrajectoryDataset::load(&data).with_context(|| format!("reading dataset {}", data.display()))?;
    let cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => TrainConfig::for_problem(dataset.manifest.problem),
    };
    let summary = train(&dataset, &cfg, &out, |e| {
        eprintln!(
            "epoch {:>4}  train {:.6e}  val {:.6e}  lr {:.3e}  {:.1} s",
            e.epoch, e.train_loss, e.val_loss, e.lr, e.seconds
        )
    })?;
    eprintln!("best validation loss {:.6e} at epoch {}", summary.best_val_loss, summary.best_epoch);
    Ok(())
}

fn eval(checkpoint: PathBuf, problem: Option<Problem>, tfinal: Option<f64>, out: PathBuf) -> Result<()> {
    let (model, meta) =
        load_checkpoint(&checkpoint).with_context(|| format!("reading checkpoint {}", checkpoint.display()))?;
    let info: CheckpointInfo =
        serde_json::from_value(meta.info).context("checkpoint has no training info (problem, grid, dt)")?;
    if let Some(p) = problem {
        if p != info.problem {
            bail!("checkpoint was trained on {}, not {p}", info.problem);
        }
    }
    let mut setup = EvalSetup::for_problem(info.problem, tfinal);
    setup.n = info.n;
    setup.dt = info.dt;
    setup.g = info.g;
    setup.xi = info.xi;
    setup.stabilizers = info.stabilizers;
    let ev = evaluate_model(&model, &setup, &checkpoint)?;
    let files = emit_report(&ev.report, &ev.profiles(&setup), &out)?;
    let r = &ev.report;
    eprintln!(
        "t = {}: relative L1 error {:.4e}, max entropy remainder {:.3e}; wrote {} files to {}",
        r.times.last().copied().unwrap_or(0.0),
        r.error.last().copied().unwrap_or(0.0),
        r.entropy_boundary.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        files.len(),
        out.display()
    );
    Ok(())
}

fn selftest() -> Result<()> {
    let mut failed = 0;
    for check in conslaw::selftest::run_all() {
        println!("{check}");
        failed += usize::from(!check.passed);
    }
    if failed > 0 {
        bail!("{failed} check(s) failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen { problem, traj, noise, seed, out, n, steps, val } => {
            gen(problem, traj, noise, seed, out, n, steps, val)
        }
        Command::Train { data, config, out } => run_train(data, config, out),
        Command::Eval { checkpoint, problem, tfinal, out } => eval(checkpoint, problem, tfinal, out),
        Command::Selftest => selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
