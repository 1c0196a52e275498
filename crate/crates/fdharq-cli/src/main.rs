//! Command-line front end: run experiments to CSV, list the built-in set,
//! and dump the multi-process HARQ transmission schedule.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use fdharq::channel::RedrawPolicy;
use fdharq::experiment::{
    self, Backend, Experiment, ExperimentKind, RunOutput, SweepVariable,
};
use fdharq::montecarlo::DecodeCriterion;
use fdharq::quad::{QuadratureSpec, SingularityPolicy};
use fdharq::timeline::{self, RttModel};

#[derive(Parser)]
#[command(
    name = "fdharq",
    version,
    about = "Outage and latency tables for a full-duplex relay HARQ link"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a built-in experiment or a JSON experiment file
    Run(RunArgs),
    /// List the built-in experiments
    List,
    /// Print the transmission schedule for parallel stop-and-wait processes
    Schedule(ScheduleArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Built-in experiment name (see `list`) or path to a JSON file
    target: String,
    /// Override the experiment's backend
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Override the Monte-Carlo trial count
    #[arg(long)]
    trials: Option<u64>,
    /// Override the simulation seed
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for the CSV and its JSON sidecar
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the retransmission fading policy
    #[arg(long, value_enum)]
    redraw: Option<RedrawArg>,
    /// Decode from the exact per-tone mutual information instead of the
    /// block-SINR shortcut (simulation only)
    #[arg(long)]
    exact_mi: bool,
    /// Split reduced-form integrals at the removable pole instead of
    /// delegating the affected case to the two-dimensional route
    #[arg(long)]
    split_at_pole: bool,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Number of interleaved stop-and-wait processes
    #[arg(long, default_value_t = 4)]
    processes: u32,
    /// Schedule length in transmission intervals
    #[arg(long, default_value_t = 16)]
    horizon: u32,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Analytic,
    Mc,
    Both,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Analytic => Backend::Analytic,
            BackendArg::Mc => Backend::Montecarlo,
            BackendArg::Both => Backend::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RedrawArg {
    Reuse,
    Fresh,
}

impl From<RedrawArg> for RedrawPolicy {
    fn from(r: RedrawArg) -> Self {
        match r {
            RedrawArg::Reuse => RedrawPolicy::Reuse,
            RedrawArg::Fresh => RedrawPolicy::Fresh,
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run(args) => run(args),
        Cmd::List => list(),
        Cmd::Schedule(args) => schedule(args),
    }
}

fn resolve_target(target: &str) -> Result<Experiment> {
    if let Some(exp) = experiment::builtin(target) {
        return Ok(exp);
    }
    let path = PathBuf::from(target);
    if path.exists() {
        let text = fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        // Accept both a bare experiment definition and a result sidecar
        // (which nests the definition under "experiment"), so a past run's
        // sidecar can be replayed directly.
        let exp = serde_json::from_str::<Experiment>(&text).or_else(|bare_err| {
            #[derive(serde::Deserialize)]
            struct Sidecar {
                experiment: Experiment,
            }
            serde_json::from_str::<Sidecar>(&text)
                .map(|s| s.experiment)
                .map_err(|_| bare_err)
        });
        return exp.with_context(|| format!("parsing {}", path.display()));
    }
    bail!("no built-in experiment named `{target}` and no such file; try `fdharq list`");
}

fn run(args: RunArgs) -> Result<()> {
    let mut exp = resolve_target(&args.target)?;
    if let Some(b) = args.backend {
        exp.backend = b.into();
    }
    if let Some(t) = args.trials {
        exp.n_trials = t;
    }
    if let Some(s) = args.seed {
        exp.seed = s;
    }
    if let Some(r) = args.redraw {
        exp.redraw = r.into();
    }
    if args.exact_mi {
        exp.criterion = DecodeCriterion::ExactMi;
    }
    let spec = QuadratureSpec {
        singularity_policy: if args.split_at_pole {
            SingularityPolicy::SplitAtPole
        } else {
            SingularityPolicy::FallbackTo2D
        },
        ..QuadratureSpec::default()
    };

    let output = experiment::run_experiment(&exp, &spec)?;
    let csv = experiment::render_csv(&output);
    let (rows, notes) = match &output {
        RunOutput::Outage(rows) => (rows.len(), rows.iter().filter(|r| r.note.is_some()).count()),
        RunOutput::Latency(rows) => (rows.len(), 0),
    };

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let csv_path = args.out.join(format!("{}.csv", exp.name));
    fs::write(&csv_path, &csv).with_context(|| format!("writing {}", csv_path.display()))?;

    let digest = Sha256::digest(csv.as_bytes());
    let sidecar = serde_json::json!({
        "experiment": exp,
        "csv_sha256": format!("{digest:x}"),
        "generator": format!("fdharq {}", env!("CARGO_PKG_VERSION")),
    });
    let json_path = args.out.join(format!("{}.json", exp.name));
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)
        .with_context(|| format!("writing {}", json_path.display()))?;

    println!("wrote {} ({rows} rows, sha256 {digest:x})", csv_path.display());
    println!("wrote {}", json_path.display());
    if notes > 0 {
        println!("note: {notes} row(s) carry diagnostics; see the `note` column");
    }
    Ok(())
}

fn list() -> Result<()> {
    for e in experiment::builtin_experiments() {
        let kind = match e.kind {
            ExperimentKind::OutageSweep => "outage",
            ExperimentKind::LatencyCurve { .. } => "latency",
        };
        let var = match e.sweep_variable {
            SweepVariable::Rate => "rate",
            SweepVariable::VarSd => "direct-link gain",
            SweepVariable::VarSrRd => "relay-link gains",
            SweepVariable::Power => "transmit power",
        };
        println!(
            "{:26} {:8} {:16} {:3} points, {} scheme(s)",
            e.name,
            kind,
            var,
            e.sweep_grid.len(),
            e.schemes.len()
        );
    }
    Ok(())
}

fn schedule(args: ScheduleArgs) -> Result<()> {
    let model = RttModel::default();
    let sched = timeline::multiprocess_schedule(&model, args.processes, args.horizon)?;
    let csv = timeline::schedule_csv(&sched);
    match args.out {
        Some(path) => {
            fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
            println!(
                "wrote {} ({} entries, {} processes)",
                path.display(),
                sched.entries.len(),
                sched.n_processes
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}
