use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hjcost::analysis::ReportOptions;
use hjcost::bootstrap::{bootstrap_profile, BenchConfig, WORKERS_ENV};
use hjcost::exec::{Database, HashKind};
use hjcost::experiment::{
    compare, pipeline_rows, predict_rows, read_csv, run_rows, write_csv, ExperimentConfig, OracleMode, PipelineMeasure,
    PredictRow, RunRow, RunSettings,
};
use hjcost::plan_space::{enumerate_plans, ChainQuery};
use hjcost::{MachineProfile, SwMode};

/// Predict and measure the cost of multi-join hash plans over
/// memory-resident data.
#[derive(Parser)]
#[command(name = "hjcost", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Machine profile (JSON); defaults to the reference Intel weights.
    #[arg(long, global = true)]
    profile: Option<PathBuf>,
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Repetitions per measurement.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Multiplies every cardinality, keeping ratios.
    #[arg(long, global = true)]
    scale: Option<f64>,
    /// How build-side sequential writes are counted: table or literal.
    #[arg(long, global = true)]
    sw_mode: Option<SwMode>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate the four access-pattern weights of this host.
    Bootstrap {
        /// Per-worker array size in MiB (power of two).
        #[arg(long, default_value_t = 128)]
        array_mib: u64,
        #[arg(long, default_value_t = 64)]
        cache_line: u64,
        #[arg(long, default_value = "local")]
        label: String,
    },
    /// List every plan of the configured chain.
    Enumerate,
    /// Predicted access counts and cost per plan.
    Predict,
    /// Execute every plan and record times and oracle counts.
    Run {
        #[arg(long)]
        no_prefetch: bool,
        #[arg(long)]
        hash: Option<HashKind>,
        /// none, stats or data.
        #[arg(long)]
        oracle: Option<String>,
        /// Run only these plans (repeatable).
        #[arg(long = "plan")]
        plans: Vec<String>,
    },
    /// Accuracy report of a prediction CSV against a run CSV.
    Compare {
        predict: PathBuf,
        run: PathBuf,
        /// Plan whose values normalize the slowdown columns.
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Left-deep vs right-deep trees as the number of joins grows.
    Pipeline {
        #[arg(long, default_value_t = 9)]
        max_joins: usize,
        #[arg(long, default_value_t = 1 << 30)]
        largest: u64,
        #[arg(long, default_value_t = 4)]
        ratio: u64,
        /// Also execute both trees (at `--scale`).
        #[arg(long)]
        measure: bool,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => ExperimentConfig::new(ChainQuery::ratio_chain(2_048_000_000, 4, 4)?),
    };
    if let Some(p) = &c.profile {
        cfg.profile = Some(p.clone());
    }
    if let Some(w) = c.workers {
        cfg.workers = Some(w);
    }
    if let Some(r) = c.reps {
        cfg.repetitions = r;
    }
    if let Some(s) = c.scale {
        cfg.scale = s;
    }
    if let Some(m) = c.sw_mode {
        cfg.sw_mode = m;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path<'a>(c: &'a Common, fallback: Option<&'a PathBuf>) -> Option<&'a Path> {
    c.out.as_deref().or(fallback.map(PathBuf::as_path))
}

fn profile_for(cfg: &ExperimentConfig) -> Result<MachineProfile> {
    let p = cfg.machine_profile()?;
    if cfg.profile.is_none() {
        eprintln!("no profile given; using reference weights {:?}", p.weights);
    }
    Ok(p)
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        let closed = e.chain().any(|c| c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe));
        if !closed {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}

fn run(Cli { common: c, command }: Cli) -> Result<()> {
    match command {
        Command::Bootstrap { array_mib, cache_line, label } => {
            let mut cfg = BenchConfig { array_bytes: array_mib << 20, cache_line_bytes: cache_line, ..BenchConfig::default() };
            if let Some(w) = c.workers {
                cfg.worker_count = w;
            }
            if let Some(r) = c.reps {
                cfg.repetitions = r;
            }
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            let profile = bootstrap_profile(&cfg, label)?;
            for note in profile.bootstrap.iter().flat_map(|m| &m.notes) {
                eprintln!("warning: {note}");
            }
            let mut out = output(c.out.as_deref())?;
            writeln!(out, "{}", profile.to_json()?)?;
        }
        Command::Enumerate => {
            let cfg = load_config(&c)?;
            let mut plans = enumerate_plans(&cfg.scaled_query()?)?;
            plans.sort_by(|a, b| a.name.cmp(&b.name));
            let mut out = output(c.out.as_deref())?;
            writeln!(out, "plan,tree")?;
            for p in plans {
                writeln!(out, "{},{}", p.name, hjcost::plan_space::PlanShape::of(&p.plan).to_text())?;
            }
        }
        Command::Predict => {
            let cfg = load_config(&c)?;
            let profile = profile_for(&cfg)?;
            let rows = predict_rows(&cfg.scaled_query()?, &profile, cfg.sw_mode, cfg.page_bytes)?;
            write_csv(&rows, output(out_path(&c, cfg.outputs.predict.as_ref()))?)?;
        }
        Command::Run { no_prefetch, hash, oracle, plans } => {
            let mut cfg = load_config(&c)?;
            if no_prefetch {
                cfg.prefetch = false;
            }
            if let Some(h) = hash {
                cfg.hash = h;
            }
            if let Some(o) = oracle {
                cfg.oracle = match o.as_str() {
                    "none" => OracleMode::None,
                    "stats" => OracleMode::Stats,
                    "data" => OracleMode::Data,
                    other => bail!("unknown oracle {other:?} (expected none|stats|data)"),
                };
            }
            let q = cfg.scaled_query()?;
            let profile = profile_for(&cfg)?;
            eprintln!("generating data (seed {})", cfg.seed);
            let db = Database::generate(&q, cfg.seed)?;
            let mut settings = RunSettings::from_config(&cfg, profile.cache_line_bytes);
            if !plans.is_empty() {
                settings.only = Some(plans);
            }
            let rows = run_rows(&q, &db, &settings, |r| eprintln!("{:>8} {:.4} s", r.plan, r.mean_seconds))?;
            write_csv(&rows, output(out_path(&c, cfg.outputs.run.as_ref()))?)?;
        }
        Command::Compare { predict, run, baseline } => {
            let pred: Vec<PredictRow> = read_csv(File::open(&predict).with_context(|| format!("opening {}", predict.display()))?)?;
            let obs: Vec<RunRow> = read_csv(File::open(&run).with_context(|| format!("opening {}", run.display()))?)?;
            let opts = ReportOptions { baseline, ..ReportOptions::default() };
            let cmp = compare(&pred, &obs, &opts)?;
            let to_file = c.out.is_some();
            cmp.memory.write_csv(output(c.out.as_deref())?)?;
            let mut summary = format!("memory: {}", cmp.memory.summary());
            if let Some((fit, report)) = &cmp.disk {
                summary.push_str(&format!("\ndisk: c_s={:.6e} c_r={:.6e} {}", fit.c_s, fit.c_r, report.summary()));
            }
            if to_file {
                println!("{summary}");
            } else {
                eprintln!("{summary}");
            }
        }
        Command::Pipeline { max_joins, largest, ratio, measure } => {
            let cfg = load_config(&c)?;
            let profile = profile_for(&cfg)?;
            let m = measure.then(|| PipelineMeasure { exec: cfg.exec_options(), repetitions: cfg.repetitions, seed: cfg.seed });
            let largest = if measure { ((largest as f64) * cfg.scale).round().max(1.0) as u64 } else { largest };
            let rows = pipeline_rows(largest, ratio, max_joins, &profile, cfg.sw_mode, m.as_ref())?;
            write_csv(&rows, output(c.out.as_deref())?)?;
        }
    }
    Ok(())
}
