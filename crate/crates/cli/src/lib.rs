//! `mammo-eval`: ingest, preprocess, infer, concordance, evaluate, report, serve.

pub mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use mammo_core::manifest::Manifest;
use mammo_core::pipeline::{self, InferSource, StageOptions, StageSummary};
use mammo_core::report::{render_markdown, ReportFormat};
use mammo_core::store::Store;
use mammo_core::synth::{write_dataset, SYNTH_CASES};
use mammo_service::ServiceConfig;

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "mammo-eval", version, about = "Mammography CAD validation workbench")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Store directory holding all intermediate and study files.
    #[arg(long, global = true, env = "MMG_EVAL_STORE")]
    pub store: Option<PathBuf>,
    /// Worker threads for per-case stages.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for bootstrap resampling, reviewer queues and synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct StageFlags {
    /// Recompute outputs that already exist.
    #[arg(long)]
    pub force: bool,
    /// Process every case and list all failures at the end.
    #[arg(long)]
    pub keep_going: bool,
}

impl From<StageFlags> for StageOptions {
    fn from(f: StageFlags) -> Self {
        StageOptions { force: f.force, keep_going: f.keep_going }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a manifest and record it in the store.
    Ingest { manifest: PathBuf },
    /// Crop, pad and resize every view to the canonical frame.
    Preprocess {
        #[command(flatten)]
        stage: StageFlags,
    },
    /// Score every case with the built-in baseline or load external prediction bundles.
    Infer {
        #[arg(long, conflicts_with = "bundle", required_unless_present = "bundle")]
        baseline: bool,
        /// Directory with one bundle per case id.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[command(flatten)]
        stage: StageFlags,
    },
    /// Compare model output with the reports and write the concordance log.
    Concordance,
    /// Compute all metrics and print the report.
    Evaluate {
        /// Print JSON instead of Markdown.
        #[arg(long)]
        json: bool,
    },
    /// Write report files.
    Report {
        /// Output directory; defaults to `<store>/report`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Formats to write: csv, md, json. Defaults to all.
        #[arg(long, value_delimiter = ',')]
        format: Vec<ReportFormat>,
    },
    /// Serve the review API and, optionally, the built review UI.
    Serve {
        #[arg(long, env = "MMG_EVAL_PORT")]
        port: Option<u16>,
        /// Include ground truth in case details.
        #[arg(long)]
        unblinded: bool,
        /// Reviewer id; repeat for each reviewer.
        #[arg(long = "reviewer")]
        reviewers: Vec<String>,
        /// Directory with the built review UI.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Write a synthetic dataset with a manifest.
    Synth {
        out: PathBuf,
        #[arg(long, default_value_t = SYNTH_CASES)]
        cases: usize,
    },
    /// Ingest through report in one go, using the baseline unless a bundle is given.
    Run {
        manifest: PathBuf,
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        stage: StageFlags,
    },
}

struct Ctx {
    cfg: RunConfig,
    store: Option<PathBuf>,
}

impl Ctx {
    fn store_path(&self) -> anyhow::Result<&Path> {
        self.store.as_deref().context("no store given; pass --store, set MMG_EVAL_STORE or add `store` to the config")
    }

    fn open(&self) -> anyhow::Result<(Store, Manifest)> {
        let store = Store::open(self.store_path()?)?;
        let manifest = store.load_manifest()?;
        Ok((store, manifest))
    }
}

fn resolve(cli: &Cli) -> anyhow::Result<Ctx> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed.or(cfg.seed) {
        cfg.seed = Some(seed);
        cfg.eval.bootstrap.seed = seed;
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    cfg.validate()?;
    let store = cli.store.clone().or_else(|| cfg.store.clone());
    Ok(Ctx { cfg, store })
}

fn print_summary(stage: &str, s: &StageSummary) -> bool {
    eprintln!("{stage}: {} processed, {} skipped, {} failed", s.processed.len(), s.skipped.len(), s.failed.len());
    for (case_id, message) in &s.failed {
        eprintln!("  {case_id}: {message}");
    }
    s.failed.is_empty()
}

/// Runs one command. Returns failure when any case failed under `--keep-going`.
pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let ctx = resolve(&cli)?;
    let jobs = ctx.cfg.jobs;
    let work = move || execute(&cli.command, &ctx);
    let ok = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(work)?,
        None => work()?,
    };
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn execute(cmd: &Command, ctx: &Ctx) -> anyhow::Result<bool> {
    let cfg = &ctx.cfg;
    match cmd {
        Command::Ingest { manifest } => {
            let store = Store::create(ctx.store_path()?)?;
            let m = pipeline::ingest(&store, manifest)?;
            eprintln!("ingested {} cases from dataset {}", m.cases.len(), m.dataset_id);
            Ok(true)
        }
        Command::Preprocess { stage } => {
            let (store, manifest) = ctx.open()?;
            let s = pipeline::preprocess(&store, &manifest, &cfg.preprocess, (*stage).into())?;
            Ok(print_summary("preprocess", &s))
        }
        Command::Infer { baseline, bundle, stage } => {
            let source = match (baseline, bundle) {
                (true, None) => InferSource::Baseline(cfg.baseline),
                (false, Some(dir)) => InferSource::Bundle(dir.clone()),
                _ => bail!("pass exactly one of --baseline and --bundle"),
            };
            let (store, manifest) = ctx.open()?;
            let s = pipeline::infer(&store, &manifest, &source, &cfg.eval, (*stage).into())?;
            Ok(print_summary("infer", &s))
        }
        Command::Concordance => {
            let (store, manifest) = ctx.open()?;
            let records = pipeline::concordance(&store, &manifest, &cfg.eval)?;
            let auto = records.iter().filter(|r| r.auto_accepted()).count();
            eprintln!("concordance: {} cases, {auto} auto-accepted", records.len());
            Ok(true)
        }
        Command::Evaluate { json } => {
            let (store, manifest) = ctx.open()?;
            let report = pipeline::evaluate(&store, &manifest, &cfg.eval)?;
            if *json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", render_markdown(&report));
            }
            Ok(true)
        }
        Command::Report { out, format } => {
            let (store, manifest) = ctx.open()?;
            let out = out.clone().unwrap_or_else(|| store.report_dir());
            let formats = if format.is_empty() { ReportFormat::ALL.to_vec() } else { format.clone() };
            let (_, files) = pipeline::report(&store, &manifest, &cfg.eval, &out, &formats)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(true)
        }
        Command::Serve { port, unblinded, reviewers, ui } => {
            let mut sc = ServiceConfig::new(ctx.store_path()?);
            sc.port = port.unwrap_or(cfg.serve.port);
            sc.blinded = cfg.serve.blinded && !unblinded;
            sc.reviewers = cfg.serve.reviewers.iter().chain(reviewers).cloned().collect();
            if let Some(seed) = cfg.seed {
                sc.seed = seed;
            }
            sc.eval = cfg.eval.clone();
            sc.ui_dir = ui.clone().or_else(|| cfg.serve.ui_dir.clone());
            let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
            tokio::runtime::Runtime::new()?.block_on(mammo_service::serve(sc))?;
            Ok(true)
        }
        Command::Synth { out, cases } => {
            let seed = cfg.seed.unwrap_or(mammo_core::metrics::bootstrap::DEFAULT_SEED);
            let manifest = write_dataset(out, seed, *cases).with_context(|| format!("writing {}", out.display()))?;
            println!("{}", manifest.display());
            Ok(true)
        }
        Command::Run { manifest, bundle, out, stage } => {
            let store = Store::create(ctx.store_path()?)?;
            let m = pipeline::ingest(&store, manifest)?;
            let opts: StageOptions = (*stage).into();
            let pre = pipeline::preprocess(&store, &m, &cfg.preprocess, opts)?;
            let mut ok = print_summary("preprocess", &pre);
            let source = match bundle {
                Some(dir) => InferSource::Bundle(dir.clone()),
                None => InferSource::Baseline(cfg.baseline),
            };
            let inf = pipeline::infer(&store, &m, &source, &cfg.eval, opts)?;
            ok &= print_summary("infer", &inf);
            if !ok {
                bail!("stopping before evaluation because some cases failed");
            }
            pipeline::concordance(&store, &m, &cfg.eval)?;
            let out = out.clone().unwrap_or_else(|| store.report_dir());
            let (_, files) = pipeline::report(&store, &m, &cfg.eval, &out, &ReportFormat::ALL)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(true)
        }
    }
}
