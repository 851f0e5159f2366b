use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::bail;
use clap::{Args, Parser, Subcommand};
use crisis_ssl::aggregate::aggregate;
use crisis_ssl::cache::AnnotationCache;
use crisis_ssl::config::{ExperimentConfig, OracleKind, SyntheticEvent};
use crisis_ssl::core::corpus::make_split_plan;
use crisis_ssl::core::oracle::{annotate_simulated, annotate_teacher};
use crisis_ssl::core::strategies::{run_supervised, RunSettings, SslTask, StrategyId};
use crisis_ssl::core::synthetic::generate_topic_corpus;
use crisis_ssl::export::{ablation, ablation_csv, event_grids};
use crisis_ssl::remote::{annotate_remote, AnnotationRequest};
use crisis_ssl::runner::{load_results, run_experiment_with, RunOptions};
use crisis_ssl::{io, Error};

#[derive(Parser)]
#[command(name = "crisis-ssl", version, about = "Semi-supervised crisis tweet classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write labeled/unlabeled split records for every event, budget and seed.
    Split(GridArgs),
    /// Write oracle pseudo-labels for every D_U of the grid.
    PseudoLabel(GridArgs),
    /// Execute the experiment grid, resuming from the manifest.
    Run(RunArgs),
    /// Print Macro-F1 and ECE tables from finished runs.
    Aggregate(OutArgs),
    /// Write per-event CSV grids and the LG/SG ablation.
    Export(ExportArgs),
    /// Generate a synthetic corpus directory.
    SyntheticCorpus(SynthArgs),
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated seeds overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, value_parser = ["teacher", "remote", "simulated"])]
    oracle: Option<String>,
    /// Remote endpoint base URL.
    #[arg(long)]
    endpoint: Option<String>,
    /// Output directory overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    workers: Option<usize>,
    /// Stop after executing this many runs.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory of a run.
    #[arg(long)]
    out: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    out: PathBuf,
    /// Budget of the ablation table; defaults to the smallest budget.
    #[arg(long)]
    ablation_budget: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    train: usize,
    #[arg(long, default_value_t = 750)]
    val: usize,
    #[arg(long, default_value_t = 1500)]
    test: usize,
}

fn load_config(args: &GridArgs) -> anyhow::Result<ExperimentConfig> {
    let text = io::read_text(&args.config)?;
    let mut config = ExperimentConfig::from_toml(&text)?;
    config.resolve_paths(args.config.parent().unwrap_or(Path::new("")));
    if let Some(seeds) = &args.seeds {
        config.seeds = seeds.clone();
    }
    if let Some(kind) = &args.oracle {
        config.oracle.kind = kind.parse()?;
    }
    if let Some(endpoint) = &args.endpoint {
        config.oracle.remote.endpoint = endpoint.clone();
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn split(args: &GridArgs) -> anyhow::Result<()> {
    let config = load_config(args)?;
    let schema = config.label_schema()?;
    for event in &config.events {
        let corpus = event.load(&schema)?;
        for &k in &config.budgets {
            for &seed in &config.seeds {
                let plan = make_split_plan(&corpus, k, seed)?;
                let path = config.output_dir.join("splits").join(&event.name).join(format!("k{k}_s{seed}.tsv"));
                io::write_split(&path, &plan, &corpus)?;
                println!("{}\tk={k}\tseed={seed}\tn_L={}\tn_U={}", event.name, plan.n_labeled(), plan.n_unlabeled());
            }
        }
    }
    Ok(())
}

fn pseudo_label(args: &GridArgs) -> anyhow::Result<()> {
    let config = load_config(args)?;
    let schema = config.label_schema()?;
    let mut cache = match config.oracle.kind {
        OracleKind::Remote => Some(AnnotationCache::open(&config.cache_path())?),
        _ => None,
    };
    for event in &config.events {
        let corpus = event.load(&schema)?;
        for &k in &config.budgets {
            for &seed in &config.seeds {
                let plan = make_split_plan(&corpus, k, seed)?;
                let task = SslTask::from_split(&corpus, &plan, &config.featurizer)?;
                let labels = match config.oracle.kind {
                    OracleKind::Simulated => {
                        let profile = config.oracle.profile(schema.len(), seed)?;
                        annotate_simulated(task.unlabeled.iter().map(|p| (p.id.as_str(), p.gold)), &profile, &task.active_classes)?
                    }
                    OracleKind::Teacher => {
                        let settings = RunSettings::new(
                            config.model.clone(),
                            config.train.clone(),
                            config.strategy_config(StrategyId::Supervised),
                            seed,
                        );
                        let teacher = run_supervised(&task, &settings)?.params;
                        annotate_teacher(&teacher, task.unlabeled.iter().map(|p| (p.id.as_str(), &p.features)))?
                    }
                    OracleKind::Remote => {
                        if task.unlabeled.is_empty() {
                            Vec::new()
                        } else {
                            let text_of = |id: &str| corpus.train.iter().find(|e| e.id == id).map(|e| e.text.clone());
                            let request = AnnotationRequest {
                                settings: config.oracle.remote.clone(),
                                template: config.oracle.template(&schema),
                                schema: schema.clone(),
                                batch: task
                                    .unlabeled
                                    .iter()
                                    .map(|p| (p.id.clone(), text_of(&p.id).unwrap_or_default()))
                                    .collect(),
                            };
                            let outcome = annotate_remote(&request, cache.as_mut().expect("remote cache is open"))?;
                            eprintln!(
                                "{}: k={k} seed={seed}: {} requests, {} cache hits, {} failures",
                                event.name,
                                outcome.network_requests,
                                outcome.cache_hits,
                                outcome.failures.len()
                            );
                            outcome.labels
                        }
                    }
                };
                let path = config
                    .output_dir
                    .join("pseudo-labels")
                    .join(&event.name)
                    .join(format!("k{k}_s{seed}.tsv"));
                io::write_text(&path, &io::render_pseudo_labels_tsv(&labels, &schema))?;
                let oos = labels.iter().filter(|l| l.is_oos()).count();
                println!("{}\tk={k}\tseed={seed}\tlabels={}\toos={oos}", event.name, labels.len());
            }
        }
    }
    Ok(())
}

fn run(args: &RunArgs) -> anyhow::Result<bool> {
    let mut config = load_config(&args.grid)?;
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let summary = run_experiment_with(&config, &RunOptions { limit: args.limit })?;
    eprintln!(
        "{} runs executed, {} resumed, {} failed, {} pending",
        summary.executed,
        summary.resumed,
        summary.failures.len(),
        summary.remaining
    );
    for (key, error) in &summary.failures {
        eprintln!("FAILED {}: {error}", key.id());
    }
    if !summary.results.is_empty() {
        let table = aggregate(&summary.results);
        io::write_text(&config.output_dir.join("aggregate.json"), &(table.to_json() + "\n"))?;
        io::write_text(&config.output_dir.join("aggregate.txt"), &table.render_text())?;
        print!("{}", table.render_text());
    }
    Ok(summary.failures.is_empty())
}

fn aggregate_cmd(args: &OutArgs) -> anyhow::Result<()> {
    let results = load_results(&args.out)?;
    if results.is_empty() {
        bail!("no finished runs under {}", args.out.display());
    }
    let table = aggregate(&results);
    if args.json {
        println!("{}", table.to_json());
    } else {
        print!("{}", table.render_text());
    }
    Ok(())
}

fn export(args: &ExportArgs) -> anyhow::Result<()> {
    let results = load_results(&args.out)?;
    if results.is_empty() {
        bail!("no finished runs under {}", args.out.display());
    }
    let dir = args.out.join("exports");
    for grid in event_grids(&results) {
        let path = dir.join(format!("event-grid-k{}.csv", grid.budget));
        io::write_text(&path, &grid.to_csv())?;
        println!("{}", path.display());
    }
    let budget = match args.ablation_budget {
        Some(b) => b,
        None => results.iter().map(|r| r.key.budget).min().expect("results are non-empty"),
    };
    let rows = ablation(&results, budget);
    if rows.is_empty() {
        eprintln!("no events ran both LG-CoTrain and SG-CoTrain at {budget} lb/cl; ablation skipped");
    } else {
        let path = dir.join(format!("ablation-k{budget}.csv"));
        io::write_text(&path, &ablation_csv(&rows))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn synthetic_corpus(args: &SynthArgs) -> anyhow::Result<()> {
    let name = args.out.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "synthetic".into());
    let spec = SyntheticEvent { seed: args.seed, train: args.train, val: args.val, test: args.test, ..Default::default() }
        .spec(&name);
    let corpus = generate_topic_corpus(&spec, &crisis_ssl::core::corpus::humaid_schema()).map_err(Error::from)?;
    io::write_corpus_dir(&args.out, &corpus)?;
    println!("{}: {} train, {} val, {} test", args.out.display(), corpus.train.len(), corpus.val.len(), corpus.test.len());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Split(a) => split(a).map(|_| true),
        Command::PseudoLabel(a) => pseudo_label(a).map(|_| true),
        Command::Run(a) => run(a),
        Command::Aggregate(a) => aggregate_cmd(a).map(|_| true),
        Command::Export(a) => export(a).map(|_| true),
        Command::SyntheticCorpus(a) => synthetic_corpus(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
