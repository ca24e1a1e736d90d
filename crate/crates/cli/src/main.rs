//! Command-line entry point: one subcommand per pipeline stage, each writing
//! CSV/TSV outputs and a `manifest.json` into `--out`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use tempinf::baselines::FactorConfig;
use tempinf::corpus::{
    apply_frequency_filter_scoped, corpus_stats, write_edges, write_histogram_csv, write_scrobbles,
    FrequencyScope, ParsedCorpus,
};
use tempinf::evaluation::{
    run_evaluation, sweep_tau, write_sweep_csv, BlendSpec, EvalConfig, StandardSetup,
};
use tempinf::influence_analysis::{
    delay_cdf, effectivity_curve_with_support, extract_influence_events, fit_log_decay,
    geometric_grid, write_curve_csv, write_events_csv, NonFriendSampling,
};
use tempinf::influence_rec::{InfluenceConfig, InfluenceState};
use tempinf::synthgen::{generate, GenConfig};
use tempinf::WEEK;

#[derive(Debug, Parser)]
#[command(
    name = "tempinf",
    version,
    about = "Temporal social influence in listening logs"
)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Corpus statistics and histograms.
    Stats(StatsArgs),
    /// Friend versus all-user delay CDFs, effectivity curve and its log fit.
    Influence(InfluenceArgs),
    /// Streaming DCG@K evaluation of recommenders and blends.
    Evaluate(EvaluateArgs),
    /// Blend-weight sweep over the simplex, optionally for several time frames.
    Sweep(SweepArgs),
    /// Synthetic graph and timeline.
    Generate(GenerateArgs),
}

#[derive(Debug, Args, Serialize)]
struct CorpusArgs {
    /// `user<TAB>artist<TAB>unix_seconds` lines.
    #[arg(long)]
    scrobbles: PathBuf,
    /// `userA<TAB>userB<TAB>unix_seconds` lines.
    #[arg(long)]
    edges: PathBuf,
    /// Drop artists with at most this many scrobbles.
    #[arg(long, default_value_t = 14)]
    min_artist_count: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct StatsArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Debug, Args, Serialize)]
struct InfluenceArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Largest delay threshold of the curves, seconds.
    #[arg(long, default_value_t = WEEK)]
    tau: i64,
    #[arg(long, default_value_t = 64)]
    points_per_decade: usize,
    /// Sample at most this many non-friend prior scrobblers per adoption.
    #[arg(long)]
    max_non_friends: Option<usize>,
    /// Omit effectivity points backed by fewer friend events.
    #[arg(long, default_value_t = 1)]
    min_friend_support: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = WEEK)]
    tau: i64,
    #[arg(long, value_delimiter = ',', default_value = "20,100")]
    k: Vec<usize>,
    /// End of training; the test range starts here unless `--test-start` is given.
    #[arg(long)]
    train_end: i64,
    #[arg(long)]
    test_start: Option<i64>,
    #[arg(long)]
    test_end: Option<i64>,
    #[arg(long, num_args = 0..=1, default_value_t = true, default_missing_value = "true")]
    first_time_only: bool,
    #[arg(long, default_value_t = WEEK)]
    retrain_interval: i64,
    /// Count artist frequencies before `--train-end` only.
    #[arg(long)]
    filter_training_only: bool,
    /// Factor model feature count.
    #[arg(long, default_value_t = 20)]
    features: usize,
    #[arg(long, default_value_t = 0.001)]
    learning_rate: f64,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "factor,popularity,influence"
    )]
    recommenders: Vec<String>,
    /// Reciprocal-rank blend such as `factor:0.7,popularity:0.3`; repeatable.
    #[arg(long)]
    blend: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "factor,popularity,influence"
    )]
    components: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Time frames to sweep; the popularity window and influence frame share each value.
    #[arg(long, value_delimiter = ',')]
    taus: Vec<i64>,
}

#[derive(Debug, Args, Serialize)]
struct GenerateArgs {
    /// Flat `key = value` file with generator fields; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct RunManifest<'a, P: Serialize> {
    subcommand: &'a str,
    parameters: &'a P,
    inputs: BTreeMap<String, String>,
    seed: Option<u64>,
    version: &'static str,
    duration_seconds: f64,
}

fn digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_manifest<P: Serialize>(
    out: &Path,
    subcommand: &str,
    parameters: &P,
    inputs: &[&Path],
    seed: Option<u64>,
    started: Instant,
) -> Result<()> {
    let inputs = inputs
        .iter()
        .map(|p| Ok((p.display().to_string(), digest(p)?)))
        .collect::<Result<_>>()?;
    let manifest = RunManifest {
        subcommand,
        parameters,
        inputs,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    let file = create(&out.join("manifest.json"))?;
    serde_json::to_writer_pretty(file, &manifest)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn load(args: &CorpusArgs, scope: FrequencyScope) -> Result<ParsedCorpus> {
    let mut corpus =
        ParsedCorpus::read(open(&args.scrobbles)?, open(&args.edges)?).context("parsing corpus")?;
    corpus.log = apply_frequency_filter_scoped(&corpus.log, args.min_artist_count, scope);
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    Ok(corpus)
}

fn run_stats(args: &StatsArgs) -> Result<()> {
    let started = Instant::now();
    let corpus = load(&args.corpus, FrequencyScope::Whole)?;
    let stats = corpus_stats(&corpus.log, &corpus.graph);
    let out = &args.corpus.out;
    stats.write_summary_csv(create(&out.join("stats.csv"))?)?;
    for (name, rows) in stats.histograms() {
        write_histogram_csv(&rows, create(&out.join(format!("{name}.csv")))?)?;
    }
    write_manifest(
        out,
        "stats",
        args,
        &[&args.corpus.scrobbles, &args.corpus.edges],
        None,
        started,
    )
}

fn run_influence(args: &InfluenceArgs) -> Result<()> {
    let started = Instant::now();
    let corpus = load(&args.corpus, FrequencyScope::Whole)?;
    let out = &args.corpus.out;
    let sampling = match args.max_non_friends {
        Some(max) => NonFriendSampling::AtMost {
            max,
            seed: args.seed,
        },
        None => NonFriendSampling::Unbounded,
    };
    let events = extract_influence_events(&corpus.log, &corpus.graph, sampling);
    write_events_csv(&events, create(&out.join("events.csv"))?)?;

    let grid = geometric_grid(args.tau, args.points_per_decade);
    let cdf_f = delay_cdf(&events, true, &grid)?;
    let cdf_a = delay_cdf(&events, false, &grid)?;
    write_curve_csv(
        &grid,
        &cdf_f.values(),
        create(&out.join("cdf_friends.csv"))?,
    )?;
    write_curve_csv(&grid, &cdf_a.values(), create(&out.join("cdf_all.csv"))?)?;
    let curve = effectivity_curve_with_support(&cdf_f, &cdf_a, args.min_friend_support)?;
    write_curve_csv(
        &curve.grid,
        &curve.eff,
        create(&out.join("effectivity.csv"))?,
    )?;
    let fit = fit_log_decay(&curve)?;
    let mut w = create(&out.join("logfit.csv"))?;
    writeln!(w, "key,value")?;
    writeln!(w, "intercept,{}", fit.intercept)?;
    writeln!(w, "slope,{}", fit.slope)?;
    writeln!(w, "r_squared,{}", fit.r_squared)?;
    w.flush()?;

    let mut state = InfluenceState::new(InfluenceConfig::new(args.tau)?);
    let mut edges = corpus.graph.edges().iter().peekable();
    for s in corpus.log.events() {
        while let Some(e) = edges.next_if(|e| e.created_at < s.timestamp) {
            state.observe_friendship(e.a, e.b, e.created_at)?;
        }
        state.observe_scrobble(s.user, s.artist, s.timestamp);
    }
    state
        .strengths()
        .write_csv(create(&out.join("strengths.csv"))?)?;

    write_manifest(
        out,
        "influence",
        args,
        &[&args.corpus.scrobbles, &args.corpus.edges],
        Some(args.seed),
        started,
    )
}

impl EvalArgs {
    fn config(&self) -> EvalConfig {
        let mut config = EvalConfig::new(self.train_end);
        if let Some(start) = self.test_start {
            config.test_start = start;
        }
        if let Some(end) = self.test_end {
            config.test_end = end;
        }
        config.k_values = self.k.clone();
        config.tau = self.tau;
        config.retrain_interval = self.retrain_interval;
        config.first_time_only = self.first_time_only;
        config
    }

    fn factor(&self) -> FactorConfig {
        FactorConfig {
            num_features: self.features,
            learning_rate: self.learning_rate,
            epochs_per_feature: self.epochs,
            rng_seed: self.seed,
            ..FactorConfig::default()
        }
    }

    fn load(&self) -> Result<ParsedCorpus> {
        let scope = if self.filter_training_only {
            FrequencyScope::Before(self.train_end)
        } else {
            FrequencyScope::Whole
        };
        load(&self.corpus, scope)
    }
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let started = Instant::now();
    let corpus = args.eval.load()?;
    let config = args.eval.config();
    let names: Vec<&str> = args.recommenders.iter().map(String::as_str).collect();
    let mut recommenders = StandardSetup::from_eval(&config, args.eval.factor()).build(&names)?;
    let blends = args
        .blend
        .iter()
        .map(|b| BlendSpec::parse(b))
        .collect::<tempinf::Result<Vec<_>>>()?;
    let report = run_evaluation(
        &corpus.log,
        &corpus.graph,
        &mut recommenders,
        &blends,
        &config,
    )?;

    let out = &args.eval.corpus.out;
    report.write_per_event_csv(create(&out.join("per_event.csv"))?, Some(&corpus.vocab))?;
    report.write_daily_csv(create(&out.join("daily.csv"))?)?;
    report.write_monthly_csv(create(&out.join("monthly.csv"))?)?;
    write_manifest(
        out,
        "evaluate",
        args,
        &[&args.eval.corpus.scrobbles, &args.eval.corpus.edges],
        Some(args.eval.seed),
        started,
    )
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let started = Instant::now();
    if args.components.is_empty() {
        bail!("--components needs at least one recommender");
    }
    let corpus = args.eval.load()?;
    let config = args.eval.config();
    let taus = if args.taus.is_empty() {
        vec![args.eval.tau]
    } else {
        args.taus.clone()
    };
    let names: Vec<&str> = args.components.iter().map(String::as_str).collect();
    let sweeps = sweep_tau(
        &corpus.log,
        &corpus.graph,
        &names,
        args.eval.factor(),
        &config,
        &taus,
        args.step,
    )?;
    let out = &args.eval.corpus.out;
    write_sweep_csv(
        create(&out.join("sweep.csv"))?,
        &args.components,
        &config.k_values,
        &sweeps,
    )?;
    write_manifest(
        out,
        "sweep",
        args,
        &[&args.eval.corpus.scrobbles, &args.eval.corpus.edges],
        Some(args.eval.seed),
        started,
    )
}

fn run_generate(args: &GenerateArgs) -> Result<()> {
    let started = Instant::now();
    let mut config: GenConfig = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => GenConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let corpus = generate(&config)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut w = create(&args.out.join("scrobbles.tsv"))?;
    write_scrobbles(&corpus.log, &corpus.vocab, &mut w)?;
    w.flush()?;
    let mut w = create(&args.out.join("edges.tsv"))?;
    write_edges(&corpus.graph, &corpus.vocab, &mut w)?;
    w.flush()?;
    let mut w = create(&args.out.join("ground_truth.csv"))?;
    corpus.truth.write_csv(&corpus.log, &corpus.vocab, &mut w)?;
    w.flush()?;

    #[derive(Serialize)]
    struct Resolved<'a> {
        config_file: Option<&'a Path>,
        generator: &'a GenConfig,
    }
    let inputs: Vec<&Path> = args.config.iter().map(PathBuf::as_path).collect();
    write_manifest(
        &args.out,
        "generate",
        &Resolved {
            config_file: args.config.as_deref(),
            generator: &config,
        },
        &inputs,
        Some(config.seed),
        started,
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Stats(args) => run_stats(args),
        Command::Influence(args) => run_influence(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Generate(args) => run_generate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
