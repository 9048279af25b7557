//! `harness`: runs the image, feed and display-tradeoff studies and writes
//! per-run CSV rows plus a JSON summary next to them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use limeade_core::harness::corpus::{gen_corpus, CorpusSpec};
use limeade_core::harness::feed::{self, FeedSimConfig};
use limeade_core::harness::image::{self, ImageStudyConfig};
use limeade_core::harness::tradeoff::{self, TradeoffConfig};
use limeade_core::harness::{report, write_csv};
use limeade_core::text::to_jsonl;
use limeade_core::Gamma;
use serde::de::DeserializeOwned;

#[derive(Debug, Parser)]
#[command(name = "harness", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Part-based classification: advice vs one extra labeled pair.
    ImageStudy(ImageArgs),
    /// Synthetic paper feeds: NDCG with and without term annotations.
    FeedSim(FeedArgs),
    /// Unique displayed terms under greedy vs sampled explanation display.
    Tradeoff(TradeoffArgs),
    /// Write a synthetic paper corpus as JSONL (one {id, title, abstract} per line).
    GenCorpus(CorpusArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config; flags given on the command line override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV of result rows; the summary goes to <stem>.summary.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ImageArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long)]
    advice_weight: Option<f64>,
    #[arg(long)]
    shots: Option<usize>,
    /// Also give the advice arm the extra labeled pair.
    #[arg(long)]
    combined_arm: bool,
}

#[derive(Debug, Args)]
struct FeedArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    feeds: Option<usize>,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long)]
    advice_weight: Option<f64>,
    /// Every document counts as relevant (NDCG is then 1 by construction).
    #[arg(long)]
    uniform_oracle: bool,
    /// Write every evaluated ranking to this JSON file.
    #[arg(long)]
    dump_rankings: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TradeoffArgs {
    #[command(flatten)]
    common: Common,
    /// Sharpness of the sampled policy; the other policy is greedy.
    #[arg(long)]
    gamma: Option<Gamma>,
    #[arg(long)]
    sessions: Option<usize>,
    #[arg(long)]
    actions: Option<usize>,
    /// Write per-session display traces to this JSON file.
    #[arg(long)]
    traces: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    #[arg(long, default_value_t = 600)]
    docs: usize,
    #[arg(long, default_value_t = 12)]
    topics: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn load<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let s = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&s).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "results".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.summary.json"))
}

fn write_outputs<S: serde::Serialize>(rows: &[report::ResultRow], summary: &S, out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_csv(rows, out)?;
    let sp = summary_path(out);
    report::write_json(summary, &sp)?;
    eprintln!("wrote {} rows to {} and summary to {}", rows.len(), out.display(), sp.display());
    Ok(())
}

fn image_study(a: ImageArgs) -> Result<()> {
    let mut cfg: ImageStudyConfig = load(&a.common.config)?;
    set(&mut cfg.master_seed, a.common.seed);
    set(&mut cfg.n_classes, a.classes);
    set(&mut cfg.n_seeds, a.seeds);
    set(&mut cfg.neighbors, a.neighbors);
    set(&mut cfg.advice_weight, a.advice_weight);
    set(&mut cfg.shots, a.shots);
    cfg.combined_arm |= a.combined_arm;
    let t0 = Instant::now();
    let r = image::run_image_study(&cfg)?;
    print!("{}", image::render_table(&r.summary));
    eprintln!("image study: {:.1}s", t0.elapsed().as_secs_f64());
    write_outputs(&r.rows, &r.summary, &a.common.out)
}

fn feed_sim(a: FeedArgs) -> Result<()> {
    let mut cfg: FeedSimConfig = load(&a.common.config)?;
    set(&mut cfg.master_seed, a.common.seed);
    set(&mut cfg.sizes, a.sizes);
    set(&mut cfg.n_feeds, a.feeds);
    set(&mut cfg.draws, a.draws);
    set(&mut cfg.advice_weight, a.advice_weight);
    cfg.uniform_oracle |= a.uniform_oracle;
    cfg.dump_rankings |= a.dump_rankings.is_some();
    let t0 = Instant::now();
    let r = feed::run_feed_simulation(&cfg)?;
    print!("{}", feed::render_table(&r.summary));
    eprintln!("feed simulation: {:.1}s", t0.elapsed().as_secs_f64());
    if let Some(p) = &a.dump_rankings {
        report::write_json(&r.rankings, p)?;
    }
    write_outputs(&r.rows, &r.summary, &a.common.out)
}

fn tradeoff_study(a: TradeoffArgs) -> Result<()> {
    let mut cfg: TradeoffConfig = load(&a.common.config)?;
    set(&mut cfg.master_seed, a.common.seed);
    set(&mut cfg.gamma, a.gamma);
    set(&mut cfg.n_sessions, a.sessions);
    set(&mut cfg.actions, a.actions);
    let t0 = Instant::now();
    let r = tradeoff::run_tradeoff_study(&cfg)?;
    let s = &r.summary;
    println!("policy   slope      se");
    println!("greedy   {:>9.5}  {:.5}", s.greedy_slope.mean, s.greedy_slope.se);
    println!("sampled  {:>9.5}  {:.5}", s.sampled_slope.mean, s.sampled_slope.se);
    if let (Some(t), Some(p)) = (s.t, s.p) {
        println!("paired greedy - sampled: t = {t:.3}, p = {p:.4}");
    }
    eprintln!("tradeoff study: {:.1}s", t0.elapsed().as_secs_f64());
    if let Some(p) = &a.traces {
        report::write_json(&r.traces, p)?;
    }
    write_outputs(&r.rows, &r.summary, &a.common.out)
}

fn corpus(a: CorpusArgs) -> Result<()> {
    let spec = CorpusSpec { n_docs: a.docs, n_topics: a.topics, ..CorpusSpec::default() };
    let c = gen_corpus(&spec, a.seed)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&a.out, to_jsonl(&c.docs)).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!("wrote {} documents to {}", c.docs.len(), a.out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::ImageStudy(a) => image_study(a),
        Cmd::FeedSim(a) => feed_sim(a),
        Cmd::Tradeoff(a) => tradeoff_study(a),
        Cmd::GenCorpus(a) => corpus(a),
    }
}
