use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::Parser;
use limeade_core::text::load_jsonl;
use limeade_core::{Gamma, TextCorpus};
use limeade_service::{router, FeedStore, ServiceConfig};

/// Serve feed curation over a JSONL corpus of {id, title, abstract} records.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(long, env = "LIMEADE_CORPUS")]
    corpus: PathBuf,
    /// Snapshot directory; feeds are kept in memory only when omitted.
    #[arg(long, env = "LIMEADE_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, env = "LIMEADE_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "LIMEADE_BIND", default_value = "127.0.0.1")]
    bind: String,
    #[arg(long, env = "LIMEADE_ADVICE_WEIGHT", default_value_t = 1.0)]
    advice_weight: f64,
    /// Display sharpness; "inf" shows the top terms deterministically.
    #[arg(long, env = "LIMEADE_GAMMA", default_value = "4")]
    gamma: Gamma,
    #[arg(long, env = "LIMEADE_SEED", default_value_t = 7)]
    master_seed: u64,
    /// JSON file with further service settings; flags above override it.
    #[arg(long, env = "LIMEADE_CONFIG")]
    config: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();

    let mut cfg = match &args.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => ServiceConfig::default(),
    };
    cfg.data_dir = args.data_dir.or(cfg.data_dir);
    cfg.advice_weight = args.advice_weight;
    cfg.gamma = args.gamma;
    cfg.master_seed = args.master_seed;
    anyhow::ensure!(
        cfg.advice_weight.is_finite() && cfg.advice_weight > 0.0,
        "advice weight must be positive"
    );

    let docs = load_jsonl(&args.corpus).with_context(|| format!("loading {}", args.corpus.display()))?;
    let corpus = TextCorpus::build(docs, cfg.vocab_size, cfg.embed_dim, cfg.master_seed)?;
    tracing::info!(docs = corpus.len(), terms = corpus.vocab().len(), "corpus loaded");
    let store = FeedStore::open(Arc::new(corpus), cfg)?;
    tracing::info!(feeds = store.len(), "snapshots replayed");

    let listener = tokio::net::TcpListener::bind((args.bind.as_str(), args.port)).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(Arc::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
