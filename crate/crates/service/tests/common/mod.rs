#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use limeade_core::harness::corpus::{gen_corpus, CorpusSpec, SyntheticCorpus};
use limeade_core::TextCorpus;
use limeade_service::{router, FeedStore, ServiceConfig};
use serde_json::Value;
use tower::ServiceExt;

pub struct Fixture {
    pub synth: SyntheticCorpus,
    pub corpus: Arc<TextCorpus>,
    pub cfg: ServiceConfig,
}

pub fn fixture(data_dir: Option<PathBuf>) -> Fixture {
    let synth = gen_corpus(&CorpusSpec::default(), 11).unwrap();
    let cfg = ServiceConfig {
        data_dir,
        vocab_size: 500,
        ..ServiceConfig::default()
    };
    let corpus = TextCorpus::build(synth.docs.clone(), cfg.vocab_size, cfg.embed_dim, cfg.master_seed).unwrap();
    Fixture { synth, corpus: Arc::new(corpus), cfg }
}

impl Fixture {
    pub fn store(&self) -> Arc<FeedStore> {
        Arc::new(FeedStore::open(self.corpus.clone(), self.cfg.clone()).unwrap())
    }

    pub fn app(&self) -> (Router, Arc<FeedStore>) {
        let store = self.store();
        (router(store.clone()), store)
    }

    /// Three papers whose primary topic is `topic`.
    pub fn seeds(&self, topic: usize) -> Vec<String> {
        (0..self.synth.docs.len())
            .filter(|&i| self.synth.primary[i] == topic)
            .take(3)
            .map(|i| self.synth.docs[i].id.clone())
            .collect()
    }

    /// Docs carrying `feature`, by descending TF-IDF weight, at most `n`.
    pub fn top_tfidf(&self, feature: usize, n: usize) -> Vec<usize> {
        let inst = self.corpus.instances();
        let mut docs: Vec<usize> = (0..inst.len()).filter(|&i| inst[i].interp().is_present(feature)).collect();
        docs.sort_by(|&a, &b| {
            inst[b].interp().get(feature).total_cmp(&inst[a].interp().get(feature)).then(a.cmp(&b))
        });
        docs.truncate(n);
        docs
    }
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&b).unwrap())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

pub async fn raw(app: &Router, method: &str, uri: &str, body: &'static str) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}
