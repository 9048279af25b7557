//! Text domain: uni/bigram TF-IDF activations as the interpretable space and
//! a seeded random projection of them as the opaque embedding.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::domain::{check_dim, DomainBridge, Instance, InterpVec, OpaqueVec, PairingTable};
use crate::error::{LimeadeError, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
}

impl Document {
    pub fn tokens(&self) -> Vec<String> {
        let mut t = tokenize(&self.title);
        t.extend(tokenize(&self.abstract_text));
        t
    }
}

pub const STOPWORDS: [&str; 50] = [
    "the", "of", "and", "to", "in", "for", "is", "on", "that", "by", "this", "with", "as", "are",
    "be", "an", "at", "from", "it", "or", "we", "our", "can", "which", "these", "has", "have",
    "was", "were", "not", "but", "their", "its", "also", "such", "been", "into", "than", "more",
    "using", "both", "other", "they", "there", "all", "only", "when", "how", "what", "may",
];

fn is_stopword(t: &str) -> bool {
    STOPWORDS.contains(&t)
}

/// Lowercased unigrams (length >= 2, stopwords removed) followed by the
/// bigrams of adjacent surviving unigrams.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let unigrams: Vec<&str> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2 && !is_stopword(t))
        .collect();
    let mut out: Vec<String> = unigrams.iter().map(|s| s.to_string()).collect();
    out.extend(unigrams.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<usize>,
    n_docs: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, j: usize) -> &str {
        &self.terms[j]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, j: usize) -> usize {
        self.df[j]
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// `{"terms": [...], "df": [...], "n_docs": D}`.
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| LimeadeError::Value(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut v: Vocabulary =
            serde_json::from_str(s).map_err(|e| LimeadeError::Value(e.to_string()))?;
        if v.terms.len() != v.df.len() {
            return Err(LimeadeError::Shape {
                expected: v.terms.len(),
                got: v.df.len(),
            });
        }
        v.index = v.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(v)
    }

    /// Top-`n` terms by total count over the tokenized documents, ties by
    /// ascending term.
    pub fn from_tokens(docs: &[Vec<String>], n: usize) -> Self {
        let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
        for doc in docs {
            let mut seen: Vec<&str> = Vec::new();
            for t in doc {
                let e = counts.entry(t.as_str()).or_default();
                e.0 += 1;
                seen.push(t.as_str());
            }
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                counts.get_mut(t).unwrap().1 += 1;
            }
        }
        let mut ranked: Vec<(&str, usize, usize)> =
            counts.into_iter().map(|(t, (c, df))| (t, c, df)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(n);
        let terms: Vec<String> = ranked.iter().map(|r| r.0.to_string()).collect();
        let df = ranked.iter().map(|r| r.2).collect();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            terms,
            df,
            n_docs: docs.len(),
            index,
        }
    }
}

pub fn build_vocab(docs: &[Document], n: usize) -> Vocabulary {
    let tokens: Vec<Vec<String>> = docs.iter().map(Document::tokens).collect();
    Vocabulary::from_tokens(&tokens, n)
}

/// Smoothed-idf TF-IDF, L2-normalized.
pub fn tfidf_tokens(tokens: &[String], vocab: &Vocabulary) -> InterpVec {
    let d = vocab.n_docs() as f64;
    let mut tf: HashMap<usize, usize> = HashMap::new();
    for t in tokens {
        if let Some(j) = vocab.index_of(t) {
            *tf.entry(j).or_default() += 1;
        }
    }
    let mut raw: Vec<(usize, f64)> = tf
        .into_iter()
        .map(|(j, c)| {
            let idf = ((1.0 + d) / (1.0 + vocab.df(j) as f64)).ln() + 1.0;
            (j, c as f64 * idf)
        })
        .collect();
    raw.sort_by_key(|r| r.0);
    let norm = raw.iter().map(|r| r.1 * r.1).sum::<f64>().sqrt();
    if norm > 0.0 {
        raw.iter_mut().for_each(|r| r.1 /= norm);
    }
    InterpVec::from_pairs(vocab.len(), raw).expect("tf-idf activations are nonnegative")
}

pub fn tfidf(doc: &Document, vocab: &Vocabulary) -> InterpVec {
    tfidf_tokens(&doc.tokens(), vocab)
}

/// Seeded `s' x s` projection with entries `+-1/sqrt(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionEmbedder {
    seed: u64,
    in_dim: usize,
    out_dim: usize,
    matrix: Vec<f64>,
}

impl ProjectionEmbedder {
    pub const DEFAULT_DIM: usize = 64;

    pub fn new(seed: u64, in_dim: usize, out_dim: usize) -> Self {
        let mut rng = seed::rng(seed);
        let scale = 1.0 / (out_dim as f64).sqrt();
        let matrix = (0..in_dim * out_dim)
            .map(|_| if rng.random_bool(0.5) { scale } else { -scale })
            .collect();
        Self {
            seed,
            in_dim,
            out_dim,
            matrix,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.matrix[j * self.out_dim..(j + 1) * self.out_dim]
    }

    pub fn embed(&self, v: &InterpVec) -> Result<OpaqueVec> {
        check_dim(self.in_dim, v.dim())?;
        let mut out = vec![0.0; self.out_dim];
        for (j, a) in v.iter() {
            out.iter_mut().zip(self.row(j)).for_each(|(o, m)| *o += a * m);
        }
        OpaqueVec::new(out)
    }
}

/// Text bridge: `realize` embeds the masked TF-IDF vector; `h'` is the
/// recorded pairing of embeddings with the activations they came from.
#[derive(Debug, Clone)]
pub struct TextBridge {
    embedder: ProjectionEmbedder,
    pairing: PairingTable,
}

impl TextBridge {
    pub fn new(embedder: ProjectionEmbedder) -> Self {
        Self {
            embedder,
            pairing: PairingTable::default(),
        }
    }

    pub fn embedder(&self) -> &ProjectionEmbedder {
        &self.embedder
    }

    /// Embeds `v` and records the pairing.
    pub fn register(&mut self, v: &InterpVec) -> Result<OpaqueVec> {
        let x = self.embedder.embed(v)?;
        self.pairing.insert(&x, v.clone());
        Ok(x)
    }
}

impl DomainBridge for TextBridge {
    fn interp_dim(&self) -> usize {
        self.embedder.in_dim()
    }

    fn h_prime(&self, x: &OpaqueVec) -> Result<InterpVec> {
        self.pairing.lookup(x)
    }

    fn realize(&self, base: &Instance, mask: &[bool]) -> Result<OpaqueVec> {
        self.embedder.embed(&base.interp().masked(mask)?)
    }

    fn realize_instance(&self, base: &Instance, mask: &[bool], id: String) -> Result<Instance> {
        let interp = base.interp().masked(mask)?;
        let x = self.embedder.embed(&interp)?;
        Ok(Instance::paired(id, x, interp))
    }
}

/// A corpus with its vocabulary, embedder and paired instances.
#[derive(Debug, Clone)]
pub struct TextCorpus {
    docs: Vec<Document>,
    vocab: Vocabulary,
    bridge: TextBridge,
    instances: Vec<Instance>,
    by_id: HashMap<String, usize>,
}

impl TextCorpus {
    pub const DEFAULT_VOCAB: usize = 2000;

    pub fn build(docs: Vec<Document>, vocab_size: usize, embed_dim: usize, seed: u64) -> Result<Self> {
        if docs.is_empty() {
            return Err(LimeadeError::Value("corpus is empty".into()));
        }
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if d.title.trim().is_empty() {
                return Err(LimeadeError::Value(format!("document {} has an empty title", d.id)));
            }
            if by_id.insert(d.id.clone(), i).is_some() {
                return Err(LimeadeError::Value(format!("duplicate document id {}", d.id)));
            }
        }
        let vocab = build_vocab(&docs, vocab_size);
        let mut bridge = TextBridge::new(ProjectionEmbedder::new(seed, vocab.len(), embed_dim));
        let interps: Vec<InterpVec> = docs.iter().map(|d| tfidf(d, &vocab)).collect();
        let xs: Vec<OpaqueVec> = interps.iter().map(|v| bridge.register(v)).collect::<Result<_>>()?;
        let instances = docs
            .iter()
            .zip(xs.into_iter().zip(interps))
            .map(|(d, (x, v))| Instance::new(d.id.clone(), x, v, &bridge))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            docs,
            vocab,
            bridge,
            instances,
            by_id,
        })
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn bridge(&self) -> &TextBridge {
        &self.bridge
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn doc(&self, id: &str) -> Option<&Document> {
        self.position(id).map(|i| &self.docs[i])
    }
}

/// One JSON object `{id, title, abstract}` per non-empty line.
pub fn parse_jsonl(input: &str) -> Result<Vec<Document>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map_err(|e| LimeadeError::Value(format!("corpus line {}: {e}", n + 1)))
        })
        .collect()
}

pub fn load_jsonl(path: &Path) -> Result<Vec<Document>> {
    let text = fs::read_to_string(path)
        .map_err(|e| LimeadeError::Value(format!("reading {}: {e}", path.display())))?;
    parse_jsonl(&text)
}

pub fn to_jsonl(docs: &[Document]) -> String {
    docs.iter()
        .map(|d| serde_json::to_string(d).expect("documents serialize") + "\n")
        .collect()
}
