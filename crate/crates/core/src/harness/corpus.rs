//! Synthetic topical paper corpus with simulated readers.
//!
//! Topics own disjoint pseudo-word lists with Zipf-like frequencies. A paper
//! has a primary topic and sometimes a secondary one; its title and abstract
//! mix topic words with shared filler words. A reader likes one or more
//! topics: papers whose primary topic is liked have relevance 2, papers
//! with a liked secondary topic have relevance 1.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{LimeadeError, Result};
use crate::seed;
use crate::text::{tokenize, Document, STOPWORDS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub n_docs: usize,
    pub n_topics: usize,
    pub words_per_topic: usize,
    pub filler_words: usize,
    pub title_len: usize,
    pub abstract_len: usize,
    pub secondary_rate: f64,
    /// Share of abstract words drawn from the filler list.
    pub filler_share: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_docs: 600,
            n_topics: 12,
            words_per_topic: 20,
            filler_words: 80,
            title_len: 6,
            abstract_len: 40,
            secondary_rate: 0.3,
            filler_share: 0.4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub docs: Vec<Document>,
    /// `topic_words[t]`, most frequent first.
    pub topic_words: Vec<Vec<String>>,
    pub primary: Vec<usize>,
    pub secondary: Vec<Option<usize>>,
}

impl SyntheticCorpus {
    pub fn topic_of_word(&self, word: &str) -> Option<usize> {
        self.topic_words.iter().position(|ws| ws.iter().any(|w| w == word))
    }

    /// Graded relevance of doc `i` for a reader liking `liked`.
    pub fn relevance(&self, i: usize, liked: &[usize]) -> f64 {
        if liked.contains(&self.primary[i]) {
            2.0
        } else if self.secondary[i].is_some_and(|s| liked.contains(&s)) {
            1.0
        } else {
            0.0
        }
    }

    /// Whether any word of `term` (a unigram or bigram) belongs to a liked
    /// topic.
    pub fn term_is_liked(&self, term: &str, liked: &[usize]) -> bool {
        term.split(' ')
            .any(|w| self.topic_of_word(w).is_some_and(|t| liked.contains(&t)))
    }
}

const ONSETS: [&str; 16] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Distinct pronounceable words that survive tokenization unchanged and
/// never end in a suffix the stemmer strips.
fn pseudo_words(n: usize, rng: &mut seed::Rng) -> Vec<String> {
    let mut seen: HashSet<String> = STOPWORDS.iter().map(|s| s.to_string()).collect();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push_str(ONSETS.choose(rng).expect("nonempty"));
            w.push_str(VOWELS.choose(rng).expect("nonempty"));
        }
        if crate::explain::stem(&w) != w || tokenize(&w) != vec![w.clone()] {
            continue;
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Zipf-like draw of an index in `0..n`, weight `1 / (rank + 1)`.
fn zipf(n: usize, rng: &mut seed::Rng) -> usize {
    let total: f64 = (1..=n).map(|r| 1.0 / r as f64).sum();
    let mut u = rng.random::<f64>() * total;
    for r in 0..n {
        u -= 1.0 / (r + 1) as f64;
        if u <= 0.0 {
            return r;
        }
    }
    n - 1
}

pub fn gen_corpus(spec: &CorpusSpec, seed_: u64) -> Result<SyntheticCorpus> {
    if spec.n_topics < 2 || spec.words_per_topic == 0 || spec.n_docs == 0 || spec.title_len == 0 {
        return Err(LimeadeError::Value("corpus spec needs >= 2 topics and nonempty docs".into()));
    }
    let mut rng = seed::rng(seed::derive(seed_, &[0]));
    let words = pseudo_words(spec.n_topics * spec.words_per_topic + spec.filler_words, &mut rng);
    let topic_words: Vec<Vec<String>> = words
        .chunks(spec.words_per_topic)
        .take(spec.n_topics)
        .map(<[String]>::to_vec)
        .collect();
    let filler = &words[spec.n_topics * spec.words_per_topic..];

    let mut rng = seed::rng(seed::derive(seed_, &[1]));
    let mut docs = Vec::with_capacity(spec.n_docs);
    let mut primary = Vec::with_capacity(spec.n_docs);
    let mut secondary = Vec::with_capacity(spec.n_docs);
    for i in 0..spec.n_docs {
        let p = rng.random_range(0..spec.n_topics);
        let s = rng.random_bool(spec.secondary_rate).then(|| {
            let s = rng.random_range(0..spec.n_topics - 1);
            if s >= p {
                s + 1
            } else {
                s
            }
        });
        let draw = |rng: &mut seed::Rng, allow_filler: bool| -> String {
            if allow_filler && !filler.is_empty() && rng.random_bool(spec.filler_share) {
                return filler[zipf(filler.len(), rng)].clone();
            }
            let t = match s {
                Some(s) if rng.random_bool(0.3) => s,
                _ => p,
            };
            topic_words[t][zipf(spec.words_per_topic, rng)].clone()
        };
        let title: Vec<String> = (0..spec.title_len).map(|k| draw(&mut rng, k > 0 && k % 3 == 0)).collect();
        let abstract_words: Vec<String> = (0..spec.abstract_len).map(|_| draw(&mut rng, true)).collect();
        docs.push(Document {
            id: format!("doc{i:05}"),
            title: title.join(" "),
            abstract_text: abstract_words.join(" "),
        });
        primary.push(p);
        secondary.push(s);
    }
    Ok(SyntheticCorpus {
        docs,
        topic_words,
        primary,
        secondary,
    })
}
