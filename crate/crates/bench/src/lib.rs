//! Shared fixtures for the criterion benches.

use limeade_core::harness::corpus::{gen_corpus, CorpusSpec, SyntheticCorpus};
use limeade_core::{HingeRanker, Label, ModelParams, OpaqueModel, TextCorpus, TrainConfig, WeightedExample};

pub struct TextFixture {
    pub synth: SyntheticCorpus,
    pub corpus: TextCorpus,
    pub labeled: Vec<WeightedExample>,
    pub params: ModelParams,
}

/// A 600-document corpus with a ranker trained on three on-topic papers
/// and three off-topic ones.
pub fn text_fixture() -> TextFixture {
    let synth = gen_corpus(&CorpusSpec::default(), 5).expect("corpus");
    let corpus = TextCorpus::build(synth.docs.clone(), 500, 64, 7).expect("text corpus");
    let on = (0..synth.docs.len()).filter(|&i| synth.primary[i] == 0).take(3);
    let off = (0..synth.docs.len()).filter(|&i| synth.primary[i] != 0).take(3);
    let labeled: Vec<WeightedExample> = on
        .map(|i| (i, Label::Positive))
        .chain(off.map(|i| (i, Label::Negative)))
        .map(|(i, y)| WeightedExample::unit(corpus.instances()[i].x().clone(), y))
        .collect();
    let params = HingeRanker.fit(&labeled, &TrainConfig::default()).expect("fit");
    TextFixture { synth, corpus, labeled, params }
}

pub fn scores(f: &TextFixture) -> Vec<f64> {
    f.corpus
        .instances()
        .iter()
        .map(|i| HingeRanker.score(&f.params, i.x()).expect("score"))
        .collect()
}
