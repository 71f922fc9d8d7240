//! Seeded toy data for examples, tests and smoke runs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ContextRecord, Corpus, Span, TargetWord};
use crate::embed::{synthetic_embed, BundleSet, PromptVariant};
use crate::error::{Error, Result};

const FILLER: &[&str] = &[
    "the", "river", "quiet", "morning", "people", "said", "under", "bright", "garden", "winter", "slowly",
    "market", "old", "letter", "window", "across", "evening", "small", "bridge", "voice", "paper", "stone",
    "light", "kept", "near", "long", "field", "open", "story", "road",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyCorpusSpec {
    pub words_per_band: usize,
    pub bands: u8,
    pub contexts_per_word: usize,
    /// Filler words per snippet, besides the target occurrence.
    pub snippet_len: usize,
}

impl Default for ToyCorpusSpec {
    fn default() -> Self {
        ToyCorpusSpec {
            words_per_band: 8,
            bands: 2,
            contexts_per_word: 5,
            snippet_len: 47,
        }
    }
}

/// Target words are `w<band>x<i>`, context ids `<word>-<j>`. Ratings are
/// drawn per context around a context-specific quality level.
pub fn toy_corpus(spec: ToyCorpusSpec, seed: u64) -> Result<Corpus> {
    if spec.bands == 0 || spec.bands > crate::corpus::MAX_BAND || spec.words_per_band == 0 || spec.contexts_per_word == 0 {
        return Err(Error::invalid("toy corpus needs 1..=10 bands and at least one word and context"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for band in 1..=spec.bands {
        for i in 0..spec.words_per_band {
            let lemma = format!("w{band}x{i}");
            let word = TargetWord::new(lemma.clone(), band).map_err(Error::invalid)?;
            for j in 0..spec.contexts_per_word {
                let pos = rng.gen_range(0..=spec.snippet_len);
                let mut parts: Vec<&str> = (0..spec.snippet_len)
                    .map(|_| *FILLER.choose(&mut rng).expect("non-empty"))
                    .collect();
                parts.insert(pos, &lemma);
                let snippet = parts.join(" ");
                let start = snippet.find(&lemma).expect("inserted");
                let quality: f64 = rng.gen_range(-1.0..2.0);
                let ratings: Vec<i8> = (0..10)
                    .map(|_| {
                        let r = (quality + rng.gen_range(-0.8..0.8)).round();
                        r.clamp(-1.0, 2.0) as i8
                    })
                    .collect();
                records.push(
                    ContextRecord::new(
                        format!("{lemma}-{j}"),
                        word.clone(),
                        snippet,
                        vec![Span::new(start, start + lemma.len())],
                        ratings,
                    )
                    .map_err(Error::invalid)?,
                );
            }
        }
    }
    Corpus::new(records).map_err(Error::invalid)
}

/// Token-level bundles from the synthetic encoder, each with an
/// end-of-sequence vector whose first coordinates carry the gold label plus
/// Gaussian-ish noise of scale `noise`. A head trained on these can recover
/// the gold labels; the proximity score ignores them.
pub fn learnable_bundles(corpus: &Corpus, dim: usize, noise: f64, seed: u64) -> Result<BundleSet> {
    if dim < 2 {
        return Err(Error::invalid("dim must be >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0b);
    let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut out = Vec::with_capacity(corpus.len());
    for r in corpus.records() {
        let bundle = synthetic_embed(r.id(), r.snippet(), dim, seed)?;
        let g = r.gold();
        let eos: Vec<f64> = w
            .iter()
            .map(|wi| {
                let e: f64 = (0..3).map(|_| rng.gen_range(-1.0..1.0)).sum::<f64>() * noise;
                // round through f32 so the vector survives the on-disk format unchanged
                f64::from((wi * g + e) as f32)
            })
            .collect();
        out.push(bundle.with_eos(eos, Some(PromptVariant::Instruction))?);
    }
    BundleSet::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::proximity;

    #[test]
    fn toy_corpus_shape() {
        let spec = ToyCorpusSpec::default();
        let c = toy_corpus(spec, 3).unwrap();
        assert_eq!(c.len(), 8 * 2 * 5);
        assert_eq!(c.words().len(), 16);
        assert_eq!(toy_corpus(spec, 3).unwrap(), c);
        assert_ne!(toy_corpus(spec, 4).unwrap(), c);
    }

    #[test]
    fn bundles_cover_corpus_and_score() {
        let c = toy_corpus(ToyCorpusSpec::default(), 1).unwrap();
        let b = learnable_bundles(&c, 8, 0.05, 1).unwrap();
        assert_eq!(b.len(), c.len());
        for r in c.records() {
            let bundle = b.get(r.id()).unwrap();
            assert!(bundle.eos().is_some());
            let p = proximity(r, bundle).unwrap();
            assert!((-1.0..=1.0).contains(&p));
        }
    }
}
