//! Embedding bundles and the unsupervised word/context proximity score.
//!
//! A bundle carries the final-layer token vectors an encoder produced for one
//! snippet, with each token's character range in that snippet, and optionally
//! a separate end-of-sequence vector. Proximity is the cosine between the mean
//! of the target word's token vectors and the mean of every other token
//! vector.
//!
//! Token offsets are *character* offsets (what tokenizer offset maps report);
//! corpus spans are byte offsets, so [`proximity`] converts between the two.

mod file;

pub use file::{read_bundles, write_bundles, BundleIndexEntry, BundleSet};

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ContextRecord, Span};
use crate::error::{Error, Result};

/// Which query text conditioned an end-of-sequence vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptVariant {
    Plain,
    Instruction,
    Hybrid,
}

/// Half-open character range `[start, end)` of a token.
pub type CharSpan = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBundle {
    context_id: String,
    dim: usize,
    tokens: Vec<CharSpan>,
    /// `tokens.len() x dim`, row-major.
    matrix: Vec<f64>,
    eos: Option<Vec<f64>>,
    prompt_variant: Option<PromptVariant>,
}

impl EmbeddingBundle {
    pub fn new(
        context_id: impl Into<String>,
        dim: usize,
        tokens: Vec<CharSpan>,
        matrix: Vec<f64>,
    ) -> Result<Self> {
        let context_id = context_id.into();
        if dim == 0 {
            return Err(Error::Embedding(format!("bundle '{context_id}': dim must be positive")));
        }
        if matrix.len() != tokens.len() * dim {
            return Err(Error::Embedding(format!(
                "bundle '{context_id}': matrix holds {} values, expected {} tokens x {dim}",
                matrix.len(),
                tokens.len()
            )));
        }
        let mut prev_end = 0;
        for &(s, e) in &tokens {
            if e <= s {
                return Err(Error::Embedding(format!(
                    "bundle '{context_id}': empty token range ({s},{e})"
                )));
            }
            if s < prev_end {
                return Err(Error::Embedding(format!(
                    "bundle '{context_id}': token ({s},{e}) overlaps or precedes its predecessor"
                )));
            }
            prev_end = e;
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Embedding(format!(
                "bundle '{context_id}': non-finite value in token matrix"
            )));
        }
        Ok(EmbeddingBundle {
            context_id,
            dim,
            tokens,
            matrix,
            eos: None,
            prompt_variant: None,
        })
    }

    /// A bundle that only carries an end-of-sequence vector.
    pub fn eos_only(
        context_id: impl Into<String>,
        eos: Vec<f64>,
        prompt_variant: Option<PromptVariant>,
    ) -> Result<Self> {
        let dim = eos.len();
        EmbeddingBundle::new(context_id, dim, Vec::new(), Vec::new())?
            .with_eos(eos, prompt_variant)
    }

    pub fn with_eos(mut self, eos: Vec<f64>, prompt_variant: Option<PromptVariant>) -> Result<Self> {
        if eos.len() != self.dim {
            return Err(Error::Embedding(format!(
                "bundle '{}': eos vector has length {}, expected {}",
                self.context_id,
                eos.len(),
                self.dim
            )));
        }
        if eos.iter().any(|v| !v.is_finite()) {
            return Err(Error::Embedding(format!(
                "bundle '{}': non-finite value in eos vector",
                self.context_id
            )));
        }
        self.eos = Some(eos);
        self.prompt_variant = prompt_variant;
        Ok(self)
    }

    pub fn context_id(&self) -> &str {
        &self.context_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[CharSpan] {
        &self.tokens
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn eos(&self) -> Option<&[f64]> {
        self.eos.as_deref()
    }

    pub fn prompt_variant(&self) -> Option<PromptVariant> {
        self.prompt_variant
    }

    /// Same bundle with every token vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.matrix.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Same bundle with token rows rearranged: row `i` of the result is row
    /// `order[i]` of `self`. Offsets stay where they are.
    pub fn with_rows_permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.n_tokens());
        let mut out = self.clone();
        for (dst, &src) in order.iter().enumerate() {
            out.matrix[dst * self.dim..(dst + 1) * self.dim].copy_from_slice(self.row(src));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledPair {
    pub word_vec: Vec<f64>,
    pub context_vec: Vec<f64>,
}

/// Indices of every token overlapping `span` by at least one character.
pub fn align_span(bundle: &EmbeddingBundle, span: CharSpan) -> Result<Vec<usize>> {
    let (start, end) = span;
    let hits: Vec<usize> = bundle
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, &(s, e))| s < end && start < e)
        .map(|(i, _)| i)
        .collect();
    if hits.is_empty() {
        return Err(Error::Embedding(format!(
            "bundle '{}': no token overlaps characters {start}..{end}",
            bundle.context_id
        )));
    }
    Ok(hits)
}

/// Column means. Each column is summed in sorted order, so the result does
/// not depend on the order of the rows.
fn mean_rows<'a>(dim: usize, rows: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let rows: Vec<&[f64]> = rows.collect();
    let n = rows.len() as f64;
    let mut col = Vec::with_capacity(rows.len());
    (0..dim)
        .map(|j| {
            col.clear();
            col.extend(rows.iter().map(|r| r[j]));
            col.sort_unstable_by(f64::total_cmp);
            col.iter().sum::<f64>() / n
        })
        .collect()
}

/// Mean of the word's token rows and mean of all remaining rows.
pub fn pool_pair(bundle: &EmbeddingBundle, word_tokens: &[usize]) -> Result<PooledPair> {
    let word: BTreeSet<usize> = word_tokens.iter().copied().collect();
    if word.is_empty() {
        return Err(Error::Embedding(format!(
            "bundle '{}': no word tokens to pool",
            bundle.context_id
        )));
    }
    if let Some(&bad) = word.iter().find(|&&i| i >= bundle.n_tokens()) {
        return Err(Error::Embedding(format!(
            "bundle '{}': token index {bad} out of range",
            bundle.context_id
        )));
    }
    if word.len() == bundle.n_tokens() {
        return Err(Error::Embedding(format!(
            "bundle '{}': the target word covers every token, context side is empty",
            bundle.context_id
        )));
    }
    let word_vec = mean_rows(bundle.dim, word.iter().map(|&i| bundle.row(i)));
    let context_vec = mean_rows(
        bundle.dim,
        (0..bundle.n_tokens())
            .filter(|i| !word.contains(i))
            .map(|i| bundle.row(i)),
    );
    Ok(PooledPair {
        word_vec,
        context_vec,
    })
}

/// Cosine similarity, clipped into [-1, 1] to absorb rounding.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Embedding(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu2: f64 = u.iter().map(|a| a * a).sum();
    let nv2: f64 = v.iter().map(|a| a * a).sum();
    if nu2 == 0.0 || nv2 == 0.0 {
        return Err(Error::Embedding("cosine of a zero-norm vector".into()));
    }
    // one square root of the product keeps cos(u, u) and cos(u, -u) exact
    Ok((dot / (nu2 * nv2).sqrt()).clamp(-1.0, 1.0))
}

fn byte_to_char(text: &str, byte: usize) -> usize {
    text.char_indices().take_while(|&(i, _)| i < byte).count()
}

/// Character range of a byte span within `text`.
pub fn char_span(text: &str, span: Span) -> CharSpan {
    (byte_to_char(text, span.start), byte_to_char(text, span.end))
}

/// Union of token indices over every occurrence of the record's target word.
pub fn word_token_indices(record: &ContextRecord, bundle: &EmbeddingBundle) -> Result<Vec<usize>> {
    let mut all = BTreeSet::new();
    for &span in record.occurrences() {
        all.extend(align_span(bundle, char_span(record.snippet(), span))?);
    }
    Ok(all.into_iter().collect())
}

/// Cosine between the pooled target-word vector and the pooled context vector.
pub fn proximity(record: &ContextRecord, bundle: &EmbeddingBundle) -> Result<f64> {
    if record.id() != bundle.context_id() {
        return Err(Error::Embedding(format!(
            "bundle '{}' does not belong to context '{}'",
            bundle.context_id(),
            record.id()
        )));
    }
    let word = word_token_indices(record, bundle)?;
    let pair = pool_pair(bundle, &word)?;
    cosine(&pair.word_vec, &pair.context_vec)
}

/// Whitespace tokens of `text` with their character offsets.
pub fn whitespace_tokens(text: &str) -> Vec<(CharSpan, &str)> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None; // (char index, byte index)
    let mut n_chars = 0;
    for (ci, (bi, c)) in text.char_indices().enumerate() {
        n_chars = ci + 1;
        if c.is_whitespace() {
            if let Some((cs, bs)) = start.take() {
                out.push(((cs, ci), &text[bs..bi]));
            }
        } else if start.is_none() {
            start = Some((ci, bi));
        }
    }
    if let Some((cs, bs)) = start {
        out.push(((cs, n_chars), &text[bs..]));
    }
    out
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes.into_iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Deterministic vector for one token: entries uniform in [-1, 1], keyed by
/// the token text and the seed. Values are exactly representable as `f32`.
pub fn synthetic_vector(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let key = fnv1a(seed.to_le_bytes().into_iter().chain(token.bytes()));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    (0..dim).map(|_| f64::from(rng.gen_range(-1.0f32..=1.0))).collect()
}

/// Offline stand-in for an encoder: whitespace tokens, one seeded random
/// vector per distinct token text.
pub fn synthetic_embed(
    context_id: impl Into<String>,
    snippet: &str,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingBundle> {
    if dim < 2 {
        return Err(Error::invalid(format!("synthetic embedding dim must be >= 2, got {dim}")));
    }
    let tokens = whitespace_tokens(snippet);
    if tokens.is_empty() {
        return Err(Error::invalid("cannot embed an empty snippet"));
    }
    let mut matrix = Vec::with_capacity(tokens.len() * dim);
    for (_, text) in &tokens {
        matrix.extend(synthetic_vector(text, dim, seed));
    }
    EmbeddingBundle::new(
        context_id,
        dim,
        tokens.into_iter().map(|(span, _)| span).collect(),
        matrix,
    )
}
