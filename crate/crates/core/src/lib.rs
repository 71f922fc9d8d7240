//! Decide whether a short text passage is informative enough to teach a
//! target word.
//!
//! The crate scores contexts three ways (an unsupervised word/context
//! proximity over token embeddings, a regression head over a frozen
//! end-of-sequence vector, and the same head fed the vector plus normalized
//! handcrafted features), then turns the scores into use/not-use decisions
//! through a threshold sweep summarized as a retention-competency curve.
//!
//! | module | contents |
//! |---|---|
//! | [`corpus`] | contexts, ratings, gold labels, loaders |
//! | [`features`] | handcrafted feature tables and train-fitted z-scoring |
//! | [`embed`] | embedding bundles, span alignment, pooling, proximity, `CTXEMB1` I/O |
//! | [`head`] | MLP regression head, Huber loss, AdamW, training loop, checkpoints |
//! | [`curate`] | threshold sweep, good-to-bad ratio, RCC and its AUC |
//! | [`eval`] | word-unseen / word-seen splits, cross-validation, regression metrics |
//! | [`report`] | CSV, SVG and markdown renderers |
//! | [`demo`] | seeded toy corpora and learnable bundles |
//! | [`cli`] | run configuration and the subcommands behind the `contextcurate` binary |
//!
//! Runnable walkthroughs live in `crates/core/examples/`.

pub mod cli;
pub mod corpus;
pub mod curate;
pub mod demo;
pub mod embed;
pub mod error;
pub mod eval;
pub mod features;
pub mod head;
pub mod report;

pub use error::{Error, LineError, Result};
