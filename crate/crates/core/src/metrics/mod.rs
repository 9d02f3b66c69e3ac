//! Translation and gloss metrics.

pub mod bleu;
pub mod bootstrap;
pub mod chrf;
pub mod gloss;
pub mod rng;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use bleu::{bleu, bleu_multi, BleuConfig, Smoothing, Tokenization};
pub use bootstrap::{paired_bootstrap, BootstrapConfig, BootstrapResult, Metric};
pub use chrf::{chrf_pp, ChrfConfig};
pub use gloss::{gloss_morpheme_accuracy, gloss_word_accuracy};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("length mismatch: {hyps} hypotheses vs {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("need at least {min} sentences, got {got}")]
    TooFewSentences { min: usize, got: usize },
    #[error("gold gloss is empty")]
    EmptyGold,
    #[error("invalid metric configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn check_corpus(hyps: usize, refs: usize) -> Result<(), MetricError> {
    if hyps != refs {
        return Err(MetricError::LengthMismatch { hyps, refs });
    }
    if hyps == 0 {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub metric_name: String,
    pub corpus_score: f64,
    pub sentence_count: usize,
    /// Human-readable metric settings.
    pub signature: String,
    /// First 16 hex digits of the SHA-256 of `signature`.
    pub config_digest: String,
}

impl ScoreReport {
    pub fn new(metric: &str, score: f64, sentence_count: usize, signature: &str) -> Self {
        Self {
            metric_name: metric.to_string(),
            corpus_score: score,
            sentence_count,
            signature: signature.to_string(),
            config_digest: short_digest(signature.as_bytes()),
        }
    }
}

pub fn short_digest(bytes: &[u8]) -> String {
    let full = hex::encode(Sha256::digest(bytes));
    full[..16].to_string()
}
