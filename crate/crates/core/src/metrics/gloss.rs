//! Position-aligned gloss accuracy at word and morpheme level.
//!
//! Surfaces are compared case-sensitively after NFC normalization.

use unicode_normalization::UnicodeNormalization;

use super::MetricError;
use crate::igt::{GlossLine, GlossWord};

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

fn word_matches(pred: Option<&GlossWord>, gold: &GlossWord) -> bool {
    pred.is_some_and(|p| nfc(&p.render()) == nfc(&gold.render()))
}

/// `(matching word positions, gold words)`.
pub fn word_counts(pred: &GlossLine, gold: &GlossLine) -> (usize, usize) {
    let hits = gold
        .words()
        .iter()
        .enumerate()
        .filter(|(i, g)| word_matches(pred.words().get(*i), g))
        .count();
    (hits, gold.words().len())
}

/// `(matching morpheme positions, gold morphemes)`.
pub fn morpheme_counts(pred: &GlossLine, gold: &GlossLine) -> (usize, usize) {
    let mut hits = 0;
    for (i, gw) in gold.words().iter().enumerate() {
        let Some(pw) = pred.words().get(i) else {
            continue;
        };
        hits += gw
            .morphemes()
            .iter()
            .zip(pw.morphemes())
            .filter(|(g, p)| nfc(g.surface()) == nfc(p.surface()))
            .count();
    }
    (hits, gold.morpheme_count())
}

pub fn gloss_word_accuracy(pred: &GlossLine, gold: &GlossLine) -> Result<f64, MetricError> {
    let (hits, total) = word_counts(pred, gold);
    if total == 0 {
        return Err(MetricError::EmptyGold);
    }
    Ok(hits as f64 / total as f64)
}

pub fn gloss_morpheme_accuracy(pred: &GlossLine, gold: &GlossLine) -> Result<f64, MetricError> {
    let (hits, total) = morpheme_counts(pred, gold);
    if total == 0 {
        return Err(MetricError::EmptyGold);
    }
    Ok(hits as f64 / total as f64)
}
