//! chrF++: character n-gram F-score augmented with word n-grams.
//!
//! Character n-grams are taken over the sentence with all whitespace removed;
//! word n-grams over whitespace-split tokens, each token longer than one
//! character shedding a single trailing (or else leading) ASCII punctuation
//! mark as a token of its own, as sacreBLEU does. Statistics are summed over the
//! corpus per order, an F-beta is computed per order, and the corpus score is
//! the mean over orders that have n-grams on at least one side.

use std::collections::HashMap;
use std::hash::Hash;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use super::{check_corpus, MetricError, ScoreReport};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChrfConfig {
    pub char_order: usize,
    pub word_order: usize,
    pub beta: f64,
}

impl Default for ChrfConfig {
    fn default() -> Self {
        Self {
            char_order: 6,
            word_order: 2,
            beta: 2.0,
        }
    }
}

impl ChrfConfig {
    pub fn signature(&self) -> String {
        format!(
            "chrf|nrefs:1|case:mixed|nc:{}|nw:{}|beta:{}|space:no",
            self.char_order, self.word_order, self.beta
        )
    }

    fn validate(&self) -> Result<(), MetricError> {
        if self.char_order == 0 {
            return Err(MetricError::InvalidConfig("char_order must be >= 1".into()));
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(MetricError::InvalidConfig("beta must be > 0".into()));
        }
        Ok(())
    }

    fn orders(&self) -> usize {
        self.char_order + self.word_order
    }
}

/// Per-order `(hyp n-grams, ref n-grams, matches)`; character orders first,
/// then word orders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChrfStats {
    pub per_order: Vec<[usize; 3]>,
}

impl ChrfStats {
    pub fn zero(orders: usize) -> Self {
        Self {
            per_order: vec![[0; 3]; orders],
        }
    }
}

impl AddAssign<&ChrfStats> for ChrfStats {
    fn add_assign(&mut self, rhs: &ChrfStats) {
        for (a, b) in self.per_order.iter_mut().zip(&rhs.per_order) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
    }
}

fn counts<T: Eq + Hash + Clone>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if n > 0 {
        for w in items.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

fn order_stats<T: Eq + Hash + Clone>(hyp: &[T], reference: &[T], n: usize) -> [usize; 3] {
    let h = counts(hyp, n);
    let r = counts(reference, n);
    let matches = h.iter().map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0))).sum();
    [h.values().sum(), r.values().sum(), matches]
}

const PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

/// `"dog."` gives `["dog", "."]`, `"(hi)"` gives `["(hi", ")"]`.
pub fn chrf_words(sentence: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for w in sentence.split_whitespace() {
        let mut chars = w.chars();
        let (first, last) = (chars.next(), chars.next_back());
        match (first, last) {
            (_, Some(l)) if PUNCTUATION.contains(l) => {
                let cut = w.len() - l.len_utf8();
                out.extend([&w[..cut], &w[cut..]]);
            }
            (Some(f), Some(_)) if PUNCTUATION.contains(f) => {
                let cut = f.len_utf8();
                out.extend([&w[..cut], &w[cut..]]);
            }
            _ => out.push(w),
        }
    }
    out
}

pub fn sentence_stats(hyp: &str, reference: &str, cfg: &ChrfConfig) -> ChrfStats {
    let hyp_chars: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let ref_chars: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    let hyp_words = chrf_words(hyp);
    let ref_words = chrf_words(reference);

    let mut per_order = Vec::with_capacity(cfg.orders());
    for n in 1..=cfg.char_order {
        per_order.push(order_stats(&hyp_chars, &ref_chars, n));
    }
    for n in 1..=cfg.word_order {
        per_order.push(order_stats(&hyp_words, &ref_words, n));
    }
    ChrfStats { per_order }
}

pub fn score_from_stats(stats: &ChrfStats, cfg: &ChrfConfig) -> f64 {
    let factor = cfg.beta * cfg.beta;
    let mut sum = 0.0;
    let mut effective = 0usize;
    for &[n_hyp, n_ref, n_match] in &stats.per_order {
        if n_hyp == 0 && n_ref == 0 {
            continue;
        }
        effective += 1;
        if n_hyp == 0 || n_ref == 0 || n_match == 0 {
            continue;
        }
        let prec = n_match as f64 / n_hyp as f64;
        let rec = n_match as f64 / n_ref as f64;
        sum += (1.0 + factor) * prec * rec / (factor * prec + rec);
    }
    if effective == 0 {
        return 0.0;
    }
    (100.0 * sum / effective as f64).clamp(0.0, 100.0)
}

pub fn chrf_pp<S: AsRef<str>>(
    hypotheses: &[S],
    references: &[S],
    cfg: &ChrfConfig,
) -> Result<ScoreReport, MetricError> {
    cfg.validate()?;
    check_corpus(hypotheses.len(), references.len())?;
    let mut total = ChrfStats::zero(cfg.orders());
    for (h, r) in hypotheses.iter().zip(references) {
        total += &sentence_stats(h.as_ref(), r.as_ref(), cfg);
    }
    Ok(ScoreReport::new(
        "chrf++",
        score_from_stats(&total, cfg),
        hypotheses.len(),
        &cfg.signature(),
    ))
}
