//! Corpus BLEU with sacre-style `13a` tokenization and exponential smoothing.

use std::collections::HashMap;
use std::ops::AddAssign;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{check_corpus, MetricError, ScoreReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tokenization {
    #[serde(rename = "13a")]
    Intl13a,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothing {
    ExpDecay,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub max_ngram_order: usize,
    pub tokenization: Tokenization,
    pub smoothing: Smoothing,
}

impl Default for BleuConfig {
    fn default() -> Self {
        Self {
            max_ngram_order: 4,
            tokenization: Tokenization::Intl13a,
            smoothing: Smoothing::ExpDecay,
        }
    }
}

impl BleuConfig {
    pub fn signature(&self, nrefs: usize) -> String {
        let tok = match self.tokenization {
            Tokenization::Intl13a => "13a",
            Tokenization::None => "none",
        };
        let smooth = match self.smoothing {
            Smoothing::ExpDecay => "exp",
            Smoothing::None => "none",
        };
        format!(
            "bleu|nrefs:{nrefs}|case:mixed|eff:no|tok:{tok}|smooth:{smooth}|order:{}",
            self.max_ngram_order
        )
    }
}

struct Regexes {
    symbols: Regex,
    period_comma_before: Regex,
    period_comma_after: Regex,
    dash_after_digit: Regex,
}

fn regexes() -> &'static Regexes {
    static RE: OnceLock<Regexes> = OnceLock::new();
    RE.get_or_init(|| Regexes {
        symbols: Regex::new(r"([\{-~\[-` -&\(-\+:-@/])").unwrap(),
        period_comma_before: Regex::new(r"([^0-9])([\.,])").unwrap(),
        period_comma_after: Regex::new(r"([\.,])([^0-9])").unwrap(),
        dash_after_digit: Regex::new(r"([0-9])(-)").unwrap(),
    })
}

/// The mteval-v13a tokenizer as used by sacre-style BLEU.
pub fn tokenize_13a(line: &str) -> String {
    let mut line = line.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let line = format!(" {line} ");
    let re = regexes();
    let line = re.symbols.replace_all(&line, " $1 ");
    let line = re.period_comma_before.replace_all(&line, "$1 $2 ");
    let line = re.period_comma_after.replace_all(&line, " $1 $2");
    let line = re.dash_after_digit.replace_all(&line, "$1 $2 ");
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn tokenize(line: &str, tokenization: Tokenization) -> Vec<String> {
    let tokenized = match tokenization {
        Tokenization::Intl13a => tokenize_13a(line),
        Tokenization::None => line.to_string(),
    };
    tokenized.split_whitespace().map(str::to_string).collect()
}

/// Sufficient statistics for corpus BLEU; sums over sentences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BleuStats {
    pub hyp_len: usize,
    pub ref_len: usize,
    pub correct: Vec<usize>,
    pub total: Vec<usize>,
}

impl BleuStats {
    pub fn zero(order: usize) -> Self {
        Self {
            hyp_len: 0,
            ref_len: 0,
            correct: vec![0; order],
            total: vec![0; order],
        }
    }
}

impl AddAssign<&BleuStats> for BleuStats {
    fn add_assign(&mut self, rhs: &BleuStats) {
        self.hyp_len += rhs.hyp_len;
        self.ref_len += rhs.ref_len;
        for (a, b) in self.correct.iter_mut().zip(&rhs.correct) {
            *a += b;
        }
        for (a, b) in self.total.iter_mut().zip(&rhs.total) {
            *a += b;
        }
    }
}

fn ngram_counts(tokens: &[String], order: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for n in 1..=order {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Statistics for one hypothesis against one or more references. The
/// effective reference length is the closest one, shorter winning ties.
pub fn sentence_stats(hyp: &str, refs: &[&str], cfg: &BleuConfig) -> BleuStats {
    let order = cfg.max_ngram_order;
    let hyp_tokens = tokenize(hyp, cfg.tokenization);
    let ref_tokens: Vec<Vec<String>> = refs.iter().map(|r| tokenize(r, cfg.tokenization)).collect();

    let hyp_len = hyp_tokens.len();
    let mut ref_len = usize::MAX;
    let mut best_diff = usize::MAX;
    for r in &ref_tokens {
        let diff = r.len().abs_diff(hyp_len);
        if diff < best_diff || (diff == best_diff && r.len() < ref_len) {
            best_diff = diff;
            ref_len = r.len();
        }
    }
    if ref_tokens.is_empty() {
        ref_len = 0;
    }

    let mut max_ref: HashMap<&[String], usize> = HashMap::new();
    for r in &ref_tokens {
        for (gram, c) in ngram_counts(r, order) {
            let slot = max_ref.entry(gram).or_insert(0);
            *slot = (*slot).max(c);
        }
    }

    let mut stats = BleuStats::zero(order);
    stats.hyp_len = hyp_len;
    stats.ref_len = ref_len;
    for (gram, c) in ngram_counts(&hyp_tokens, order) {
        let clip = max_ref.get(gram).copied().unwrap_or(0);
        stats.correct[gram.len() - 1] += c.min(clip);
    }
    for n in 1..=order {
        stats.total[n - 1] = (hyp_len + 1).saturating_sub(n);
    }
    stats
}

fn safe_ln(x: f64) -> f64 {
    if x == 0.0 {
        -9_999_999_999.0
    } else {
        x.ln()
    }
}

/// Corpus BLEU on the 0..100 scale from aggregated statistics.
pub fn score_from_stats(stats: &BleuStats, cfg: &BleuConfig) -> f64 {
    let order = cfg.max_ngram_order;
    if stats.correct.first().copied().unwrap_or(0) == 0 {
        return 0.0;
    }
    let mut precisions = vec![0.0; order];
    let mut smooth = 1.0;
    for (p, (&correct, &total)) in precisions.iter_mut().zip(stats.correct.iter().zip(&stats.total)) {
        if total == 0 {
            break;
        }
        if correct == 0 {
            if cfg.smoothing == Smoothing::ExpDecay {
                smooth *= 2.0;
                *p = 100.0 / (smooth * total as f64);
            }
        } else {
            *p = 100.0 * correct as f64 / total as f64;
        }
    }
    let bp = if stats.hyp_len < stats.ref_len {
        if stats.hyp_len > 0 {
            (1.0 - stats.ref_len as f64 / stats.hyp_len as f64).exp()
        } else {
            0.0
        }
    } else {
        1.0
    };
    let log_sum: f64 = precisions.iter().map(|&p| safe_ln(p)).sum();
    (bp * (log_sum / order as f64).exp()).clamp(0.0, 100.0)
}

pub fn corpus_stats_multi(hypotheses: &[&str], reference_streams: &[Vec<&str>], cfg: &BleuConfig) -> Vec<BleuStats> {
    hypotheses
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let refs: Vec<&str> = reference_streams.iter().map(|s| s[i]).collect();
            sentence_stats(h, &refs, cfg)
        })
        .collect()
}

/// Corpus BLEU against one or more reference streams, each parallel to
/// `hypotheses`.
pub fn bleu_multi<S: AsRef<str>>(
    hypotheses: &[S],
    reference_streams: &[Vec<S>],
    cfg: &BleuConfig,
) -> Result<ScoreReport, MetricError> {
    if cfg.max_ngram_order == 0 {
        return Err(MetricError::InvalidConfig("max_ngram_order must be >= 1".into()));
    }
    if reference_streams.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    for stream in reference_streams {
        check_corpus(hypotheses.len(), stream.len())?;
    }
    let hyps: Vec<&str> = hypotheses.iter().map(AsRef::as_ref).collect();
    let streams: Vec<Vec<&str>> = reference_streams
        .iter()
        .map(|s| s.iter().map(AsRef::as_ref).collect())
        .collect();
    let mut total = BleuStats::zero(cfg.max_ngram_order);
    for s in corpus_stats_multi(&hyps, &streams, cfg) {
        total += &s;
    }
    Ok(ScoreReport::new(
        "bleu",
        score_from_stats(&total, cfg),
        hyps.len(),
        &cfg.signature(streams.len()),
    ))
}

pub fn bleu<S: AsRef<str>>(hypotheses: &[S], references: &[S], cfg: &BleuConfig) -> Result<ScoreReport, MetricError> {
    check_corpus(hypotheses.len(), references.len())?;
    let refs: Vec<&str> = references.iter().map(AsRef::as_ref).collect();
    let hyps: Vec<&str> = hypotheses.iter().map(AsRef::as_ref).collect();
    bleu_multi(&hyps, &[refs], cfg)
}
