//! Paired bootstrap resampling for comparing two systems on one test set.
//!
//! Index multisets are drawn sequentially from [`SplitMix64`]: resample `r`
//! takes `n` draws `rng.index(n)` before resample `r + 1` starts. Each
//! resample recomputes both systems' corpus score from summed sentence
//! statistics. The p-value is the fraction of resamples in which the system
//! with the higher observed score fails to score strictly higher.

use serde::{Deserialize, Serialize};

use super::bleu::{self, BleuConfig, BleuStats};
use super::chrf::{self, ChrfConfig, ChrfStats};
use super::rng::SplitMix64;
use super::MetricError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "bleu")]
    Bleu,
    #[serde(rename = "chrf++")]
    ChrfPP,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Bleu => "bleu",
            Metric::ChrfPP => "chrf++",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bleu" => Ok(Metric::Bleu),
            "chrf++" | "chrfpp" | "chrf" => Ok(Metric::ChrfPP),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            resamples: 1000,
            seed: 12345,
            alpha: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub score_a: f64,
    pub score_b: f64,
    /// Mean over resamples of `score_b - score_a`.
    pub mean_delta: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Per-sentence statistics for one system, summable into corpus scores.
enum SystemStats {
    Bleu(Vec<BleuStats>, BleuConfig),
    Chrf(Vec<ChrfStats>, ChrfConfig),
}

impl SystemStats {
    fn collect(metric: Metric, hyps: &[&str], refs: &[&str]) -> Self {
        match metric {
            Metric::Bleu => {
                let cfg = BleuConfig::default();
                let stats = hyps
                    .iter()
                    .zip(refs)
                    .map(|(h, r)| bleu::sentence_stats(h, &[r], &cfg))
                    .collect();
                SystemStats::Bleu(stats, cfg)
            }
            Metric::ChrfPP => {
                let cfg = ChrfConfig::default();
                let stats = hyps
                    .iter()
                    .zip(refs)
                    .map(|(h, r)| chrf::sentence_stats(h, r, &cfg))
                    .collect();
                SystemStats::Chrf(stats, cfg)
            }
        }
    }

    fn score<I: Iterator<Item = usize>>(&self, indices: I) -> f64 {
        match self {
            SystemStats::Bleu(stats, cfg) => {
                let mut total = BleuStats::zero(cfg.max_ngram_order);
                for i in indices {
                    total += &stats[i];
                }
                bleu::score_from_stats(&total, cfg)
            }
            SystemStats::Chrf(stats, cfg) => {
                let mut total = ChrfStats::zero(cfg.char_order + cfg.word_order);
                for i in indices {
                    total += &stats[i];
                }
                chrf::score_from_stats(&total, cfg)
            }
        }
    }
}

pub fn paired_bootstrap<S: AsRef<str>>(
    hyps_a: &[S],
    hyps_b: &[S],
    refs: &[S],
    metric: Metric,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult, MetricError> {
    let n = refs.len();
    if hyps_a.len() != n {
        return Err(MetricError::LengthMismatch {
            hyps: hyps_a.len(),
            refs: n,
        });
    }
    if hyps_b.len() != n {
        return Err(MetricError::LengthMismatch {
            hyps: hyps_b.len(),
            refs: n,
        });
    }
    if n < 2 {
        return Err(MetricError::TooFewSentences { min: 2, got: n });
    }
    if cfg.resamples == 0 {
        return Err(MetricError::InvalidConfig("resamples must be >= 1".into()));
    }
    let a: Vec<&str> = hyps_a.iter().map(AsRef::as_ref).collect();
    let b: Vec<&str> = hyps_b.iter().map(AsRef::as_ref).collect();
    let r: Vec<&str> = refs.iter().map(AsRef::as_ref).collect();
    let stats_a = SystemStats::collect(metric, &a, &r);
    let stats_b = SystemStats::collect(metric, &b, &r);

    let score_a = stats_a.score(0..n);
    let score_b = stats_b.score(0..n);
    let b_leads = score_b > score_a;
    let tie = score_a == score_b;

    let mut rng = SplitMix64::new(cfg.seed);
    let mut indices = vec![0usize; n];
    let mut failures = 0usize;
    let mut delta_sum = 0.0;
    for _ in 0..cfg.resamples {
        for slot in indices.iter_mut() {
            *slot = rng.index(n);
        }
        let sa = stats_a.score(indices.iter().copied());
        let sb = stats_b.score(indices.iter().copied());
        delta_sum += sb - sa;
        let leader_wins = if b_leads { sb > sa } else { sa > sb };
        if tie || !leader_wins {
            failures += 1;
        }
    }
    let p_value = failures as f64 / cfg.resamples as f64;
    Ok(BootstrapResult {
        score_a,
        score_b,
        mean_delta: delta_sum / cfg.resamples as f64,
        p_value,
        significant: p_value < cfg.alpha,
    })
}
