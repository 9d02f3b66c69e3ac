//! Brute-force reference implementations used to cross-check the metrics.
//!
//! Everything here is deliberately naive: n-grams are enumerated into plain
//! vectors and counted by linear search. Inputs are expected to be
//! whitespace-separated lowercase words, so no tokenizer is involved.

#![allow(dead_code)]

/// Every n-gram of `items` of length exactly `n`, in order, duplicates kept.
pub fn ngrams<T: Clone>(items: &[T], n: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    if n == 0 || n > items.len() {
        return out;
    }
    for start in 0..=(items.len() - n) {
        let mut g = Vec::new();
        for k in 0..n {
            g.push(items[start + k].clone());
        }
        out.push(g);
    }
    out
}

fn count_of<T: PartialEq>(bag: &[T], x: &T) -> usize {
    bag.iter().filter(|y| *y == x).count()
}

fn distinct<T: PartialEq + Clone>(bag: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for x in bag {
        if !out.contains(x) {
            out.push(x.clone());
        }
    }
    out
}

/// Clipped matches of `hyp` against the per-n-gram maximum over `refs`.
fn clipped_matches<T: PartialEq + Clone>(hyp: &[T], refs: &[Vec<T>]) -> usize {
    let mut m = 0;
    for g in distinct(hyp) {
        let c = count_of(hyp, &g);
        let mut best = 0;
        for r in refs {
            best = best.max(count_of(r, &g));
        }
        m += c.min(best);
    }
    m
}

/// Integer BLEU statistics for a whole corpus, computed sentence by sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleBleuCounts {
    pub hyp_len: usize,
    pub ref_len: usize,
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
}

pub fn bleu_counts(hyps: &[&str], ref_streams: &[Vec<&str>], order: usize) -> OracleBleuCounts {
    let mut c = OracleBleuCounts {
        hyp_len: 0,
        ref_len: 0,
        matches: vec![0; order],
        totals: vec![0; order],
    };
    for (i, h) in hyps.iter().enumerate() {
        let hw: Vec<&str> = h.split_whitespace().collect();
        let rws: Vec<Vec<&str>> = ref_streams.iter().map(|s| s[i].split_whitespace().collect()).collect();
        // closest reference length; the shorter one on ties
        let mut lens: Vec<usize> = rws.iter().map(Vec::len).collect();
        lens.sort();
        let mut chosen = lens[0];
        for &l in &lens {
            let d = (l as i64 - hw.len() as i64).abs();
            let dc = (chosen as i64 - hw.len() as i64).abs();
            if d < dc {
                chosen = l;
            }
        }
        c.hyp_len += hw.len();
        c.ref_len += chosen;
        for n in 1..=order {
            let hg = ngrams(&hw, n);
            let rgs: Vec<Vec<Vec<&str>>> = rws.iter().map(|r| ngrams(r, n)).collect();
            c.totals[n - 1] += hg.len();
            c.matches[n - 1] += clipped_matches(&hg, &rgs);
        }
    }
    c
}

/// Corpus BLEU with exponential-decay smoothing from integer statistics.
pub fn bleu_from_counts(c: &OracleBleuCounts) -> f64 {
    let order = c.matches.len();
    if c.matches[0] == 0 {
        return 0.0;
    }
    let mut halvings = 0;
    let mut product = 1.0f64;
    for n in 0..order {
        let p = if c.totals[n] == 0 {
            // an order with no candidates contributes a zero precision
            return 0.0;
        } else if c.matches[n] == 0 {
            halvings += 1;
            1.0 / (2f64.powi(halvings) * c.totals[n] as f64)
        } else {
            c.matches[n] as f64 / c.totals[n] as f64
        };
        product *= p;
    }
    let geo = product.powf(1.0 / order as f64);
    let bp = if c.hyp_len >= c.ref_len {
        1.0
    } else if c.hyp_len == 0 {
        0.0
    } else {
        (1.0 - c.ref_len as f64 / c.hyp_len as f64).exp()
    };
    100.0 * bp * geo
}

pub fn bleu(hyps: &[&str], refs: &[&str]) -> f64 {
    bleu_from_counts(&bleu_counts(hyps, &[refs.to_vec()], 4))
}

/// Space-separated words; a word of two or more characters ending in an ASCII
/// punctuation mark loses it to a separate word, otherwise one starting with
/// such a mark does.
pub fn punct_words(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for w in s.split(' ').filter(|w| !w.is_empty()) {
        let cs: Vec<char> = w.chars().collect();
        let k = cs.len();
        if k >= 2 && cs[k - 1].is_ascii_punctuation() {
            out.push(cs[..k - 1].iter().collect());
            out.push(cs[k - 1].to_string());
        } else if k >= 2 && cs[0].is_ascii_punctuation() {
            out.push(cs[0].to_string());
            out.push(cs[1..].iter().collect());
        } else {
            out.push(w.to_string());
        }
    }
    out
}

/// Per-order `(hyp, ref, match)` chrF++ counts; 6 char orders then 2 word orders.
pub fn chrf_counts(hyps: &[&str], refs: &[&str]) -> Vec<[usize; 3]> {
    let mut out = vec![[0usize; 3]; 8];
    for (h, r) in hyps.iter().zip(refs) {
        let hc: Vec<char> = h.chars().filter(|c| *c != ' ').collect();
        let rc: Vec<char> = r.chars().filter(|c| *c != ' ').collect();
        let hw = punct_words(h);
        let rw = punct_words(r);
        for n in 1..=6 {
            let hg = ngrams(&hc, n);
            let rg = ngrams(&rc, n);
            out[n - 1][0] += hg.len();
            out[n - 1][1] += rg.len();
            out[n - 1][2] += clipped_matches(&hg, &[rg]);
        }
        for n in 1..=2 {
            let hg = ngrams(&hw, n);
            let rg = ngrams(&rw, n);
            out[5 + n][0] += hg.len();
            out[5 + n][1] += rg.len();
            out[5 + n][2] += clipped_matches(&hg, &[rg]);
        }
    }
    out
}

pub fn chrf_from_counts(counts: &[[usize; 3]]) -> f64 {
    let beta2 = 4.0;
    let mut fs = Vec::new();
    for &[nh, nr, nm] in counts {
        if nh == 0 && nr == 0 {
            continue;
        }
        if nm == 0 {
            fs.push(0.0);
            continue;
        }
        let p = nm as f64 / nh as f64;
        let r = nm as f64 / nr as f64;
        fs.push((1.0 + beta2) * p * r / (beta2 * p + r));
    }
    if fs.is_empty() {
        return 0.0;
    }
    100.0 * fs.iter().sum::<f64>() / fs.len() as f64
}

pub fn chrf(hyps: &[&str], refs: &[&str]) -> f64 {
    chrf_from_counts(&chrf_counts(hyps, refs))
}

/// SplitMix64, written out again from its published definition.
pub struct Mix {
    s: u64,
}

impl Mix {
    pub fn new(seed: u64) -> Self {
        Mix { s: seed }
    }

    pub fn next(&mut self) -> u64 {
        self.s = self.s.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.s;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: usize) -> usize {
        let wide = (self.next() as u128) * (n as u128);
        (wide >> 64) as usize
    }
}

pub enum OracleMetric {
    Bleu,
    Chrf,
}

fn corpus_score(metric: &OracleMetric, hyps: &[&str], refs: &[&str]) -> f64 {
    match metric {
        OracleMetric::Bleu => bleu(hyps, refs),
        OracleMetric::Chrf => chrf(hyps, refs),
    }
}

/// Paired bootstrap by literally materialising every resampled corpus.
/// Returns `(p_value, mean_delta)` where delta is `b - a`.
pub fn bootstrap(
    a: &[&str],
    b: &[&str],
    refs: &[&str],
    metric: OracleMetric,
    resamples: usize,
    seed: u64,
) -> (f64, f64) {
    let n = refs.len();
    let full_a = corpus_score(&metric, a, refs);
    let full_b = corpus_score(&metric, b, refs);
    let mut rng = Mix::new(seed);
    let mut bad = 0;
    let mut deltas = 0.0;
    for _ in 0..resamples {
        let idx: Vec<usize> = (0..n).map(|_| rng.below(n)).collect();
        let ra: Vec<&str> = idx.iter().map(|&i| a[i]).collect();
        let rb: Vec<&str> = idx.iter().map(|&i| b[i]).collect();
        let rr: Vec<&str> = idx.iter().map(|&i| refs[i]).collect();
        let sa = corpus_score(&metric, &ra, &rr);
        let sb = corpus_score(&metric, &rb, &rr);
        deltas += sb - sa;
        let won = if full_a == full_b {
            false
        } else if full_b > full_a {
            sb > sa
        } else {
            sa > sb
        };
        if !won {
            bad += 1;
        }
    }
    (bad as f64 / resamples as f64, deltas / resamples as f64)
}

/// Deterministic random micro-corpus: up to `max_sents` sentence pairs of up
/// to 8 words drawn from a vocabulary of at most 10 words.
pub fn micro_corpus(rng: &mut Mix, max_sents: usize) -> (Vec<String>, Vec<String>) {
    micro_corpus_from(
        rng,
        max_sents,
        &["a", "b", "c", "dd", "ee", "the", "cat", "sat", "on", "mat"],
    )
}

/// Vocabulary with edge punctuation, for the chrF++ word tier.
pub const PUNCT_VOCAB: [&str; 10] = ["a", ".", "b,", "(c", "dd.", "\"ee\"", "the", "cat.", "(sat)", "on"];

pub fn micro_corpus_from(rng: &mut Mix, max_sents: usize, vocab: &[&'static str]) -> (Vec<String>, Vec<String>) {
    let vocab_size = 2 + rng.below(vocab.len() - 1);
    let sents = 1 + rng.below(max_sents);
    let sentence = |rng: &mut Mix| {
        let len = rng.below(9);
        (0..len)
            .map(|_| vocab[rng.below(vocab_size)])
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut hyps = Vec::new();
    let mut refs = Vec::new();
    for _ in 0..sents {
        let r = sentence(rng);
        // bias some hypotheses towards their reference so scores are not all zero
        let h = if rng.below(3) == 0 { r.clone() } else { sentence(rng) };
        hyps.push(h);
        refs.push(r);
    }
    (hyps, refs)
}
