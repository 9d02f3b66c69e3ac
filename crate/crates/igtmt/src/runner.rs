//! Experiment execution: prompt, complete, extract and score every
//! evaluation entry of a corpus.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use igtmt_core::corpus::Corpus;
use igtmt_core::igt::{parse_gloss_line, render_gloss, strip_grammatical_labels, GlossLine, IgtEntry, LangCode};
use igtmt_core::metrics::bootstrap::{paired_bootstrap, BootstrapConfig, Metric};
use igtmt_core::metrics::gloss::{morpheme_counts, word_counts};
use igtmt_core::metrics::{bleu, chrf_pp, BleuConfig, ChrfConfig, ScoreReport};
use igtmt_core::prompt::{
    build_prompt, extract_translation, Direction, ExtractionMethod, PromptError, PromptMessages, PromptOptions,
    PromptRequest, Strategy,
};
use igtmt_llm::{external_score, Cache, CompletionRequest, GlossClient, LlmClient, Transport};

use crate::config::{read_text, sha_hex, BackendKind, MetricName, RunConfig};
use crate::dictionary::Dictionary;
use crate::RunError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryResult {
    /// Position of the entry in the evaluation corpus file.
    pub entry_index: usize,
    pub prompt_digest: Option<String>,
    pub translation: String,
    pub reference: String,
    /// Gloss given to or produced by the model for this input.
    pub gloss: Option<String>,
    pub method: Option<ExtractionMethod>,
    pub error: Option<String>,
}

/// Latencies recorded with the cached completions. Deterministic under replay.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub completion_latency_ms: u64,
    pub gloss_latency_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub corpus: String,
    pub language: String,
    pub direction: Direction,
    pub strategy: Strategy,
    pub n_support: usize,
    pub model_id: String,
    pub config_digest: String,
    pub failed_entries: usize,
    pub per_entry: Vec<EntryResult>,
    pub scores: Vec<ScoreReport>,
    pub timing: Timing,
}

impl RunResult {
    pub fn score(&self, metric: &str) -> Option<f64> {
        self.scores
            .iter()
            .find(|s| s.metric_name == metric)
            .map(|s| s.corpus_score)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }
}

struct Outcome {
    entry: EntryResult,
    completion_ms: u64,
    gloss_ms: u64,
}

/// A prepared experiment: corpora loaded, split and clients constructed.
pub struct Runner {
    cfg: RunConfig,
    digest: String,
    corpus_name: String,
    language: LangCode,
    language_name: String,
    metalanguage_name: String,
    pool: Vec<IgtEntry>,
    n_support: usize,
    eval: Vec<(usize, IgtEntry)>,
    dictionary: Option<Dictionary>,
    llm: LlmClient,
    glosser: Option<GlossClient>,
    transport: Arc<dyn Transport>,
}

impl Runner {
    /// `transport` is only used by a live backend; pass
    /// [`igtmt_llm::ForbiddenTransport`] to prove a run stays offline.
    pub fn new(cfg: RunConfig, transport: Arc<dyn Transport>) -> Result<Self, RunError> {
        cfg.validate()?;
        let loaded = cfg.corpus.load()?;
        for w in &loaded.warnings {
            log::warn!("{}:{}: {}", cfg.corpus.path.display(), w.line, w.message);
        }
        let corpus: Corpus = loaded.corpus;

        let (pool, eval): (Vec<IgtEntry>, Vec<(usize, IgtEntry)>) = match &cfg.support_corpus {
            Some(src) => {
                let support = src.load()?.corpus;
                if support.language != corpus.language {
                    return Err(RunError::Config(format!(
                        "support corpus language {} differs from corpus language {}",
                        support.language, corpus.language
                    )));
                }
                (support.entries, corpus.entries.into_iter().enumerate().collect())
            }
            None => {
                if cfg.n_support > corpus.len() {
                    return Err(RunError::Config(format!(
                        "n_support {} exceeds corpus size {}",
                        cfg.n_support,
                        corpus.len()
                    )));
                }
                let mut entries = corpus.entries.into_iter().enumerate();
                let pool = entries.by_ref().take(cfg.n_support).map(|(_, e)| e).collect();
                (pool, entries.collect())
            }
        };

        let dictionary = match &cfg.dictionary {
            Some(path) => Some(Dictionary::parse(&read_text(path)?)?),
            None => None,
        };

        let cache = Cache::new(&cfg.cache_dir);
        let llm = match cfg.backend {
            BackendKind::Replay => LlmClient::replay(cache, transport.clone()),
            BackendKind::Live => LlmClient::live(
                cache,
                cfg.endpoint.clone().expect("validated"),
                transport.clone(),
                cfg.concurrency,
            ),
        };
        let glosser = match (&cfg.gloss_endpoint, cfg.strategy) {
            (Some(ge), Strategy::ModelGloss) => {
                let cache = Cache::new(&cfg.cache_dir);
                let client = match cfg.backend {
                    BackendKind::Replay => LlmClient::replay(cache, transport.clone()),
                    BackendKind::Live => LlmClient::live(cache, ge.endpoint(), transport.clone(), cfg.concurrency),
                };
                Some(GlossClient::new(client, &ge.model_id))
            }
            _ => None,
        };

        let language_name = cfg
            .corpus
            .language_name
            .clone()
            .unwrap_or_else(|| corpus.language.display_name());
        let mut runner = Self {
            digest: String::new(),
            corpus_name: corpus.name,
            language: corpus.language,
            language_name,
            metalanguage_name: corpus.metalanguage.display_name(),
            pool,
            n_support: 0,
            eval,
            dictionary,
            llm,
            glosser,
            transport,
            cfg,
        };
        let n = runner.cfg.n_support;
        runner.set_support_size(n)?;
        Ok(runner)
    }

    /// Use the first `n` entries of the support pool instead of
    /// `n_support`. The evaluation split does not change.
    pub fn with_support_size(mut self, n: usize) -> Result<Self, RunError> {
        self.set_support_size(n)?;
        Ok(self)
    }

    fn set_support_size(&mut self, n: usize) -> Result<(), RunError> {
        if n > self.pool.len() {
            return Err(RunError::Config(format!(
                "{n} support examples requested but the pool holds {}",
                self.pool.len()
            )));
        }
        let s = self.cfg.strategy;
        if !s.is_zero_shot() && n == 0 {
            return Err(PromptError::MissingSupport(s).into());
        }
        self.n_support = n;
        let mut cfg = self.cfg.clone();
        cfg.n_support = n;
        self.digest = cfg.digest()?;
        Ok(())
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn support_pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn eval_indices(&self) -> Vec<usize> {
        self.eval.iter().map(|(i, _)| *i).collect()
    }

    pub fn llm(&self) -> &LlmClient {
        &self.llm
    }

    pub fn glosser(&self) -> Option<&GlossClient> {
        self.glosser.as_ref()
    }

    fn support(&self) -> &[IgtEntry] {
        if self.cfg.strategy.is_zero_shot() {
            &[]
        } else {
            &self.pool[..self.n_support]
        }
    }

    fn source_and_reference<'e>(&self, entry: &'e IgtEntry) -> (&'e str, &'e str) {
        match self.cfg.direction {
            Direction::ToEnglish => (&entry.transcription, &entry.translation),
            Direction::FromEnglish => (&entry.translation, &entry.transcription),
        }
    }

    /// Gloss to place under the input sentence, and its latency, if the
    /// strategy supplies one.
    fn input_gloss(&self, entry: &IgtEntry) -> Result<(Option<GlossLine>, u64), String> {
        match self.cfg.strategy {
            Strategy::ModelGloss => {
                let glosser = self.glosser.as_ref().expect("validated");
                let p = glosser
                    .predict_gloss(&entry.transcription, &self.language)
                    .map_err(|e| format!("gloss model: {e}"))?;
                Ok((Some(p.gloss), p.latency_ms))
            }
            Strategy::OracleGloss | Strategy::ZeroGloss => match &entry.gloss {
                Some(g) => Ok((Some(g.clone()), 0)),
                None => Err("entry has no gold gloss".to_string()),
            },
            _ => Ok((None, 0)),
        }
    }

    pub fn prompt_request(&self, entry: &IgtEntry, gloss: Option<GlossLine>) -> PromptRequest {
        let (source, _) = self.source_and_reference(entry);
        PromptRequest {
            strategy: self.cfg.strategy,
            support: self.support().to_vec(),
            input: entry.clone(),
            direction: self.cfg.direction,
            language_name: self.language_name.clone(),
            metalanguage_name: self.metalanguage_name.clone(),
            input_gloss_override: gloss,
            dictionary: self
                .dictionary
                .as_ref()
                .filter(|_| self.cfg.strategy == Strategy::DictBaseline)
                .map(|d| d.lookup(source, self.cfg.direction)),
        }
    }

    fn prompt_options(&self) -> PromptOptions {
        PromptOptions {
            enclosure: self.cfg.enclosure.clone(),
            raw_glosses: self.cfg.raw_glosses,
        }
    }

    fn completion_request(&self, messages: PromptMessages) -> CompletionRequest {
        let mut req = CompletionRequest::translation(&self.cfg.model_id, messages);
        req.temperature = self.cfg.temperature;
        req.greedy = self.cfg.greedy;
        if let Some(m) = self.cfg.max_tokens {
            req.max_tokens = m;
        }
        req
    }

    fn process(&self, index: usize, entry: &IgtEntry) -> Outcome {
        let (_, reference) = self.source_and_reference(entry);
        let mut out = Outcome {
            entry: EntryResult {
                entry_index: index,
                prompt_digest: None,
                translation: String::new(),
                reference: reference.to_string(),
                gloss: None,
                method: None,
                error: None,
            },
            completion_ms: 0,
            gloss_ms: 0,
        };
        let fail = |mut out: Outcome, msg: String| {
            log::warn!("entry {index}: {msg}");
            out.entry.error = Some(msg);
            out
        };

        let (gloss, gloss_ms) = match self.input_gloss(entry) {
            Ok(g) => g,
            Err(e) => return fail(out, e),
        };
        out.gloss_ms = gloss_ms;
        out.entry.gloss = match (&gloss, self.cfg.strategy) {
            (Some(g), _) => Some(render_gloss(g)),
            (None, Strategy::OracleEmpty) => entry.gloss.as_ref().map(|g| render_gloss(&strip_grammatical_labels(g))),
            _ => None,
        };

        let messages = match build_prompt(&self.prompt_request(entry, gloss), &self.prompt_options()) {
            Ok(m) => m,
            Err(e) => return fail(out, e.to_string()),
        };
        out.entry.prompt_digest = Some(prompt_digest(&messages));

        let record = match self.llm.complete(&self.completion_request(messages)) {
            Ok(r) => r,
            Err(e) => return fail(out, e.to_string()),
        };
        out.completion_ms = record.latency_ms;
        match extract_translation(&record.response_text, self.cfg.strategy, &self.cfg.enclosure) {
            Ok(ex) => {
                out.entry.translation = ex.translation;
                out.entry.method = Some(ex.method);
                if let Some(g) = ex.gloss {
                    out.entry.gloss = Some(render_gloss(&g));
                }
                out
            }
            Err(e) => fail(out, e.to_string()),
        }
    }

    /// Run every evaluation entry on `concurrency` workers and score the
    /// collected translations. More than half the entries failing is an
    /// error that still carries the partial result.
    pub fn run(&self) -> Result<RunResult, RunError> {
        let n = self.eval.len();
        let cursor = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Outcome>>> = Mutex::new((0..n).map(|_| None).collect());
        let workers = self.cfg.concurrency.clamp(1, n.max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = cursor.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let (index, entry) = &self.eval[i];
                    let outcome = self.process(*index, entry);
                    slots.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(outcome);
                });
            }
        });
        let outcomes: Vec<Outcome> = slots
            .into_inner()
            .unwrap_or_else(|p| p.into_inner())
            .into_iter()
            .map(|o| o.expect("every slot filled"))
            .collect();

        let mut timing = Timing::default();
        let mut per_entry = Vec::with_capacity(n);
        for o in outcomes {
            timing.completion_latency_ms += o.completion_ms;
            timing.gloss_latency_ms += o.gloss_ms;
            per_entry.push(o.entry);
        }
        per_entry.sort_by_key(|e| e.entry_index);
        let failed_entries = per_entry.iter().filter(|e| e.error.is_some()).count();

        let mut result = RunResult {
            corpus: self.corpus_name.clone(),
            language: self.language.to_string(),
            direction: self.cfg.direction,
            strategy: self.cfg.strategy,
            n_support: self.n_support,
            model_id: self.cfg.model_id.clone(),
            config_digest: self.digest.clone(),
            failed_entries,
            per_entry,
            scores: Vec::new(),
            timing,
        };
        if failed_entries * 2 > n {
            let first_error = result
                .per_entry
                .iter()
                .find_map(|e| e.error.clone())
                .unwrap_or_default();
            return Err(RunError::TooManyFailures {
                failed: failed_entries,
                total: n,
                first_error,
                result: Box::new(result),
            });
        }
        result.scores = self.score(&result.per_entry)?;
        Ok(result)
    }

    fn score(&self, entries: &[EntryResult]) -> Result<Vec<ScoreReport>, RunError> {
        let hyps: Vec<&str> = entries.iter().map(|e| e.translation.as_str()).collect();
        let refs: Vec<&str> = entries.iter().map(|e| e.reference.as_str()).collect();
        let mut reports = Vec::new();
        for metric in &self.cfg.metrics {
            let report = match metric {
                MetricName::Bleu => bleu(&hyps, &refs, &BleuConfig::default())?,
                MetricName::ChrfPP => chrf_pp(&hyps, &refs, &ChrfConfig::default())?,
                MetricName::GlossWordAccuracy | MetricName::GlossMorphemeAccuracy => {
                    self.gloss_accuracy(*metric, entries)?
                }
                MetricName::External => {
                    let sources: Vec<&str> = self.eval.iter().map(|(_, e)| self.source_and_reference(e).0).collect();
                    let ep = self.cfg.scorer_endpoint.as_ref().expect("validated");
                    external_score(&hyps, &refs, &sources, ep, self.transport.as_ref())?
                }
            };
            reports.push(report);
        }
        Ok(reports)
    }

    /// Micro-averaged accuracy of predicted glosses against gold, in percent.
    fn gloss_accuracy(&self, metric: MetricName, entries: &[EntryResult]) -> Result<ScoreReport, RunError> {
        let mut correct = 0;
        let mut total = 0;
        let mut compared = 0;
        for (res, (_, entry)) in entries.iter().zip(&self.eval) {
            let (Some(pred), Some(gold)) = (&res.gloss, &entry.gloss) else {
                continue;
            };
            let pred = parse_gloss_line(pred);
            let (c, t) = match metric {
                MetricName::GlossWordAccuracy => word_counts(&pred, gold),
                _ => morpheme_counts(&pred, gold),
            };
            correct += c;
            total += t;
            compared += 1;
        }
        if total == 0 {
            return Err(RunError::Config(format!(
                "{} needs entries with both a predicted and a gold gloss",
                metric.name()
            )));
        }
        Ok(ScoreReport::new(
            metric.name(),
            100.0 * correct as f64 / total as f64,
            compared,
            &format!("{}|case:mixed|align:position|scale:percent", metric.name()),
        ))
    }
}

pub fn prompt_digest(messages: &PromptMessages) -> String {
    let v = serde_json::to_value(messages).expect("messages serialize");
    sha_hex(igtmt_llm::request::canonical_json(&v).as_bytes())[..16].to_string()
}

pub fn run_experiment(cfg: &RunConfig, transport: Arc<dyn Transport>) -> Result<RunResult, RunError> {
    Runner::new(cfg.clone(), transport)?.run()
}

pub const DEFAULT_NSHOT_GRID: [usize; 8] = [3, 9, 15, 21, 27, 33, 39, 45];

/// One run per support size, all on the evaluation split fixed by
/// `cfg.n_support`. Sizes are checked against the pool before any run starts.
pub fn ablate_nshot(
    cfg: &RunConfig,
    ns: &[usize],
    transport: Arc<dyn Transport>,
) -> Result<Vec<(usize, RunResult)>, RunError> {
    if ns.is_empty() {
        return Ok(Vec::new());
    }
    let base = Runner::new(cfg.clone(), transport.clone())?;
    let pool = base.support_pool_size();
    if let Some(&too_big) = ns.iter().find(|&&n| n > pool) {
        return Err(RunError::Config(format!(
            "{too_big} support examples requested but the pool holds {pool}"
        )));
    }
    let mut out = Vec::with_capacity(ns.len());
    let mut runner = base;
    for &n in ns {
        runner = runner.with_support_size(n)?;
        out.push((n, runner.run()?));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub metric: String,
    pub score_a: f64,
    pub score_b: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Paired bootstrap of two runs over the same entries, for every corpus
/// metric both runs report.
pub fn compare_runs(a: &RunResult, b: &RunResult, cfg: &BootstrapConfig) -> Result<Vec<SignificanceRow>, RunError> {
    let idx = |r: &RunResult| r.per_entry.iter().map(|e| e.entry_index).collect::<Vec<_>>();
    if idx(a) != idx(b) {
        return Err(RunError::Mismatch("runs cover different entries".into()));
    }
    if a.per_entry
        .iter()
        .zip(&b.per_entry)
        .any(|(x, y)| x.reference != y.reference)
    {
        return Err(RunError::Mismatch("runs have different references".into()));
    }
    let hyps = |r: &RunResult| r.per_entry.iter().map(|e| e.translation.clone()).collect::<Vec<_>>();
    let refs: Vec<String> = a.per_entry.iter().map(|e| e.reference.clone()).collect();
    let (ha, hb) = (hyps(a), hyps(b));
    let mut rows = Vec::new();
    for metric in [Metric::Bleu, Metric::ChrfPP] {
        if a.score(metric.name()).is_none() || b.score(metric.name()).is_none() {
            continue;
        }
        let r = paired_bootstrap(&ha, &hb, &refs, metric, cfg)?;
        rows.push(SignificanceRow {
            metric: metric.name().to_string(),
            score_a: r.score_a,
            score_b: r.score_b,
            p_value: r.p_value,
            significant: r.significant,
        });
    }
    if rows.is_empty() {
        return Err(RunError::Mismatch("no shared bleu or chrf++ scores to compare".into()));
    }
    Ok(rows)
}
