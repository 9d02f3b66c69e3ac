//! Run configuration: a JSON file whose relative paths resolve against the
//! file's own directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use igtmt_core::corpus::{load_jsonl, load_parallel, load_sigmorphon, Loaded};
use igtmt_core::prompt::{Direction, Enclosure, Strategy};
use igtmt_core::CorpusMeta;
use igtmt_llm::EndpointConfig;

use crate::RunError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Sigmorphon,
    Jsonl,
    Parallel,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sigmorphon" => Ok(CorpusFormat::Sigmorphon),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "parallel" => Ok(CorpusFormat::Parallel),
            other => Err(format!(
                "unknown corpus format {other:?} (expected sigmorphon, jsonl or parallel)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSource {
    pub path: PathBuf,
    pub format: CorpusFormat,
    /// Target-side file for the parallel format.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Language code; required for formats that do not carry one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    /// Overrides the display name used in prompts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_name: Option<String>,
}

impl CorpusSource {
    pub fn new(path: impl Into<PathBuf>, format: CorpusFormat) -> Self {
        Self {
            path: path.into(),
            format,
            target_path: None,
            name: None,
            language: None,
            language_name: None,
        }
    }

    fn resolve(&mut self, base: &Path) {
        self.path = base.join(&self.path);
        if let Some(t) = &mut self.target_path {
            *t = base.join(&*t);
        }
    }

    fn default_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "corpus".into())
        })
    }

    /// Raw bytes of every file backing this corpus, for digests.
    pub fn content(&self) -> Result<Vec<u8>, RunError> {
        let mut bytes = read_bytes(&self.path)?;
        if let Some(t) = &self.target_path {
            bytes.push(0);
            bytes.extend(read_bytes(t)?);
        }
        Ok(bytes)
    }

    pub fn load(&self) -> Result<Loaded, RunError> {
        let text = read_text(&self.path)?;
        let name = self.default_name();
        let corpus_err = |e| RunError::Corpus {
            path: self.path.clone(),
            source: e,
        };
        let meta = || -> Result<CorpusMeta, RunError> {
            let lang = self.language.clone().ok_or_else(|| {
                RunError::Config(format!(
                    "corpus {}: \"language\" is required for this format",
                    self.path.display()
                ))
            })?;
            Ok(CorpusMeta::new(name.clone(), lang))
        };
        match self.format {
            CorpusFormat::Sigmorphon => load_sigmorphon(&text, &meta()?).map_err(corpus_err),
            CorpusFormat::Jsonl => {
                let loaded = load_jsonl(&text, &name).map_err(corpus_err)?;
                match &self.language {
                    Some(lang) if !loaded.corpus.is_empty() && loaded.corpus.language.as_str() != lang => {
                        Err(RunError::Config(format!(
                            "corpus {} is {:?}, config says {:?}",
                            self.path.display(),
                            loaded.corpus.language.as_str(),
                            lang
                        )))
                    }
                    _ => Ok(loaded),
                }
            }
            CorpusFormat::Parallel => {
                let target = self.target_path.as_ref().ok_or_else(|| {
                    RunError::Config(format!(
                        "corpus {}: parallel format needs \"target_path\"",
                        self.path.display()
                    ))
                })?;
                load_parallel(&text, &read_text(target)?, &meta()?).map_err(corpus_err)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Replay,
    Live,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "replay" => Ok(BackendKind::Replay),
            "live" => Ok(BackendKind::Live),
            other => Err(format!("unknown backend {other:?} (expected replay or live)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlossEndpoint {
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    pub model_id: String,
}

impl GlossEndpoint {
    pub fn endpoint(&self) -> EndpointConfig {
        EndpointConfig {
            url: self.url.clone(),
            api_key_env: self.api_key_env.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricName {
    #[serde(rename = "bleu")]
    Bleu,
    #[serde(rename = "chrf++")]
    ChrfPP,
    #[serde(rename = "gloss-word-accuracy")]
    GlossWordAccuracy,
    #[serde(rename = "gloss-morpheme-accuracy")]
    GlossMorphemeAccuracy,
    /// Delegated to the service at `scorer_endpoint`.
    #[serde(rename = "external")]
    External,
}

impl MetricName {
    pub fn name(self) -> &'static str {
        match self {
            MetricName::Bleu => "bleu",
            MetricName::ChrfPP => "chrf++",
            MetricName::GlossWordAccuracy => "gloss-word-accuracy",
            MetricName::GlossMorphemeAccuracy => "gloss-morpheme-accuracy",
            MetricName::External => "external",
        }
    }
}

impl FromStr for MetricName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| format!("unknown metric {s:?}"))
    }
}

fn default_n_support() -> usize {
    21
}
fn default_direction() -> Direction {
    Direction::ToEnglish
}
fn default_concurrency() -> usize {
    1
}
fn default_metrics() -> Vec<MetricName> {
    vec![MetricName::Bleu, MetricName::ChrfPP]
}
fn default_temperature() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSource,
    /// Separate pool of support examples; by default they come from the head
    /// of `corpus`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_corpus: Option<CorpusSource>,
    pub strategy: Strategy,
    #[serde(default = "default_n_support")]
    pub n_support: usize,
    #[serde(default = "default_direction")]
    pub direction: Direction,
    pub model_id: String,
    #[serde(default)]
    pub backend: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gloss_endpoint: Option<GlossEndpoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorer_endpoint: Option<EndpointConfig>,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Seeds significance tests run against this result.
    #[serde(default)]
    pub seed: u64,
    pub cache_dir: PathBuf,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricName>,
    pub output_dir: PathBuf,
    /// Tab-separated `word<TAB>translation[,translation...]` lines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<PathBuf>,
    #[serde(default)]
    pub enclosure: Enclosure,
    #[serde(default)]
    pub raw_glosses: bool,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_true")]
    pub greedy: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
}

impl RunConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, RunError> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = read_text(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base).map_err(|e| match e {
            RunError::Config(m) => RunError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        self.corpus.resolve(base);
        if let Some(s) = &mut self.support_corpus {
            s.resolve(base);
        }
        self.cache_dir = base.join(&self.cache_dir);
        self.output_dir = base.join(&self.output_dir);
        if let Some(d) = &mut self.dictionary {
            *d = base.join(&*d);
        }
    }

    /// Checks that need no file access.
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: &str| Err(RunError::Config(m.to_string()));
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1");
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return bad("temperature must be >= 0");
        }
        if self.max_tokens == Some(0) {
            return bad("max_tokens must be positive");
        }
        if self.strategy == Strategy::ModelGloss && self.gloss_endpoint.is_none() {
            return bad("ModelGloss requires gloss_endpoint");
        }
        if self.strategy == Strategy::DictBaseline && self.dictionary.is_none() {
            return bad("DictBaseline requires dictionary");
        }
        if self.backend == BackendKind::Live && self.endpoint.is_none() {
            return bad("live backend requires endpoint");
        }
        if self.metrics.is_empty() {
            return bad("metrics must not be empty");
        }
        if self.metrics.contains(&MetricName::External) {
            if self.scorer_endpoint.is_none() {
                return bad("external metric requires scorer_endpoint");
            }
            if self.backend != BackendKind::Live {
                return bad("external metric performs network calls and needs the live backend");
            }
        }
        let gloss_metric = self
            .metrics
            .iter()
            .any(|m| matches!(m, MetricName::GlossWordAccuracy | MetricName::GlossMorphemeAccuracy));
        if gloss_metric && !matches!(self.strategy, Strategy::ModelGloss | Strategy::ChainGloss) {
            return bad("gloss accuracy metrics need a strategy that predicts glosses (model-gloss or chain-gloss)");
        }
        if self.enclosure.open.is_empty() || self.enclosure.close.is_empty() {
            return bad("enclosure markers must be non-empty");
        }
        Ok(())
    }

    /// Hex SHA-256 over everything that can change results: the config minus
    /// concurrency, backend and local directories, with every input file
    /// replaced by a hash of its content.
    pub fn digest(&self) -> Result<String, RunError> {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object_mut().expect("config is an object");
        for key in ["concurrency", "backend", "cache_dir", "output_dir"] {
            obj.remove(key);
        }
        obj.insert("corpus".into(), source_fingerprint(&self.corpus)?);
        if let Some(s) = &self.support_corpus {
            obj.insert("support_corpus".into(), source_fingerprint(s)?);
        }
        if let Some(d) = &self.dictionary {
            obj.insert("dictionary".into(), Value::String(sha_hex(&read_bytes(d)?)));
        }
        for ep in ["endpoint", "gloss_endpoint", "scorer_endpoint"] {
            if let Some(e) = obj.get_mut(ep).and_then(Value::as_object_mut) {
                e.remove("api_key_env");
            }
        }
        Ok(sha_hex(igtmt_llm::request::canonical_json(&v).as_bytes()))
    }
}

fn source_fingerprint(src: &CorpusSource) -> Result<Value, RunError> {
    let mut v = serde_json::to_value(src).expect("source serializes");
    let obj = v.as_object_mut().expect("source is an object");
    obj.remove("path");
    obj.remove("target_path");
    obj.insert("content_sha256".into(), Value::String(sha_hex(&src.content()?)));
    if src.name.is_none() {
        obj.insert("name".into(), Value::String(src.default_name()));
    }
    Ok(v)
}

pub fn sha_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, RunError> {
    fs::read(path).map_err(|e| RunError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_text(path: &Path) -> Result<String, RunError> {
    let bytes = read_bytes(path)?;
    String::from_utf8(bytes).map_err(|_| RunError::Config(format!("{} is not valid UTF-8", path.display())))
}
