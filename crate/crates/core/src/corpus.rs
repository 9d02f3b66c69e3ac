//! Corpus loaders (SIGMORPHON blocks, JSONL, parallel text) and support splits.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::igt::{parse_gloss_line, render_gloss, IgtEntry, LangCode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line}: malformed marker line {text:?}")]
    MalformedLine { line: usize, text: String },
    #[error("line {line}: duplicate {marker} tier in block")]
    DuplicateTier { line: usize, marker: String },
    #[error("block starting at line {line}: missing {tier}")]
    MissingTier { line: usize, tier: &'static str },
    #[error("line {line}: invalid JSON: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: missing required field {field:?}")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: field {field:?} must be a string")]
    FieldType { line: usize, field: &'static str },
    #[error("line {line}: language {found:?} differs from corpus language {expected:?}")]
    MixedLanguage {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("line count mismatch {src} vs {tgt}")]
    LineCountMismatch { src: usize, tgt: usize },
    #[error("support size {requested} exceeds corpus size {available}")]
    SplitTooLarge { requested: usize, available: usize },
}

/// Non-fatal loader diagnostics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LoadWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub language: LangCode,
    pub metalanguage: LangCode,
    pub entries: Vec<IgtEntry>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, language: LangCode, metalanguage: LangCode) -> Self {
        Self {
            name: name.into(),
            language,
            metalanguage,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn with_entries(&self, entries: Vec<IgtEntry>) -> Self {
        Self {
            name: self.name.clone(),
            language: self.language.clone(),
            metalanguage: self.metalanguage.clone(),
            entries,
        }
    }
}

/// Name and languages for formats that do not carry them in-band.
#[derive(Clone, Debug)]
pub struct CorpusMeta {
    pub name: String,
    pub language: LangCode,
    pub metalanguage: LangCode,
}

impl CorpusMeta {
    pub fn new(name: impl Into<String>, language: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            language: LangCode::new(language),
            metalanguage: LangCode::new("en"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Loaded {
    pub corpus: Corpus,
    pub warnings: Vec<LoadWarning>,
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

fn entry_from_parts(
    transcription: &str,
    segmentation: Option<&str>,
    gloss: Option<&str>,
    translation: &str,
    language: &LangCode,
    metalanguage: &LangCode,
) -> IgtEntry {
    let gloss = gloss.map(nfc);
    IgtEntry {
        transcription: nfc(transcription),
        segmentation: segmentation.map(nfc),
        gloss: gloss.as_deref().map(parse_gloss_line),
        raw_gloss: gloss,
        translation: nfc(translation),
        language: language.clone(),
        metalanguage: metalanguage.clone(),
    }
}

#[derive(Default)]
struct Block {
    first_line: usize,
    transcription: Option<String>,
    segmentation: Option<String>,
    gloss: Option<String>,
    translation: Option<String>,
}

impl Block {
    fn finish(self, meta: &CorpusMeta) -> Result<IgtEntry, CorpusError> {
        let transcription = self.transcription.ok_or(CorpusError::MissingTier {
            line: self.first_line,
            tier: "\\t transcription",
        })?;
        let translation = self.translation.ok_or(CorpusError::MissingTier {
            line: self.first_line,
            tier: "\\l translation",
        })?;
        Ok(entry_from_parts(
            &transcription,
            self.segmentation.as_deref(),
            self.gloss.as_deref(),
            &translation,
            &meta.language,
            &meta.metalanguage,
        ))
    }
}

/// Parse the shared-task block format: `\t`, `\m`, `\g`, `\l` tiers,
/// blocks separated by blank lines. Unknown tiers are skipped with a warning.
pub fn load_sigmorphon(content: &str, meta: &CorpusMeta) -> Result<Loaded, CorpusError> {
    let mut corpus = Corpus::new(&meta.name, meta.language.clone(), meta.metalanguage.clone());
    let mut warnings = Vec::new();
    let mut block: Option<Block> = None;

    for (idx, line) in content.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(b) = block.take() {
                corpus.entries.push(b.finish(meta)?);
            }
            continue;
        }
        let Some(rest) = line.strip_prefix('\\') else {
            return Err(CorpusError::MalformedLine {
                line: lineno,
                text: line.to_string(),
            });
        };
        let (marker, value) = match rest.find(' ') {
            Some(pos) => (&rest[..pos], &rest[pos + 1..]),
            None => (rest, ""),
        };
        if marker.is_empty() || !marker.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(CorpusError::MalformedLine {
                line: lineno,
                text: line.to_string(),
            });
        }
        let b = block.get_or_insert_with(|| Block {
            first_line: lineno,
            ..Block::default()
        });
        let slot = match marker {
            "t" => &mut b.transcription,
            "m" => &mut b.segmentation,
            "g" => &mut b.gloss,
            "l" => &mut b.translation,
            other => {
                warnings.push(LoadWarning {
                    line: lineno,
                    message: format!("ignoring unknown tier \\{other}"),
                });
                continue;
            }
        };
        if slot.is_some() {
            return Err(CorpusError::DuplicateTier {
                line: lineno,
                marker: format!("\\{marker}"),
            });
        }
        *slot = Some(value.trim().to_string());
    }
    if let Some(b) = block.take() {
        corpus.entries.push(b.finish(meta)?);
    }
    Ok(Loaded { corpus, warnings })
}

/// Serialize to the block format read by [`load_sigmorphon`]. Glosses are
/// written in normal form.
pub fn write_sigmorphon(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (i, e) in corpus.entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("\\t {}\n", e.transcription));
        if let Some(seg) = &e.segmentation {
            out.push_str(&format!("\\m {seg}\n"));
        }
        if let Some(g) = &e.gloss {
            out.push_str(&format!("\\g {}\n", render_gloss(g)));
        }
        out.push_str(&format!("\\l {}\n", e.translation));
    }
    out
}

fn required_str<'a>(
    obj: &'a serde_json::Map<String, Value>,
    field: &'static str,
    line: usize,
) -> Result<&'a str, CorpusError> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(CorpusError::MissingField { line, field }),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(CorpusError::FieldType { line, field }),
    }
}

fn optional_str<'a>(
    obj: &'a serde_json::Map<String, Value>,
    field: &'static str,
    line: usize,
) -> Result<Option<&'a str>, CorpusError> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(CorpusError::FieldType { line, field }),
    }
}

/// One JSON object per line. The corpus language is taken from the first
/// record; blank lines are skipped.
pub fn load_jsonl(content: &str, name: &str) -> Result<Loaded, CorpusError> {
    let mut corpus = Corpus::new(name, LangCode::new("und"), LangCode::new("en"));
    for (idx, line) in content.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| CorpusError::Json {
            line: lineno,
            message: e.to_string(),
        })?;
        let Value::Object(obj) = value else {
            return Err(CorpusError::Json {
                line: lineno,
                message: "expected a JSON object".into(),
            });
        };
        let transcription = required_str(&obj, "transcription", lineno)?;
        let translation = required_str(&obj, "translation", lineno)?;
        let language = LangCode::new(required_str(&obj, "language", lineno)?);
        let metalanguage = LangCode::new(optional_str(&obj, "metalang", lineno)?.unwrap_or("en"));
        let segmentation = optional_str(&obj, "segmentation", lineno)?;
        let glosses = optional_str(&obj, "glosses", lineno)?;

        if corpus.entries.is_empty() {
            corpus.language = language.clone();
            corpus.metalanguage = metalanguage.clone();
        } else if language != corpus.language {
            return Err(CorpusError::MixedLanguage {
                line: lineno,
                expected: corpus.language.to_string(),
                found: language.to_string(),
            });
        }
        corpus.entries.push(entry_from_parts(
            transcription,
            segmentation,
            glosses,
            translation,
            &language,
            &metalanguage,
        ));
    }
    Ok(Loaded {
        corpus,
        warnings: Vec::new(),
    })
}

/// Record shape written by [`write_jsonl`].
#[derive(Serialize)]
struct JsonlRecord<'a> {
    transcription: &'a str,
    segmentation: Option<&'a str>,
    glosses: Option<String>,
    translation: &'a str,
    language: &'a str,
    metalang: &'a str,
}

pub fn write_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for e in &corpus.entries {
        let rec = JsonlRecord {
            transcription: &e.transcription,
            segmentation: e.segmentation.as_deref(),
            glosses: e.gloss.as_ref().map(render_gloss),
            translation: &e.translation,
            language: e.language.as_str(),
            metalang: e.metalanguage.as_str(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Line-aligned source and target files without glosses.
pub fn load_parallel(src: &str, tgt: &str, meta: &CorpusMeta) -> Result<Loaded, CorpusError> {
    let src_lines: Vec<&str> = src.lines().collect();
    let tgt_lines: Vec<&str> = tgt.lines().collect();
    if src_lines.len() != tgt_lines.len() {
        return Err(CorpusError::LineCountMismatch {
            src: src_lines.len(),
            tgt: tgt_lines.len(),
        });
    }
    let mut corpus = Corpus::new(&meta.name, meta.language.clone(), meta.metalanguage.clone());
    corpus.entries = src_lines
        .iter()
        .zip(&tgt_lines)
        .map(|(s, t)| {
            entry_from_parts(
                s.trim_end_matches('\r'),
                None,
                None,
                t.trim_end_matches('\r'),
                &meta.language,
                &meta.metalanguage,
            )
        })
        .collect();
    Ok(Loaded {
        corpus,
        warnings: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_support: usize,
}

/// First `n_support` entries become support examples; the rest is the
/// evaluation split. Never sampled.
pub fn split_support(corpus: &Corpus, spec: SplitSpec) -> Result<(Corpus, Corpus), CorpusError> {
    if spec.n_support > corpus.len() {
        return Err(CorpusError::SplitTooLarge {
            requested: spec.n_support,
            available: corpus.len(),
        });
    }
    let (support, eval) = corpus.entries.split_at(spec.n_support);
    Ok((
        corpus.with_entries(support.to_vec()),
        corpus.with_entries(eval.to_vec()),
    ))
}
