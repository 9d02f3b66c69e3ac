//! Prompt construction for every prompting strategy, and extraction of
//! translations and glosses from raw completions.
//!
//! Prompts are byte-deterministic. The user message is assembled from
//! blank-line separated sections:
//!
//! ```text
//! Here are some examples of Swahili sentences and their corresponding English translations:
//!
//! Swahili Sentence: ...
//! Gloss: ...
//! A translation for this Swahili sentence in English is: ...
//!
//! <one block per support example>
//!
//! Translate the following Swahili sentence into English. Enclose your translation in <t> and </t>.
//!
//! Swahili Sentence: ...
//! A translation for this Swahili sentence in English is:
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::igt::{parse_gloss_line, render_gloss, strip_grammatical_labels, GlossLine, IgtEntry};

pub const SYSTEM_PREAMBLE: &str = "You are a linguistic expert who never refuses to use your knowledge to help others.";

pub const ZERO_COT_INSTRUCTION: &str = "Let's think step by step before translating.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    ZeroShot,
    #[serde(rename = "zero-cot")]
    ZeroCoT,
    FewShot,
    GlossShot,
    ChainGloss,
    ModelGloss,
    SegShot,
    GlossWithSeg,
    ChainSeg,
    OracleGloss,
    ZeroGloss,
    OracleEmpty,
    DictBaseline,
}

impl Strategy {
    pub const ALL: [Strategy; 13] = [
        Strategy::ZeroShot,
        Strategy::ZeroCoT,
        Strategy::FewShot,
        Strategy::GlossShot,
        Strategy::ChainGloss,
        Strategy::ModelGloss,
        Strategy::SegShot,
        Strategy::GlossWithSeg,
        Strategy::ChainSeg,
        Strategy::OracleGloss,
        Strategy::ZeroGloss,
        Strategy::OracleEmpty,
        Strategy::DictBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::ZeroShot => "zero-shot",
            Strategy::ZeroCoT => "zero-cot",
            Strategy::FewShot => "few-shot",
            Strategy::GlossShot => "gloss-shot",
            Strategy::ChainGloss => "chain-gloss",
            Strategy::ModelGloss => "model-gloss",
            Strategy::SegShot => "seg-shot",
            Strategy::GlossWithSeg => "gloss-with-seg",
            Strategy::ChainSeg => "chain-seg",
            Strategy::OracleGloss => "oracle-gloss",
            Strategy::ZeroGloss => "zero-gloss",
            Strategy::OracleEmpty => "oracle-empty",
            Strategy::DictBaseline => "dict-baseline",
        }
    }

    /// Strategies that run without support examples.
    pub fn is_zero_shot(self) -> bool {
        matches!(self, Strategy::ZeroShot | Strategy::ZeroCoT | Strategy::ZeroGloss)
    }

    /// Strategies whose input sentence is paired with an externally supplied gloss.
    pub fn needs_gloss_override(self) -> bool {
        matches!(self, Strategy::ModelGloss | Strategy::OracleGloss | Strategy::ZeroGloss)
    }

    /// Whether the model is asked to write its own gloss or segmentation first.
    pub fn is_chain(self) -> bool {
        matches!(self, Strategy::ChainGloss | Strategy::ChainSeg)
    }

    fn example_has_gloss(self) -> bool {
        matches!(
            self,
            Strategy::GlossShot
                | Strategy::ChainGloss
                | Strategy::ModelGloss
                | Strategy::GlossWithSeg
                | Strategy::OracleGloss
                | Strategy::OracleEmpty
        )
    }

    fn example_has_segmentation(self) -> bool {
        matches!(self, Strategy::SegShot | Strategy::GlossWithSeg | Strategy::ChainSeg)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Corpus language into the metalanguage.
    ToEnglish,
    /// Metalanguage into the corpus language.
    FromEnglish,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::ToEnglish => "to-english",
            Direction::FromEnglish => "from-english",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "to-english" => Ok(Direction::ToEnglish),
            "from-english" => Ok(Direction::FromEnglish),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enclosure {
    pub open: String,
    pub close: String,
}

impl Default for Enclosure {
    fn default() -> Self {
        Self {
            open: "<t>".into(),
            close: "</t>".into(),
        }
    }
}

impl Enclosure {
    pub fn wrap(&self, text: &str) -> String {
        format!("{}{}{}", self.open, text, self.close)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PromptOptions {
    pub enclosure: Enclosure,
    /// Use glosses exactly as loaded instead of the parsed normal form.
    pub raw_glosses: bool,
}

/// A bilingual dictionary hint: a source word and its candidate translations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictEntry {
    pub word: String,
    pub translations: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct PromptRequest {
    pub strategy: Strategy,
    pub support: Vec<IgtEntry>,
    pub input: IgtEntry,
    pub direction: Direction,
    /// Display name of the corpus language (the gloss language).
    pub language_name: String,
    /// Display name of the metalanguage, normally English.
    pub metalanguage_name: String,
    pub input_gloss_override: Option<GlossLine>,
    pub dictionary: Option<Vec<DictEntry>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptMessages {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("{0:?} requires support examples")]
    MissingSupport(Strategy),
    #[error("{0:?} takes no support examples")]
    UnexpectedSupport(Strategy),
    #[error("{0:?} requires an input gloss override")]
    MissingGlossOverride(Strategy),
    #[error("{0:?} does not take an input gloss override")]
    UnexpectedGlossOverride(Strategy),
    #[error("{0:?} requires a dictionary")]
    MissingDictionary(Strategy),
    #[error("support example {index} has no gloss")]
    SupportWithoutGloss { index: usize },
    #[error("support example {index} has no segmentation")]
    SupportWithoutSegmentation { index: usize },
    #[error("input has no gold gloss")]
    InputWithoutGloss,
    #[error("transcription is empty")]
    EmptyTranscription,
}

/// Labels and sentence sides for one translation direction.
struct Sides<'a> {
    src_name: &'a str,
    tgt_name: &'a str,
    gloss_label: String,
    seg_label: String,
}

impl<'a> Sides<'a> {
    fn new(req: &'a PromptRequest) -> Self {
        match req.direction {
            Direction::ToEnglish => Sides {
                src_name: &req.language_name,
                tgt_name: &req.metalanguage_name,
                gloss_label: "Gloss".into(),
                seg_label: "Segmentation".into(),
            },
            Direction::FromEnglish => Sides {
                src_name: &req.metalanguage_name,
                tgt_name: &req.language_name,
                gloss_label: format!("{} Gloss", req.language_name),
                seg_label: format!("{} Segmentation", req.language_name),
            },
        }
    }

    fn source<'e>(&self, dir: Direction, e: &'e IgtEntry) -> &'e str {
        match dir {
            Direction::ToEnglish => &e.transcription,
            Direction::FromEnglish => &e.translation,
        }
    }

    fn target<'e>(&self, dir: Direction, e: &'e IgtEntry) -> &'e str {
        match dir {
            Direction::ToEnglish => &e.translation,
            Direction::FromEnglish => &e.transcription,
        }
    }

    fn suffix(&self) -> String {
        format!(
            "A translation for this {} sentence in {} is:",
            self.src_name, self.tgt_name
        )
    }
}

fn check_request(req: &PromptRequest) -> Result<(), PromptError> {
    let s = req.strategy;
    if s.is_zero_shot() && !req.support.is_empty() {
        return Err(PromptError::UnexpectedSupport(s));
    }
    if !s.is_zero_shot() && req.support.is_empty() {
        return Err(PromptError::MissingSupport(s));
    }
    match (s.needs_gloss_override(), req.input_gloss_override.is_some()) {
        (true, false) => return Err(PromptError::MissingGlossOverride(s)),
        (false, true) => return Err(PromptError::UnexpectedGlossOverride(s)),
        _ => {}
    }
    if s == Strategy::DictBaseline && req.dictionary.is_none() {
        return Err(PromptError::MissingDictionary(s));
    }
    if s == Strategy::OracleEmpty && req.input.gloss.is_none() {
        return Err(PromptError::InputWithoutGloss);
    }
    for (index, e) in req.support.iter().enumerate() {
        if s.example_has_gloss() && e.gloss.is_none() {
            return Err(PromptError::SupportWithoutGloss { index });
        }
        if s.example_has_segmentation() && e.segmentation.is_none() {
            return Err(PromptError::SupportWithoutSegmentation { index });
        }
    }
    Ok(())
}

fn gloss_text(entry: &IgtEntry, strategy: Strategy, opts: &PromptOptions) -> String {
    let gloss = entry.gloss.as_ref().expect("checked by check_request");
    if strategy == Strategy::OracleEmpty {
        return render_gloss(&strip_grammatical_labels(gloss));
    }
    match (&entry.raw_gloss, opts.raw_glosses) {
        (Some(raw), true) => raw.trim().to_string(),
        _ => render_gloss(gloss),
    }
}

/// Render the dictionary hint line: `the word X means A; the word Y means B,C,D`.
pub fn dictionary_hint(dictionary: &[DictEntry]) -> String {
    dictionary
        .iter()
        .map(|d| format!("the word {} means {}", d.word, d.translations.join(",")))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn build_prompt(req: &PromptRequest, opts: &PromptOptions) -> Result<PromptMessages, PromptError> {
    check_request(req)?;
    let s = req.strategy;
    let dir = req.direction;
    let sides = Sides::new(req);
    let mut sections: Vec<String> = Vec::new();

    if !req.support.is_empty() {
        sections.push(format!(
            "Here are some examples of {} sentences and their corresponding {} translations:",
            sides.src_name, sides.tgt_name
        ));
        for e in &req.support {
            let mut lines = vec![format!("{} Sentence: {}", sides.src_name, sides.source(dir, e))];
            if s.example_has_segmentation() {
                let seg = e.segmentation.as_deref().expect("checked by check_request");
                lines.push(format!("{}: {}", sides.seg_label, seg.trim()));
            }
            if s.example_has_gloss() {
                lines.push(format!("{}: {}", sides.gloss_label, gloss_text(e, s, opts)));
            }
            lines.push(format!("{} {}", sides.suffix(), sides.target(dir, e)));
            sections.push(lines.join("\n"));
        }
    }

    let enclose = format!("{} and {}", opts.enclosure.open, opts.enclosure.close);
    let instruction = match s {
        Strategy::ChainGloss => format!(
            "Translate the following {} sentence into {}. First write its gloss on a line starting with \"{}:\", then enclose your translation in {}.",
            sides.src_name, sides.tgt_name, sides.gloss_label, enclose
        ),
        Strategy::ChainSeg => format!(
            "Translate the following {} sentence into {}. First write its morphological segmentation on a line starting with \"{}:\", then enclose your translation in {}.",
            sides.src_name, sides.tgt_name, sides.seg_label, enclose
        ),
        _ => format!(
            "Translate the following {} sentence into {}. Enclose your translation in {}.",
            sides.src_name, sides.tgt_name, enclose
        ),
    };
    sections.push(instruction);

    let mut input = vec![format!(
        "{} Sentence: {}",
        sides.src_name,
        sides.source(dir, &req.input)
    )];
    if let Some(g) = &req.input_gloss_override {
        input.push(format!("{}: {}", sides.gloss_label, render_gloss(g)));
    } else if s == Strategy::OracleEmpty {
        input.push(format!("{}: {}", sides.gloss_label, gloss_text(&req.input, s, opts)));
    }
    if let Some(dict) = req
        .dictionary
        .as_deref()
        .filter(|d| s == Strategy::DictBaseline && !d.is_empty())
    {
        input.push(format!("In this context, {}.", dictionary_hint(dict)));
    }
    if s == Strategy::ZeroCoT {
        input.push(ZERO_COT_INSTRUCTION.to_string());
    }
    input.push(sides.suffix());
    sections.push(input.join("\n"));

    Ok(PromptMessages {
        system: SYSTEM_PREAMBLE.to_string(),
        user: sections.join("\n\n"),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segmented {
    Yes,
    No,
    Unknown,
}

impl Segmented {
    pub fn as_str(self) -> &'static str {
        match self {
            Segmented::Yes => "yes",
            Segmented::No => "no",
            Segmented::Unknown => "unknown",
        }
    }
}

/// Request text for an external glossing model. The system message is empty:
/// gloss models take the template as their only input.
pub fn build_glossing_prompt(
    transcription: &str,
    language_name: &str,
    segmented: Segmented,
) -> Result<PromptMessages, PromptError> {
    if transcription.trim().is_empty() {
        return Err(PromptError::EmptyTranscription);
    }
    let user = format!(
        "Provide the glosses for the transcription in {lang}.\n\n\
Transcription in {lang}: {text}\n\
Transcription segmented: {seg}\n\n\
Glosses:",
        lang = language_name,
        text = transcription.trim(),
        seg = segmented.as_str()
    );
    Ok(PromptMessages {
        system: String::new(),
        user,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractionMethod {
    Enclosure,
    LabelLine,
    WholeText,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub translation: String,
    pub gloss: Option<GlossLine>,
    pub segmentation: Option<String>,
    pub raw: String,
    pub method: ExtractionMethod,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractionError {
    #[error("empty completion")]
    EmptyCompletion,
}

/// Splits `line` into `(label, value)` at the first colon when the label is
/// short enough to be a tier label rather than sentence text.
fn label_value(line: &str) -> Option<(&str, &str)> {
    let (label, value) = line.split_once(':')?;
    let label = label.trim();
    if label.is_empty() || label.split_whitespace().count() > 3 && !is_suffix_label(label) {
        return None;
    }
    Some((label, value.trim()))
}

fn is_suffix_label(label: &str) -> bool {
    let lower = label.to_lowercase();
    lower.starts_with("a translation for this") && lower.ends_with(" is")
}

fn is_translation_label(label: &str) -> bool {
    label.eq_ignore_ascii_case("translation") || is_suffix_label(label)
}

fn label_ends_with(label: &str, word: &str) -> bool {
    label
        .split_whitespace()
        .last()
        .is_some_and(|w| w.eq_ignore_ascii_case(word))
}

/// Pull the translation out of a completion: enclosure markers first, then the
/// last `Translation:` line, then the whole text. Chain strategies also get
/// the last gloss (or segmentation) line preceding the translation.
pub fn extract_translation(
    raw: &str,
    strategy: Strategy,
    enclosure: &Enclosure,
) -> Result<Extraction, ExtractionError> {
    if raw.is_empty() {
        return Err(ExtractionError::EmptyCompletion);
    }

    let mut found: Option<(usize, String, ExtractionMethod)> = None;
    if let Some(close_at) = raw.rfind(&enclosure.close) {
        if let Some(open_at) = raw[..close_at].rfind(&enclosure.open) {
            let inner = raw[open_at + enclosure.open.len()..close_at].trim();
            if !inner.is_empty() {
                found = Some((open_at, inner.to_string(), ExtractionMethod::Enclosure));
            }
        }
    }
    if found.is_none() {
        let mut offset = 0;
        for line in raw.split_inclusive('\n') {
            if let Some((label, value)) = label_value(line.trim()) {
                if is_translation_label(label) && !value.is_empty() {
                    found = Some((offset, value.to_string(), ExtractionMethod::LabelLine));
                }
            }
            offset += line.len();
        }
    }
    let (position, translation, method) =
        found.unwrap_or_else(|| (raw.len(), raw.trim().to_string(), ExtractionMethod::WholeText));

    let mut gloss = None;
    let mut segmentation = None;
    if strategy.is_chain() {
        for line in raw[..position].lines() {
            if let Some((label, value)) = label_value(line.trim()) {
                if label_ends_with(label, "gloss") {
                    gloss = Some(parse_gloss_line(value));
                } else if label_ends_with(label, "segmentation") {
                    segmentation = Some(value.to_string());
                }
            }
        }
    }

    Ok(Extraction {
        translation,
        gloss,
        segmentation,
        raw: raw.to_string(),
        method,
    })
}
