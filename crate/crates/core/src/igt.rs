//! Interlinear glossed text: gloss lines, morpheme classification and entries.
//!
//! A gloss line is a sequence of words, each word a hyphen-joined run of
//! morphemes. Morphemes are either grammatical labels (`3SG`, `PST`,
//! `1PL.ABS`) or lexemes (`see`, `house`). Parsing is total and produces a
//! normal form: rendering joins morphemes with a single hyphen and words with
//! a single space, so `render(parse(render(parse(s)))) == render(parse(s))`.

use std::collections::HashSet;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Whether a morpheme is a grammatical label or a lexeme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MorphemeKind {
    Gram,
    Lex,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Morpheme {
    surface: String,
    kind: MorphemeKind,
}

impl Morpheme {
    /// Build a morpheme directly. Returns `None` for surfaces the parser could
    /// never produce (empty, or containing whitespace or hyphens).
    pub fn new(surface: impl Into<String>, kind: MorphemeKind) -> Option<Self> {
        let surface = surface.into();
        let valid = !surface.is_empty() && !surface.chars().any(|c| c.is_whitespace() || is_morpheme_separator(c));
        valid.then_some(Self { surface, kind })
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn kind(&self) -> MorphemeKind {
        self.kind
    }

    pub fn is_gram(&self) -> bool {
        self.kind == MorphemeKind::Gram
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlossWord {
    morphemes: Vec<Morpheme>,
}

impl GlossWord {
    pub fn new(morphemes: Vec<Morpheme>) -> Option<Self> {
        (!morphemes.is_empty()).then_some(Self { morphemes })
    }

    pub fn morphemes(&self) -> &[Morpheme] {
        &self.morphemes
    }

    pub fn render(&self) -> String {
        let parts: Vec<&str> = self.morphemes.iter().map(|m| m.surface()).collect();
        parts.join("-")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlossLine {
    words: Vec<GlossWord>,
}

impl GlossLine {
    pub fn new(words: Vec<GlossWord>) -> Self {
        Self { words }
    }

    pub fn words(&self) -> &[GlossWord] {
        &self.words
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn morpheme_count(&self) -> usize {
        self.words.iter().map(|w| w.morphemes.len()).sum()
    }

    pub fn morphemes(&self) -> impl Iterator<Item = &Morpheme> {
        self.words.iter().flat_map(|w| w.morphemes.iter())
    }
}

impl fmt::Display for GlossLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_gloss(self))
    }
}

/// Set of surfaces always classified as grammatical, regardless of case.
///
/// Lookup is exact (case-sensitive); the default set carries both the
/// uppercase Leipzig labels and the lowercase spellings some corpora use
/// (`1sg.abs`) that do not collide with English lemmata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelLexicon {
    labels: HashSet<String>,
}

const LEIPZIG_LABELS: &[&str] = &[
    "1", "2", "3", "A", "ABL", "ABS", "ACC", "ADJ", "ADV", "AGR", "ALL", "ANTIP", "APPL", "ART", "AUX", "BEN", "CAUS",
    "CLF", "COM", "COMP", "COMPL", "COND", "COP", "CVB", "DAT", "DECL", "DEF", "DEM", "DET", "DIST", "DISTR", "DU",
    "DUR", "ERG", "EXCL", "F", "FOC", "FUT", "GEN", "IMP", "INCL", "IND", "INDF", "INF", "INS", "INTR", "IPFV", "IRR",
    "LOC", "M", "N", "NEG", "NMLZ", "NOM", "OBJ", "OBL", "P", "PASS", "PFV", "PL", "POSS", "PRED", "PRF", "PRS",
    "PROG", "PROH", "PROX", "PST", "PTCP", "PURP", "Q", "QUOT", "RECP", "REFL", "REL", "RES", "S", "SBJ", "SBJV", "SG",
    "TOP", "TR", "VOC",
];

// Lowercase spellings seen in glossing corpora. Words that are also common
// English lemmata (com, top, rel, pass, dem...) are deliberately absent.
const LOWERCASE_LABELS: &[&str] = &[
    "1sg", "2sg", "3sg", "1pl", "2pl", "3pl", "1du", "2du", "3du", "1pl.excl", "1pl.incl", "sg", "pl", "du", "abs",
    "erg", "nom", "acc", "dat", "gen", "loc", "abl", "ins", "obl", "pst", "prs", "fut", "pfv", "ipfv", "prf", "aor",
    "aoc", "ptcp", "ptp", "cvb", "nmlz", "caus", "appl", "refl", "recp", "sbjv", "iness", "elat", "illat", "superess",
    "subess", "postess", "hort", "temp", "masd", "inf", "fv", "foc", "neg", "pl.abs", "sg.abs",
];

impl LabelLexicon {
    pub fn empty() -> Self {
        Self { labels: HashSet::new() }
    }

    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn insert(&mut self, label: impl Into<String>) {
        self.labels.insert(label.into());
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.labels.contains(surface)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Classify a full morpheme surface. Dot-joined composites are
    /// grammatical only if every component is.
    pub fn classify(&self, surface: &str) -> MorphemeKind {
        if self.contains(surface) {
            return MorphemeKind::Gram;
        }
        let all_gram = surface
            .split('.')
            .all(|part| self.contains(part) || is_label_shaped(part));
        if all_gram {
            MorphemeKind::Gram
        } else {
            MorphemeKind::Lex
        }
    }
}

impl Default for LabelLexicon {
    fn default() -> Self {
        Self::from_labels(LEIPZIG_LABELS.iter().chain(LOWERCASE_LABELS).copied())
    }
}

fn default_lexicon() -> &'static LabelLexicon {
    static LEXICON: OnceLock<LabelLexicon> = OnceLock::new();
    LEXICON.get_or_init(LabelLexicon::default)
}

/// Optional ASCII digits followed by one or more uppercase letters.
fn is_label_shaped(part: &str) -> bool {
    let rest = part.trim_start_matches(|c: char| c.is_ascii_digit());
    !rest.is_empty() && rest.chars().all(|c| c.is_uppercase())
}

fn is_morpheme_separator(c: char) -> bool {
    matches!(c, '-' | '\u{2010}' | '\u{2011}')
}

pub fn parse_gloss_line(raw: &str) -> GlossLine {
    parse_gloss_line_with(raw, default_lexicon())
}

pub fn parse_gloss_line_with(raw: &str, lexicon: &LabelLexicon) -> GlossLine {
    let words = raw
        .split_whitespace()
        .filter_map(|token| {
            let morphemes: Vec<Morpheme> = token
                .split(is_morpheme_separator)
                .filter(|s| !s.is_empty())
                .map(|s| Morpheme {
                    surface: s.to_string(),
                    kind: lexicon.classify(s),
                })
                .collect();
            // a token made only of hyphens carries no morpheme
            (!morphemes.is_empty()).then_some(GlossWord { morphemes })
        })
        .collect();
    GlossLine { words }
}

pub fn render_gloss(gloss: &GlossLine) -> String {
    let words: Vec<String> = gloss.words.iter().map(GlossWord::render).collect();
    words.join(" ")
}

/// Remove every grammatical morpheme, dropping words left empty.
pub fn strip_grammatical_labels(gloss: &GlossLine) -> GlossLine {
    let words = gloss
        .words
        .iter()
        .filter_map(|w| {
            let morphemes: Vec<Morpheme> = w.morphemes.iter().filter(|m| !m.is_gram()).cloned().collect();
            (!morphemes.is_empty()).then_some(GlossWord { morphemes })
        })
        .collect();
    GlossLine { words }
}

/// ISO-style language code (`swa`, `en`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LangCode(String);

impl LangCode {
    pub fn new(code: impl Into<String>) -> Self {
        Self(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// English display name for the languages the toolkit ships templates
    /// for; unknown codes fall back to the code itself.
    pub fn display_name(&self) -> String {
        let name = match self.0.as_str() {
            "en" | "eng" => "English",
            "swa" | "sw" | "swh" => "Swahili",
            "git" => "Gitksan",
            "lez" => "Lezgi",
            "ntu" => "Natugu",
            "ddo" => "Tsez",
            "yor" | "yo" => "Yoruba",
            "isl" | "is" => "Icelandic",
            "mar" | "mr" => "Marathi",
            "kan" | "kn" => "Kannada",
            "urd" | "ur" => "Urdu",
            "tha" | "th" => "Thai",
            "ell" | "el" => "Greek",
            "por" | "pt" => "Portuguese",
            "jpn" | "ja" => "Japanese",
            "rus" | "ru" => "Russian",
            "arb" | "ara" | "ar" => "Arabic",
            other => other,
        };
        name.to_string()
    }
}

impl fmt::Display for LangCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LangCode {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

/// One source / segmentation / gloss / translation record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IgtEntry {
    pub transcription: String,
    pub segmentation: Option<String>,
    pub gloss: Option<GlossLine>,
    /// Gloss exactly as it appeared in the source file, kept for raw
    /// passthrough into prompts.
    pub raw_gloss: Option<String>,
    pub translation: String,
    pub language: LangCode,
    pub metalanguage: LangCode,
}

impl IgtEntry {
    pub fn new(transcription: impl Into<String>, translation: impl Into<String>, language: LangCode) -> Self {
        Self {
            transcription: transcription.into(),
            segmentation: None,
            gloss: None,
            raw_gloss: None,
            translation: translation.into(),
            language,
            metalanguage: LangCode::new("en"),
        }
    }

    pub fn with_gloss(mut self, raw: &str) -> Self {
        self.gloss = Some(parse_gloss_line(raw));
        self.raw_gloss = Some(raw.to_string());
        self
    }

    pub fn with_segmentation(mut self, seg: impl Into<String>) -> Self {
        self.segmentation = Some(seg.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warn,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> usize {
        self.count(Severity::Error)
    }

    pub fn warnings(&self) -> usize {
        self.count(Severity::Warn)
    }

    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }

    fn count(&self, severity: Severity) -> usize {
        self.findings.iter().filter(|f| f.severity == severity).count()
    }

    fn push(&mut self, severity: Severity, code: &'static str, message: String) {
        self.findings.push(Finding {
            severity,
            code,
            message,
        });
    }
}

/// Characters marking morpheme boundaries in a segmentation tier.
const SEGMENTATION_SEPARATORS: &[char] = &['-', '=', '~', '\u{2010}', '\u{2011}'];

pub fn validate_entry(entry: &IgtEntry) -> ValidationReport {
    let mut report = ValidationReport::default();
    if entry.transcription.trim().is_empty() {
        report.push(Severity::Error, "empty-transcription", "transcription is empty".into());
    }
    if entry.translation.trim().is_empty() {
        report.push(Severity::Error, "empty-translation", "translation is empty".into());
    }
    if let Some(seg) = &entry.segmentation {
        let seg_words = seg.split_whitespace().count();
        if let Some(gloss) = &entry.gloss {
            if gloss.words().len() != seg_words {
                report.push(
                    Severity::Warn,
                    "gloss-segmentation-count",
                    format!(
                        "gloss has {} words but segmentation has {}",
                        gloss.words().len(),
                        seg_words
                    ),
                );
            }
        }
        let joined: String = seg.chars().filter(|c| !SEGMENTATION_SEPARATORS.contains(c)).collect();
        if normalize_ws(&joined) != normalize_ws(&entry.transcription) {
            report.push(
                Severity::Warn,
                "segmentation-mismatch",
                "segmentation does not reassemble into the transcription".into(),
            );
        }
    }
    report
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
