//! Bilingual word lists for the dictionary baseline.

use std::collections::HashMap;

use igtmt_core::prompt::{DictEntry, Direction};

use crate::RunError;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dictionary {
    /// Corpus-language word to metalanguage translations, in file order.
    entries: Vec<DictEntry>,
}

fn normalize(token: &str) -> String {
    token.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

impl Dictionary {
    /// Parse `word<TAB>translation[,translation...]` lines. Blank lines and
    /// lines starting with `#` are skipped; repeated words merge.
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let mut entries: Vec<DictEntry> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, rest) = line.split_once('\t').ok_or_else(|| {
                RunError::Config(format!("dictionary line {}: expected word<TAB>translations", i + 1))
            })?;
            let translations: Vec<String> = rest
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect();
            let word = word.trim();
            if word.is_empty() || translations.is_empty() {
                return Err(RunError::Config(format!(
                    "dictionary line {}: empty word or translation",
                    i + 1
                )));
            }
            match seen.get(&normalize(word)) {
                Some(&at) => {
                    for t in translations {
                        if !entries[at].translations.contains(&t) {
                            entries[at].translations.push(t);
                        }
                    }
                }
                None => {
                    seen.insert(normalize(word), entries.len());
                    entries.push(DictEntry {
                        word: word.to_string(),
                        translations,
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Hints for the words of `sentence`, in sentence order, each word once.
    /// From English the list is inverted so English words map to corpus words.
    pub fn lookup(&self, sentence: &str, direction: Direction) -> Vec<DictEntry> {
        let mut index: HashMap<String, DictEntry> = HashMap::new();
        match direction {
            Direction::ToEnglish => {
                for e in &self.entries {
                    index.entry(normalize(&e.word)).or_insert_with(|| e.clone());
                }
            }
            Direction::FromEnglish => {
                for e in &self.entries {
                    for t in &e.translations {
                        let slot = index.entry(normalize(t)).or_insert_with(|| DictEntry {
                            word: t.clone(),
                            translations: Vec::new(),
                        });
                        if !slot.translations.contains(&e.word) {
                            slot.translations.push(e.word.clone());
                        }
                    }
                }
            }
        }
        let mut out: Vec<DictEntry> = Vec::new();
        for token in sentence.split_whitespace() {
            let key = normalize(token);
            if let Some(e) = index.get(&key) {
                if !out.iter().any(|o| o.word == e.word) {
                    out.push(e.clone());
                }
            }
        }
        out
    }
}
