//! Word and phrase lexicons backing the frequency metrics. The builtin
//! lists ship as versioned data files baked into the binary; custom
//! lexicons load from files with the same one-entry-per-line format.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{CoreError, Result};

/// A named set of lowercase words and multi-word phrases. When
/// `numeric_pattern` is set, digit-bearing tokens also match.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub name: String,
    /// Phrases as token lists, grouped by first token, longest first.
    by_first: HashMap<String, Vec<Vec<String>>>,
    entry_count: usize,
    pub numeric_pattern: bool,
}

impl Lexicon {
    pub fn new(name: &str, entries: &[&str], numeric_pattern: bool) -> Result<Self> {
        let mut by_first: HashMap<String, Vec<Vec<String>>> = HashMap::new();
        let mut entry_count = 0;
        for entry in entries {
            let phrase: Vec<String> =
                entry.split_whitespace().map(|w| w.to_lowercase()).collect();
            if phrase.is_empty() {
                continue;
            }
            by_first.entry(phrase[0].clone()).or_default().push(phrase);
            entry_count += 1;
        }
        if entry_count == 0 && !numeric_pattern {
            return Err(CoreError::EmptyInput(format!("lexicon {name}")));
        }
        for phrases in by_first.values_mut() {
            phrases.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        }
        Ok(Self { name: name.to_string(), by_first, entry_count, numeric_pattern })
    }

    /// Parses the on-disk format: one entry per line, `#` comments ignored.
    pub fn parse(name: &str, text: &str, numeric_pattern: bool) -> Result<Self> {
        let entries: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self::new(name, &entries, numeric_pattern)
    }

    pub fn load(path: &Path, numeric_pattern: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "lexicon".to_string());
        Self::parse(&name, &text, numeric_pattern)
    }

    pub fn len(&self) -> usize {
        self.entry_count
    }

    pub fn is_empty(&self) -> bool {
        self.entry_count == 0
    }

    /// Longest phrase in the lexicon starting at `tokens[at]`, if any.
    pub fn match_at(&self, tokens: &[String], at: usize) -> Option<usize> {
        let phrases = self.by_first.get(&tokens[at])?;
        phrases
            .iter()
            .find(|p| {
                at + p.len() <= tokens.len()
                    && p.iter().zip(&tokens[at..]).all(|(a, b)| a == b)
            })
            .map(|p| p.len())
    }

    pub fn matches_numeric(&self, token: &str) -> bool {
        self.numeric_pattern && token.chars().any(|c| c.is_ascii_digit())
    }
}

macro_rules! builtin {
    ($fn_name:ident, $file:literal, $numeric:expr) => {
        pub fn $fn_name() -> &'static Lexicon {
            static LEX: OnceLock<Lexicon> = OnceLock::new();
            LEX.get_or_init(|| {
                Lexicon::parse(
                    $file.trim_end_matches(".txt"),
                    include_str!(concat!("../../data/", $file)),
                    $numeric,
                )
                .expect("builtin lexicon is well-formed")
            })
        }
    };
}

builtin!(function_words, "function_words.txt", false);
builtin!(logical_quantifiers, "logical_quantifiers.txt", false);
builtin!(pronouns, "pronouns.txt", false);
builtin!(junctions, "junctions.txt", false);
builtin!(causal_markers, "causal_markers.txt", false);
builtin!(spatial_temporal, "spatial_temporal.txt", false);
builtin!(number_words, "number_words.txt", true);
