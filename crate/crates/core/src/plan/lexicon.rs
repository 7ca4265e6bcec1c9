//! Word-category lexicon for the controlled instruction language.
//!
//! The lexicon replaces the wide-coverage grammar an end-to-end system
//! would use: a flat `word<TAB>category[<TAB>canonical]` table mapping
//! each surface word to its syntactic category and optionally to a
//! canonical lemma (e.g. `cubes -> cube`).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use core::fmt;

use super::Action;

/// Syntactic category of a word. Only the first four survive graph
/// pruning; the rest exist so the tokenizer can recognize (and drop)
/// function words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum WordCategory {
    Verb,
    Noun,
    Adj,
    Prep,
    Det,
    Particle,
    Pronoun,
}

impl WordCategory {
    /// Categories retained in pruned dependency graphs.
    pub fn is_core(self) -> bool {
        matches!(
            self,
            WordCategory::Verb | WordCategory::Noun | WordCategory::Adj | WordCategory::Prep
        )
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "verb" => WordCategory::Verb,
            "noun" => WordCategory::Noun,
            "adj" | "adjective" => WordCategory::Adj,
            "prep" | "preposition" => WordCategory::Prep,
            "det" | "determiner" => WordCategory::Det,
            "particle" => WordCategory::Particle,
            "pronoun" => WordCategory::Pronoun,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            WordCategory::Verb => "verb",
            WordCategory::Noun => "noun",
            WordCategory::Adj => "adj",
            WordCategory::Prep => "prep",
            WordCategory::Det => "det",
            WordCategory::Particle => "particle",
            WordCategory::Pronoun => "pronoun",
        }
    }
}

impl fmt::Display for WordCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One lexicon entry: category plus optional canonical lemma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexEntry {
    pub category: WordCategory,
    pub canonical: Option<String>,
}

/// Malformed lexicon text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexiconError {
    /// Line did not have 2 or 3 tab-separated fields.
    BadLine { line: usize },
    /// Unrecognized category name.
    BadCategory { line: usize, category: String },
}

impl fmt::Display for LexiconError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexiconError::BadLine { line } => {
                write!(f, "lexicon line {line}: expected word<TAB>category[<TAB>canonical]")
            }
            LexiconError::BadCategory { line, category } => {
                write!(f, "lexicon line {line}: unknown category `{category}`")
            }
        }
    }
}

impl core::error::Error for LexiconError {}

/// Flat word -> category map, extendable at run time.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, LexEntry>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// The lexicon shipped with the crate, covering the tabletop
    /// vocabulary.
    pub fn builtin() -> Self {
        Self::parse(include_str!("default_lexicon.tsv")).expect("built-in lexicon is well formed")
    }

    /// Parses `word<TAB>category[<TAB>canonical]` lines. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lexicon = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let word = fields.next().filter(|w| !w.is_empty());
            let category = fields.next().filter(|c| !c.is_empty());
            let canonical = fields.next();
            if fields.next().is_some() {
                return Err(LexiconError::BadLine { line: i + 1 });
            }
            let (word, category) = match (word, category) {
                (Some(w), Some(c)) => (w, c),
                _ => return Err(LexiconError::BadLine { line: i + 1 }),
            };
            let category = WordCategory::parse(category).ok_or(LexiconError::BadCategory {
                line: i + 1,
                category: category.to_string(),
            })?;
            lexicon.insert(word, category, canonical);
        }
        Ok(lexicon)
    }

    pub fn insert(&mut self, word: &str, category: WordCategory, canonical: Option<&str>) {
        self.entries.insert(
            word.to_ascii_lowercase(),
            LexEntry { category, canonical: canonical.map(|c| c.to_ascii_lowercase()) },
        );
    }

    /// Overlays `other` on top of `self`; later entries win.
    pub fn extend_with(&mut self, other: Lexicon) {
        self.entries.extend(other.entries);
    }

    pub fn lookup(&self, word: &str) -> Option<&LexEntry> {
        self.entries.get(word)
    }

    /// Canonical lemma for a word (the word itself when no canonical is
    /// recorded).
    pub fn lemma<'a>(&'a self, word: &'a str) -> &'a str {
        match self.entries.get(word).and_then(|e| e.canonical.as_deref()) {
            Some(canonical) => canonical,
            None => word,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Rule-based verb filter mapping synonym lemmas onto the abstract action
/// set: `pick, grab, take, get` all read as a pick, and `place, put,
/// move, drop` as a place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbFilter {
    map: BTreeMap<String, Action>,
}

impl Default for VerbFilter {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        for verb in ["pick", "grab", "take", "get"] {
            map.insert(verb.to_string(), Action::Pick);
        }
        for verb in ["place", "put", "move", "drop"] {
            map.insert(verb.to_string(), Action::Place);
        }
        Self { map }
    }
}

impl VerbFilter {
    pub fn action_for(&self, lemma: &str) -> Option<Action> {
        self.map.get(lemma).copied()
    }

    pub fn insert(&mut self, lemma: &str, action: Action) {
        self.map.insert(lemma.to_ascii_lowercase(), action);
    }

    /// All lemmas mapping to `action`, in lexicographic order.
    pub fn synonyms_of(&self, action: Action) -> impl Iterator<Item = &str> {
        self.map.iter().filter(move |(_, a)| **a == action).map(|(w, _)| w.as_str())
    }
}
