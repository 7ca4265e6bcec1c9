//! Instruction parsing into the abstract plan language.
//!
//! Each sentence of a plan narration maps to one `(action target
//! location)` tuple. Parsing builds a dependency graph over the retained
//! word categories, takes the verb top node through a synonym filter,
//! reads the object noun phrase as the target, and either walks a
//! preposition chain or falls back to `<target>-location` for the
//! location symbol.

mod extract;
mod graph;
mod lexicon;

pub use extract::{
    extract_action, extract_location, extract_target, parse_sentence, tokenize,
};
pub use graph::{
    build_dep_graph, prune_graph, DepEdge, DepGraph, DepNode, EdgeLabel, NodeId, MAX_PREP_CHAIN,
};
pub use lexicon::{LexEntry, Lexicon, LexiconError, VerbFilter, WordCategory};

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// One lowercase word of a sentence, with punctuation stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Position in the sentence, 0-based.
    pub index: usize,
}

/// The abstract action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Action {
    Pick,
    Place,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Pick => "pick",
            Action::Place => "place",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One `(action target location)` tuple of the abstract plan language.
///
/// `target` holds the adjective symbols in sentence order followed by the
/// noun symbol; `location` is a hyphen-joined lowercase symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AbstractStep {
    pub action: Action,
    pub target: Vec<String>,
    pub location: String,
}

/// An ordered list of abstract steps plus the symbol set `S`: the union
/// of all target entries (location symbols excluded).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Plan {
    pub steps: Vec<AbstractStep>,
    #[cfg_attr(feature = "serde", serde(rename = "symbols"))]
    pub symbol_set: BTreeSet<String>,
}

impl Plan {
    /// Builds a plan from steps, deriving the symbol set.
    pub fn from_steps(steps: Vec<AbstractStep>) -> Self {
        let symbol_set =
            steps.iter().flat_map(|s| s.target.iter().cloned()).collect::<BTreeSet<String>>();
        Self { steps, symbol_set }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Per-sentence parse failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// No tokens survived tokenization.
    EmptySentence,
    /// Word missing from the lexicon.
    UnknownWord(String),
    /// Input does not fit the controlled grammar.
    GrammarViolation(&'static str),
    /// Pronoun in a noun slot; coreference is not resolved.
    PronounTarget(String),
    /// No noun connected to the verb node.
    NoTargetNoun,
    /// Verb lemma absent from the synonym filter.
    UnknownVerb(String),
    /// Pruning separated the top node from every noun.
    DisconnectedGraph,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::EmptySentence => write!(f, "sentence contains no words"),
            ParseError::UnknownWord(w) => write!(f, "word `{w}` is not in the lexicon"),
            ParseError::GrammarViolation(why) => write!(f, "grammar violation: {why}"),
            ParseError::PronounTarget(w) => {
                write!(f, "pronoun `{w}` cannot be a target; coreference is unsupported")
            }
            ParseError::NoTargetNoun => write!(f, "no target noun connected to the verb"),
            ParseError::UnknownVerb(v) => write!(f, "verb `{v}` maps to no abstract action"),
            ParseError::DisconnectedGraph => {
                write!(f, "pruning disconnected the top node from every noun")
            }
        }
    }
}

impl core::error::Error for ParseError {}

/// Whole-plan parse failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanError {
    /// No sentences were given.
    EmptyPlan,
    /// A sentence failed to parse; `index` is 0-based.
    Sentence { index: usize, source: ParseError },
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::EmptyPlan => write!(f, "plan has no sentences"),
            PlanError::Sentence { index, source } => {
                write!(f, "sentence {index}: {source}")
            }
        }
    }
}

impl core::error::Error for PlanError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            PlanError::EmptyPlan => None,
            PlanError::Sentence { source, .. } => Some(source),
        }
    }
}

/// Parses one sentence per abstract instruction into a [`Plan`].
pub fn parse_plan<S: AsRef<str>>(
    sentences: &[S],
    lexicon: &Lexicon,
    filter: &VerbFilter,
) -> Result<Plan, PlanError> {
    if sentences.is_empty() {
        return Err(PlanError::EmptyPlan);
    }
    let mut steps = Vec::with_capacity(sentences.len());
    for (index, sentence) in sentences.iter().enumerate() {
        let step = parse_sentence(sentence.as_ref(), lexicon, filter)
            .map_err(|source| PlanError::Sentence { index, source })?;
        steps.push(step);
    }
    Ok(Plan::from_steps(steps))
}
