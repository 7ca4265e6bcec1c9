//! Dependency graphs for instruction sentences.
//!
//! The graphs mimic Elementary Dependency Structures: a verb top node,
//! `ARG2` to the object noun, inverted `ARG1-of` edges from nouns to
//! their adjectives, and preposition chains hanging off the verb.

use alloc::string::String;
use alloc::vec::Vec;

use super::lexicon::{Lexicon, WordCategory};
use super::{ParseError, Token};

/// Maximum number of prepositions in one location chain.
pub const MAX_PREP_CHAIN: usize = 4;

pub type NodeId = usize;

/// Edge labels used by the mini grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeLabel {
    /// Verb to object noun, preposition to its noun.
    Arg2,
    /// Verb to the first preposition of a location chain.
    Arg3,
    /// Inverted edge: noun to adjective, chain noun to next preposition.
    Arg1Of,
    /// Determiner to noun ("bound variable"); pruned away.
    Bv,
    /// Verb to particle; pruned away.
    Part,
}

impl EdgeLabel {
    pub fn name(self) -> &'static str {
        match self {
            EdgeLabel::Arg2 => "ARG2",
            EdgeLabel::Arg3 => "ARG3",
            EdgeLabel::Arg1Of => "ARG1-of",
            EdgeLabel::Bv => "BV",
            EdgeLabel::Part => "PART",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepNode {
    pub id: NodeId,
    pub kind: WordCategory,
    pub lemma: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DepEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: EdgeLabel,
}

/// Directed labelled dependency graph with a designated top node.
///
/// After [`prune_graph`] only verb/noun/adjective/preposition nodes
/// remain and every node is reachable from the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepGraph {
    nodes: Vec<DepNode>,
    edges: Vec<DepEdge>,
    top: NodeId,
}

impl DepGraph {
    /// Builds a graph from pre-constructed parts. Intended for tests and
    /// for the grammar builder; `top` must index into `nodes`.
    pub fn from_parts(nodes: Vec<DepNode>, edges: Vec<DepEdge>, top: NodeId) -> Self {
        debug_assert!(top < nodes.len());
        Self { nodes, edges, top }
    }

    pub fn top(&self) -> &DepNode {
        &self.nodes[self.top]
    }

    pub fn node(&self, id: NodeId) -> &DepNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[DepNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[DepEdge] {
        &self.edges
    }

    pub fn edges_from(&self, id: NodeId) -> impl Iterator<Item = &DepEdge> {
        self.edges.iter().filter(move |e| e.from == id)
    }

    pub fn edges_to(&self, id: NodeId) -> impl Iterator<Item = &DepEdge> {
        self.edges.iter().filter(move |e| e.to == id)
    }

    /// True when every node kind is one of the four retained categories.
    pub fn is_pruned(&self) -> bool {
        self.nodes.iter().all(|n| n.kind.is_core())
    }
}

struct GraphBuilder {
    nodes: Vec<DepNode>,
    edges: Vec<DepEdge>,
}

impl GraphBuilder {
    fn new() -> Self {
        Self { nodes: Vec::new(), edges: Vec::new() }
    }

    fn add_node(&mut self, kind: WordCategory, lemma: &str) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(DepNode { id, kind, lemma: String::from(lemma) });
        id
    }

    fn add_edge(&mut self, from: NodeId, to: NodeId, label: EdgeLabel) {
        self.edges.push(DepEdge { from, to, label });
    }
}

/// Builds the dependency graph for one tokenized sentence.
///
/// Grammar: `VERB [PARTICLE] [DET] ADJ* NOUN [PREP NP | PREP PREP ...]`
/// with at most one prepositional location chain of depth
/// [`MAX_PREP_CHAIN`]. Determiners and particles are consumed without
/// creating nodes; a pronoun in any noun slot is rejected.
pub fn build_dep_graph(tokens: &[Token], lexicon: &Lexicon) -> Result<DepGraph, ParseError> {
    let mut words = Vec::with_capacity(tokens.len());
    for token in tokens {
        let entry = lexicon
            .lookup(&token.text)
            .ok_or_else(|| ParseError::UnknownWord(token.text.clone()))?;
        words.push((lexicon.lemma(&token.text), entry.category));
    }

    let mut builder = GraphBuilder::new();
    let mut pos = 0usize;

    // Verb (top node).
    let verb = match words.first() {
        Some((lemma, WordCategory::Verb)) => {
            pos += 1;
            builder.add_node(WordCategory::Verb, lemma)
        }
        Some(_) => return Err(ParseError::GrammarViolation("sentence must start with a verb")),
        None => return Err(ParseError::EmptySentence),
    };
    if words.iter().skip(1).any(|(_, cat)| *cat == WordCategory::Verb) {
        return Err(ParseError::GrammarViolation("more than one verb"));
    }

    // Optional particle ("pick up", "put down"); recognized, not kept.
    if matches!(words.get(pos), Some((_, WordCategory::Particle))) {
        pos += 1;
    }

    // Object noun phrase.
    let object = parse_np(&mut builder, &words, &mut pos)?;
    builder.add_edge(verb, object, EdgeLabel::Arg2);

    // Optional location chain: PREP (NP | PREP) ...
    if matches!(words.get(pos), Some((_, WordCategory::Prep))) {
        let mut attach = verb;
        let mut depth = 0usize;
        while let Some((lemma, WordCategory::Prep)) = words.get(pos) {
            depth += 1;
            if depth > MAX_PREP_CHAIN {
                return Err(ParseError::GrammarViolation("preposition chain too deep"));
            }
            pos += 1;
            let prep = builder.add_node(WordCategory::Prep, lemma);
            let label = match builder.nodes[attach].kind {
                WordCategory::Verb => EdgeLabel::Arg3,
                WordCategory::Noun => EdgeLabel::Arg1Of,
                _ => EdgeLabel::Arg2,
            };
            builder.add_edge(attach, prep, label);
            attach = prep;
            // A preposition may chain directly into another preposition;
            // otherwise it takes a noun phrase.
            if !matches!(words.get(pos), Some((_, WordCategory::Prep))) {
                let noun = parse_np(&mut builder, &words, &mut pos)?;
                builder.add_edge(prep, noun, EdgeLabel::Arg2);
                attach = noun;
                if !matches!(words.get(pos), Some((_, WordCategory::Prep))) {
                    break;
                }
            }
        }
    }

    if pos != words.len() {
        return Err(ParseError::GrammarViolation("unexpected words after the instruction"));
    }

    Ok(DepGraph::from_parts(builder.nodes, builder.edges, verb))
}

/// `[DET] ADJ* (NOUN | PRONOUN)`; adjectives attach to the noun in
/// sentence order. Returns the noun node.
fn parse_np(
    builder: &mut GraphBuilder,
    words: &[(&str, WordCategory)],
    pos: &mut usize,
) -> Result<NodeId, ParseError> {
    if matches!(words.get(*pos), Some((_, WordCategory::Det))) {
        *pos += 1;
    }
    let adj_start = *pos;
    while matches!(words.get(*pos), Some((_, WordCategory::Adj))) {
        *pos += 1;
    }
    let noun = match words.get(*pos) {
        Some((lemma, WordCategory::Noun)) => {
            *pos += 1;
            builder.add_node(WordCategory::Noun, lemma)
        }
        Some((lemma, WordCategory::Pronoun)) => {
            return Err(ParseError::PronounTarget(String::from(*lemma)));
        }
        _ => return Err(ParseError::GrammarViolation("expected a noun")),
    };
    for (lemma, _) in &words[adj_start..*pos - 1] {
        let adj = builder.add_node(WordCategory::Adj, lemma);
        builder.add_edge(noun, adj, EdgeLabel::Arg1Of);
    }
    Ok(noun)
}

/// Removes nodes that do not contribute to the instruction meaning
/// (anything that is not a verb, adjective, preposition or a noun),
/// drops dangling edges, and discards nodes no longer reachable from the
/// top.
///
/// Errors with [`ParseError::DisconnectedGraph`] when pruning leaves the
/// top node with no reachable noun.
pub fn prune_graph(graph: &DepGraph) -> Result<DepGraph, ParseError> {
    let keep: Vec<bool> = graph.nodes.iter().map(|n| n.kind.is_core()).collect();

    // Reachability from the top over kept nodes, ignoring direction.
    let mut reachable = alloc::vec![false; graph.nodes.len()];
    let mut stack = Vec::new();
    if keep[graph.top] {
        reachable[graph.top] = true;
        stack.push(graph.top);
    }
    while let Some(id) = stack.pop() {
        for edge in &graph.edges {
            let next = if edge.from == id {
                edge.to
            } else if edge.to == id {
                edge.from
            } else {
                continue;
            };
            if keep[next] && !reachable[next] {
                reachable[next] = true;
                stack.push(next);
            }
        }
    }

    let mut remap = alloc::vec![usize::MAX; graph.nodes.len()];
    let mut nodes = Vec::new();
    for node in &graph.nodes {
        if reachable[node.id] {
            remap[node.id] = nodes.len();
            nodes.push(DepNode { id: nodes.len(), kind: node.kind, lemma: node.lemma.clone() });
        }
    }
    let edges: Vec<DepEdge> = graph
        .edges
        .iter()
        .filter(|e| reachable[e.from] && reachable[e.to])
        .map(|e| DepEdge { from: remap[e.from], to: remap[e.to], label: e.label })
        .collect();

    if !keep[graph.top] {
        return Err(ParseError::DisconnectedGraph);
    }
    let pruned = DepGraph::from_parts(nodes, edges, remap[graph.top]);
    let has_noun = pruned.nodes.iter().any(|n| n.kind == WordCategory::Noun);
    if !has_noun {
        return Err(ParseError::DisconnectedGraph);
    }
    Ok(pruned)
}
