//! Tokenization and graph traversal: from sentences to abstract steps.

use alloc::string::String;
use alloc::vec::Vec;

use super::graph::{build_dep_graph, prune_graph, DepGraph, NodeId};
use super::lexicon::{Lexicon, VerbFilter, WordCategory};
use super::{AbstractStep, Action, ParseError, Token};

/// Splits a sentence into lowercase tokens with punctuation stripped.
/// Determiners and other function words are retained; they are dropped
/// later when the dependency graph is built.
pub fn tokenize(sentence: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    for word in sentence.split_whitespace() {
        let text: String =
            word.chars().filter(|c| c.is_ascii_alphabetic()).map(|c| c.to_ascii_lowercase()).collect();
        if !text.is_empty() {
            let index = tokens.len();
            tokens.push(Token { text, index });
        }
    }
    if tokens.is_empty() {
        return Err(ParseError::EmptySentence);
    }
    Ok(tokens)
}

/// Maps the top-node verb through the rule-based synonym filter.
pub fn extract_action(graph: &DepGraph, filter: &VerbFilter) -> Result<Action, ParseError> {
    let top = graph.top();
    if top.kind != WordCategory::Verb {
        return Err(ParseError::GrammarViolation("top node is not a verb"));
    }
    filter.action_for(&top.lemma).ok_or_else(|| ParseError::UnknownVerb(top.lemma.clone()))
}

/// The object noun phrase: adjective lemmas in sentence order followed by
/// the noun lemma of the noun directly connected to the verb.
pub fn extract_target(graph: &DepGraph) -> Result<Vec<String>, ParseError> {
    let top = graph.top().id;
    let noun = graph
        .edges_from(top)
        .map(|e| graph.node(e.to))
        .find(|n| n.kind == WordCategory::Noun)
        .ok_or(ParseError::NoTargetNoun)?;

    let mut symbols: Vec<String> = graph
        .edges_from(noun.id)
        .map(|e| graph.node(e.to))
        .filter(|n| n.kind == WordCategory::Adj)
        .map(|n| n.lemma.clone())
        .collect();
    symbols.push(noun.lemma.clone());
    Ok(symbols)
}

/// The location symbol.
///
/// When a preposition node is connected to the verb (in either edge
/// direction) the preposition/noun/adjective chain is walked depth-first,
/// backtracking at nodes with no unvisited edges, and the visited lemmas
/// are hyphen-joined in visit order. Without a preposition the location
/// defaults to the hyphen-joined target plus `-location`.
pub fn extract_location(graph: &DepGraph, target: &[String]) -> String {
    let top = graph.top().id;
    let start = graph
        .edges_from(top)
        .map(|e| e.to)
        .chain(graph.edges_to(top).map(|e| e.from))
        .find(|&id| graph.node(id).kind == WordCategory::Prep);

    let Some(start) = start else {
        let mut location = String::new();
        for symbol in target {
            location.push_str(symbol);
            location.push('-');
        }
        location.push_str("location");
        return location;
    };

    let mut visited = alloc::vec![false; graph.nodes().len()];
    visited[top] = true;
    let mut lemmas: Vec<&str> = Vec::new();
    walk_chain(graph, start, &mut visited, &mut lemmas);
    lemmas.join("-")
}

fn walk_chain<'g>(graph: &'g DepGraph, id: NodeId, visited: &mut [bool], out: &mut Vec<&'g str>) {
    visited[id] = true;
    out.push(&graph.node(id).lemma);
    // Outgoing edges first, then incoming, both in insertion order; the
    // builder inserts edges in sentence order so the walk follows it.
    let next: Vec<NodeId> = graph
        .edges_from(id)
        .map(|e| e.to)
        .chain(graph.edges_to(id).map(|e| e.from))
        .collect();
    for node in next {
        if !visited[node] {
            walk_chain(graph, node, visited, out);
        }
    }
}

/// Parses one sentence into an abstract step.
pub fn parse_sentence(
    sentence: &str,
    lexicon: &Lexicon,
    filter: &VerbFilter,
) -> Result<AbstractStep, ParseError> {
    let tokens = tokenize(sentence)?;
    let graph = build_dep_graph(&tokens, lexicon)?;
    let graph = prune_graph(&graph)?;
    let action = extract_action(&graph, filter)?;
    let target = extract_target(&graph)?;
    let location = extract_location(&graph, &target);
    Ok(AbstractStep { action, target, location })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pruned(sentence: &str) -> DepGraph {
        let lexicon = Lexicon::builtin();
        let tokens = tokenize(sentence).unwrap();
        prune_graph(&build_dep_graph(&tokens, &lexicon).unwrap()).unwrap()
    }

    #[test]
    fn tokenize_lowers_and_strips_punctuation() {
        let tokens = tokenize("Pick up the blue cube.").unwrap();
        let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, ["pick", "up", "the", "blue", "cube"]);
        assert_eq!(tokens[4].index, 4);
    }

    #[test]
    fn tokenize_handles_uppercase() {
        let tokens = tokenize("PUT it DOWN").unwrap();
        let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, ["put", "it", "down"]);
    }

    #[test]
    fn tokenize_rejects_empty_input() {
        assert_eq!(tokenize("").unwrap_err(), ParseError::EmptySentence);
        assert_eq!(tokenize("  ... !!").unwrap_err(), ParseError::EmptySentence);
    }

    #[test]
    fn action_uses_the_synonym_filter() {
        let filter = VerbFilter::default();
        assert_eq!(extract_action(&pruned("grab the cube"), &filter).unwrap(), Action::Pick);
        assert_eq!(extract_action(&pruned("put down the cube"), &filter).unwrap(), Action::Place);
    }

    #[test]
    fn unmapped_verb_is_unknown() {
        let mut lexicon = Lexicon::builtin();
        lexicon.insert("sing", WordCategory::Verb, None);
        let tokens = tokenize("sing the cube").unwrap();
        let graph = prune_graph(&build_dep_graph(&tokens, &lexicon).unwrap()).unwrap();
        assert_eq!(
            extract_action(&graph, &VerbFilter::default()).unwrap_err(),
            ParseError::UnknownVerb("sing".into())
        );
    }

    #[test]
    fn target_lists_adjectives_then_noun() {
        assert_eq!(extract_target(&pruned("pick up the blue cube")).unwrap(), ["blue", "cube"]);
        assert_eq!(extract_target(&pruned("grab the cell")).unwrap(), ["cell"]);
        assert_eq!(
            extract_target(&pruned("take the big red block")).unwrap(),
            ["big", "red", "block"]
        );
    }

    #[test]
    fn location_walks_preposition_chain() {
        let g = pruned("put the red block on the left of the cube");
        let target = extract_target(&g).unwrap();
        assert_eq!(extract_location(&g, &target), "on-left-of-cube");
    }

    #[test]
    fn location_defaults_to_target_location() {
        let g = pruned("pick up the blue cube");
        let target = extract_target(&g).unwrap();
        assert_eq!(extract_location(&g, &target), "blue-cube-location");

        let g = pruned("grab the cell");
        let target = extract_target(&g).unwrap();
        assert_eq!(extract_location(&g, &target), "cell-location");
    }

    #[test]
    fn location_chain_includes_adjectives_in_visit_order() {
        let g = pruned("move the cell to the left of the red cube");
        let target = extract_target(&g).unwrap();
        assert_eq!(extract_location(&g, &target), "to-left-of-cube-red");
    }

    #[test]
    fn parse_sentence_assembles_the_step() {
        let lexicon = Lexicon::builtin();
        let filter = VerbFilter::default();
        let step = parse_sentence("Grab the yellow cell.", &lexicon, &filter).unwrap();
        assert_eq!(step.action, Action::Pick);
        assert_eq!(step.target, ["yellow", "cell"]);
        assert_eq!(step.location, "yellow-cell-location");
    }
}
