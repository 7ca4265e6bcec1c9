//! The model file: learned symbol models, concept groups, and the
//! config snapshot.
//!
//! ```json
//! {"sigma_thresh": 0.05, "d_max": 3.0,
//!  "symbols": [{"name": "blue", "invariant": ["R","G","B"],
//!               "mu": [...], "var": [...]}],
//!  "groups": [{"features": ["R","G","B"], "symbols": ["blue", ...]}]}
//! ```

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use symground_core::features::Feature;
use symground_core::learner::{ConceptGroup, KbConfig, KnowledgeBase, SymbolModel};

#[derive(Debug, Serialize, Deserialize)]
struct SymbolDoc {
    name: String,
    invariant: Vec<String>,
    mu: Vec<f64>,
    var: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GroupDoc {
    features: Vec<String>,
    symbols: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    sigma_thresh: f64,
    d_max: f64,
    symbols: Vec<SymbolDoc>,
    groups: Vec<GroupDoc>,
}

fn feature_names(features: &[Feature]) -> Vec<String> {
    features.iter().map(|f| f.name().to_string()).collect()
}

fn parse_features(names: &[String]) -> anyhow::Result<Vec<Feature>> {
    names
        .iter()
        .map(|name| {
            Feature::parse(name).ok_or_else(|| anyhow::anyhow!("unknown feature `{name}`"))
        })
        .collect()
}

pub fn to_json(kb: &KnowledgeBase) -> anyhow::Result<String> {
    let doc = ModelDoc {
        sigma_thresh: kb.config.sigma_thresh,
        d_max: kb.config.d_max,
        symbols: kb
            .models
            .iter()
            .map(|m| SymbolDoc {
                name: m.symbol.clone(),
                invariant: feature_names(&m.invariant),
                mu: m.mean.clone(),
                var: m.variance.clone(),
            })
            .collect(),
        groups: kb
            .groups
            .iter()
            .map(|g| GroupDoc { features: feature_names(&g.features), symbols: g.symbols.clone() })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn from_json(text: &str) -> anyhow::Result<KnowledgeBase> {
    let doc: ModelDoc = serde_json::from_str(text).context("parsing model JSON")?;
    let mut models = Vec::with_capacity(doc.symbols.len());
    for symbol in doc.symbols {
        let invariant = parse_features(&symbol.invariant)?;
        if symbol.mu.len() != invariant.len() || symbol.var.len() != invariant.len() {
            bail!("model `{}`: mu/var length must match the invariant set", symbol.name);
        }
        if symbol.var.iter().any(|v| *v <= 0.0) {
            bail!("model `{}`: variances must be positive", symbol.name);
        }
        models.push(SymbolModel {
            symbol: symbol.name,
            invariant,
            mean: symbol.mu,
            variance: symbol.var,
        });
    }
    let mut groups = Vec::with_capacity(doc.groups.len());
    for group in doc.groups {
        groups.push(ConceptGroup { features: parse_features(&group.features)?, symbols: group.symbols });
    }
    for group in &groups {
        for symbol in &group.symbols {
            if !models.iter().any(|m| &m.symbol == symbol) {
                bail!("group references unknown symbol `{symbol}`");
            }
        }
    }
    Ok(KnowledgeBase {
        models,
        groups,
        config: KbConfig { sigma_thresh: doc.sigma_thresh, d_max: doc.d_max },
    })
}

pub fn write_file(kb: &KnowledgeBase, path: &Path) -> anyhow::Result<()> {
    std::fs::write(path, to_json(kb)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_file(path: &Path) -> anyhow::Result<KnowledgeBase> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    from_json(&text)
}
