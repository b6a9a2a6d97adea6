//! Variable-length Markov chains over the five quintile states.
//!
//! A context is a run of states written oldest to newest. The node for context `c` stores
//! `n_c`, the number of positions whose preceding `|c|` states equal `c`, and the
//! maximum-likelihood distribution of the state at those positions. The root context is
//! empty; it counts every observation and holds the unconditional state frequencies.
//! Children of a node extend its context by one older state.
//!
//! Pruning keeps a node when `Λ(c) = 2 n_c KL(p̂_c ‖ p̂_parent) > cutoff` (natural log),
//! or when one of its descendants is kept.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::State;

pub const ALPHABET: usize = State::COUNT;

pub type Distribution = [f64; ALPHABET];

#[derive(Debug, Error, PartialEq)]
pub enum VlmcError {
    #[error("sequence of length {len} is too short for max_depth {max_depth}")]
    SequenceTooShort { len: usize, max_depth: usize },
    #[error("support violation at component {0}: p > 0 where q = 0")]
    SupportViolation(usize),
    #[error("invalid prune configuration: {0}")]
    InvalidConfig(String),
    #[error("tree json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    /// Threshold on `Λ(c)`.
    pub cutoff: f64,
    pub max_depth: usize,
    /// Nodes with fewer occurrences are never retained on their own `Λ`.
    pub min_count: u64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self { cutoff: 3.372, max_depth: 4, min_count: 1 }
    }
}

impl PruneConfig {
    fn validate(&self) -> Result<(), VlmcError> {
        if !(self.cutoff >= 0.0) {
            return Err(VlmcError::InvalidConfig(format!("cutoff = {}", self.cutoff)));
        }
        if self.max_depth < 1 {
            return Err(VlmcError::InvalidConfig("max_depth = 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextNode {
    /// Oldest state first.
    pub context: Vec<State>,
    pub count: u64,
    pub next_counts: [u64; ALPHABET],
    pub probs: Distribution,
    /// `2 n_c KL(p̂_c ‖ p̂_parent)`; zero at the root.
    pub lambda: f64,
    /// Keyed by the added (oldest) state.
    pub children: BTreeMap<State, ContextNode>,
}

impl ContextNode {
    fn new(context: Vec<State>) -> Self {
        Self {
            context,
            count: 0,
            next_counts: [0; ALPHABET],
            probs: [0.0; ALPHABET],
            lambda: 0.0,
            children: BTreeMap::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.context.len()
    }

    fn finalize(&mut self, parent: Option<&Distribution>) {
        let n = self.count as f64;
        for (p, &c) in self.probs.iter_mut().zip(&self.next_counts) {
            *p = if n > 0.0 { c as f64 / n } else { 0.0 };
        }
        if let Some(q) = parent {
            // a child's support is a subset of its parent's by construction
            self.lambda = 2.0 * n * kl_divergence(&self.probs, q).unwrap_or(f64::INFINITY);
        }
        let probs = self.probs;
        for child in self.children.values_mut() {
            child.finalize(Some(&probs));
        }
    }

    fn visit<'a>(&'a self, out: &mut Vec<&'a ContextNode>) {
        out.push(self);
        for c in self.children.values() {
            c.visit(out);
        }
    }

    fn max_depth(&self) -> usize {
        self.children.values().map(|c| c.max_depth()).max().unwrap_or(self.depth())
    }

    /// Returns whether the node survives.
    fn prune(&mut self, cfg: &PruneConfig) -> bool {
        self.children.retain(|_, c| c.prune(cfg));
        !self.children.is_empty() || (self.count >= cfg.min_count && self.lambda > cfg.cutoff)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextTree {
    pub max_depth: usize,
    pub root: ContextNode,
}

impl ContextTree {
    /// Node for `context` (oldest first), if present.
    pub fn get(&self, context: &[State]) -> Option<&ContextNode> {
        let mut node = &self.root;
        for s in context.iter().rev() {
            node = node.children.get(s)?;
        }
        Some(node)
    }

    /// All nodes in depth-first order, children by state.
    pub fn nodes(&self) -> Vec<&ContextNode> {
        let mut out = Vec::new();
        self.root.visit(&mut out);
        out
    }

    /// Nodes whose context has length `k`.
    pub fn contexts_of_len(&self, k: usize) -> Vec<&ContextNode> {
        self.nodes().into_iter().filter(|n| n.depth() == k).collect()
    }

    /// Length of the longest context present.
    pub fn depth(&self) -> usize {
        self.root.max_depth()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, VlmcError> {
        serde_json::from_str(s).map_err(|e| VlmcError::Json(e.to_string()))
    }
}

/// Unpruned tree with every context of length `0..=max_depth` that occurs with a successor.
pub fn build_context_tree(s: &[State], cfg: &PruneConfig) -> Result<ContextTree, VlmcError> {
    cfg.validate()?;
    if s.len() <= cfg.max_depth {
        return Err(VlmcError::SequenceTooShort { len: s.len(), max_depth: cfg.max_depth });
    }
    let mut root = ContextNode::new(Vec::new());
    for t in 0..s.len() {
        let next = s[t].index();
        root.count += 1;
        root.next_counts[next] += 1;
        let mut node = &mut root;
        for l in 1..=cfg.max_depth.min(t) {
            let older = s[t - l];
            node = node.children.entry(older).or_insert_with(|| ContextNode::new(s[t - l..t].to_vec()));
            node.count += 1;
            node.next_counts[next] += 1;
        }
    }
    root.finalize(None);
    Ok(ContextTree { max_depth: cfg.max_depth, root })
}

/// `Σ p_i ln(p_i / q_i)` with `0 ln 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, VlmcError> {
    let mut sum = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(VlmcError::SupportViolation(i));
            }
            sum += pi * (pi / qi).ln();
        }
    }
    Ok(sum.max(0.0))
}

/// Removes every non-root node that has neither `Λ > cutoff` (with `n_c >= min_count`)
/// nor a retained descendant.
pub fn prune_tree(t: &ContextTree, cfg: &PruneConfig) -> ContextTree {
    let mut out = t.clone();
    out.root.children.retain(|_, c| c.prune(cfg));
    out
}

/// Build then prune.
pub fn fit_vlmc(s: &[State], cfg: &PruneConfig) -> Result<ContextTree, VlmcError> {
    Ok(prune_tree(&build_context_tree(s, cfg)?, cfg))
}

/// Distribution at the deepest node whose context is a suffix of `history` (oldest first).
pub fn predict_next(t: &ContextTree, history: &[State]) -> Distribution {
    let mut node = &t.root;
    for s in history.iter().rev() {
        match node.children.get(s) {
            Some(c) => node = c,
            None => break,
        }
    }
    node.probs
}

/// `½ Σ |p_i - q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
