//! Context-tree metrics and cross-tree context aggregation.
//!
//! Notation: `p_j(c)` is the probability that state `R_j` follows context `c`, with `c`
//! written oldest first, and `n_c` its occurrence count.
//!
//! - Order 1: `M_i = p_i(R_i)`, `V1 = ½(p_5(R1) + p_1(R5))`, `V2 = ½(p_4(R2) + p_2(R4))`.
//! - Order k: `C_k = Σ_i n(R_i^k) p_i(R_i^k) / N_k`, `E_k = ½(p_5(R1^k) + p_1(R5^k))`,
//!   `Z_k = ½(p_5(…R5 R1) + p_1(…R1 R5))` over the two alternating length-k contexts, and
//!   `B_k = Σ_{calm c} n_c (p_1(c) + p_5(c)) / N_k` over contexts built from `R2..R4`.
//!   `N_k` sums `n_c` over every length-k context of the source. Absent contexts add 0.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::emd::fmt_f64;
use crate::ingest::State;
use crate::vlmc::{ContextTree, Distribution, ALPHABET};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no trees to aggregate")]
    Empty,
    #[error("bad context {0:?}")]
    BadContext(String),
    #[error("aggregated csv: {0}")]
    Format(String),
}

/// `"R1R5"` for `[R1, R5]`; the empty context renders as `"*"`.
pub fn format_context(c: &[State]) -> String {
    if c.is_empty() {
        return "*".into();
    }
    c.iter().map(|s| s.to_string()).collect()
}

pub fn parse_context(s: &str) -> Result<Vec<State>, MetricsError> {
    let s = s.trim();
    if s == "*" || s.is_empty() {
        return Ok(Vec::new());
    }
    let bad = || MetricsError::BadContext(s.to_string());
    if !s.len().is_multiple_of(2) || !s.is_ascii() {
        return Err(bad());
    }
    (0..s.len()).step_by(2).map(|i| s[i..i + 2].parse::<State>().map_err(|_| bad())).collect()
}

fn ser_tail<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn de_tail<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Num {
        F(f64),
        S(String),
    }
    match Num::deserialize(d)? {
        Num::F(v) => Ok(v),
        Num::S(s) if s == "inf" => Ok(f64::INFINITY),
        Num::S(s) => Err(serde::de::Error::custom(format!("bad tail ratio {s:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnconditionalStats {
    pub p: Distribution,
    /// `(p1 + p5) / (p2 + p3 + p4)`; `+∞` when the middle mass is zero (serialized as `"inf"`).
    #[serde(serialize_with = "ser_tail", deserialize_with = "de_tail")]
    pub tail_ratio: f64,
    /// Shannon entropy in bits.
    pub entropy: f64,
}

impl UnconditionalStats {
    pub fn zero_middle_mass(&self) -> bool {
        self.tail_ratio.is_infinite()
    }
}

pub fn unconditional_stats(p: &Distribution) -> UnconditionalStats {
    let middle = p[1] + p[2] + p[3];
    let tail_ratio = if middle > 0.0 { (p[0] + p[4]) / middle } else { f64::INFINITY };
    UnconditionalStats { p: *p, tail_ratio, entropy: shannon_entropy(p) }
}

/// `-Σ p log₂ p` with `0 log 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|v| v * v.log2()).sum::<f64>()
}

/// Read access to per-context counts and next-state distributions.
pub trait ContextSource {
    /// Occurrence count and distribution of `context` (oldest first), if present.
    fn lookup(&self, context: &[State]) -> Option<(u64, Distribution)>;
    /// All present contexts of length `k`.
    fn contexts_of_len(&self, k: usize) -> Vec<(Vec<State>, u64, Distribution)>;
    /// `N_k`: summed occurrences of every length-`k` context.
    fn total_count(&self, k: usize) -> u64 {
        self.contexts_of_len(k).iter().map(|c| c.1).sum()
    }
}

impl ContextSource for ContextTree {
    fn lookup(&self, context: &[State]) -> Option<(u64, Distribution)> {
        self.get(context).map(|n| (n.count, n.probs))
    }

    fn contexts_of_len(&self, k: usize) -> Vec<(Vec<State>, u64, Distribution)> {
        ContextTree::contexts_of_len(self, k).into_iter().map(|n| (n.context.clone(), n.count, n.probs)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Order1Metrics {
    /// `M_1..M_5`.
    pub m: [f64; ALPHABET],
    pub v1: f64,
    pub v2: f64,
    /// Length-1 contexts absent from the source, contributing 0.
    pub missing: Vec<State>,
}

pub fn order1_metrics<S: ContextSource + ?Sized>(src: &S) -> Order1Metrics {
    let mut missing = Vec::new();
    let mut row = |s: State| match src.lookup(&[s]) {
        Some((_, p)) => p,
        None => {
            missing.push(s);
            [0.0; ALPHABET]
        }
    };
    let rows: Vec<Distribution> = State::ALL.iter().map(|&s| row(s)).collect();
    let m = std::array::from_fn(|i| rows[i][i]);
    Order1Metrics { m, v1: 0.5 * (rows[0][4] + rows[4][0]), v2: 0.5 * (rows[1][3] + rows[3][1]), missing }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderKMetrics {
    pub k: usize,
    pub c: f64,
    pub e: f64,
    pub z: f64,
    pub b: f64,
}

/// Length-`k` context alternating between `R1` and `R5` and ending in `last`.
pub fn alternating_context(k: usize, last: State) -> Vec<State> {
    let other = if last == State::R1 { State::R5 } else { State::R1 };
    (0..k).map(|i| if (k - 1 - i).is_multiple_of(2) { last } else { other }).collect()
}

fn is_calm(c: &[State]) -> bool {
    c.iter().all(|s| matches!(s, State::R2 | State::R3 | State::R4))
}

pub fn higher_order_metrics<S: ContextSource + ?Sized>(src: &S, k: usize) -> OrderKMetrics {
    let p = |c: &[State], j: usize| src.lookup(c).map(|(_, d)| d[j]).unwrap_or(0.0);
    let total = src.total_count(k) as f64;
    let (mut c_num, mut b_num) = (0.0, 0.0);
    if total > 0.0 {
        for s in State::ALL {
            if let Some((n, d)) = src.lookup(&vec![s; k]) {
                c_num += n as f64 * d[s.index()];
            }
        }
        for (ctx, n, d) in src.contexts_of_len(k) {
            if is_calm(&ctx) {
                b_num += n as f64 * (d[0] + d[4]);
            }
        }
    }
    let ratio = |num: f64| if total > 0.0 { num / total } else { 0.0 };
    OrderKMetrics {
        k,
        c: ratio(c_num),
        e: 0.5 * (p(&vec![State::R1; k], 4) + p(&vec![State::R5; k], 0)),
        z: 0.5 * (p(&alternating_context(k, State::R1), 4) + p(&alternating_context(k, State::R5), 0)),
        b: ratio(b_num),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedContext {
    /// Number of trees containing the context.
    pub tree_count: usize,
    /// Summed occurrence count.
    pub count: u64,
    /// Unweighted mean of the per-tree distributions.
    pub probs: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedContexts {
    pub n_trees: usize,
    /// Non-root contexts kept by the tree-count filter, keyed by formatted context.
    pub contexts: BTreeMap<String, AggregatedContext>,
    /// `N_k` over every context of each length, before filtering.
    pub depth_totals: BTreeMap<usize, u64>,
    /// Unweighted mean of the root distributions.
    pub mean_root: Distribution,
}

impl AggregatedContexts {
    /// Builds an aggregate from tabulated rows; `N_k` is the sum over the given rows.
    pub fn from_rows(rows: &[(&str, usize, u64, Distribution)]) -> Result<Self, MetricsError> {
        let mut contexts = BTreeMap::new();
        let mut depth_totals = BTreeMap::new();
        for &(name, tree_count, count, probs) in rows {
            let ctx = parse_context(name)?;
            *depth_totals.entry(ctx.len()).or_insert(0) += count;
            contexts.insert(format_context(&ctx), AggregatedContext { tree_count, count, probs });
        }
        Ok(Self { n_trees: 0, contexts, depth_totals, mean_root: [0.0; ALPHABET] })
    }

    /// `context,count,p1,p2,p3,p4,p5,occurrences`, sorted by context.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["context", "count", "p1", "p2", "p3", "p4", "p5", "occurrences"])?;
        for (name, a) in self.ordered() {
            let mut rec = vec![name.to_string(), a.tree_count.to_string()];
            rec.extend(a.probs.iter().map(|v| fmt_f64(*v)));
            rec.push(a.count.to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Vec<(String, AggregatedContext)>, MetricsError> {
        let mut rd = csv::Reader::from_reader(r);
        let mut out = Vec::new();
        let fmt = |e: &dyn std::fmt::Display| MetricsError::Format(e.to_string());
        for rec in rd.records() {
            let rec = rec.map_err(|e| fmt(&e))?;
            if rec.len() < 8 {
                return Err(MetricsError::Format("short row".into()));
            }
            let mut probs = [0.0; ALPHABET];
            for (j, p) in probs.iter_mut().enumerate() {
                *p = rec[2 + j].parse().map_err(|e| fmt(&e))?;
            }
            out.push((
                rec[0].to_string(),
                AggregatedContext {
                    tree_count: rec[1].parse().map_err(|e| fmt(&e))?,
                    count: rec[7].parse().map_err(|e| fmt(&e))?,
                    probs,
                },
            ));
        }
        Ok(out)
    }

    /// Entries ordered like a printed table: by first (oldest) state, then length, then
    /// lexicographically.
    pub fn ordered(&self) -> Vec<(&str, &AggregatedContext)> {
        let mut v: Vec<(&str, &AggregatedContext)> = self.contexts.iter().map(|(k, a)| (k.as_str(), a)).collect();
        v.sort_by(|a, b| (&a.0[..2], a.0.len(), a.0).cmp(&(&b.0[..2], b.0.len(), b.0)));
        v
    }
}

impl ContextSource for AggregatedContexts {
    fn lookup(&self, context: &[State]) -> Option<(u64, Distribution)> {
        self.contexts.get(&format_context(context)).map(|a| (a.count, a.probs))
    }

    fn contexts_of_len(&self, k: usize) -> Vec<(Vec<State>, u64, Distribution)> {
        self.contexts
            .iter()
            .filter_map(|(name, a)| {
                let ctx = parse_context(name).ok()?;
                (ctx.len() == k).then_some((ctx, a.count, a.probs))
            })
            .collect()
    }

    fn total_count(&self, k: usize) -> u64 {
        self.depth_totals.get(&k).copied().unwrap_or(0)
    }
}

/// Contexts present in at least `min_tree_count` trees with their summed counts and mean
/// distributions. Trees are folded in the given order.
pub fn aggregate_contexts(trees: &[ContextTree], min_tree_count: usize) -> Result<AggregatedContexts, MetricsError> {
    if trees.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut acc: BTreeMap<String, (usize, u64, Distribution)> = BTreeMap::new();
    let mut depth_totals: BTreeMap<usize, u64> = BTreeMap::new();
    let mut root_sum = [0.0; ALPHABET];
    for t in trees {
        for (r, v) in root_sum.iter_mut().zip(&t.root.probs) {
            *r += v;
        }
        for node in t.nodes().into_iter().skip(1) {
            *depth_totals.entry(node.depth()).or_insert(0) += node.count;
            let e = acc.entry(format_context(&node.context)).or_insert((0, 0, [0.0; ALPHABET]));
            e.0 += 1;
            e.1 += node.count;
            for (s, v) in e.2.iter_mut().zip(&node.probs) {
                *s += v;
            }
        }
    }
    let n = trees.len() as f64;
    let contexts = acc
        .into_iter()
        .filter(|(_, (tc, _, _))| *tc >= min_tree_count)
        .map(|(k, (tc, count, sum))| {
            let probs = sum.map(|v| v / tc as f64);
            (k, AggregatedContext { tree_count: tc, count, probs })
        })
        .collect();
    Ok(AggregatedContexts { n_trees: trees.len(), contexts, depth_totals, mean_root: root_sum.map(|v| v / n) })
}
