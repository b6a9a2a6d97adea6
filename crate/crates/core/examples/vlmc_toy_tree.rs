//! Fits a variable-length Markov chain to a sequence drawn from a known context tree.
//!
//! `cargo run --release --example vlmc_toy_tree`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regimekit::metrics::format_context;
use regimekit::vlmc::{build_context_tree, fit_vlmc, predict_next, total_variation, PruneConfig};
use regimekit::State::{self, R1, R3, R5};

/// Generator contexts, oldest state first; the deepest suffix match applies.
fn generator() -> Vec<(Vec<State>, [f64; 5])> {
    vec![
        (vec![], [0.2; 5]),
        (vec![R1], [0.30, 0.15, 0.20, 0.10, 0.25]),
        (vec![R3], [0.18, 0.22, 0.30, 0.18, 0.12]),
        (vec![R5, R1], [0.48, 0.02, 0.10, 0.10, 0.30]),
    ]
}

fn sample(n: usize, seed: u64) -> Vec<State> {
    let g = generator();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s: Vec<State> = Vec::with_capacity(n);
    while s.len() < n {
        let (_, p) = g.iter().filter(|(c, _)| s.ends_with(c)).max_by_key(|(c, _)| c.len()).unwrap();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let i = p.iter().position(|&pi| {
            acc += pi;
            u < acc
        });
        s.push(State::from_index(i.unwrap_or(4)).unwrap());
    }
    s
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = sample(5000, 42);
    let cfg = PruneConfig::default();
    let full = build_context_tree(&s, &cfg)?;
    let tree = fit_vlmc(&s, &cfg)?;
    println!("unpruned {} nodes, pruned {} nodes, depth {}", full.nodes().len(), tree.nodes().len(), tree.depth());

    println!("{:<12} {:>6} {:>8}  next-state distribution", "context", "n", "lambda");
    for node in tree.nodes().into_iter().filter(|n| n.depth() <= 2) {
        let name = if node.context.is_empty() { "root".to_string() } else { format_context(&node.context) };
        println!("{name:<12} {:>6} {:>8.2}  {:.3?}", node.count, node.lambda, node.probs);
    }

    println!("generator vs fitted:");
    for (ctx, p) in generator() {
        let q = predict_next(&tree, &ctx);
        let name = if ctx.is_empty() { "root".to_string() } else { format_context(&ctx) };
        println!("  {name:<6} TV {:.3}", total_variation(&p, &q));
    }
    Ok(())
}
