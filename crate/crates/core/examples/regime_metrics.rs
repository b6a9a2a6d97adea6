//! Context-tree metrics: unconditional tails and entropy, order-1 persistence and
//! reversal, order-k run statistics, and aggregation across trees.
//!
//! `cargo run --release --example regime_metrics`

mod common;

use regimekit::ingest::{compute_quintile_cutoffs, discretize_returns, ReturnSeries};
use regimekit::metrics::{aggregate_contexts, higher_order_metrics, order1_metrics, unconditional_stats};
use regimekit::vlmc::{fit_vlmc, PruneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dates = common::business_days(2006, 2010);
    let cfg = PruneConfig::default();

    // one tree per index, each fit on its own 2008
    let mut trees = Vec::new();
    for seed in 1..=4 {
        let r = ReturnSeries { dates: dates.clone(), r: common::regime_returns(seed, &dates, &[2008]) };
        let q = compute_quintile_cutoffs(&r)?;
        let year = discretize_returns(&r, &q).year(2008);
        let tree = fit_vlmc(&year.states, &cfg)?;
        let u = unconditional_stats(&tree.root.probs);
        println!(
            "index {seed}: {} days, depth {}, p {:.3?}, tail ratio {:.3}, entropy {:.3}",
            year.len(),
            tree.depth(),
            u.p,
            u.tail_ratio,
            u.entropy
        );
        trees.push(tree);
    }

    let agg = aggregate_contexts(&trees, 2)?;
    println!("length-1 and length-2 contexts in at least 2 of {} trees:", agg.n_trees);
    for (name, c) in agg.ordered().into_iter().filter(|(n, _)| n.len() <= 4) {
        println!("  {name:<8} trees {} count {:>4} {:.3?}", c.tree_count, c.count, c.probs);
    }

    let o1 = order1_metrics(&agg);
    println!("M {:.3?}, V1 {:.3}, V2 {:.3}", o1.m, o1.v1, o1.v2);
    for k in 2..=3 {
        let m = higher_order_metrics(&agg, k);
        println!("k = {k}: C {:.3} E {:.3} Z {:.3} B {:.3}", m.c, m.e, m.z, m.b);
    }
    Ok(())
}
