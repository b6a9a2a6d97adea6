//! Instantaneous energy, Normal/High/Extreme labels, regime years, threshold sensitivity
//! and representative years across a small group of indices.
//!
//! `cargo run --release --example energy_regimes`

mod common;

use regimekit::emd::{emd_decompose, SiftOptions};
use regimekit::regimes::{
    classify_regimes, default_grid, instantaneous_energy, regime_years, representative_years, threshold_sensitivity,
    Regime, BASELINE,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dates = common::business_days(2000, 2012);
    let opts = SiftOptions::default();
    let crises: [&[i32]; 3] = [&[2002, 2008], &[2002, 2008, 2011], &[2008, 2011]];

    let mut group = Vec::new();
    for (i, crisis) in crises.iter().enumerate() {
        let r = common::regime_returns(i as u64 + 1, &dates, crisis);
        let d = emd_decompose(&r, &opts)?;
        let e = instantaneous_energy(&dates, &d, &opts)?;
        let labels = classify_regimes(&e, BASELINE.0, BASELINE.1)?;
        let years = regime_years(&labels);
        println!(
            "index {i}: {} IMFs, mu {:.4}, sigma {:.4}, tau1 {:.4}, tau2 {:.4}",
            d.imfs.len(),
            e.mu,
            e.sigma,
            labels.tau1,
            labels.tau2
        );
        println!(
            "  days  Extreme {} High {} Normal {}",
            labels.count(Regime::Extreme),
            labels.count(Regime::High),
            labels.count(Regime::Normal)
        );
        println!("  years Extreme {:?} High {:?}", years.extreme, years.high);

        let report = threshold_sensitivity(&e, &default_grid())?;
        let stable = report.entries.iter().filter(|c| c.extreme.jaccard == 1.0).count();
        println!("  Extreme set unchanged in {stable} of {} grid cells", report.entries.len());
        group.push(years);
    }

    println!("representative years:");
    for (regime, rep) in representative_years(&group, 2) {
        println!("  {regime:<8} {:?} ({:?})", rep.years, rep.source);
    }
    Ok(())
}
