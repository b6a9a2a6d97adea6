//! BDS test on iid noise, a chaotic map and a volatility-clustered series.
//!
//! `cargo run --release --example bds_nonlinearity`

mod common;

use regimekit::bds::{bds_statistic, format_p_value, BdsConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 1500;
    let iid = common::gaussian(1, n);

    let mut logistic = vec![0.3];
    for i in 1..n {
        let v: f64 = logistic[i - 1];
        logistic.push(4.0 * v * (1.0 - v));
    }

    // ARCH(1): uncorrelated but dependent through the variance
    let z = common::gaussian(2, n);
    let mut arch = vec![0.0f64];
    for i in 1..n {
        let var = 0.2 + 0.7 * arch[i - 1].powi(2);
        arch.push(var.sqrt() * z[i]);
    }

    println!("{:<10} {:>2} {:>9} {:>9} {:>8}", "series", "m", "epsilon", "stat", "p");
    for (name, x) in [("iid", &iid), ("logistic", &logistic), ("arch(1)", &arch)] {
        for m in [2, 3] {
            let r = bds_statistic(x, &BdsConfig::with_dimension(m))?;
            println!("{name:<10} {m:>2} {:>9.4} {:>9.3} {:>8}", r.epsilon, r.statistic, format_p_value(r.p_value));
        }
    }
    Ok(())
}
