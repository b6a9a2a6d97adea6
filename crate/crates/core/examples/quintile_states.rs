//! Closing prices to log returns to the five quintile states.
//!
//! `cargo run --example quintile_states`

mod common;

use regimekit::ingest::{compute_log_returns, compute_quintile_cutoffs, discretize_returns, read_prices};
use regimekit::State;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let csv = common::price_csv(7, 2015, 2019, &[2018]);
    let prices = read_prices(csv.as_bytes(), "SYN")?;
    let returns = compute_log_returns(&prices)?;
    let cutoffs = compute_quintile_cutoffs(&returns)?;
    let states = discretize_returns(&returns, &cutoffs);

    println!("{} prices, {} returns", prices.len(), returns.len());
    println!("cutoffs: {:?}", cutoffs);
    for s in State::ALL {
        let n = states.states.iter().filter(|&&x| x == s).count();
        println!("{s:?}: {n:5} ({:.3})", n as f64 / states.len() as f64);
    }

    // tails crowd into the burst year
    for year in 2017..=2018 {
        let y = states.year(year);
        let tails = y.states.iter().filter(|s| matches!(s, State::R1 | State::R5)).count();
        println!("{year}: tail share {:.3} over {} days", tails as f64 / y.len() as f64, y.len());
    }

    let mut out = Vec::new();
    states.write_csv(&mut out)?;
    println!("states.csv starts:\n{}", String::from_utf8(out)?.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
