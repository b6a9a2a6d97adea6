//! Deterministic synthetic inputs shared by the examples.
#![allow(dead_code)]

use std::fmt::Write;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Monday-to-Friday dates from Jan 1 of `start_year` through Dec 31 of `end_year`.
pub fn business_days(start_year: i32, end_year: i32) -> Vec<NaiveDate> {
    let mut d = NaiveDate::from_ymd_opt(start_year, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(end_year, 12, 31).unwrap();
    let mut out = Vec::new();
    while d <= end {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().unwrap();
    }
    out
}

/// Daily log returns: calm Gaussian noise with a volatility burst over Sep-Oct of each
/// year in `crisis_years`.
pub fn regime_returns(seed: u64, dates: &[NaiveDate], crisis_years: &[i32]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dates
        .iter()
        .map(|d| {
            let burst = crisis_years.contains(&d.year()) && (d.month() == 9 || d.month() == 10);
            let vol = if burst { 0.05 } else { 0.008 + 0.004 * rng.random::<f64>() };
            let z: f64 = StandardNormal.sample(&mut rng);
            vol * z
        })
        .collect()
}

/// `Date,Close` CSV text compounding [`regime_returns`] from 1000.
pub fn price_csv(seed: u64, start_year: i32, end_year: i32, crisis_years: &[i32]) -> String {
    let dates = business_days(start_year, end_year);
    let r = regime_returns(seed, &dates, crisis_years);
    let mut csv = String::from("Date,Close\n");
    let mut price = 1000.0;
    for (d, x) in dates.iter().zip(r) {
        price *= x.exp();
        let _ = writeln!(csv, "{d},{price:.6}");
    }
    csv
}

pub fn gaussian(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}
