#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Weekdays from `start_year` through `end_year`.
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

/// Price CSV with calm returns and volatility bursts in `crisis_years`.
pub fn synthetic_prices(seed: u64, start_year: i32, end_year: i32, crisis_years: &[i32]) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = String::from("Date,Open,Close\n");
    let mut price = 1000.0;
    for d in business_days(start_year, end_year) {
        let burst = crisis_years.contains(&d.year()) && (d.month() == 9 || d.month() == 10);
        let vol = if burst { 0.05 } else { 0.008 + 0.004 * rng.random::<f64>() };
        let z: f64 = StandardNormal.sample(&mut rng);
        price *= (vol * z).exp();
        let _ = writeln!(csv, "{d},{price:.4},{price:.6}");
    }
    csv
}

/// Writes `<dir>/<ticker>.csv` for each ticker and returns a config pointing at it.
pub fn write_dataset(dir: &Path, tickers: &[(&str, &str)]) -> String {
    let data = dir.join("data");
    std::fs::create_dir_all(&data).unwrap();
    let mut groups: Vec<(&str, Vec<&str>)> = Vec::new();
    for (i, (group, ticker)) in tickers.iter().enumerate() {
        let crises: &[i32] = if i % 2 == 0 { &[2003, 2007] } else { &[2003, 2006] };
        std::fs::write(data.join(format!("{ticker}.csv")), synthetic_prices(100 + i as u64, 2002, 2008, crises))
            .unwrap();
        match groups.iter_mut().find(|(g, _)| g == group) {
            Some((_, v)) => v.push(ticker),
            None => groups.push((group, vec![ticker])),
        }
    }
    let mut cfg = String::from("data_dir = \"data\"\noutput_dir = \"out\"\n\n[tickers]\n");
    for (g, list) in groups {
        let names: Vec<String> = list.iter().map(|t| format!("{t:?}")).collect();
        let _ = writeln!(cfg, "{g} = [{}]", names.join(", "));
    }
    cfg.push_str("\n[years]\nmin_tree_count = 1\n");
    cfg
}
