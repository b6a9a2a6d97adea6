//! Stage bodies. Each returns its files and warnings without touching the disk.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::manifest::{Outputs, Warning};
use super::{PipelineError, Stage};
use crate::bds::{bds_statistic, BdsConfig};
use crate::emd::{emd_decompose, fmt_f64, Decomposition, InstantSeries, SiftOptions};
use crate::hhsa::{holo_spectrum, regime_profile, second_layer, HhsaError, RegimeProfile, SpectrumMeta};
use crate::ingest::{
    compute_log_returns, compute_quintile_cutoffs, discretize_returns, load_prices, IngestError, ReturnSeries,
    StateSequence,
};
use crate::metrics::{aggregate_contexts, higher_order_metrics, order1_metrics, unconditional_stats};
use crate::metrics::{Order1Metrics, OrderKMetrics, UnconditionalStats};
use crate::regimes::{
    classify_regimes, energy_from_amplitudes, instantaneous_series, regime_years, representative_years,
    threshold_sensitivity, EnergySeries, Regime, RegimeLabeling, RegimeYears, RepresentativeYears, YearSource,
};
use crate::vlmc::{fit_vlmc, ContextTree, VlmcError};

type StageResult = Result<(Outputs, Vec<Warning>), PipelineError>;

pub(crate) const REGIME_YEARS: &str = "regimes/regime_years.json";
pub(crate) const REPRESENTATIVE_YEARS: &str = "regimes/representative_years.json";
pub(crate) const BDS_CSV: &str = "bds/bds.csv";
pub(crate) const PROFILES_CSV: &str = "hhsa/profiles.csv";
pub(crate) const WINDOWS_CSV: &str = "hhsa/windows.csv";
pub(crate) const VLMC_INDEX: &str = "vlmc/index.json";

/// Group to ticker to regime years.
pub(crate) type GroupYears = BTreeMap<String, BTreeMap<String, RegimeYears>>;
/// Group to regime to representative years.
pub(crate) type GroupRepresentatives = BTreeMap<String, BTreeMap<Regime, RepresentativeYears>>;

fn warn(stage: Stage, ticker: &str, message: String) -> Warning {
    Warning { stage, ticker: Some(ticker.to_string()), message }
}

fn failure(stage: Stage, ticker: &str, cause: impl ToString) -> PipelineError {
    PipelineError::StageFailure { stage, ticker: Some(ticker.to_string()), cause: cause.to_string() }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("stage output serializes");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes<E: ToString>(f: impl FnOnce(&mut Vec<u8>) -> Result<(), E>) -> Result<Vec<u8>, String> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| e.to_string())?;
    Ok(buf)
}

pub(crate) fn read_file(root: &Path, rel: &str) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(root.join(rel)).map_err(|_| PipelineError::MissingStageOutput(rel.to_string()))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(root: &Path, rel: &str) -> Result<T, PipelineError> {
    let bytes = read_file(root, rel)?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::Data { ticker: None, cause: format!("{rel}: {e}") })
}

fn load_returns(cfg: &PipelineConfig, ticker: &str) -> Result<ReturnSeries, PipelineError> {
    let data = |e: IngestError| PipelineError::Data { ticker: Some(ticker.to_string()), cause: e.to_string() };
    let prices = load_prices(cfg.price_path(ticker), ticker).map_err(|e| match e {
        IngestError::FileNotFound(_) => PipelineError::MissingInput(ticker.to_string()),
        e => data(e),
    })?;
    compute_log_returns(&prices).map_err(data)
}

fn load_states(
    cfg: &PipelineConfig,
    ticker: &str,
) -> Result<(ReturnSeries, StateSequence, crate::QuintileCutoffs), PipelineError> {
    let r = load_returns(cfg, ticker)?;
    let q = compute_quintile_cutoffs(&r)
        .map_err(|e| PipelineError::Data { ticker: Some(ticker.to_string()), cause: e.to_string() })?;
    let s = discretize_returns(&r, &q);
    Ok((r, s, q))
}

/// Runs `f` for every ticker in parallel and merges the results in config order.
fn per_ticker<T: Send>(
    cfg: &PipelineConfig,
    f: impl Fn(&str, &str) -> Result<T, PipelineError> + Sync,
) -> Result<Vec<T>, PipelineError> {
    cfg.all_tickers().par_iter().map(|(g, t)| f(g, t)).collect()
}

/// Sample range of the days in `year`; `dates` must be ascending.
pub(crate) fn year_range(dates: &[NaiveDate], year: i32) -> Range<usize> {
    let start = dates.partition_point(|d| d.year() < year);
    let end = dates.partition_point(|d| d.year() <= year);
    start..end
}

pub(crate) fn ingest(cfg: &PipelineConfig) -> StageResult {
    let files = per_ticker(cfg, |_, t| {
        let (r, s, q) = load_states(cfg, t)?;
        let mut out = Outputs::default();
        let returns = csv_bytes(|w| -> csv::Result<()> {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(["date", "return"])?;
            for (d, v) in r.dates.iter().zip(&r.r) {
                wr.write_record([d.to_string(), fmt_f64(*v)])?;
            }
            wr.flush()?;
            Ok(())
        })
        .map_err(|e| failure(Stage::Ingest, t, e))?;
        out.add(format!("ingest/{t}.returns.csv"), returns);
        let states = csv_bytes(|w| s.write_csv(w)).map_err(|e| failure(Stage::Ingest, t, e))?;
        out.add(format!("ingest/{t}.states.csv"), states);
        out.add(format!("ingest/{t}.cutoffs.json"), json_bytes(&q));
        Ok(out)
    })?;
    Ok((merge(files), Vec::new()))
}

fn merge(parts: Vec<Outputs>) -> Outputs {
    let mut out = Outputs::default();
    for p in parts {
        out.extend(p);
    }
    out
}

pub(crate) fn bds(cfg: &PipelineConfig) -> StageResult {
    let rows = per_ticker(cfg, |_, t| {
        let r = load_returns(cfg, t)?;
        cfg.bds
            .dimensions
            .iter()
            .map(|&m| {
                let c = BdsConfig { m, eps_factor: cfg.bds.eps_factor, t_lag: 1 };
                let res = bds_statistic(&r.r, &c).map_err(|e| failure(Stage::Bds, t, e))?;
                Ok([t.to_string(), m.to_string(), fmt_f64(res.epsilon), fmt_f64(res.statistic), fmt_f64(res.p_value)])
            })
            .collect::<Result<Vec<_>, PipelineError>>()
    })?;
    let bytes = csv_bytes(|w| -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["ticker", "m", "epsilon", "statistic", "p_value"])?;
        for row in rows.iter().flatten() {
            wr.write_record(row)?;
        }
        wr.flush()?;
        Ok(())
    })
    .map_err(|e| PipelineError::StageFailure { stage: Stage::Bds, ticker: None, cause: e })?;
    let mut out = Outputs::default();
    out.add(BDS_CSV.into(), bytes);
    Ok((out, Vec::new()))
}

#[derive(Debug, Serialize, Deserialize)]
struct DecompositionSidecar {
    ticker: String,
    samples: usize,
    imfs: usize,
    first_date: Option<NaiveDate>,
    last_date: Option<NaiveDate>,
    options: SiftOptions,
}

fn dq_warnings(stage: Stage, ticker: &str, layer: &str, inst: &[&InstantSeries]) -> Vec<Warning> {
    let clamped: usize = inst.iter().map(|s| s.clamped).sum();
    let unconverged = inst.iter().filter(|s| !s.converged).count();
    let mut w = Vec::new();
    if clamped > 0 {
        w.push(warn(stage, ticker, format!("{layer}: {clamped} negative frequency samples clamped to zero")));
    }
    if unconverged > 0 {
        w.push(warn(stage, ticker, format!("{layer}: normalization did not converge for {unconverged} components")));
    }
    w
}

pub(crate) fn regimes(cfg: &PipelineConfig) -> StageResult {
    let results = per_ticker(cfg, |g, t| {
        let r = load_returns(cfg, t)?;
        let d = emd_decompose(&r.r, &cfg.emd).map_err(|e| failure(Stage::Regimes, t, e))?;
        let inst = instantaneous_series(&d, &cfg.emd).map_err(|e| failure(Stage::Regimes, t, e))?;
        let amps: Vec<&[f64]> = inst.iter().map(|s| s.amplitude.as_slice()).collect();
        let e = energy_from_amplitudes(&r.dates, &amps).map_err(|e| failure(Stage::Regimes, t, e))?;
        let labels =
            classify_regimes(&e, cfg.thresholds.a, cfg.thresholds.b).map_err(|e| failure(Stage::Regimes, t, e))?;
        let years = regime_years(&labels);

        let mut out = Outputs::default();
        out.add(
            format!("regimes/{t}.imfs.csv"),
            csv_bytes(|w| d.write_csv(w)).map_err(|e| failure(Stage::Regimes, t, e))?,
        );
        let sidecar = DecompositionSidecar {
            ticker: t.to_string(),
            samples: d.len(),
            imfs: d.imfs.len(),
            first_date: r.dates.first().copied(),
            last_date: r.dates.last().copied(),
            options: cfg.emd,
        };
        out.add(format!("regimes/{t}.imfs.json"), json_bytes(&sidecar));
        out.add(
            format!("regimes/{t}.labels.csv"),
            csv_bytes(|w| labels.write_csv(w)).map_err(|e| failure(Stage::Regimes, t, e))?,
        );
        let warnings = dq_warnings(Stage::Regimes, t, "first layer", &inst.iter().collect::<Vec<_>>());
        Ok((g.to_string(), t.to_string(), years, out, warnings))
    })?;

    let mut out = Outputs::default();
    let mut warnings = Vec::new();
    let mut by_group: GroupYears = BTreeMap::new();
    for (g, t, years, files, w) in results {
        out.extend(files);
        warnings.extend(w);
        by_group.entry(g).or_default().insert(t, years);
    }
    let mut reps: GroupRepresentatives = BTreeMap::new();
    for (g, members) in &by_group {
        let list: Vec<RegimeYears> = members.values().cloned().collect();
        let mut derived = representative_years(&list, cfg.years.per_regime_count);
        for (regime, ry) in derived.iter_mut() {
            // windows are capped at per_regime_count years, earliest first
            if ry.years.len() > cfg.years.per_regime_count {
                warnings.push(Warning {
                    stage: Stage::Regimes,
                    ticker: None,
                    message: format!(
                        "{g} {regime}: {} common years, keeping the first {}",
                        ry.years.len(),
                        cfg.years.per_regime_count
                    ),
                });
                ry.years.truncate(cfg.years.per_regime_count);
            }
        }
        if let Some(over) = cfg.years.overrides.get(g) {
            for (&regime, years) in over {
                let mut years = years.clone();
                years.sort_unstable();
                years.dedup();
                derived.insert(regime, RepresentativeYears { years, source: YearSource::Configured });
            }
        }
        reps.insert(g.clone(), derived);
    }
    out.add(REGIME_YEARS.into(), json_bytes(&by_group));
    out.add(REPRESENTATIVE_YEARS.into(), json_bytes(&reps));
    Ok((out, warnings))
}

fn read_labels(root: &Path, ticker: &str) -> Result<RegimeLabeling, PipelineError> {
    let rel = format!("regimes/{ticker}.labels.csv");
    RegimeLabeling::read_csv(read_file(root, &rel)?.as_slice())
        .map_err(|e| PipelineError::Data { ticker: Some(ticker.to_string()), cause: format!("{rel}: {e}") })
}

pub(crate) fn sensitivity(cfg: &PipelineConfig, root: &Path) -> StageResult {
    let cells = cfg.sensitivity.cells();
    let files = per_ticker(cfg, |_, t| {
        let l = read_labels(root, t)?;
        let e = EnergySeries::from_normalized(l.dates, l.energy);
        let rep = threshold_sensitivity(&e, &cells).map_err(|e| failure(Stage::Sensitivity, t, e))?;
        Ok((format!("sensitivity/{t}.json"), json_bytes(&rep)))
    })?;
    let mut out = Outputs::default();
    for (p, b) in files {
        out.add(p, b);
    }
    Ok((out, Vec::new()))
}

fn group_of<'a>(
    reps: &'a GroupRepresentatives,
    group: &str,
) -> Result<&'a BTreeMap<Regime, RepresentativeYears>, PipelineError> {
    reps.get(group)
        .ok_or_else(|| PipelineError::MissingStageOutput(format!("{REPRESENTATIVE_YEARS} has no group {group}")))
}

/// Distinct representative years of a group with the regimes they stand for.
fn years_with_regimes(reps: &BTreeMap<Regime, RepresentativeYears>) -> BTreeMap<i32, Vec<Regime>> {
    let mut m: BTreeMap<i32, Vec<Regime>> = BTreeMap::new();
    for (&r, ry) in reps {
        for &y in &ry.years {
            m.entry(y).or_default().push(r);
        }
    }
    m
}

#[derive(Debug, Serialize, Deserialize)]
struct SpectrumSidecar {
    ticker: String,
    year: i32,
    regimes: Vec<Regime>,
    first_date: NaiveDate,
    last_date: NaiveDate,
    #[serde(flatten)]
    meta: SpectrumMeta,
}

pub(crate) fn hhsa(cfg: &PipelineConfig, root: &Path) -> StageResult {
    let reps: GroupRepresentatives = read_json(root, REPRESENTATIVE_YEARS)?;
    let own: GroupYears = read_json(root, REGIME_YEARS)?;
    let opts = cfg.hhsa_options();
    let results = per_ticker(cfg, |g, t| {
        let group = group_of(&reps, g)?;
        let mine = own.get(g).and_then(|m| m.get(t)).cloned().unwrap_or_default();
        let rel = format!("regimes/{t}.imfs.csv");
        let d = Decomposition::read_csv(read_file(root, &rel)?.as_slice())
            .map_err(|e| PipelineError::Data { ticker: Some(t.to_string()), cause: format!("{rel}: {e}") })?;
        let dates = read_labels(root, t)?.dates;
        if dates.len() != d.len() {
            return Err(PipelineError::Data {
                ticker: Some(t.to_string()),
                cause: format!("{} labeled days but {} decomposition samples", dates.len(), d.len()),
            });
        }
        let first = instantaneous_series(&d, &opts.sift).map_err(|e| failure(Stage::Hhsa, t, e))?;
        let sl = second_layer(&d, &opts).map_err(|e| failure(Stage::Hhsa, t, e))?;

        let mut warnings = Vec::new();
        let fallbacks = sl.components.iter().filter(|c| c.flat_fallback).count();
        if fallbacks > 0 {
            warnings.push(warn(Stage::Hhsa, t, format!("{fallbacks} IMF envelopes used the constant fallback")));
        }
        let modes: Vec<&InstantSeries> = sl.components.iter().flat_map(|c| c.modes.iter().map(|m| &m.inst)).collect();
        warnings.extend(dq_warnings(Stage::Hhsa, t, "second layer", &modes));

        let mut out = Outputs::default();
        let mut windows: BTreeMap<i32, Option<RegimeProfile>> = BTreeMap::new();
        for (year, regimes) in years_with_regimes(group) {
            let range = year_range(&dates, year);
            if range.is_empty() {
                warnings.push(warn(Stage::Hhsa, t, format!("no trading days in {year}")));
                continue;
            }
            let h = holo_spectrum(&sl, &first, range.clone(), opts.bins).map_err(|e| failure(Stage::Hhsa, t, e))?;
            let csv = csv_bytes(|w| h.write_csv(w)).map_err(|e| failure(Stage::Hhsa, t, e))?;
            out.add(format!("hhsa/{t}_{year}.spectrum.csv"), csv);
            let side = SpectrumSidecar {
                ticker: t.to_string(),
                year,
                regimes,
                first_date: dates[range.start],
                last_date: dates[range.end - 1],
                meta: h.meta(),
            };
            out.add(format!("hhsa/{t}_{year}.spectrum.json"), json_bytes(&side));
            match regime_profile(&h, &sl, &first) {
                Ok(p) => {
                    windows.insert(year, Some(p));
                }
                Err(HhsaError::ZeroEnergy) => {
                    warnings.push(warn(Stage::Hhsa, t, format!("zero modulation energy in {year}")));
                    windows.insert(year, None);
                }
                Err(e) => return Err(failure(Stage::Hhsa, t, e)),
            }
        }

        let mut window_rows = Vec::new();
        let mut profile_rows = Vec::new();
        for (&regime, ry) in group {
            for &y in &ry.years {
                if let Some(Some(p)) = windows.get(&y) {
                    window_rows.push(profile_row(t, regime, Some(y), p));
                }
            }
            // the index's own year for this regime when it has one, else the first listed
            let own_year = ry.years.iter().copied().find(|y| mine.get(regime).contains(y));
            let year = own_year.or_else(|| ry.years.first().copied());
            if own_year.is_none() {
                if let Some(y) = year {
                    warnings.push(warn(
                        Stage::Hhsa,
                        t,
                        format!("{regime} profile uses {y}, not a {regime} year of this index"),
                    ));
                }
            }
            if let Some(Some(p)) = year.and_then(|y| windows.get(&y)) {
                profile_rows.push(profile_row(t, regime, None, p));
            }
        }
        Ok((out, warnings, window_rows, profile_rows))
    })?;

    let mut out = Outputs::default();
    let mut warnings = Vec::new();
    let mut window_rows = Vec::new();
    let mut profile_rows = Vec::new();
    for (files, w, wr, pr) in results {
        out.extend(files);
        warnings.extend(w);
        window_rows.extend(wr);
        profile_rows.extend(pr);
    }
    let table = |header: &[&str], rows: &[Vec<String>]| {
        csv_bytes(|w| -> csv::Result<()> {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(header)?;
            for r in rows {
                wr.write_record(r)?;
            }
            wr.flush()?;
            Ok(())
        })
        .map_err(|e| PipelineError::StageFailure { stage: Stage::Hhsa, ticker: None, cause: e })
    };
    out.add(WINDOWS_CSV.into(), table(&["ticker", "regime", "year", "pame", "wc95", "wam95"], &window_rows)?);
    out.add(PROFILES_CSV.into(), table(&["ticker", "regime", "pame", "wc95", "wam95"], &profile_rows)?);
    Ok((out, warnings))
}

fn profile_row(ticker: &str, regime: Regime, year: Option<i32>, p: &RegimeProfile) -> Vec<String> {
    let mut row = vec![ticker.to_string(), regime.to_string()];
    if let Some(y) = year {
        row.push(y.to_string());
    }
    row.extend([fmt_f64(p.pame), fmt_f64(p.wc95), fmt_f64(p.wam95)]);
    row
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub(crate) struct TreeEntry {
    pub group: String,
    pub ticker: String,
    pub year: i32,
    pub regimes: Vec<Regime>,
    pub path: String,
}

pub(crate) fn vlmc(cfg: &PipelineConfig, root: &Path) -> StageResult {
    let reps: GroupRepresentatives = read_json(root, REPRESENTATIVE_YEARS)?;
    let results = per_ticker(cfg, |g, t| {
        let group = group_of(&reps, g)?;
        let (_, s, _) = load_states(cfg, t)?;
        let mut out = Outputs::default();
        let mut entries = Vec::new();
        let mut warnings = Vec::new();
        for (year, regimes) in years_with_regimes(group) {
            let seq = s.year(year);
            match fit_vlmc(&seq.states, &cfg.prune) {
                Ok(tree) => {
                    let path = format!("vlmc/{t}_{year}.tree.json");
                    let mut json = tree.to_json();
                    json.push('\n');
                    out.add(path.clone(), json.into_bytes());
                    entries.push(TreeEntry { group: g.to_string(), ticker: t.to_string(), year, regimes, path });
                }
                Err(VlmcError::SequenceTooShort { len, .. }) => {
                    warnings.push(warn(Stage::Vlmc, t, format!("{year} has {len} days, too few for a tree")));
                }
                Err(e) => return Err(failure(Stage::Vlmc, t, e)),
            }
        }
        Ok((out, entries, warnings))
    })?;
    let mut out = Outputs::default();
    let mut index = Vec::new();
    let mut warnings = Vec::new();
    for (files, e, w) in results {
        out.extend(files);
        index.extend(e);
        warnings.extend(w);
    }
    out.add(VLMC_INDEX.into(), json_bytes(&index));
    Ok((out, warnings))
}

/// Group-level metrics for one regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub group: String,
    pub regime: Regime,
    /// `ticker:year` of each aggregated tree.
    pub trees: Vec<String>,
    /// Statistics of the mean root distribution.
    pub unconditional: UnconditionalStats,
    pub order1: Order1Metrics,
    pub order2: Option<OrderKMetrics>,
    pub order3: Option<OrderKMetrics>,
}

pub(crate) fn metrics(cfg: &PipelineConfig, root: &Path) -> StageResult {
    let index: Vec<TreeEntry> = read_json(root, VLMC_INDEX)?;
    let mut groups: BTreeMap<(String, Regime), Vec<&TreeEntry>> = BTreeMap::new();
    let wanted: BTreeSet<&str> = cfg.all_tickers().into_iter().map(|(_, t)| t).collect();
    for e in index.iter().filter(|e| wanted.contains(e.ticker.as_str())) {
        for &r in &e.regimes {
            groups.entry((e.group.clone(), r)).or_default().push(e);
        }
    }
    let mut out = Outputs::default();
    let mut warnings = Vec::new();
    for ((group, regime), entries) in groups {
        let trees = entries
            .iter()
            .map(|e| {
                let bytes = read_file(root, &e.path)?;
                let text = String::from_utf8_lossy(&bytes);
                ContextTree::from_json(&text).map_err(|err| PipelineError::Data {
                    ticker: Some(e.ticker.clone()),
                    cause: format!("{}: {err}", e.path),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let agg = aggregate_contexts(&trees, cfg.years.min_tree_count).map_err(|e| PipelineError::StageFailure {
            stage: Stage::Metrics,
            ticker: None,
            cause: e.to_string(),
        })?;
        if agg.contexts.is_empty() {
            warnings.push(Warning {
                stage: Stage::Metrics,
                ticker: None,
                message: format!("{group} {regime}: no context reaches {} trees", cfg.years.min_tree_count),
            });
        }
        let depth = cfg.prune.max_depth;
        let report = MetricsReport {
            group: group.clone(),
            regime,
            trees: entries.iter().map(|e| format!("{}:{}", e.ticker, e.year)).collect(),
            unconditional: unconditional_stats(&agg.mean_root),
            order1: order1_metrics(&agg),
            order2: (depth >= 2).then(|| higher_order_metrics(&agg, 2)),
            order3: (depth >= 3).then(|| higher_order_metrics(&agg, 3)),
        };
        out.add(format!("metrics/{group}_{regime}.json"), json_bytes(&report));
        let csv = csv_bytes(|w| agg.write_csv(w)).map_err(|e| PipelineError::StageFailure {
            stage: Stage::Metrics,
            ticker: None,
            cause: e,
        })?;
        out.add(format!("metrics/{group}_{regime}.contexts.csv"), csv);
    }
    Ok((out, warnings))
}
