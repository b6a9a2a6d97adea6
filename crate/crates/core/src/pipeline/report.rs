//! Consolidated group-level tables built from stage outputs.
//!
//! The CSV export writes one file per table plus `tables.md`, a human-readable copy
//! rounded to three decimals. The JSON export writes every table into `report.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use super::manifest::{FileRecord, Outputs, RunManifest};
use super::stages::{
    read_file, read_json, GroupRepresentatives, GroupYears, MetricsReport, BDS_CSV, PROFILES_CSV, REGIME_YEARS,
    REPRESENTATIVE_YEARS,
};
use super::{PipelineError, Stage};
use crate::emd::fmt_f64;
use crate::metrics::OrderKMetrics;
use crate::regimes::{Regime, SensitivityReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(f64),
}

impl Cell {
    /// Machine form: 17 significant digits for numbers, `inf`/`nan` for non-finite ones.
    pub fn machine(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) if v.is_finite() => fmt_f64(*v),
            Cell::Num(v) => non_finite(*v).to_string(),
        }
    }

    fn human(&self, scale: f64) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{:.3}", v * scale),
            other => other.machine(),
        }
    }
}

fn non_finite(v: f64) -> &'static str {
    if v.is_nan() {
        "nan"
    } else if v > 0.0 {
        "inf"
    } else {
        "-inf"
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Text(t) => s.serialize_str(t),
            Cell::Int(i) => s.serialize_i64(*i),
            Cell::Num(v) if v.is_finite() => s.serialize_f64(*v),
            Cell::Num(v) => s.serialize_str(non_finite(*v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Multipliers applied to numeric columns in the human-readable copy only.
    #[serde(skip)]
    pub human_scale: Vec<f64>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            human_scale: vec![1.0; columns.len()],
        }
    }

    fn scaled(mut self, column: &str, scale: f64) -> Self {
        if let Some(i) = self.columns.iter().position(|c| c == column) {
            self.human_scale[i] = scale;
        }
        self
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut wr = csv::Writer::from_writer(Vec::new());
        wr.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            wr.write_record(r.iter().map(Cell::machine)).expect("in-memory write");
        }
        wr.into_inner().expect("in-memory flush")
    }

    fn to_markdown(&self, out: &mut String) {
        let header: Vec<String> = self
            .columns
            .iter()
            .zip(&self.human_scale)
            .map(|(c, &s)| if s == 1.0 { c.clone() } else { format!("{c} (x{s:e})") })
            .collect();
        let _ = writeln!(out, "## {}\n", self.name);
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let _ = writeln!(out, "|{}|", vec!["---"; header.len()].join("|"));
        for r in &self.rows {
            let cells: Vec<String> = r.iter().zip(&self.human_scale).map(|(c, &s)| c.human(s)).collect();
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        out.push('\n');
    }
}

/// Tables in a fixed order; absent stages contribute no table.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        struct Tables<'a>(&'a [Table]);
        impl Serialize for Tables<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.len()))?;
                for t in self.0 {
                    m.serialize_entry(&t.name, &TableBody(t))?;
                }
                m.end()
            }
        }
        struct TableBody<'a>(&'a Table);
        impl Serialize for TableBody<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(2))?;
                m.serialize_entry("columns", &self.0.columns)?;
                m.serialize_entry("rows", &self.0.rows)?;
                m.end()
            }
        }
        let mut s = serde_json::to_string_pretty(&Tables(&self.tables)).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Regime report\n\n");
        for t in &self.tables {
            t.to_markdown(&mut out);
        }
        out
    }
}

fn has(manifest: &RunManifest, rel: &str) -> bool {
    manifest.files.iter().any(|f| f.path == rel)
}

fn text(s: impl ToString) -> Cell {
    Cell::Text(s.to_string())
}

fn years_cell<'a>(ys: impl IntoIterator<Item = &'a i32>) -> Cell {
    Cell::Text(ys.into_iter().map(|y| y.to_string()).collect::<Vec<_>>().join(" "))
}

fn parse_num(rel: &str, s: &str) -> Result<f64, PipelineError> {
    s.parse().map_err(|_| PipelineError::Data { ticker: None, cause: format!("{rel}: bad number {s:?}") })
}

fn read_rows(root: &Path, rel: &str) -> Result<Vec<Vec<String>>, PipelineError> {
    let bytes = read_file(root, rel)?;
    let mut rd = csv::Reader::from_reader(bytes.as_slice());
    rd.records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_string).collect())
                .map_err(|e| PipelineError::Data { ticker: None, cause: format!("{rel}: {e}") })
        })
        .collect()
}

/// Builds every table whose inputs the manifest lists.
pub fn build_report(root: &Path, manifest: &RunManifest) -> Result<Report, PipelineError> {
    manifest.verify(root)?;
    let mut tables = Vec::new();

    let groups: Option<GroupYears> =
        if has(manifest, REGIME_YEARS) { Some(read_json(root, REGIME_YEARS)?) } else { None };
    let group_of = |ticker: &str| -> String {
        groups
            .as_ref()
            .and_then(|g| g.iter().find(|(_, m)| m.contains_key(ticker)).map(|(g, _)| g.clone()))
            .unwrap_or_default()
    };

    if has(manifest, BDS_CSV) {
        let mut t = Table::new("bds", &["group", "ticker", "m", "epsilon", "statistic", "p_value"]);
        for r in read_rows(root, BDS_CSV)? {
            t.rows.push(vec![
                text(group_of(&r[0])),
                text(&r[0]),
                Cell::Int(parse_num(BDS_CSV, &r[1])? as i64),
                Cell::Num(parse_num(BDS_CSV, &r[2])?),
                Cell::Num(parse_num(BDS_CSV, &r[3])?),
                Cell::Num(parse_num(BDS_CSV, &r[4])?),
            ]);
        }
        tables.push(t);
    }

    if let Some(g) = &groups {
        let mut t = Table::new("regime_years", &["group", "ticker", "extreme", "high", "normal"]);
        for (group, members) in g {
            for (ticker, y) in members {
                t.rows.push(vec![
                    text(group),
                    text(ticker),
                    years_cell(&y.extreme),
                    years_cell(&y.high),
                    years_cell(&y.normal),
                ]);
            }
        }
        tables.push(t);
    }

    if has(manifest, REPRESENTATIVE_YEARS) {
        let reps: GroupRepresentatives = read_json(root, REPRESENTATIVE_YEARS)?;
        let mut t = Table::new("representative_years", &["group", "regime", "years", "source"]);
        for (group, m) in &reps {
            for r in Regime::BY_SEVERITY {
                if let Some(ry) = m.get(&r) {
                    let source = serde_json::to_value(ry.source).expect("source serializes");
                    t.rows.push(vec![
                        text(group),
                        text(r),
                        years_cell(&ry.years),
                        text(source.as_str().unwrap_or_default()),
                    ]);
                }
            }
        }
        tables.push(t);
    }

    if has(manifest, PROFILES_CSV) {
        let mut t = Table::new("pame", &["group", "ticker", "regime", "pame", "wc95", "wam95"]).scaled("pame", 1e5);
        let mut sums: BTreeMap<(String, Regime), (usize, [f64; 3])> = BTreeMap::new();
        for r in read_rows(root, PROFILES_CSV)? {
            let group = group_of(&r[0]);
            let regime: Regime = r[1].parse().map_err(|e: String| PipelineError::Data { ticker: None, cause: e })?;
            let v = [parse_num(PROFILES_CSV, &r[2])?, parse_num(PROFILES_CSV, &r[3])?, parse_num(PROFILES_CSV, &r[4])?];
            let e = sums.entry((group.clone(), regime)).or_insert((0, [0.0; 3]));
            e.0 += 1;
            for (s, x) in e.1.iter_mut().zip(v) {
                *s += x;
            }
            t.rows.push(vec![
                text(group),
                text(&r[0]),
                text(regime),
                Cell::Num(v[0]),
                Cell::Num(v[1]),
                Cell::Num(v[2]),
            ]);
        }
        tables.push(t);
        let mut m =
            Table::new("pame_means", &["group", "regime", "indices", "pame", "wc95", "wam95"]).scaled("pame", 1e5);
        for group in sums.keys().map(|k| k.0.clone()).collect::<std::collections::BTreeSet<_>>() {
            for r in Regime::BY_SEVERITY {
                if let Some((n, s)) = sums.get(&(group.clone(), r)) {
                    let k = *n as f64;
                    m.rows.push(vec![
                        text(&group),
                        text(r),
                        Cell::Int(*n as i64),
                        Cell::Num(s[0] / k),
                        Cell::Num(s[1] / k),
                        Cell::Num(s[2] / k),
                    ]);
                }
            }
        }
        tables.push(m);
    }

    let metric_files: Vec<&FileRecord> =
        manifest.files_under(Stage::Metrics).filter(|f| f.path.ends_with(".json")).collect();
    if !metric_files.is_empty() {
        let mut reports: Vec<MetricsReport> =
            metric_files.iter().map(|f| read_json(root, &f.path)).collect::<Result<_, _>>()?;
        reports.sort_by(|a, b| a.group.cmp(&b.group).then(b.regime.cmp(&a.regime)));
        let mut u = Table::new(
            "unconditional",
            &["group", "regime", "trees", "p1", "p2", "p3", "p4", "p5", "tail_ratio", "entropy"],
        );
        let mut o1 = Table::new("order1", &["group", "regime", "m1", "m2", "m3", "m4", "m5", "v1", "v2"]);
        let mut ok = Table::new("orderk", &["group", "regime", "k", "c", "e", "z", "b"]);
        for r in &reports {
            let mut row = vec![text(&r.group), text(r.regime), Cell::Int(r.trees.len() as i64)];
            row.extend(r.unconditional.p.iter().map(|&v| Cell::Num(v)));
            row.extend([Cell::Num(r.unconditional.tail_ratio), Cell::Num(r.unconditional.entropy)]);
            u.rows.push(row);
            let mut row = vec![text(&r.group), text(r.regime)];
            row.extend(r.order1.m.iter().map(|&v| Cell::Num(v)));
            row.extend([Cell::Num(r.order1.v1), Cell::Num(r.order1.v2)]);
            o1.rows.push(row);
            for m in [&r.order2, &r.order3].into_iter().flatten() {
                let OrderKMetrics { k, c, e, z, b } = m;
                ok.rows.push(vec![
                    text(&r.group),
                    text(r.regime),
                    Cell::Int(*k as i64),
                    Cell::Num(*c),
                    Cell::Num(*e),
                    Cell::Num(*z),
                    Cell::Num(*b),
                ]);
            }
        }
        tables.extend([u, o1, ok]);
    }

    let sens_files: Vec<&FileRecord> = manifest.files_under(Stage::Sensitivity).collect();
    if !sens_files.is_empty() {
        let mut t = Table::new("sensitivity", &["group", "ticker", "a", "b", "regime", "years", "jaccard"]);
        for f in sens_files {
            let ticker = f.path.trim_start_matches("sensitivity/").trim_end_matches(".json");
            let rep: SensitivityReport = read_json(root, &f.path)?;
            for e in &rep.entries {
                for r in Regime::BY_SEVERITY {
                    let c = e.get(r);
                    t.rows.push(vec![
                        text(group_of(ticker)),
                        text(ticker),
                        Cell::Num(e.a),
                        Cell::Num(e.b),
                        text(r),
                        years_cell(&c.years),
                        Cell::Num(c.jaccard),
                    ]);
                }
            }
        }
        tables.push(t);
    }
    Ok(Report { tables })
}

/// Writes the report under `<root>/report/` and returns the files written.
pub fn export_reports(
    root: &Path,
    manifest: &RunManifest,
    format: ReportFormat,
) -> Result<Vec<FileRecord>, PipelineError> {
    let report = build_report(root, manifest)?;
    let mut out = Outputs::default();
    match format {
        ReportFormat::Json => out.add("report/report.json".into(), report.to_json().into_bytes()),
        ReportFormat::Csv => {
            for t in &report.tables {
                out.add(format!("report/{}.csv", t.name), t.to_csv());
            }
            out.add("report/tables.md".into(), report.to_markdown().into_bytes());
        }
    }
    out.write(root)
}
