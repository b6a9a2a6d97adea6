mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use regimekit::pipeline::{
    build_report, export_reports, run_pipeline, PipelineConfig, PipelineError, ReportFormat, RunManifest, Stage,
    MANIFEST_FILE,
};

fn setup(dir: &Path, tickers: &[(&str, &str)]) -> std::path::PathBuf {
    let cfg = common::write_dataset(dir, tickers);
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg).unwrap();
    path
}

fn load(path: &Path, out: &str) -> (PipelineConfig, String) {
    let (mut cfg, sha) = PipelineConfig::load(path).unwrap();
    cfg.output_dir = path.parent().unwrap().join(out);
    (cfg, sha)
}

/// Relative path to bytes for every file under `root` except the manifest.
fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != MANIFEST_FILE {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn empty_stage_set_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, sha) = load(&setup(dir.path(), &[("developed", "AAA")]), "out");
    let m = run_pipeline(&cfg, &sha, &[]).unwrap();
    assert!(m.files.is_empty() && m.stages.is_empty());
    assert!(cfg.output_dir.join(MANIFEST_FILE).exists());
    assert!(tree(&cfg.output_dir).is_empty());
}

#[test]
fn single_stage_single_ticker() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, sha) = load(&setup(dir.path(), &[("developed", "AAA")]), "out");
    let m = run_pipeline(&cfg, &sha, &[Stage::Regimes]).unwrap();
    let labels: Vec<_> = m.files.iter().filter(|f| f.path.ends_with(".labels.csv")).collect();
    assert_eq!(labels.len(), 1);
    assert_eq!(labels[0].path, "regimes/AAA.labels.csv");
    assert!(m.files.iter().all(|f| f.path.starts_with("regimes/")));
    let text = std::fs::read_to_string(cfg.output_dir.join("regimes/AAA.labels.csv")).unwrap();
    assert!(text.starts_with("date,energy,label\n"));
    m.verify(&cfg.output_dir).unwrap();
}

#[test]
fn full_run_matches_stage_by_stage_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = setup(dir.path(), &[("developed", "AAA"), ("developed", "BBB")]);
    let (all, sha) = load(&path, "all");
    let m = run_pipeline(&all, &sha, &Stage::ALL).unwrap();
    assert_eq!(m.stages.len(), Stage::ALL.len());
    for stage in Stage::ANALYSIS {
        assert!(m.files_under(stage).next().is_some(), "{stage} wrote nothing");
    }

    let (steps, _) = load(&path, "steps");
    for stage in Stage::ALL {
        run_pipeline(&steps, &sha, &[stage]).unwrap();
    }
    let a = tree(&all.output_dir);
    assert_eq!(a, tree(&steps.output_dir));

    run_pipeline(&all, &sha, &Stage::ALL).unwrap();
    assert_eq!(a, tree(&all.output_dir));
    let again = RunManifest::load(&all.output_dir).unwrap();
    assert_eq!(again.files, m.files);
}

#[test]
fn report_formats_agree_and_survive_a_copy() {
    let dir = tempfile::tempdir().unwrap();
    let path = setup(dir.path(), &[("developed", "AAA"), ("developing", "BBB")]);
    let (cfg, sha) = load(&path, "out");
    let m = run_pipeline(&cfg, &sha, &Stage::ANALYSIS).unwrap();

    let report = build_report(&cfg.output_dir, &m).unwrap();
    for name in [
        "bds",
        "regime_years",
        "representative_years",
        "pame",
        "pame_means",
        "unconditional",
        "order1",
        "orderk",
        "sensitivity",
    ] {
        assert!(report.table(name).is_some(), "missing table {name}");
    }
    let json_files = export_reports(&cfg.output_dir, &m, ReportFormat::Json).unwrap();
    let csv_files = export_reports(&cfg.output_dir, &m, ReportFormat::Csv).unwrap();
    assert_eq!(json_files.len(), 1);
    assert_eq!(csv_files.len(), report.tables.len() + 1);

    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(cfg.output_dir.join("report/report.json")).unwrap()).unwrap();
    for t in &report.tables {
        let csv = std::fs::read(cfg.output_dir.join(format!("report/{}.csv", t.name))).unwrap();
        let mut rd = csv::Reader::from_reader(csv.as_slice());
        let rows = json[&t.name]["rows"].as_array().unwrap();
        let records: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
        assert_eq!(records.len(), rows.len(), "{}", t.name);
        for (rec, row) in records.iter().zip(rows) {
            for (c, v) in rec.iter().zip(row.as_array().unwrap()) {
                match v {
                    serde_json::Value::Number(n) => assert_eq!(c.parse::<f64>().unwrap(), n.as_f64().unwrap()),
                    serde_json::Value::String(s) => assert_eq!(c, s),
                    other => panic!("unexpected {other}"),
                }
            }
        }
    }

    // regenerate from a copied tree
    let copy = dir.path().join("copy");
    for (rel, bytes) in tree(&cfg.output_dir) {
        let p = copy.join(&rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, bytes).unwrap();
    }
    let copied_manifest = m.clone();
    let a = export_reports(&copy, &copied_manifest, ReportFormat::Csv).unwrap();
    assert_eq!(a, csv_files);
    let b = export_reports(&copy, &copied_manifest, ReportFormat::Json).unwrap();
    assert_eq!(b, json_files);
}

#[test]
fn stage_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = setup(dir.path(), &[("developed", "AAA")]);
    let (mut cfg, sha) = load(&path, "out");

    let e = run_pipeline(&cfg, &sha, &[Stage::Hhsa]).unwrap_err();
    assert!(matches!(e, PipelineError::MissingStageOutput(_)), "{e}");
    assert_eq!(e.exit_code(), 4);

    cfg.tickers.get_mut("developed").unwrap().push("ZZZ".into());
    let e = run_pipeline(&cfg, &sha, &[Stage::Bds]).unwrap_err();
    assert!(matches!(&e, PipelineError::MissingInput(t) if t == "ZZZ"), "{e}");
    assert_eq!(e.exit_code(), 3);

    std::fs::write(dir.path().join("data/ZZZ.csv"), "Date,Close\n2020-01-02,abc\n").unwrap();
    let e = run_pipeline(&cfg, &sha, &[Stage::Bds]).unwrap_err();
    assert_eq!(e.exit_code(), 3, "{e}");

    cfg.thresholds.a = 9.0;
    assert_eq!(run_pipeline(&cfg, &sha, &[]).unwrap_err().exit_code(), 2);
}

#[test]
fn report_detects_tampered_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, sha) = load(&setup(dir.path(), &[("developed", "AAA")]), "out");
    let m = run_pipeline(&cfg, &sha, &[Stage::Bds]).unwrap();
    std::fs::write(cfg.output_dir.join("bds/bds.csv"), "ticker,m,epsilon,statistic,p_value\n").unwrap();
    assert!(matches!(build_report(&cfg.output_dir, &m), Err(PipelineError::MissingStageOutput(_))));
}

#[test]
fn cli_subcommands_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = setup(dir.path(), &[("developed", "AAA"), ("developed", "BBB")]);
    let bin = env!("CARGO_BIN_EXE_regimekit");
    let run = |args: &[&str]| Command::new(bin).args(args).env_remove("REGIMEKIT_OUTPUT_DIR").output().unwrap();
    let cfg = path.to_str().unwrap();
    let out = dir.path().join("cli");
    let out_s = out.to_str().unwrap();
    for sub in ["ingest", "bds", "regimes", "sensitivity", "hhsa", "vlmc", "metrics", "report"] {
        let o = run(&[sub, "--config", cfg, "--out", out_s, "--tickers", "AAA,BBB"]);
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(&["report", "--config", cfg, "--out", out_s, "--format", "json"]);
    assert!(o.status.success());
    assert!(out.join("report/report.json").exists() && out.join("report/pame.csv").exists());

    let o = run(&["run", "--config", cfg, "--out", dir.path().join("r").to_str().unwrap(), "--stage", "ingest,bds"]);
    assert!(o.status.success());
    let m = RunManifest::load(&dir.path().join("r")).unwrap();
    assert_eq!(m.stages.iter().map(|s| s.stage).collect::<Vec<_>>(), vec![Stage::Ingest, Stage::Bds]);

    let env_out = dir.path().join("from_env");
    let o = Command::new(bin).args(["bds", "--config", cfg]).env("REGIMEKIT_OUTPUT_DIR", &env_out).output().unwrap();
    assert!(o.status.success());
    assert!(env_out.join("bds/bds.csv").exists());

    assert_eq!(run(&["run", "--config", dir.path().join("nope.toml").to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["bds", "--config", cfg, "--tickers", "QQQ"]).status.code(), Some(2));
    std::fs::remove_file(dir.path().join("data/BBB.csv")).unwrap();
    assert_eq!(run(&["bds", "--config", cfg, "--out", out_s]).status.code(), Some(3));
    let fresh = dir.path().join("fresh");
    assert_eq!(
        run(&["hhsa", "--config", cfg, "--out", fresh.to_str().unwrap(), "--tickers", "AAA"]).status.code(),
        Some(4)
    );
}
