//! Config-driven batch run over two synthetic index groups, printing the report tables.
//!
//! `cargo run --release --example batch_pipeline`

mod common;

use regimekit::pipeline::{run_pipeline, PipelineConfig, Stage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let data = dir.path().join("data");
    std::fs::create_dir_all(&data)?;
    let tickers = [
        ("developed", "AAA", &[2003, 2008][..]),
        ("developed", "BBB", &[2003, 2008]),
        ("developing", "CCC", &[2008, 2011]),
    ];
    for (i, (_, t, crises)) in tickers.iter().enumerate() {
        std::fs::write(data.join(format!("{t}.csv")), common::price_csv(i as u64 + 10, 2001, 2012, crises))?;
    }

    let text = format!(
        r#"
data_dir = {data:?}
output_dir = {out:?}

[tickers]
developed = ["AAA", "BBB"]
developing = ["CCC"]

[years]
min_tree_count = 1
"#,
        data = data.display().to_string(),
        out = dir.path().join("out").display().to_string(),
    );
    let cfg = PipelineConfig::from_toml_str(&text)?;
    let manifest = run_pipeline(&cfg, "example", &Stage::ALL)?;

    for s in &manifest.stages {
        println!("{:<12} {:.2}s", s.stage.to_string(), s.seconds);
    }
    println!("{} files, {} warnings", manifest.files.len(), manifest.warnings.len());
    for w in manifest.warnings.iter().take(5) {
        println!("  warning [{}] {}: {}", w.stage, w.ticker.as_deref().unwrap_or("-"), w.message);
    }
    println!();
    // the sensitivity table lists every grid cell and is left to the CSV export
    let md = std::fs::read_to_string(dir.path().join("out/report/tables.md"))?;
    print!("{}", md.split("## sensitivity").next().unwrap_or(&md));
    Ok(())
}
