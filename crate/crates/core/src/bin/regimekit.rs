//! Command-line front end for the batch pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use regimekit::pipeline::{
    export_reports, run_pipeline, PipelineConfig, PipelineError, ReportFormat, RunManifest, Stage,
};

#[derive(Parser)]
#[command(name = "regimekit", version, about = "Regime analysis of equity index returns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated subset of the configured tickers.
    #[arg(long, value_delimiter = ',')]
    tickers: Vec<String>,
    /// Output directory, overriding the config and REGIMEKIT_OUTPUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Log returns, quintile cutoffs and state sequences.
    Ingest(Common),
    /// BDS nonlinearity statistics.
    Bds(Common),
    /// EMD energy, regime labels and regime years.
    Regimes(Common),
    /// Holo-Hilbert spectra and regime profiles.
    Hhsa(Common),
    /// Context trees per index and representative year.
    Vlmc(Common),
    /// Group-level context-tree metrics.
    Metrics(Common),
    /// Regime years over the threshold grid.
    Sensitivity(Common),
    /// Consolidated report tables.
    Report {
        #[command(flatten)]
        common: Common,
        /// json, csv, or both when omitted.
        #[arg(long)]
        format: Option<ReportFormat>,
    },
    /// Every stage, then the report.
    Run {
        #[command(flatten)]
        common: Common,
        /// Comma-separated stages to run instead of all of them.
        #[arg(long, value_delimiter = ',')]
        stage: Vec<Stage>,
    },
}

fn load(c: &Common) -> Result<(PipelineConfig, String), PipelineError> {
    let (mut cfg, sha) = PipelineConfig::load(&c.config)?;
    if let Some(out) = &c.out {
        cfg.output_dir = out.clone();
    }
    if !c.tickers.is_empty() {
        cfg.restrict_tickers(&c.tickers)?;
    }
    Ok((cfg, sha))
}

fn execute(cmd: Command) -> Result<RunManifest, PipelineError> {
    let single = |c: &Common, s: Stage| {
        let (cfg, sha) = load(c)?;
        run_pipeline(&cfg, &sha, &[s])
    };
    match cmd {
        Command::Ingest(c) => single(&c, Stage::Ingest),
        Command::Bds(c) => single(&c, Stage::Bds),
        Command::Regimes(c) => single(&c, Stage::Regimes),
        Command::Hhsa(c) => single(&c, Stage::Hhsa),
        Command::Vlmc(c) => single(&c, Stage::Vlmc),
        Command::Metrics(c) => single(&c, Stage::Metrics),
        Command::Sensitivity(c) => single(&c, Stage::Sensitivity),
        Command::Report { common, format: None } => single(&common, Stage::Report),
        Command::Report { common, format: Some(f) } => {
            let (cfg, _) = load(&common)?;
            let mut m = RunManifest::load(&cfg.output_dir)?;
            let files = export_reports(&cfg.output_dir, &m, f)?;
            m.merge_files(files);
            m.write(&cfg.output_dir)?;
            Ok(m)
        }
        Command::Run { common, stage } => {
            let (cfg, sha) = load(&common)?;
            let stages = if stage.is_empty() { Stage::ALL.to_vec() } else { stage };
            run_pipeline(&cfg, &sha, &stages)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(m) => {
            for w in &m.warnings {
                eprintln!(
                    "warning [{}{}]: {}",
                    w.stage,
                    w.ticker.as_deref().map(|t| format!(" {t}")).unwrap_or_default(),
                    w.message
                );
            }
            println!("{} files recorded in manifest", m.files.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
