//! `riskscan`: staged behavioral-risk prediction pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::warn;
use riskscan::embed::ProviderKind;
use riskscan::labels::Outcome;
use riskscan::pipeline::{self, FeatureGroup, PipelineConfig};
use riskscan::synth::{self, SynthConfig};
use riskscan::Error;

#[derive(Debug, Parser)]
#[command(name = "riskscan", version, about = "Behavioral-risk prediction from message corpora")]
struct Cli {
    /// Pipeline config (JSON). For `synth`, an optional synthetic-corpus config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated labels to model.
    #[arg(long, global = true, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    /// Comma-separated feature groups.
    #[arg(long, global = true, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Embedding provider kind.
    #[arg(long, global = true)]
    provider: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse exports, filter users, derive labels.
    Ingest,
    /// Compute feature matrices for the enabled groups.
    Featurize,
    /// Leave-one-out evaluation for every enabled label and model.
    Evaluate,
    /// Render report.md from the last evaluation.
    Report,
    /// Generate a synthetic corpus and a pipeline config for it.
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Number of synthetic users.
        #[arg(long)]
        users: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String]) -> Result<Vec<T>, Error> {
    items.iter().map(|s| s.trim().parse()).collect()
}

fn pipeline_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(labels) = &cli.labels {
        cfg.labels = parse_list::<Outcome>(labels)?;
    }
    if let Some(features) = &cli.features {
        cfg.features = parse_list::<FeatureGroup>(features)?;
    }
    if let Some(kind) = &cli.provider {
        cfg.provider.kind = match kind.as_str() {
            "mock" => ProviderKind::Mock,
            "remote" => ProviderKind::Remote,
            other => return Err(Error::Config(format!("unknown provider `{other}`"))),
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Synth { out, users } => return synth_cmd(&cli, out, *users),
        Command::Ingest => {
            let cfg = pipeline_config(&cli)?;
            let r = pipeline::run_ingest(&cfg)?;
            println!("{}", r.summary.render());
            println!(
                "rows read {}; dropped: received {}, empty {}, bad timestamp {}, malformed {}; duplicates {}",
                r.rows_read,
                r.dropped.received,
                r.dropped.empty_text,
                r.dropped.bad_timestamp,
                r.dropped.malformed,
                r.duplicates
            );
            println!(
                "{} messages written, {} users excluded, {} users labeled",
                r.messages_written, r.excluded_users, r.labeled_users
            );
        }
        Command::Featurize => {
            let cfg = pipeline_config(&cli)?;
            let r = pipeline::run_featurize(&cfg)?;
            for (g, n) in &r.per_group {
                println!("{g:>12} {n:>5} columns");
            }
            println!(
                "{} users x {} columns; embedding cache {} hits, {} misses",
                r.users, r.columns, r.cache_hits, r.cache_misses
            );
        }
        Command::Evaluate => {
            let cfg = pipeline_config(&cli)?;
            let r = pipeline::run_evaluate(&cfg)?;
            for l in &r.labels {
                for m in &l.models {
                    println!(
                        "{:<16} {:<11} users {:>4}  F1 {:.3}  mean K {:.1}",
                        l.label.as_str(),
                        m.model.as_str(),
                        l.users.len(),
                        m.f1_minority,
                        m.mean_k
                    );
                }
            }
            for s in &r.skipped {
                println!("{:<16} skipped: {}", s.label.as_str(), s.reason);
            }
        }
        Command::Report => {
            let cfg = pipeline_config(&cli)?;
            print!("{}", pipeline::run_report(&cfg)?);
        }
    }
    Ok(())
}

fn synth_cmd(cli: &Cli, out: &Path, users: Option<usize>) -> Result<(), Error> {
    let mut sc = match &cli.config {
        Some(p) => {
            let raw = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<SynthConfig>(&raw).map_err(|e| Error::format(p, e.to_string()))?
        }
        None => SynthConfig::default(),
    };
    if let Some(seed) = cli.seed {
        sc.seed = seed;
    }
    if let Some(n) = users {
        sc.n_users = n;
    }
    if cli.labels.is_some() || cli.features.is_some() || cli.provider.is_some() {
        warn!("--labels, --features and --provider are written into the generated config");
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let written = synth::generate(&sc, out)?;
    let mut cfg = pipeline::config_for_synth(&written, out);
    cfg.seed = sc.seed;
    if let Some(labels) = &cli.labels {
        cfg.labels = parse_list::<Outcome>(labels)?;
    }
    if let Some(features) = &cli.features {
        cfg.features = parse_list::<FeatureGroup>(features)?;
    }
    cfg.validate()?;
    let cfg_path = out.join("config.json");
    cfg.save(&cfg_path)?;
    let sc_path = out.join("synth_config.json");
    let text = serde_json::to_string_pretty(&sc).expect("config serializes");
    fs::write(&sc_path, text + "\n").map_err(|e| Error::io(&sc_path, e))?;
    println!(
        "{} users, {} export rows written to {}; pipeline config {}",
        written.users,
        written.rows_written,
        written.exports_dir.display(),
        cfg_path.display()
    );
    Ok(())
}
