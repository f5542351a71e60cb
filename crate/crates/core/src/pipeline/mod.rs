//! Staged pipeline: ingest, featurize, evaluate, report. Stages hand off
//! through files in the output directory.

mod config;
mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{FeatureGroup, PipelineConfig};
pub use report::render_report;

use crate::dataset::{Dataset, FeatureMatrix};
use crate::embed::{
    daily_embedding_features, gpt_features, gpt_riskm_features, gpt_riskw_features, CachedProvider,
    EmbeddingProvider,
};
use crate::error::{Error, Result};
use crate::ingest::{
    build_corpora, deduplicate, discover_exports, parse_all, read_canonical, write_canonical, DropCounts,
    IngestSummary, UserCorpus,
};
use crate::labels::{derive_labels, read_labels_csv, read_survey_csv, write_labels_csv, Outcome};
use crate::lexfeat::{dict_category_features, riskcat_features, riskword_features, CategoryDictionary, RiskLexicon};
use crate::model::{Confusion, ModelKind, ModelSpec};
use crate::select::{
    correlation_report, loo_evaluate, selection_summary, ttest_report, LooResult, RelevanceReport,
    SelectionSummary, MIN_LOO_SAMPLES,
};
use crate::seed;
use crate::synth::SynthOutput;

/// File names inside the output directory.
pub mod files {
    pub const MESSAGES: &str = "messages.csv";
    pub const EXCLUSIONS: &str = "exclusions.csv";
    pub const LABELS: &str = "labels.csv";
    pub const INGEST_SUMMARY: &str = "ingest_summary.txt";
    pub const FEATURES_DIR: &str = "features";
    pub const FEATURES: &str = "features.csv";
    pub const F1_TABLE: &str = "f1_scores.csv";
    pub const SELECTION_TABLE: &str = "selected_features.csv";
    pub const CORRELATION_TABLE: &str = "correlated_features.csv";
    pub const TTEST_TABLE: &str = "ttest_features.csv";
    pub const EVALUATION: &str = "evaluation.json";
    pub const TRACES_DIR: &str = "traces";
    pub const REPORT: &str = "report.md";
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_text(p: &Path, text: &str) -> Result<()> {
    fs::write(p, text).map_err(|e| Error::io(p, e))
}

fn write_json<T: Serialize>(p: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    write_text(p, &(text + "\n"))
}

fn require_file(p: &Path, what: &str) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            p,
            std::io::Error::new(std::io::ErrorKind::NotFound, format!("{what} not found")),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub files: usize,
    pub rows_read: usize,
    pub dropped: DropCounts,
    pub duplicates: usize,
    pub messages_written: usize,
    pub excluded_users: usize,
    pub labeled_users: usize,
    pub summary: IngestSummary,
}

/// Parses exports, builds the modeling population and derives labels.
/// Writes the canonical message CSV, the exclusion report, labels and a
/// summary under the output directory.
pub fn run_ingest(cfg: &PipelineConfig) -> Result<IngestReport> {
    let mut specs = cfg.exports.clone();
    if let Some(dir) = &cfg.exports_dir {
        specs.extend(discover_exports(dir)?);
    }
    for s in &specs {
        require_file(&s.path, "export file")?;
    }
    require_file(&cfg.survey, "survey file")?;
    let parsed = parse_all(&specs)?;
    let before = parsed.messages.len();
    let messages = deduplicate(parsed.messages);
    let duplicates = before - messages.len();
    let (corpora, exclusions) = build_corpora(&messages, &cfg.ingest);

    let out = &cfg.output_dir;
    create_dir(out)?;
    let retained: Vec<_> = corpora.values().flat_map(|c| c.messages().cloned()).collect();
    write_canonical(&out.join(files::MESSAGES), &retained)?;
    exclusions.write_csv(&out.join(files::EXCLUSIONS))?;
    let labels = derive_labels(&read_survey_csv(&cfg.survey)?)?;
    write_labels_csv(&out.join(files::LABELS), &labels)?;
    let summary = IngestSummary::from_corpora(corpora.values());
    write_text(&out.join(files::INGEST_SUMMARY), &summary.render())?;
    info!(
        "ingest: {} files, {} rows, {} users retained, {} excluded",
        specs.len(),
        parsed.rows_read,
        corpora.len(),
        exclusions.entries.len()
    );
    Ok(IngestReport {
        files: specs.len(),
        rows_read: parsed.rows_read,
        dropped: parsed.dropped,
        duplicates,
        messages_written: retained.len(),
        excluded_users: exclusions.entries.len(),
        labeled_users: labels.len(),
        summary,
    })
}

/// Rebuilds per-user corpora from the canonical message CSV.
pub fn load_corpora(cfg: &PipelineConfig) -> Result<BTreeMap<String, UserCorpus>> {
    let path = cfg.output_dir.join(files::MESSAGES);
    require_file(&path, "canonical messages (run ingest first)")?;
    let parsed = read_canonical(&path)?;
    if parsed.dropped.total() > 0 {
        return Err(Error::format(&path, format!("{} unreadable rows", parsed.dropped.total())));
    }
    Ok(build_corpora(&parsed.messages, &cfg.ingest).0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeaturizeReport {
    pub users: usize,
    pub columns: usize,
    pub per_group: IndexMap<String, usize>,
    pub cache_hits: usize,
    pub cache_misses: usize,
}

fn group_matrix(
    group: FeatureGroup,
    corpora: &BTreeMap<String, UserCorpus>,
    lexicon: &RiskLexicon,
    dictionary: Option<&CategoryDictionary>,
    provider: &dyn EmbeddingProvider,
) -> Result<FeatureMatrix> {
    let prefix = group.as_str();
    let names: Vec<String> = match group {
        FeatureGroup::Riskword => lexicon.entries().iter().map(|e| e.phrase.clone()).collect(),
        FeatureGroup::Riskcat => lexicon.categories().to_vec(),
        FeatureGroup::Dict => dictionary.expect("validated").names().to_vec(),
        _ => (0..provider.dimension()).map(|i| i.to_string()).collect(),
    };
    let rows = corpora
        .par_iter()
        .map(|(_, c)| -> Result<Vec<f64>> {
            Ok(match group {
                FeatureGroup::Riskword => riskword_features(c, lexicon),
                FeatureGroup::Riskcat => riskcat_features(c, lexicon),
                FeatureGroup::Dict => dict_category_features(c, dictionary.expect("validated")),
                FeatureGroup::Gpt => gpt_features(c, provider)?,
                FeatureGroup::GptRiskm => gpt_riskm_features(c, lexicon, provider)?,
                FeatureGroup::GptRiskw => gpt_riskw_features(c, lexicon, provider)?,
                FeatureGroup::DailyEmbed => daily_embedding_features(c, provider)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(
        corpora.keys().cloned().collect(),
        names.into_iter().map(|n| format!("{prefix}.{n}")).collect(),
        rows,
    )
}

/// Computes every enabled group with `provider` (no caching added here).
pub fn compute_features(
    cfg: &PipelineConfig,
    corpora: &BTreeMap<String, UserCorpus>,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<(FeatureGroup, FeatureMatrix)>> {
    let lexicon = RiskLexicon::load(&cfg.lexicon)?;
    let dictionary = match (&cfg.dictionary, cfg.features.contains(&FeatureGroup::Dict)) {
        (Some(p), true) => Some(CategoryDictionary::load(p)?),
        _ => None,
    };
    cfg.feature_groups()
        .into_iter()
        .map(|g| Ok((g, group_matrix(g, corpora, &lexicon, dictionary.as_ref(), provider)?)))
        .collect()
}

/// Featurizes with a caller-supplied provider, wrapped in the on-disk cache.
pub fn run_featurize_with<P: EmbeddingProvider>(cfg: &PipelineConfig, provider: P) -> Result<FeaturizeReport> {
    let corpora = load_corpora(cfg)?;
    let cached = CachedProvider::new(provider, &cfg.cache_dir)?;
    let groups = compute_features(cfg, &corpora, &cached)?;

    let dir = cfg.output_dir.join(files::FEATURES_DIR);
    create_dir(&dir)?;
    let mut per_group = IndexMap::new();
    let mut merged: Option<FeatureMatrix> = None;
    for (g, m) in &groups {
        m.write_csv(&dir.join(format!("{g}.csv")))?;
        per_group.insert(g.to_string(), m.n_features());
        merged = Some(match merged {
            None => m.clone(),
            Some(acc) => acc.merge(m)?,
        });
    }
    let merged = merged.expect("at least one group");
    merged.write_csv(&cfg.output_dir.join(files::FEATURES))?;
    info!(
        "featurize: {} users x {} columns; cache {} hits, {} misses",
        merged.user_ids.len(),
        merged.n_features(),
        cached.cache().hits(),
        cached.cache().misses()
    );
    Ok(FeaturizeReport {
        users: merged.user_ids.len(),
        columns: merged.n_features(),
        per_group,
        cache_hits: cached.cache().hits(),
        cache_misses: cached.cache().misses(),
    })
}

pub fn run_featurize(cfg: &PipelineConfig) -> Result<FeaturizeReport> {
    let needs_provider = cfg.features.iter().any(|g| g.uses_embeddings());
    if needs_provider {
        run_featurize_with(cfg, cfg.provider.build()?)
    } else {
        run_featurize_with(cfg, crate::embed::MockProvider::with_seed(cfg.provider.seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluation {
    pub model: ModelKind,
    pub spec: ModelSpec,
    pub f1_minority: f64,
    pub confusion: Confusion,
    pub mean_k: f64,
    pub selection: SelectionSummary,
    pub predictions: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEvaluation {
    pub label: Outcome,
    pub users: Vec<String>,
    pub positives: usize,
    pub minority_class: bool,
    pub correlation: RelevanceReport,
    pub ttest: RelevanceReport,
    pub models: Vec<ModelEvaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedLabel {
    pub label: Outcome,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub seed: u64,
    pub feature_groups: Vec<String>,
    pub labels: Vec<LabelEvaluation>,
    pub skipped: Vec<SkippedLabel>,
}

/// The spec actually run for `label`: its seed is derived from the pipeline
/// seed so every (label, model) pair draws from its own substream.
pub fn seeded_spec(cfg_seed: u64, label: Outcome, spec: &ModelSpec) -> ModelSpec {
    let name = format!("evaluate/{}/{}/{}", label.as_str(), spec.kind, spec.seed);
    spec.clone().with_seed(seed::substream(cfg_seed, &name))
}

fn build_dataset(features: &FeatureMatrix, labels: &[crate::labels::LabelSet], label: Outcome) -> std::result::Result<Dataset, String> {
    let ds = Dataset::from_features(features, labels, label).map_err(|e| e.to_string())?;
    if ds.n_samples() < MIN_LOO_SAMPLES {
        return Err(format!("{} labeled users, need {MIN_LOO_SAMPLES}", ds.n_samples()));
    }
    let pos = ds.y.iter().filter(|&&v| v).count();
    if pos.min(ds.n_samples() - pos) < 2 {
        return Err("fewer than two users in the minority class".into());
    }
    Ok(ds)
}

/// Keeps the columns whose group is enabled.
fn enabled_columns(features: &FeatureMatrix, groups: &[FeatureGroup]) -> Result<FeatureMatrix> {
    let keep: Vec<usize> = (0..features.n_features())
        .filter(|&j| {
            let g = crate::dataset::feature_group(&features.names[j]);
            groups.iter().any(|e| e.as_str() == g)
        })
        .collect();
    if keep.is_empty() {
        return Err(Error::Config(
            "feature matrix has no columns from the enabled groups (re-run featurize)".into(),
        ));
    }
    FeatureMatrix::new(
        features.user_ids.clone(),
        keep.iter().map(|&j| features.names[j].clone()).collect(),
        features
            .rows
            .iter()
            .map(|r| keep.iter().map(|&j| r[j]).collect())
            .collect(),
    )
}

#[derive(Serialize)]
struct TraceRecord<'a> {
    user_id: &'a str,
    #[serde(flatten)]
    iteration: &'a crate::select::LooIteration,
}

fn write_traces(dir: &Path, ds: &Dataset, result: &LooResult) -> Result<()> {
    create_dir(dir)?;
    for it in &result.iterations {
        let rec = TraceRecord {
            user_id: &ds.user_ids[it.held_out],
            iteration: it,
        };
        write_json(&dir.join(format!("iter_{:04}.json", it.held_out)), &rec)?;
    }
    Ok(())
}

/// Runs leave-one-out evaluation for every enabled label and model and
/// writes the tables, per-iteration traces, `evaluation.json` and the
/// markdown report.
pub fn run_evaluate(cfg: &PipelineConfig) -> Result<EvaluationReport> {
    let features_path = cfg.output_dir.join(files::FEATURES);
    require_file(&features_path, "feature matrix (run featurize first)")?;
    let labels_path = cfg.output_dir.join(files::LABELS);
    require_file(&labels_path, "labels (run ingest first)")?;
    let features = enabled_columns(&FeatureMatrix::read_csv(&features_path)?, &cfg.feature_groups())?;
    let labels = read_labels_csv(&labels_path)?;

    let mut report = EvaluationReport {
        seed: cfg.seed,
        feature_groups: cfg.feature_groups().iter().map(|g| g.to_string()).collect(),
        labels: Vec::new(),
        skipped: Vec::new(),
    };
    let traces_root = cfg.output_dir.join(files::TRACES_DIR);
    for label in cfg.enabled_labels() {
        let ds = match build_dataset(&features, &labels, label) {
            Ok(ds) => ds,
            Err(reason) => {
                warn!("skipping {label}: {reason}");
                report.skipped.push(SkippedLabel { label, reason });
                continue;
            }
        };
        let x = ds.x.view();
        let mut eval = LabelEvaluation {
            label,
            users: ds.user_ids.clone(),
            positives: ds.y.iter().filter(|&&v| v).count(),
            minority_class: crate::model::minority_class(&ds.y),
            correlation: correlation_report(x, &ds.y, &ds.feature_names, cfg.correlation_threshold)?,
            ttest: ttest_report(x, &ds.y, &ds.feature_names, cfg.ttest_alpha)?,
            models: Vec::new(),
        };
        for spec in &cfg.models {
            let spec = seeded_spec(cfg.seed, label, spec);
            info!("evaluate: {label} / {} on {} users", spec.kind, ds.n_samples());
            let result = loo_evaluate(x, &ds.y, &spec)?;
            write_traces(&traces_root.join(label.as_str()).join(spec.kind.as_str()), &ds, &result)?;
            eval.models.push(ModelEvaluation {
                model: spec.kind,
                f1_minority: result.f1_minority,
                confusion: result.confusion,
                mean_k: result.mean_k(),
                selection: selection_summary(&result, &ds.feature_names),
                predictions: result.predictions.clone(),
                spec,
            });
        }
        report.labels.push(eval);
    }
    write_evaluation_outputs(&cfg.output_dir, &report)?;
    Ok(report)
}

fn write_evaluation_outputs(out: &Path, report: &EvaluationReport) -> Result<()> {
    write_json(&out.join(files::EVALUATION), report)?;
    let tables = report::tables(report);
    write_text(&out.join(files::F1_TABLE), &tables.f1)?;
    write_text(&out.join(files::SELECTION_TABLE), &tables.selection)?;
    write_text(&out.join(files::CORRELATION_TABLE), &tables.correlation)?;
    write_text(&out.join(files::TTEST_TABLE), &tables.ttest)?;
    write_text(&out.join(files::REPORT), &render_report(report))
}

/// Re-renders the markdown report from `evaluation.json`.
pub fn run_report(cfg: &PipelineConfig) -> Result<String> {
    let path = cfg.output_dir.join(files::EVALUATION);
    require_file(&path, "evaluation results (run evaluate first)")?;
    let raw = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let report: EvaluationReport =
        serde_json::from_str(&raw).map_err(|e| Error::format(&path, e.to_string()))?;
    let text = render_report(&report);
    write_text(&cfg.output_dir.join(files::REPORT), &text)?;
    Ok(text)
}

/// A config for the files written by [`crate::synth::generate`] into `dir`,
/// using paths relative to `dir`.
pub fn config_for_synth(out: &SynthOutput, dir: &Path) -> PipelineConfig {
    let rel = |p: &Path| -> PathBuf { p.strip_prefix(dir).map(Path::to_path_buf).unwrap_or_else(|_| p.to_path_buf()) };
    PipelineConfig::new(
        rel(&out.exports_dir),
        rel(&out.survey),
        rel(&out.lexicon),
        Some(rel(&out.dictionary)),
    )
}

/// All four stages in order.
pub fn run_all(cfg: &PipelineConfig) -> Result<EvaluationReport> {
    run_ingest(cfg)?;
    run_featurize(cfg)?;
    run_evaluate(cfg)
}
