use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use riskscan::embed::MockProvider;
use riskscan::labels::{read_labels_csv, Outcome};
use riskscan::model::{ModelKind, ModelSpec};
use riskscan::pipeline::{
    config_for_synth, files, run_all, run_evaluate, run_featurize_with, run_ingest, run_report, FeatureGroup,
    PipelineConfig,
};
use riskscan::synth::{generate, Prevalence, SynthConfig};
use riskscan::Error;

/// A population small enough for every model to run in a few seconds.
fn small_synth(seed: u64) -> SynthConfig {
    SynthConfig {
        n_users: 24,
        min_days: 8,
        max_days: 12,
        min_messages_per_day: 4,
        max_messages_per_day: 6,
        positive_rate: 0.3,
        negative_rate: 0.02,
        seed,
        ..SynthConfig::default()
    }
}

fn setup(dir: &Path, synth: &SynthConfig) -> PipelineConfig {
    let out = generate(synth, dir).unwrap();
    let mut cfg = config_for_synth(&out, dir);
    cfg.resolve_paths(dir);
    cfg.ingest.min_days = 5;
    cfg.ingest.min_messages = 20;
    cfg.provider.dimension = 8;
    cfg.seed = synth.seed;
    cfg
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn full_run_with_every_model_is_byte_reproducible() {
    let mut trees = Vec::new();
    for _ in 0..2 {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = setup(tmp.path(), &small_synth(3));
        cfg.labels = vec![Outcome::BingeMonthly, Outcome::TakesPrep];
        let report = run_all(&cfg).unwrap();
        assert_eq!(report.labels.len(), 2);
        for l in &report.labels {
            let kinds: Vec<ModelKind> = l.models.iter().map(|m| m.model).collect();
            assert_eq!(kinds, ModelKind::ALL.to_vec());
        }
        trees.push(tree(&cfg.output_dir));
    }
    assert!(trees[0].contains_key(Path::new(files::REPORT)));
    assert!(trees[0].keys().any(|p| p.starts_with("traces/takes_prep/gbm")));
    assert_eq!(trees[0].keys().collect::<Vec<_>>(), trees[1].keys().collect::<Vec<_>>());
    for (path, bytes) in &trees[0] {
        assert!(&trees[1][path] == bytes, "{} differs", path.display());
    }
}

#[test]
fn warm_cache_serves_every_embedding() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = setup(tmp.path(), &small_synth(4));
    run_ingest(&cfg).unwrap();
    let cold = run_featurize_with(&cfg, MockProvider::new(8, 8191, 0)).unwrap();
    assert!(cold.cache_misses > 0);
    let first = fs::read(cfg.output_dir.join(files::FEATURES)).unwrap();

    let warm = run_featurize_with(&cfg, MockProvider::new(8, 8191, 0)).unwrap();
    assert_eq!(warm.cache_misses, 0);
    assert!(warm.cache_hits >= cold.cache_misses);
    assert_eq!(fs::read(cfg.output_dir.join(files::FEATURES)).unwrap(), first);
}

#[test]
fn riskword_only_gives_one_column_per_phrase() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = setup(tmp.path(), &small_synth(5));
    let lexicon = tmp.path().join("eight.json");
    fs::write(
        &lexicon,
        r#"{"categories": {"alcohol": ["beer", "wine", "shots", "drunk"], "sex": ["hookup", "bareback", "no condom", "party and play"]}}"#,
    )
    .unwrap();
    cfg.lexicon = lexicon;
    cfg.features = vec![FeatureGroup::Riskword];
    run_ingest(&cfg).unwrap();
    let rep = run_featurize_with(&cfg, MockProvider::new(8, 8191, 0)).unwrap();
    assert_eq!(rep.columns, 8);
    assert_eq!(rep.per_group.get("riskword"), Some(&8));
    assert_eq!(rep.cache_hits + rep.cache_misses, 0);
    let header = fs::read_to_string(cfg.output_dir.join(files::FEATURES)).unwrap();
    let header = header.lines().next().unwrap();
    assert!(header.contains("riskword.party and play"), "{header}");
}

#[test]
fn single_class_label_is_skipped_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let synth = SynthConfig {
        label_noise: 0.0,
        prevalence: Prevalence { takes_prep: 0.0, ..Prevalence::default() },
        ..small_synth(6)
    };
    let mut cfg = setup(tmp.path(), &synth);
    cfg.labels = vec![Outcome::TakesPrep, Outcome::BingeMonthly];
    cfg.models = vec![ModelSpec::new(ModelKind::Logistic)];
    run_ingest(&cfg).unwrap();
    run_featurize_with(&cfg, MockProvider::new(8, 8191, 0)).unwrap();
    let report = run_evaluate(&cfg).unwrap();
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].label, Outcome::TakesPrep);
    assert_eq!(report.labels.len(), 1);
    assert_eq!(report.labels[0].label, Outcome::BingeMonthly);
}

#[test]
fn noiseless_survey_reproduces_latent_labels() {
    let tmp = tempfile::tempdir().unwrap();
    let synth = SynthConfig { label_noise: 0.0, ..small_synth(7) };
    let out = generate(&synth, tmp.path()).unwrap();
    let cfg = setup(&tmp.path().join("again"), &synth);
    run_ingest(&cfg).unwrap();
    let derived = read_labels_csv(&cfg.output_dir.join(files::LABELS)).unwrap();
    let latent = read_labels_csv(&out.latent_labels).unwrap();
    assert_eq!(derived.len(), 24);
    assert_eq!(derived, latent);
}

#[test]
fn stages_report_missing_inputs_as_io_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = setup(tmp.path(), &small_synth(8));

    let err = run_evaluate(&cfg).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(run_featurize_with(&cfg, MockProvider::new(8, 8191, 0)).is_err());
    assert!(run_report(&cfg).is_err());

    cfg.survey = tmp.path().join("nope.csv");
    let err = run_ingest(&cfg).unwrap_err();
    assert!(err.to_string().contains("nope.csv"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn report_rerenders_from_saved_results() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = setup(tmp.path(), &small_synth(9));
    cfg.labels = vec![Outcome::BingeMonthly];
    cfg.models = vec![ModelSpec::new(ModelKind::LinearSvm)];
    run_all(&cfg).unwrap();
    let path = cfg.output_dir.join(files::REPORT);
    let original = fs::read_to_string(&path).unwrap();
    fs::remove_file(&path).unwrap();
    assert_eq!(run_report(&cfg).unwrap(), original);
    assert_eq!(fs::read_to_string(&path).unwrap(), original);
}

#[test]
fn config_round_trips_through_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = setup(tmp.path(), &small_synth(10));
    let path = tmp.path().join("riskscan.json");
    cfg.save(&path).unwrap();
    assert_eq!(PipelineConfig::load(&path).unwrap(), cfg);

    fs::write(&path, r#"{"survey": "s.csv", "lexicon": "l.json", "exports_dir": "e", "bogus": 1}"#).unwrap();
    assert!(matches!(PipelineConfig::load(&path), Err(Error::Format { .. })));
    fs::write(&path, r#"{"survey": "s.csv", "lexicon": "l.json", "exports_dir": "e", "features": ["dict"]}"#).unwrap();
    assert!(matches!(PipelineConfig::load(&path), Err(Error::Config(_))));
}

#[test]
fn example_lexicon_and_dictionary_match_the_synthetic_ones() {
    use riskscan::lexfeat::{CategoryDictionary, RiskLexicon};
    use riskscan::synth::{synthetic_dictionary, synthetic_lexicon};

    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let lex = RiskLexicon::load(&data.join("lexicon.example.json")).unwrap();
    assert_eq!(lex.to_json(), synthetic_lexicon().to_json());
    let dict = CategoryDictionary::load(&data.join("dictionary.example.json")).unwrap();
    assert_eq!(dict.to_json(), synthetic_dictionary().to_json());
}
