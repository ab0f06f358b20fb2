use laks::classifier::{predict, ModelParams};
use laks::harness::config::Protocol;
use laks::harness::{evaluate, sweep, RunConfig, SweepParam};
use laks::model_io::{load_model, save_model};
use laks::skeleton::{load_dataset, save_dataset, Dataset, DatasetFormat, JointMap, NamingPattern};
use laks::synthetic::{generate, SynthConfig};
use laks::training::train_model;

fn small_params() -> ModelParams {
    let mut p = RunConfig::default().model;
    p.clusters = 6;
    p.runs = 2;
    p.sha.atoms = 16;
    p.sha.code_len = 16;
    p
}

fn dataset(subjects: usize, spike_rate: f64) -> Dataset {
    generate(&SynthConfig {
        subjects,
        episodes: 1,
        frames: 24,
        spike_rate,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap()
}

#[test]
fn six_sequence_model_survives_a_round_trip() {
    let ds = dataset(2, 0.0);
    assert_eq!(ds.len(), 6);
    let seqs: Vec<_> = ds.sequences().iter().collect();
    let outcome = train_model(&seqs, 3, None, &small_params()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("six.laks");
    save_model(&outcome.model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, outcome.model);
    for seq in ds.sequences() {
        assert_eq!(predict(seq, &loaded).unwrap(), predict(seq, &outcome.model).unwrap());
    }
}

#[test]
fn training_sequences_are_retrieved() {
    let ds = dataset(4, 0.0);
    let seqs: Vec<_> = ds.sequences().iter().collect();
    let model = train_model(&seqs, 3, None, &RunConfig::default().model).unwrap().model;
    let hits = ds
        .sequences()
        .iter()
        .filter(|s| predict(s, &model).unwrap() == s.label().unwrap())
        .count();
    assert_eq!(hits, ds.len());
}

#[test]
fn saved_dataset_loads_back_identically() {
    let ds = dataset(2, 0.0);
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&ds, dir.path()).unwrap();
    let (back, report) = load_dataset(
        dir.path(),
        DatasetFormat::Canonical,
        &JointMap::identity(),
        &NamingPattern::default(),
    )
    .unwrap();
    assert!(report.skipped.is_empty());
    assert_eq!(back.len(), ds.len());
    for seq in ds.sequences() {
        let other = back.sequences().iter().find(|s| s.id() == seq.id()).unwrap();
        assert_eq!(other.frames(), seq.frames());
        assert_eq!((other.label(), other.subject()), (seq.label(), seq.subject()));
    }
}

#[test]
fn single_value_sweep_matches_evaluate() {
    let ds = dataset(4, 0.0);
    let config = RunConfig {
        protocol: Protocol::CrossSubject,
        train_subjects: vec![1, 3],
        model: small_params(),
        ..RunConfig::default()
    };
    let direct = evaluate(&ds, &config).unwrap();
    let table = sweep(&ds, &config, SweepParam::Lambda1, &[1.0]).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].accuracy, direct.accuracy);
}

#[test]
fn raising_the_threshold_denoises_more() {
    let ds = dataset(3, 0.1);
    let seqs: Vec<_> = ds.sequences().iter().collect();
    let replaced: Vec<usize> = [0, 2, 5, 10, 40]
        .iter()
        .map(|&eps| {
            let mut p = small_params();
            p.epsilon = eps;
            p.sha.max_iter = 2;
            train_model(&seqs, 3, None, &p).unwrap().replaced_features
        })
        .collect();
    assert_eq!(replaced[0], 0);
    assert!(replaced.windows(2).all(|w| w[0] <= w[1]), "{replaced:?}");
    assert!(replaced[4] > 0, "{replaced:?}");
}
