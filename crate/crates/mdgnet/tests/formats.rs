use std::path::Path;
use std::time::Instant;

use mdgnet::formats::{
    dataset_from_bytes, dataset_to_bytes, load_dataset, load_model, model_from_bytes, model_to_bytes, save_dataset,
    save_model, SavedModel,
};
use mdgnet::pipeline::generate_samples;
use mdgnet::Error;
use mdgnet_core::dataset::{split_and_standardize, DatasetConfig, Sample};
use mdgnet_core::mlp::{MlpParams, Target};
use mdgnet_core::seed::{stream, Namespace};

fn small_samples() -> Vec<Sample> {
    let cfg = DatasetConfig { n_channels: 6, calibration_draws: 200, ..DatasetConfig::default() };
    generate_samples(&cfg).unwrap()
}

fn model_for(samples: &[Sample], target: Target) -> SavedModel {
    let split = split_and_standardize(samples, &DatasetConfig::default()).unwrap();
    let params = MlpParams::init(&mut stream(3, Namespace::Init, 0), target, split.stats);
    SavedModel { params, train_fingerprint: "abc".into() }
}

#[test]
fn dataset_round_trips_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let samples = small_samples();
    let bytes = save_dataset(&path, &samples).unwrap();
    let back = load_dataset(&path).unwrap();
    assert_eq!(back.len(), samples.len());
    for (a, b) in samples.iter().zip(&back) {
        assert_eq!(a.channel_seed, b.channel_seed);
        assert_eq!(a.sections, b.sections);
        assert_eq!(a.label_sigma_mdg_db.to_bits(), b.label_sigma_mdg_db.to_bits());
        assert_eq!(a.label_snr_db.to_bits(), b.label_snr_db.to_bits());
        assert_eq!(a.features.map(f64::to_bits), b.features.map(f64::to_bits));
    }
    assert_eq!(dataset_to_bytes(&back), bytes);
}

#[test]
fn empty_dataset_reports_no_samples() {
    let p = Path::new("empty.csv");
    let e = dataset_from_bytes(p, b"").unwrap_err();
    assert!(matches!(e, Error::NoSamples(_)));
    assert!(e.to_string().contains("no samples"));
    let header_only = dataset_to_bytes(&[]);
    assert!(matches!(dataset_from_bytes(p, &header_only), Err(Error::NoSamples(_))));
}

#[test]
fn malformed_row_reports_its_line() {
    let samples = small_samples();
    let text = String::from_utf8(dataset_to_bytes(&samples[..3])).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[2] = lines[2].replacen(",", ",x", 3);
    let e = dataset_from_bytes(Path::new("bad.csv"), lines.join("\n").as_bytes()).unwrap_err();
    assert!(matches!(e, Error::Malformed { line: Some(3), .. }), "{e}");
    assert!(e.to_string().contains("line 3"), "{e}");

    lines[2] = "1,2,3".into();
    let e = dataset_from_bytes(Path::new("bad.csv"), lines.join("\n").as_bytes()).unwrap_err();
    assert!(matches!(e, Error::Malformed { line: Some(3), .. }), "{e}");

    let e = dataset_from_bytes(Path::new("bad.csv"), b"a,b\n1,2\n").unwrap_err();
    assert!(matches!(e, Error::Malformed { line: None, .. }), "{e}");
}

#[test]
fn full_size_dataset_loads_quickly() {
    let base = small_samples();
    let samples: Vec<Sample> = (0..12_300)
        .map(|i| Sample { channel_seed: i as u64, ..base[i % base.len()].clone() })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.csv");
    save_dataset(&path, &samples).unwrap();
    let start = Instant::now();
    let back = load_dataset(&path).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(back.len(), 12_300);
    assert!(elapsed.as_secs_f64() < 1.0, "load took {elapsed:?}");
}

#[test]
fn model_round_trips() {
    let samples = small_samples();
    let dir = tempfile::tempdir().unwrap();
    for target in [Target::SigmaMdg, Target::Snr] {
        let model = model_for(&samples, target);
        let path = dir.path().join(format!("{}.json", target.name()));
        let bytes = save_model(&path, &model).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
        assert_eq!(model_to_bytes(&back), bytes);
        for s in &samples {
            let a = model.params.predict(&s.features).unwrap();
            let b = back.params.predict(&s.features).unwrap();
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains(&format!("\"target\": \"{}\"", target.name())));
    }
}

#[test]
fn truncated_model_fails_with_a_position() {
    let bytes = model_to_bytes(&model_for(&small_samples(), Target::SigmaMdg));
    let cut = &bytes[..bytes.len() / 2];
    let e = model_from_bytes(Path::new("m.json"), cut).unwrap_err();
    assert!(matches!(e, Error::Json { .. }), "{e}");
    assert!(e.to_string().contains("line"), "{e}");
}

#[test]
fn schema_version_is_checked() {
    let bytes = model_to_bytes(&model_for(&small_samples(), Target::Snr));
    let text = String::from_utf8(bytes).unwrap().replace("\"schema_version\": 1", "\"schema_version\": 2");
    let e = model_from_bytes(Path::new("m.json"), text.as_bytes()).unwrap_err();
    assert!(matches!(e, Error::SchemaVersion { found: 2, expected: 1, .. }), "{e}");
}

#[test]
fn unknown_fields_and_targets_are_rejected() {
    let text = String::from_utf8(model_to_bytes(&model_for(&small_samples(), Target::Snr))).unwrap();
    let renamed = text.replace("\"target\": \"snr\"", "\"target\": \"osnr\"");
    assert!(matches!(model_from_bytes(Path::new("m.json"), renamed.as_bytes()), Err(Error::Malformed { .. })));
    let extra = text.replacen('{', "{\n  \"comment\": 1,", 1);
    assert!(matches!(model_from_bytes(Path::new("m.json"), extra.as_bytes()), Err(Error::Json { .. })));
    let m = model_from_bytes(Path::new("m.json"), text.as_bytes()).unwrap();
    assert!(m.params.require_target(Target::SigmaMdg).is_err());
}
