//! On-disk formats: dataset CSV, model JSON, training history, grid CSV and
//! the JSON reports. All floats are written with 17 significant digits, which
//! round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use mdgnet_core::dataset::{Sample, StandardizationStats};
use mdgnet_core::grid::ErrorGrid;
use mdgnet_core::mlp::{Activation, Layers, MlpParams, Target, TrainConfig, TrainHistory, HIDDEN};
use mdgnet_core::{FEATURES, STREAMS};
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Pretty JSON whose floats carry 17 significant digits.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ExactFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory JSON serialization cannot fail");
    out.push(b'\n');
    out
}

// ---------------------------------------------------------------------------
// Dataset CSV

pub fn dataset_header() -> Vec<String> {
    let mut h: Vec<String> = ["channel_seed", "K", "label_sigma_mdg_db", "label_snr_db"].map(String::from).to_vec();
    h.extend((1..=STREAMS).map(|i| format!("eig_db_{i}")));
    h.extend((1..=STREAMS).map(|i| format!("sinr_db_{i}")));
    h
}

pub fn dataset_to_bytes(samples: &[Sample]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(dataset_header()).expect("write to memory");
    for s in samples {
        let mut row = vec![s.channel_seed.to_string(), s.sections.to_string()];
        row.push(fmt_f64(s.label_sigma_mdg_db));
        row.push(fmt_f64(s.label_snr_db));
        row.extend(s.features.iter().map(|&f| fmt_f64(f)));
        w.write_record(&row).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

pub fn save_dataset(path: &Path, samples: &[Sample]) -> Result<Vec<u8>> {
    let bytes = dataset_to_bytes(samples);
    write_file(path, &bytes)?;
    Ok(bytes)
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: u64, name: &str, text: &str) -> Result<T> {
    text.trim().parse().map_err(|_| Error::Malformed {
        path: path.to_path_buf(),
        line: Some(line),
        message: format!("column {name}: cannot parse {text:?}"),
    })
}

pub fn dataset_from_bytes(path: &Path, bytes: &[u8]) -> Result<Vec<Sample>> {
    let malformed = |line: Option<u64>, message: String| Error::Malformed { path: path.to_path_buf(), line, message };
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(bytes);
    let mut records = r.records();
    let header = match records.next() {
        None => return Err(Error::NoSamples(path.to_path_buf())),
        Some(rec) => rec.map_err(|e| malformed(None, e.to_string()))?,
    };
    let expected = dataset_header();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(malformed(None, format!("expected header {}", expected.join(","))));
    }
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| malformed(e.position().map(|p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != expected.len() {
            return Err(malformed(Some(line), format!("expected {} fields, found {}", expected.len(), rec.len())));
        }
        let mut features = [0.0; FEATURES];
        for (k, f) in features.iter_mut().enumerate() {
            *f = parse_field(path, line, &expected[4 + k], &rec[4 + k])?;
        }
        let s = Sample {
            channel_seed: parse_field(path, line, "channel_seed", &rec[0])?,
            sections: parse_field(path, line, "K", &rec[1])?,
            label_sigma_mdg_db: parse_field(path, line, "label_sigma_mdg_db", &rec[2])?,
            label_snr_db: parse_field(path, line, "label_snr_db", &rec[3])?,
            features,
        };
        if !(s.label_sigma_mdg_db.is_finite() && s.label_snr_db.is_finite() && s.features.iter().all(|f| f.is_finite())) {
            return Err(malformed(Some(line), "non-finite value".into()));
        }
        out.push(s);
    }
    if out.is_empty() {
        return Err(Error::NoSamples(path.to_path_buf()));
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<Sample>> {
    dataset_from_bytes(path, &read_file(path)?)
}

// ---------------------------------------------------------------------------
// Model JSON

#[derive(Debug, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsFile {
    mean: [f64; FEATURES],
    std: [f64; FEATURES],
}

#[derive(Debug, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayersFile {
    #[serde(rename = "W1")]
    w1: [[f64; FEATURES]; HIDDEN],
    b1: [f64; HIDDEN],
    w2: [f64; HIDDEN],
    b2: f64,
}

#[derive(Debug, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    schema_version: u32,
    target: String,
    activation: String,
    stats: StatsFile,
    layers: LayersFile,
    train_fingerprint: String,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: MlpParams,
    pub train_fingerprint: String,
}

/// Hash identifying the training run: target, every training setting and the
/// dataset content.
pub fn train_fingerprint(cfg: &TrainConfig, target: Target, dataset_sha256: &str) -> String {
    let text = format!(
        "target={};epochs={};batch_size={};learning_rate={};adam_beta1={};adam_beta2={};adam_epsilon={};shuffle_seed={};init_seed={};dataset_sha256={}",
        target.name(),
        cfg.epochs,
        cfg.batch_size,
        fmt_f64(cfg.learning_rate),
        fmt_f64(cfg.adam_beta1),
        fmt_f64(cfg.adam_beta2),
        fmt_f64(cfg.adam_epsilon),
        cfg.shuffle_seed,
        cfg.init_seed,
        dataset_sha256,
    );
    sha256_hex(text.as_bytes())
}

pub fn model_to_bytes(model: &SavedModel) -> Vec<u8> {
    let p = &model.params;
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        target: p.target.name().into(),
        activation: p.activation.name().into(),
        stats: StatsFile { mean: p.stats.mean, std: p.stats.std },
        layers: LayersFile { w1: p.layers.w1, b1: p.layers.b1, w2: p.layers.w2, b2: p.layers.b2 },
        train_fingerprint: model.train_fingerprint.clone(),
    };
    to_json_bytes(&file)
}

pub fn model_from_bytes(path: &Path, bytes: &[u8]) -> Result<SavedModel> {
    let json = |source| Error::Json { path: path.to_path_buf(), source };
    let probe: VersionProbe = serde_json::from_slice(bytes).map_err(json)?;
    if probe.schema_version != MODEL_SCHEMA_VERSION {
        return Err(Error::SchemaVersion { path: path.to_path_buf(), found: probe.schema_version, expected: MODEL_SCHEMA_VERSION });
    }
    let file: ModelFile = serde_json::from_slice(bytes).map_err(json)?;
    let bad = |message: String| Error::Malformed { path: path.to_path_buf(), line: None, message };
    let target = Target::from_name(&file.target).ok_or_else(|| bad(format!("unknown target {:?}", file.target)))?;
    let activation =
        Activation::from_name(&file.activation).ok_or_else(|| bad(format!("unknown activation {:?}", file.activation)))?;
    let l = file.layers;
    let params = MlpParams {
        layers: Layers { w1: l.w1, b1: l.b1, w2: l.w2, b2: l.b2 },
        activation,
        stats: StandardizationStats { mean: file.stats.mean, std: file.stats.std },
        target,
    };
    params.validate()?;
    Ok(SavedModel { params, train_fingerprint: file.train_fingerprint })
}

pub fn save_model(path: &Path, model: &SavedModel) -> Result<Vec<u8>> {
    let bytes = model_to_bytes(model);
    write_file(path, &bytes)?;
    Ok(bytes)
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    model_from_bytes(path, &read_file(path)?)
}

// ---------------------------------------------------------------------------
// Training history and grids

pub fn history_to_bytes(h: &TrainHistory) -> Vec<u8> {
    let mut out = String::from("epoch,train_loss_db2,held_out_loss_db2\n");
    for (e, (t, v)) in h.train_loss.iter().zip(&h.held_out_loss).enumerate() {
        let _ = writeln!(out, "{},{},{}", e + 1, fmt_f64(*t), fmt_f64(*v));
    }
    out.into_bytes()
}

pub fn grid_to_bytes(g: &ErrorGrid) -> Vec<u8> {
    let mut out = String::from("sigma_mdg_db,snr_db,mean_signed_error_db,mean_abs_error_db,count\n");
    for (i, &sigma) in g.sigma_axis_db.iter().enumerate() {
        for (j, &snr) in g.snr_axis_db.iter().enumerate() {
            let c = g.cell(i, j);
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(sigma),
                fmt_f64(snr),
                fmt_f64(c.mean_signed_error_db),
                fmt_f64(c.mean_abs_error_db),
                c.count
            );
        }
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 5e-324, f64::MAX] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn header_layout() {
        let h = dataset_header();
        assert_eq!(h.len(), 16);
        assert_eq!(h.join(","), "channel_seed,K,label_sigma_mdg_db,label_snr_db,eig_db_1,eig_db_2,eig_db_3,eig_db_4,eig_db_5,eig_db_6,sinr_db_1,sinr_db_2,sinr_db_3,sinr_db_4,sinr_db_5,sinr_db_6");
    }

    #[test]
    fn json_floats_round_trip() {
        let v: Vec<f64> = vec![0.1, -1.0 / 7.0, 1e-310];
        let bytes = to_json_bytes(&v);
        let back: Vec<f64> = serde_json::from_slice(&bytes).unwrap();
        assert!(v.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
