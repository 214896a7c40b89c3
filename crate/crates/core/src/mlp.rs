//! The 12→6→1 regression network.
//!
//! `y = w2 · tanh(W1·z + b1) + b2`, trained on squared error in dB with
//! Adam over shuffled mini-batches. One network is trained per target
//! (`σ_mdg` or SNR); each only ever sees its own label column.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{Sample, SplitData, StandardizationStats, Standardized};
use crate::seed::{stream, Namespace};
use crate::{Error, Result, FEATURES};

pub const HIDDEN: usize = 6;
/// `W1` (6×12), `b1` (6), `w2` (6), `b2` (1).
pub const PARAM_COUNT: usize = HIDDEN * FEATURES + 2 * HIDDEN + 1;

/// Divergence guard: abort once training loss has exceeded this multiple of
/// the initial loss for [`DIVERGENCE_PATIENCE`] consecutive epochs.
pub const DIVERGENCE_FACTOR: f64 = 10.0;
pub const DIVERGENCE_PATIENCE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    SigmaMdg,
    Snr,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::SigmaMdg => "sigma_mdg",
            Target::Snr => "snr",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sigma_mdg" => Some(Target::SigmaMdg),
            "snr" => Some(Target::Snr),
            _ => None,
        }
    }

    pub fn label(self, s: &Sample) -> f64 {
        match self {
            Target::SigmaMdg => s.label_sigma_mdg_db,
            Target::Snr => s.label_snr_db,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

impl Activation {
    pub fn name(self) -> &'static str {
        "tanh"
    }

    pub fn from_name(name: &str) -> Option<Self> {
        (name == "tanh").then_some(Activation::Tanh)
    }
}

/// Weights and biases. Also used to hold gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layers {
    pub w1: [[f64; FEATURES]; HIDDEN],
    pub b1: [f64; HIDDEN],
    pub w2: [f64; HIDDEN],
    pub b2: f64,
}

impl Layers {
    pub const ZERO: Layers = Layers { w1: [[0.0; FEATURES]; HIDDEN], b1: [0.0; HIDDEN], w2: [0.0; HIDDEN], b2: 0.0 };

    /// Glorot-uniform weights (`±√(6/(fan_in + fan_out))` per layer), zero
    /// biases.
    pub fn glorot<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let hidden_bound = (6.0 / (FEATURES + HIDDEN) as f64).sqrt();
        let output_bound = (6.0 / (HIDDEN + 1) as f64).sqrt();
        let mut l = Layers::ZERO;
        for row in l.w1.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.random_range(-hidden_bound..=hidden_bound);
            }
        }
        for w in l.w2.iter_mut() {
            *w = rng.random_range(-output_bound..=output_bound);
        }
        l
    }

    pub fn to_flat(&self) -> [f64; PARAM_COUNT] {
        let mut out = [0.0; PARAM_COUNT];
        let mut it = out.iter_mut();
        for v in self.w1.iter().flatten().chain(&self.b1).chain(&self.w2).chain(core::iter::once(&self.b2)) {
            *it.next().unwrap() = *v;
        }
        out
    }

    pub fn from_flat(flat: &[f64; PARAM_COUNT]) -> Self {
        let mut l = Layers::ZERO;
        let mut it = flat.iter().copied();
        for v in l.w1.iter_mut().flatten().chain(l.b1.iter_mut()).chain(l.w2.iter_mut()) {
            *v = it.next().unwrap();
        }
        l.b2 = it.next().unwrap();
        l
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }

    fn hidden(&self, z: &Standardized) -> [f64; HIDDEN] {
        let mut h = [0.0; HIDDEN];
        for (j, hj) in h.iter_mut().enumerate() {
            let mut a = self.b1[j];
            for (w, x) in self.w1[j].iter().zip(&z.0) {
                a += w * x;
            }
            *hj = a.tanh();
        }
        h
    }

    fn output(&self, hidden: &[f64; HIDDEN]) -> f64 {
        let mut y = self.b2;
        for (w, h) in self.w2.iter().zip(hidden) {
            y += w * h;
        }
        y
    }

    /// Network output for standardized input.
    pub fn forward(&self, z: &Standardized) -> f64 {
        self.output(&self.hidden(z))
    }

    /// Gradient of `(forward(z) − target)²` and the loss itself.
    pub fn backward(&self, z: &Standardized, target: f64) -> (f64, Layers) {
        let hidden = self.hidden(z);
        let err = self.output(&hidden) - target;
        let d_out = 2.0 * err;
        let mut g = Layers::ZERO;
        g.b2 = d_out;
        for j in 0..HIDDEN {
            g.w2[j] = d_out * hidden[j];
            let d_pre = d_out * self.w2[j] * (1.0 - hidden[j] * hidden[j]);
            g.b1[j] = d_pre;
            for (gw, x) in g.w1[j].iter_mut().zip(&z.0) {
                *gw = d_pre * x;
            }
        }
        (err * err, g)
    }
}

/// A trained (or freshly initialized) network for one target, with the
/// standardization it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Layers,
    pub activation: Activation,
    pub stats: StandardizationStats,
    pub target: Target,
}

impl MlpParams {
    pub fn init<R: Rng + ?Sized>(rng: &mut R, target: Target, stats: StandardizationStats) -> Self {
        MlpParams { layers: Layers::glorot(rng), activation: Activation::Tanh, stats, target }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.layers.is_finite() {
            return Err(Error::NonFinite("network parameters"));
        }
        self.stats.validate()
    }

    pub fn forward(&self, z: &Standardized) -> f64 {
        self.layers.forward(z)
    }

    /// Estimate from raw (unstandardized) features.
    pub fn predict(&self, raw: &[f64]) -> Result<f64> {
        let raw: &[f64; FEATURES] =
            raw.try_into().map_err(|_| Error::DimensionMismatch { expected: FEATURES, found: raw.len() })?;
        Ok(self.layers.forward(&self.stats.apply(raw)))
    }

    /// Fails unless this network was trained for `expected`.
    pub fn require_target(&self, expected: Target) -> Result<()> {
        if self.target == expected {
            Ok(())
        } else {
            Err(Error::TargetMismatch { expected: expected.name(), found: self.target.name() })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub shuffle_seed: u64,
    pub init_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 500,
            batch_size: 5,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            shuffle_seed: 1,
            init_seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch_size must be at least 1".into()));
        }
        let rates = [self.learning_rate, self.adam_epsilon];
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidConfig("learning_rate and adam_epsilon must be positive".into()));
        }
        for b in [self.adam_beta1, self.adam_beta2] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidConfig("Adam betas must lie in [0, 1)".into()));
            }
        }
        Ok(())
    }
}

/// Per-epoch mean squared errors (dB² of the target).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub held_out_loss: Vec<f64>,
}

/// Mean squared error of `layers` over a labelled set.
pub fn mse(layers: &Layers, inputs: &[Standardized], labels: &[f64]) -> f64 {
    let total: f64 = inputs
        .iter()
        .zip(labels)
        .map(|(z, y)| {
            let e = layers.forward(z) - y;
            e * e
        })
        .sum();
    total / inputs.len() as f64
}

struct Adam {
    m: [f64; PARAM_COUNT],
    v: [f64; PARAM_COUNT],
    beta1_t: f64,
    beta2_t: f64,
}

impl Adam {
    fn new() -> Self {
        Adam { m: [0.0; PARAM_COUNT], v: [0.0; PARAM_COUNT], beta1_t: 1.0, beta2_t: 1.0 }
    }

    fn step(&mut self, theta: &mut [f64; PARAM_COUNT], grad: &[f64; PARAM_COUNT], cfg: &TrainConfig) {
        self.beta1_t *= cfg.adam_beta1;
        self.beta2_t *= cfg.adam_beta2;
        let c1 = 1.0 - self.beta1_t;
        let c2 = 1.0 - self.beta2_t;
        for i in 0..PARAM_COUNT {
            let g = grad[i];
            self.m[i] = cfg.adam_beta1 * self.m[i] + (1.0 - cfg.adam_beta1) * g;
            self.v[i] = cfg.adam_beta2 * self.v[i] + (1.0 - cfg.adam_beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            theta[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
        }
    }
}

/// Mini-batch Adam on squared error, starting from `init`.
///
/// Every epoch visits the training set in a fresh order drawn from
/// `(shuffle_seed, epoch)`; the final partial batch is kept. Gradients are
/// summed in a fixed order, so the result is bit-reproducible.
pub fn train_layers(
    init: Layers,
    inputs: &[Standardized],
    labels: &[f64],
    held_inputs: &[Standardized],
    held_labels: &[f64],
    cfg: &TrainConfig,
) -> Result<(Layers, TrainHistory)> {
    cfg.validate()?;
    if inputs.is_empty() || held_inputs.is_empty() {
        return Err(Error::TooFewSamples { found: inputs.len().min(held_inputs.len()), minimum: 1 });
    }
    for (a, b) in [(inputs.len(), labels.len()), (held_inputs.len(), held_labels.len())] {
        if a != b {
            return Err(Error::DimensionMismatch { expected: a, found: b });
        }
    }

    let mut theta = init.to_flat();
    let mut adam = Adam::new();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = TrainHistory::default();
    let initial = mse(&init, inputs, labels);
    let mut above = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut stream(cfg.shuffle_seed, Namespace::Shuffle, epoch as u64));
        for batch in order.chunks(cfg.batch_size) {
            let layers = Layers::from_flat(&theta);
            let mut grad = [0.0; PARAM_COUNT];
            for &i in batch {
                let (_, g) = layers.backward(&inputs[i], labels[i]);
                for (acc, gi) in grad.iter_mut().zip(g.to_flat()) {
                    *acc += gi;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut theta, &grad, cfg);
        }

        let layers = Layers::from_flat(&theta);
        let train_loss = mse(&layers, inputs, labels);
        history.train_loss.push(train_loss);
        history.held_out_loss.push(mse(&layers, held_inputs, held_labels));

        if !train_loss.is_finite() {
            return Err(Error::Diverged { epoch, loss: train_loss, initial });
        }
        if train_loss > DIVERGENCE_FACTOR * initial {
            above += 1;
            if above >= DIVERGENCE_PATIENCE {
                return Err(Error::Diverged { epoch, loss: train_loss, initial });
            }
        } else {
            above = 0;
        }
    }
    Ok((Layers::from_flat(&theta), history))
}

/// Trains the `target` network on a split. Only `target`'s labels are read.
pub fn train(split: &SplitData, target: Target, cfg: &TrainConfig) -> Result<(MlpParams, TrainHistory)> {
    let inputs = split.train.inputs()?;
    let held = split.test.inputs()?;
    let labels: Vec<f64> = split.train.samples().iter().map(|s| target.label(s)).collect();
    let held_labels: Vec<f64> = split.test.samples().iter().map(|s| target.label(s)).collect();
    let mut params = MlpParams::init(&mut stream(cfg.init_seed, Namespace::Init, 0), target, split.stats);
    let (layers, history) = train_layers(params.layers, &inputs, &labels, &held, &held_labels, cfg)?;
    params.layers = layers;
    Ok((params, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_stats() -> StandardizationStats {
        StandardizationStats { mean: [0.0; FEATURES], std: [1.0; FEATURES] }
    }

    #[test]
    fn flat_round_trip() {
        let l = Layers::glorot(&mut stream(3, Namespace::Init, 0));
        assert_eq!(Layers::from_flat(&l.to_flat()), l);
        assert_eq!(l.to_flat()[PARAM_COUNT - 1], 0.0);
    }

    #[test]
    fn init_properties() {
        let a = MlpParams::init(&mut stream(1, Namespace::Init, 0), Target::Snr, unit_stats());
        let b = MlpParams::init(&mut stream(1, Namespace::Init, 0), Target::Snr, unit_stats());
        let c = MlpParams::init(&mut stream(2, Namespace::Init, 0), Target::Snr, unit_stats());
        assert_eq!(a, b);
        assert_ne!(a.layers, c.layers);
        let bound = (6.0f64 / 18.0).sqrt();
        assert!(a.layers.w1.iter().flatten().all(|w| w.abs() <= bound));
        assert!(bound < 0.578);
        assert!(a.layers.b1.iter().all(|&b| b == 0.0) && a.layers.b2 == 0.0);
    }

    #[test]
    fn forward_closed_forms() {
        let mut l = Layers::ZERO;
        l.b2 = 3.25;
        assert_eq!(l.forward(&Standardized([1.7; FEATURES])), 3.25);

        let mut l = Layers::glorot(&mut stream(4, Namespace::Init, 0));
        l.b1 = [0.1, -0.2, 0.3, -0.4, 0.5, -0.6];
        l.b2 = -0.75;
        let expected: f64 = l.w2.iter().zip(&l.b1).map(|(w, b)| w * b.tanh()).sum::<f64>() + l.b2;
        assert!((l.forward(&Standardized([0.0; FEATURES])) - expected).abs() < 1e-15);
    }

    #[test]
    fn gradient_at_minimum_is_zero() {
        let l = Layers::glorot(&mut stream(5, Namespace::Init, 0));
        let z = Standardized([0.3; FEATURES]);
        let (loss, g) = l.backward(&z, l.forward(&z));
        assert_eq!(loss, 0.0);
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
        let (_, g) = l.backward(&z, l.forward(&z) - 1.5);
        assert_eq!(g.b2, 3.0);
    }

    #[test]
    fn predict_checks_width_and_target() {
        let p = MlpParams::init(&mut stream(1, Namespace::Init, 0), Target::SigmaMdg, unit_stats());
        assert!(matches!(p.predict(&[0.0; 11]), Err(Error::DimensionMismatch { .. })));
        assert!(p.predict(&[0.0; 12]).is_ok());
        assert!(p.require_target(Target::SigmaMdg).is_ok());
        assert!(matches!(p.require_target(Target::Snr), Err(Error::TargetMismatch { .. })));
    }

    #[test]
    fn memorizes_single_sample() {
        let init = Layers::glorot(&mut stream(6, Namespace::Init, 0));
        let z = [Standardized([0.5, -1.0, 0.2, 0.0, 1.1, -0.3, 0.7, 0.1, -0.8, 0.4, 0.9, -1.2])];
        let (_, hist) = train_layers(init, &z, &[1.0], &z, &[1.0], &TrainConfig::default()).unwrap();
        assert_eq!(hist.train_loss.len(), 500);
        assert!(*hist.train_loss.last().unwrap() <= 1e-6, "{:?}", hist.train_loss.last());
    }

    #[test]
    fn rejects_bad_training_inputs() {
        let z = [Standardized([0.0; FEATURES])];
        let cfg = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(train_layers(Layers::ZERO, &z, &[1.0], &z, &[1.0], &cfg).is_err());
        assert!(train_layers(Layers::ZERO, &[], &[], &z, &[1.0], &TrainConfig::default()).is_err());
    }

    #[test]
    fn divergence_guard_trips() {
        // A huge learning rate on a steep target blows the loss up.
        let init = Layers::glorot(&mut stream(7, Namespace::Init, 0));
        let inputs: Vec<Standardized> = (0..20).map(|i| Standardized([i as f64 * 0.1; FEATURES])).collect();
        let labels: Vec<f64> = (0..20).map(|i| i as f64 * 0.01).collect();
        let cfg = TrainConfig { learning_rate: 1e6, epochs: 200, ..TrainConfig::default() };
        let r = train_layers(init, &inputs, &labels, &inputs, &labels, &cfg);
        assert!(matches!(r, Err(Error::Diverged { .. })), "{r:?}");
    }
}
