//! MLP probes trained on frozen embeddings.

mod gradcheck;
mod train;

pub use gradcheck::{gradient_check, GradCheckReport};
pub use train::{
    adam_step, evaluate_probe, train_probe, AdamState, EpochRecord, ProbeScores, TrainOutcome,
};

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const MAX_HIDDEN_LAYERS: usize = 3;
pub const WIDTH_RANGE: std::ops::RangeInclusive<usize> = 100..=1200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("hidden_layers must be at most {MAX_HIDDEN_LAYERS}, got {0}")]
    TooDeep(usize),
    #[error("width must lie in 100..=1200, got {0}")]
    WidthOutOfRange(usize),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("input and output dimensions must be at least 1")]
    ZeroDim,
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("targets do not fit a {0:?} probe")]
    TargetKind(TaskKind),
    #[error("{features} feature rows but {targets} targets")]
    LengthMismatch { features: usize, targets: usize },
    #[error("features have {got} columns, probe expects {expected}")]
    FeatureDim { got: usize, expected: usize },
    #[error("non-finite feature at row {0}")]
    NonFiniteFeature(usize),
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),
    #[error("class label {label} out of range for {classes} classes")]
    ClassOutOfRange { label: usize, classes: usize },
    #[error("malformed model file: {0}")]
    BadModelFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Mean squared error on one real output.
    Regression,
    /// Binary cross-entropy on one logit.
    BinaryClassification,
    /// Categorical cross-entropy over `n` classes.
    Multiclass(usize),
}

impl TaskKind {
    pub fn output_dim(self) -> usize {
        match self {
            TaskKind::Regression | TaskKind::BinaryClassification => 1,
            TaskKind::Multiclass(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProbeConfig {
    pub hidden_layers: usize,
    pub width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub task_kind: TaskKind,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            hidden_layers: 1,
            width: 600,
            epochs: 100,
            learning_rate: 1e-3,
            batch_size: 256,
            seed: 0,
            task_kind: TaskKind::Regression,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        if self.hidden_layers > MAX_HIDDEN_LAYERS {
            return Err(ProbeError::TooDeep(self.hidden_layers));
        }
        if self.hidden_layers > 0 && !WIDTH_RANGE.contains(&self.width) {
            return Err(ProbeError::WidthOutOfRange(self.width));
        }
        if self.epochs == 0 {
            return Err(ProbeError::NotPositive("epochs"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ProbeError::NotPositive("learning_rate"));
        }
        if self.batch_size == 0 {
            return Err(ProbeError::NotPositive("batch_size"));
        }
        if let TaskKind::Multiclass(n) = self.task_kind {
            if n < 2 {
                return Err(ProbeError::TargetKind(self.task_kind));
            }
        }
        Ok(())
    }
}

/// Targets of one split, matching the probe's task kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Real(Vec<f64>),
    Binary(Vec<bool>),
    Class(Vec<usize>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Real(v) => v.len(),
            Targets::Binary(v) => v.len(),
            Targets::Class(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> Targets {
        match self {
            Targets::Real(v) => Targets::Real(idx.iter().map(|&i| v[i]).collect()),
            Targets::Binary(v) => Targets::Binary(idx.iter().map(|&i| v[i]).collect()),
            Targets::Class(v) => Targets::Class(idx.iter().map(|&i| v[i]).collect()),
        }
    }

    fn check(&self, kind: TaskKind) -> Result<(), ProbeError> {
        match (self, kind) {
            (Targets::Real(_), TaskKind::Regression) | (Targets::Binary(_), TaskKind::BinaryClassification) => Ok(()),
            (Targets::Class(v), TaskKind::Multiclass(n)) => match v.iter().find(|&&c| c >= n) {
                Some(&label) => Err(ProbeError::ClassOutOfRange { label, classes: n }),
                None => Ok(()),
            },
            _ => Err(ProbeError::TargetKind(kind)),
        }
    }
}

/// Features (one row per example) with aligned targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeData {
    pub x: Array2<f64>,
    pub y: Targets,
}

impl ProbeData {
    pub fn new(x: Array2<f64>, y: Targets) -> Result<ProbeData, ProbeError> {
        if x.nrows() != y.len() {
            return Err(ProbeError::LengthMismatch {
                features: x.nrows(),
                targets: y.len(),
            });
        }
        if let Some((i, _)) = x.rows().into_iter().enumerate().find(|(_, r)| r.iter().any(|v| !v.is_finite())) {
            return Err(ProbeError::NonFiniteFeature(i));
        }
        Ok(ProbeData { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> ProbeData {
        ProbeData {
            x: self.x.select(Axis(0), idx),
            y: self.y.select(idx),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `inputs x outputs`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Dense layers with ReLU between them; the last layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub layers: Vec<Dense>,
    pub task: TaskKind,
}

/// Parameter gradients, one entry per dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w: Vec<Array2<f64>>,
    pub b: Vec<Array1<f64>>,
}

pub(crate) fn block_name(layer: usize, bias: bool) -> String {
    format!("layer{layer}.{}", if bias { "bias" } else { "weight" })
}

/// Glorot-uniform weights, zero biases.
pub fn build_probe(config: &ProbeConfig, input_dim: usize, output_dim: usize) -> Result<ProbeModel, ProbeError> {
    config.validate()?;
    if input_dim == 0 || output_dim == 0 {
        return Err(ProbeError::ZeroDim);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dims = vec![input_dim];
    dims.extend(std::iter::repeat_n(config.width, config.hidden_layers));
    dims.push(output_dim);
    let layers = dims
        .windows(2)
        .map(|w| {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            Dense {
                w: Array2::from_shape_fn((w[0], w[1]), |_| rng.random_range(-limit..limit)),
                b: Array1::zeros(w[1]),
            }
        })
        .collect();
    Ok(ProbeModel {
        layers,
        task: config.task_kind,
    })
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

impl ProbeModel {
    pub fn input_dim(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.w.ncols())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Pre-activations of every layer (the last entry is the output logits).
    pub(crate) fn pre_activations(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut zs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let z = if i == 0 {
                x.dot(&l.w) + &l.b
            } else {
                relu(&zs[i - 1]).dot(&l.w) + &l.b
            };
            zs.push(z);
        }
        zs
    }

    /// Raw outputs: regression values, binary logits or class logits.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.pre_activations(x).pop().expect("at least one layer")
    }

    /// Mean loss over the rows of `x`.
    pub fn loss(&self, x: ArrayView2<f64>, y: &Targets) -> f64 {
        loss_and_delta(&self.forward(x), y).0
    }

    /// Mean loss and its gradient with respect to every parameter.
    pub fn loss_and_gradients(&self, x: ArrayView2<f64>, y: &Targets) -> (f64, Gradients) {
        let zs = self.pre_activations(x);
        let (loss, mut delta) = loss_and_delta(zs.last().unwrap(), y);
        let n = self.layers.len();
        let mut gw = vec![Array2::zeros((0, 0)); n];
        let mut gb = vec![Array1::zeros(0); n];
        for i in (0..n).rev() {
            let input = if i == 0 { x.to_owned() } else { relu(&zs[i - 1]) };
            gw[i] = input.t().dot(&delta);
            gb[i] = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].w.t());
                back.zip_mut_with(&zs[i - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0
                    }
                });
                delta = back;
            }
        }
        (loss, Gradients { w: gw, b: gb })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        let (code, classes) = match self.task {
            TaskKind::Regression => (0u32, 1u64),
            TaskKind::BinaryClassification => (1, 1),
            TaskKind::Multiclass(n) => (2, n as u64),
        };
        out.extend_from_slice(&code.to_le_bytes());
        out.extend_from_slice(&classes.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.w.nrows() as u64).to_le_bytes());
            out.extend_from_slice(&(l.w.ncols() as u64).to_le_bytes());
            for v in l.w.iter().chain(l.b.iter()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ProbeModel, ProbeError> {
        let bad = |m: &str| ProbeError::BadModelFile(m.to_string());
        let mut pos = 0usize;
        let mut take = |k: usize| -> Result<&[u8], ProbeError> {
            let s = bytes.get(pos..pos + k).ok_or_else(|| bad("truncated"))?;
            pos += k;
            Ok(s)
        };
        if take(8)? != MODEL_MAGIC {
            return Err(bad("magic"));
        }
        let code = u32::from_le_bytes(take(4)?.try_into().unwrap());
        let classes = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        let task = match code {
            0 => TaskKind::Regression,
            1 => TaskKind::BinaryClassification,
            2 => TaskKind::Multiclass(classes),
            _ => return Err(bad("task code")),
        };
        let count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let mut layers = Vec::with_capacity(count.min(16));
        for _ in 0..count {
            let rows = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
            let cols = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
            let cells = rows.checked_mul(cols).and_then(|c| c.checked_add(cols)).ok_or_else(|| bad("shape"))?;
            let raw = take(cells.checked_mul(8).ok_or_else(|| bad("shape"))?)?;
            let vals: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            layers.push(Dense {
                w: Array2::from_shape_vec((rows, cols), vals[..rows * cols].to_vec()).unwrap(),
                b: Array1::from(vals[rows * cols..].to_vec()),
            });
        }
        if pos != bytes.len() {
            return Err(bad("trailing bytes"));
        }
        if layers.is_empty() || layers.windows(2).any(|w| w[0].w.ncols() != w[1].w.nrows()) {
            return Err(bad("layer shapes do not chain"));
        }
        Ok(ProbeModel { layers, task })
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<ProbeModel, ProbeError> {
        let bytes = fs::read(path).map_err(|e| ProbeError::BadModelFile(e.to_string()))?;
        ProbeModel::from_bytes(&bytes)
    }
}

const MODEL_MAGIC: &[u8; 8] = b"MPPROBE\0";

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean loss over rows and its derivative with respect to the outputs.
pub(crate) fn loss_and_delta(out: &Array2<f64>, y: &Targets) -> (f64, Array2<f64>) {
    let n = out.nrows().max(1) as f64;
    let mut delta = Array2::zeros(out.dim());
    let mut loss = 0.0;
    match y {
        Targets::Real(t) => {
            for (i, &target) in t.iter().enumerate() {
                let r = out[[i, 0]] - target;
                loss += r * r;
                delta[[i, 0]] = 2.0 * r / n;
            }
        }
        Targets::Binary(t) => {
            for (i, &label) in t.iter().enumerate() {
                let z = out[[i, 0]];
                let yv = if label { 1.0 } else { 0.0 };
                loss += z.max(0.0) + (-z.abs()).exp().ln_1p() - yv * z;
                delta[[i, 0]] = (sigmoid(z) - yv) / n;
            }
        }
        Targets::Class(t) => {
            for (i, &label) in t.iter().enumerate() {
                let row = out.row(i);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
                loss += max + sum.ln() - row[label];
                for (j, &z) in row.iter().enumerate() {
                    let p = (z - max).exp() / sum;
                    delta[[i, j]] = (p - if j == label { 1.0 } else { 0.0 }) / n;
                }
            }
        }
    }
    (loss / n, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let linear = build_probe(
            &ProbeConfig {
                hidden_layers: 0,
                ..Default::default()
            },
            10,
            1,
        )
        .unwrap();
        assert_eq!(linear.layers.len(), 1);
        assert_eq!(linear.layers[0].w.dim(), (10, 1));
        let one = build_probe(&ProbeConfig::default(), 10, 3).unwrap();
        let dims: Vec<_> = one.layers.iter().map(|l| l.w.dim()).collect();
        assert_eq!(dims, vec![(10, 600), (600, 3)]);
        let deep = ProbeConfig {
            hidden_layers: 4,
            ..Default::default()
        };
        assert_eq!(build_probe(&deep, 10, 1), Err(ProbeError::TooDeep(4)));
        let narrow = ProbeConfig {
            width: 50,
            ..Default::default()
        };
        assert_eq!(build_probe(&narrow, 10, 1), Err(ProbeError::WidthOutOfRange(50)));
        assert_eq!(build_probe(&ProbeConfig::default(), 0, 1), Err(ProbeError::ZeroDim));
    }

    #[test]
    fn seeded_init() {
        let a = build_probe(&ProbeConfig::default(), 5, 2).unwrap();
        let b = build_probe(&ProbeConfig::default(), 5, 2).unwrap();
        assert_eq!(a, b);
        let c = build_probe(&ProbeConfig { seed: 1, ..Default::default() }, 5, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn model_bytes_round_trip() {
        let cfg = ProbeConfig {
            hidden_layers: 2,
            width: 100,
            task_kind: TaskKind::Multiclass(7),
            ..Default::default()
        };
        let m = build_probe(&cfg, 4, 7).unwrap();
        let back = ProbeModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        let bytes = m.to_bytes();
        assert!(ProbeModel::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn target_validation() {
        let x = Array2::zeros((2, 1));
        assert!(ProbeData::new(x.clone(), Targets::Real(vec![1.0])).is_err());
        let mut bad = x.clone();
        bad[[1, 0]] = f64::INFINITY;
        assert_eq!(
            ProbeData::new(bad, Targets::Real(vec![1.0, 2.0])),
            Err(ProbeError::NonFiniteFeature(1))
        );
        assert!(Targets::Class(vec![7]).check(TaskKind::Multiclass(7)).is_err());
        assert!(Targets::Real(vec![]).check(TaskKind::BinaryClassification).is_err());
    }
}
