//! Randomly initialised GIN encoder and embedding matrices.

mod io;

pub use io::{load_embeddings, save_embeddings, write_embeddings_csv, EmbeddingError, EmbeddingMatrix, Level, RowKey};

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::molgraph::{BondOrder, MolecularGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("encoder needs at least one layer")]
    NoLayers,
    #[error("hidden_dim must be positive")]
    ZeroHiddenDim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    Mean,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    pub seed: u64,
    pub readout: Readout,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            layers: 5,
            hidden_dim: 300,
            seed: 0,
            readout: Readout::Mean,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.layers == 0 {
            return Err(ConfigError::NoLayers);
        }
        if self.hidden_dim == 0 {
            return Err(ConfigError::ZeroHiddenDim);
        }
        Ok(())
    }
}

/// Integer coding of atom and bond features.
pub struct FeatureVocabulary;

impl FeatureVocabulary {
    /// Element ids are atomic numbers; 0 is reserved for unknown elements.
    pub const ELEMENTS: usize = 120;
    pub const UNKNOWN_ELEMENT: usize = 0;
    /// Formal charge buckets: <=-2, -1, 0, +1, >=+2.
    pub const CHARGES: usize = 5;
    pub const BONDS: usize = 4;

    pub fn element_id(atomic_number: u8) -> usize {
        let z = atomic_number as usize;
        if (1..Self::ELEMENTS).contains(&z) {
            z
        } else {
            Self::UNKNOWN_ELEMENT
        }
    }

    pub fn charge_bucket(charge: i8) -> usize {
        (charge.clamp(-2, 2) + 2) as usize
    }

    pub fn bond_id(order: BondOrder) -> usize {
        match order {
            BondOrder::Single => 0,
            BondOrder::Double => 1,
            BondOrder::Triple => 2,
            BondOrder::Aromatic => 3,
        }
    }
}

struct GinLayer {
    edge: Array2<f64>,
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
}

/// Immutable after construction; `encode` may be called from many threads.
pub struct Encoder {
    config: EncoderConfig,
    element: Array2<f64>,
    aromatic: Array2<f64>,
    charge: Array2<f64>,
    layers: Vec<GinLayer>,
}

/// Node states of one molecule: `input` is layer 0, `layers[t - 1]` is layer t.
#[derive(Debug, Clone)]
pub struct EncodedMolecule {
    pub input: Array2<f64>,
    pub layers: Vec<Array2<f64>>,
    pub graph: Array1<f64>,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..limit))
}

fn readout(h: &Array2<f64>, how: Readout) -> Array1<f64> {
    let sum = h.sum_axis(Axis(0));
    match how {
        Readout::Sum => sum,
        Readout::Mean => sum / h.nrows().max(1) as f64,
    }
}

/// Glorot-uniform weights and zero biases drawn from a ChaCha stream seeded
/// by `config.seed`.
pub fn init_random(config: &EncoderConfig) -> Result<Encoder, ConfigError> {
    config.validate()?;
    let d = config.hidden_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let element = glorot(&mut rng, FeatureVocabulary::ELEMENTS, d);
    let aromatic = glorot(&mut rng, 2, d);
    let charge = glorot(&mut rng, FeatureVocabulary::CHARGES, d);
    let layers = (0..config.layers)
        .map(|_| GinLayer {
            edge: glorot(&mut rng, FeatureVocabulary::BONDS, d),
            w1: glorot(&mut rng, d, 2 * d),
            b1: Array1::zeros(2 * d),
            w2: glorot(&mut rng, 2 * d, d),
            b2: Array1::zeros(d),
        })
        .collect();
    Ok(Encoder {
        config: config.clone(),
        element,
        aromatic,
        charge,
        layers,
    })
}

impl Encoder {
    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Order-sensitive fold over the bit patterns of every weight.
    pub fn checksum(&self) -> u64 {
        let mut blocks: Vec<&[f64]> = vec![
            self.element.as_slice().unwrap(),
            self.aromatic.as_slice().unwrap(),
            self.charge.as_slice().unwrap(),
        ];
        for l in &self.layers {
            blocks.extend([
                l.edge.as_slice().unwrap(),
                l.w1.as_slice().unwrap(),
                l.b1.as_slice().unwrap(),
                l.w2.as_slice().unwrap(),
                l.b2.as_slice().unwrap(),
            ]);
        }
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for x in blocks.into_iter().flatten() {
            h = (h ^ x.to_bits()).wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }

    fn input_features(&self, g: &MolecularGraph) -> Array2<f64> {
        let d = self.hidden_dim();
        let mut h = Array2::zeros((g.atom_count(), d));
        for (i, atom) in g.atoms().iter().enumerate() {
            let mut row = h.row_mut(i);
            row += &self.element.row(FeatureVocabulary::element_id(atom.element.atomic_number()));
            row += &self.aromatic.row(atom.aromatic as usize);
            row += &self.charge.row(FeatureVocabulary::charge_bucket(atom.formal_charge));
        }
        h
    }

    /// Runs every layer; `g` must have at least one atom.
    pub fn encode(&self, g: &MolecularGraph) -> EncodedMolecule {
        assert!(!g.is_empty(), "cannot encode an empty molecule");
        let input = self.input_features(g);
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut h = input.clone();
        for (t, layer) in self.layers.iter().enumerate() {
            let mut agg = h.clone();
            for b in g.bonds() {
                let e = layer.edge.row(FeatureVocabulary::bond_id(b.order));
                let (hb, ha) = (&h.row(b.b) + &e, &h.row(b.a) + &e);
                let mut ra = agg.row_mut(b.a);
                ra += &hb;
                let mut rb = agg.row_mut(b.b);
                rb += &ha;
            }
            let mut z = agg.dot(&layer.w1) + &layer.b1;
            z.mapv_inplace(|x| x.max(0.0));
            let mut out = z.dot(&layer.w2) + &layer.b2;
            if t + 1 < self.layers.len() {
                out.mapv_inplace(|x| x.max(0.0));
            }
            layers.push(out.clone());
            h = out;
        }
        let graph = readout(&h, self.config.readout);
        EncodedMolecule { input, layers, graph }
    }

    /// Readout of layer `t` (0 = input features).
    pub fn graph_embedding_at(&self, m: &EncodedMolecule, t: usize) -> Array1<f64> {
        let h = if t == 0 { &m.input } else { &m.layers[t - 1] };
        readout(h, self.config.readout)
    }

    fn provenance(&self) -> String {
        format!(
            "random-gin layers={} hidden_dim={} seed={} readout={:?}",
            self.config.layers, self.config.hidden_dim, self.config.seed, self.config.readout
        )
    }

    fn assemble(&self, encoded: &[EncodedMolecule], ids: &[usize], t: usize) -> (EmbeddingMatrix, EmbeddingMatrix) {
        let d = self.hidden_dim();
        let total_atoms: usize = encoded.iter().map(|m| m.input.nrows()).sum();
        let mut values = Array2::zeros((total_atoms, d));
        let mut index = Vec::with_capacity(total_atoms);
        let mut row = 0;
        for (m, &id) in encoded.iter().zip(ids) {
            let h = if t == 0 { &m.input } else { &m.layers[t - 1] };
            values.slice_mut(ndarray::s![row..row + h.nrows(), ..]).assign(h);
            index.extend((0..h.nrows()).map(|a| RowKey::Atom { molecule: id, atom: a }));
            row += h.nrows();
        }
        let node = EmbeddingMatrix {
            values,
            level: Level::Node,
            layer_index: t as u32,
            index,
            provenance: self.provenance(),
        };
        let mut gvalues = Array2::zeros((encoded.len(), d));
        for (i, m) in encoded.iter().enumerate() {
            gvalues.row_mut(i).assign(&self.graph_embedding_at(m, t));
        }
        let graph = EmbeddingMatrix {
            values: gvalues,
            level: Level::Graph,
            layer_index: t as u32,
            index: ids.iter().map(|&m| RowKey::Molecule(m)).collect(),
            provenance: self.provenance(),
        };
        (node, graph)
    }

    /// Node matrices for layers `0..=T` and graph matrices for layers `0..=T`
    /// over a whole dataset; molecule `i` of `graphs` gets index `ids[i]`.
    pub fn encode_dataset(&self, graphs: &[&MolecularGraph], ids: &[usize]) -> DatasetEmbeddings {
        let encoded: Vec<EncodedMolecule> = graphs.par_iter().map(|g| self.encode(g)).collect();
        let (node, graph) = (0..=self.layers.len()).map(|t| self.assemble(&encoded, ids, t)).unzip();
        DatasetEmbeddings { node, graph }
    }

    /// Node and graph matrices of layer `t` only.
    pub fn encode_layer(&self, graphs: &[&MolecularGraph], ids: &[usize], t: usize) -> (EmbeddingMatrix, EmbeddingMatrix) {
        assert!(t <= self.layers.len(), "layer {t} out of range");
        let encoded: Vec<EncodedMolecule> = graphs.par_iter().map(|g| self.encode(g)).collect();
        self.assemble(&encoded, ids, t)
    }
}

/// `node[t]` and `graph[t]` hold layer `t`, with `t = 0` the input features.
#[derive(Debug, Clone)]
pub struct DatasetEmbeddings {
    pub node: Vec<EmbeddingMatrix>,
    pub graph: Vec<EmbeddingMatrix>,
}
