use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ndarray::Array2;
use thiserror::Error;

const MAGIC: &[u8; 8] = b"MPEMBED\0";
const VERSION: u32 = 1;
const NO_ATOM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Node,
    Graph,
}

/// Which molecule (and atom, for node rows) a matrix row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RowKey {
    Molecule(usize),
    Atom { molecule: usize, atom: usize },
}

impl RowKey {
    pub fn molecule(self) -> usize {
        match self {
            RowKey::Molecule(m) | RowKey::Atom { molecule: m, .. } => m,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub values: Array2<f64>,
    pub level: Level,
    pub layer_index: u32,
    pub index: Vec<RowKey>,
    pub provenance: String,
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("not an embedding file")]
    BadMagic,
    #[error("unsupported embedding file version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown level code {0}")]
    BadLevel(u8),
    #[error("file truncated")]
    Truncated,
    #[error("{0} unexpected bytes after the index map")]
    TrailingBytes(usize),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("index map has {index} entries for {rows} rows")]
    IndexLength { index: usize, rows: usize },
    #[error("index map repeats {0:?}")]
    DuplicateKey(RowKey),
    #[error("index entry {0:?} does not fit a {1:?}-level matrix")]
    LevelMismatch(RowKey, Level),
    #[error("provenance is not UTF-8")]
    BadProvenance,
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl EmbeddingMatrix {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Every row finite and the index map total, injective and level-consistent.
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.index.len() != self.values.nrows() {
            return Err(EmbeddingError::IndexLength {
                index: self.index.len(),
                rows: self.values.nrows(),
            });
        }
        for ((row, col), v) in self.values.indexed_iter() {
            if !v.is_finite() {
                return Err(EmbeddingError::NonFinite { row, col });
            }
        }
        let mut seen = HashSet::with_capacity(self.index.len());
        for &key in &self.index {
            let fits = matches!(
                (key, self.level),
                (RowKey::Molecule(_), Level::Graph) | (RowKey::Atom { .. }, Level::Node)
            );
            if !fits {
                return Err(EmbeddingError::LevelMismatch(key, self.level));
            }
            if !seen.insert(key) {
                return Err(EmbeddingError::DuplicateKey(key));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (n, d) = self.values.dim();
        let mut out = Vec::with_capacity(64 + self.provenance.len() + 8 * n * (d + 2));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(match self.level {
            Level::Node => 0,
            Level::Graph => 1,
        });
        out.extend_from_slice(&self.layer_index.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&(d as u64).to_le_bytes());
        out.extend_from_slice(&(self.provenance.len() as u32).to_le_bytes());
        out.extend_from_slice(self.provenance.as_bytes());
        for v in self.values.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for key in &self.index {
            let (m, a) = match *key {
                RowKey::Molecule(m) => (m as u64, NO_ATOM),
                RowKey::Atom { molecule, atom } => (molecule as u64, atom as u64),
            };
            out.extend_from_slice(&m.to_le_bytes());
            out.extend_from_slice(&a.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<EmbeddingMatrix, EmbeddingError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(EmbeddingError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(EmbeddingError::UnsupportedVersion(version));
        }
        let level = match r.take(1)?[0] {
            0 => Level::Node,
            1 => Level::Graph,
            other => return Err(EmbeddingError::BadLevel(other)),
        };
        let layer_index = r.u32()?;
        let n = r.u64()? as usize;
        let d = r.u64()? as usize;
        let plen = r.u32()? as usize;
        let provenance = String::from_utf8(r.take(plen)?.to_vec()).map_err(|_| EmbeddingError::BadProvenance)?;
        let cells = n.checked_mul(d).ok_or(EmbeddingError::Truncated)?;
        if cells.checked_mul(8).is_none_or(|b| b > r.remaining()) {
            return Err(EmbeddingError::Truncated);
        }
        let mut values = Vec::with_capacity(cells);
        for _ in 0..cells {
            values.push(f64::from_le_bytes(r.take(8)?.try_into().unwrap()));
        }
        let mut index = Vec::with_capacity(n);
        for _ in 0..n {
            let m = r.u64()? as usize;
            let a = r.u64()?;
            index.push(if a == NO_ATOM {
                RowKey::Molecule(m)
            } else {
                RowKey::Atom {
                    molecule: m,
                    atom: a as usize,
                }
            });
        }
        if r.remaining() > 0 {
            return Err(EmbeddingError::TrailingBytes(r.remaining()));
        }
        let m = EmbeddingMatrix {
            values: Array2::from_shape_vec((n, d), values).expect("length checked"),
            level,
            layer_index,
            index,
            provenance,
        };
        m.validate()?;
        Ok(m)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, k: usize) -> Result<&'a [u8], EmbeddingError> {
        if k > self.remaining() {
            return Err(EmbeddingError::Truncated);
        }
        let s = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, EmbeddingError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, EmbeddingError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn save_embeddings(m: &EmbeddingMatrix, path: &Path) -> Result<(), EmbeddingError> {
    m.validate()?;
    fs::write(path, m.to_bytes())?;
    Ok(())
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix, EmbeddingError> {
    EmbeddingMatrix::from_bytes(&fs::read(path)?)
}

/// `molecule,atom,d0,d1,...`; `atom` is empty for graph-level rows.
pub fn write_embeddings_csv<W: Write>(m: &EmbeddingMatrix, mut out: W) -> io::Result<()> {
    let dims: Vec<String> = (0..m.dim()).map(|j| format!("d{j}")).collect();
    writeln!(out, "molecule,atom,{}", dims.join(","))?;
    for (key, row) in m.index.iter().zip(m.values.rows()) {
        match *key {
            RowKey::Molecule(mol) => write!(out, "{mol},")?,
            RowKey::Atom { molecule, atom } => write!(out, "{molecule},{atom}")?,
        }
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingMatrix {
        EmbeddingMatrix {
            values: Array2::from_shape_vec((2, 3), vec![0.1, -2.5, 1e-300, 3.0, f64::MIN_POSITIVE, 7.25]).unwrap(),
            level: Level::Node,
            layer_index: 2,
            index: vec![RowKey::Atom { molecule: 0, atom: 0 }, RowKey::Atom { molecule: 0, atom: 1 }],
            provenance: "test".into(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.emb");
        let m = sample();
        save_embeddings(&m, &path).unwrap();
        let back = load_embeddings(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn truncated_and_corrupt_files_fail() {
        let bytes = sample().to_bytes();
        for cut in [0, 5, 20, bytes.len() - 1] {
            assert!(EmbeddingMatrix::from_bytes(&bytes[..cut]).is_err(), "cut {cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(EmbeddingMatrix::from_bytes(&bad), Err(EmbeddingError::BadMagic)));
        let mut nan = sample();
        nan.values[[1, 1]] = f64::NAN;
        assert!(matches!(
            EmbeddingMatrix::from_bytes(&nan.to_bytes()),
            Err(EmbeddingError::NonFinite { row: 1, col: 1 })
        ));
    }

    #[test]
    fn empty_matrix() {
        let m = EmbeddingMatrix {
            values: Array2::zeros((0, 4)),
            level: Level::Graph,
            layer_index: 0,
            index: Vec::new(),
            provenance: String::new(),
        };
        assert_eq!(EmbeddingMatrix::from_bytes(&m.to_bytes()).unwrap(), m);
    }

    #[test]
    fn index_checks() {
        let mut m = sample();
        m.index[1] = m.index[0];
        assert!(matches!(m.validate(), Err(EmbeddingError::DuplicateKey(_))));
        m.index[1] = RowKey::Molecule(3);
        assert!(matches!(m.validate(), Err(EmbeddingError::LevelMismatch(..))));
    }

    #[test]
    fn csv_export() {
        let mut out = Vec::new();
        write_embeddings_csv(&sample(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next(), Some("molecule,atom,d0,d1,d2"));
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,0.1,-2.5,"));
    }
}
