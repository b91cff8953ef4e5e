//! JSON file formats. Files use 1-based indices; the library is 0-based.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cocycle::TransitiveMap;
use crate::error::{Error, Result};
use crate::jordan::{CentralIdempotent, JordanSpec};
use crate::matalg::CMatrix;
use crate::quasiorder::QuasiOrder;

/// `{"n": 3, "entries": [[[re, im], ...], ...]}`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl From<CMatrix> for MatrixFile {
    fn from(m: CMatrix) -> Self {
        MatrixFile {
            n: m.n(),
            entries: m.rows().into_iter().map(|r| r.into_iter().map(|z| [z.re, z.im]).collect()).collect(),
        }
    }
}

impl TryFrom<MatrixFile> for CMatrix {
    type Error = Error;
    fn try_from(f: MatrixFile) -> Result<Self> {
        if f.entries.len() != f.n {
            return Err(Error::DimensionMismatch { expected: f.n, got: f.entries.len() });
        }
        let rows = f
            .entries
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        CMatrix::from_rows(rows)
    }
}

/// `{"n": 4, "pairs": [[1, 3], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuasiOrderFile {
    pub n: usize,
    pub pairs: Vec<[usize; 2]>,
}

/// A quasi-order read from a file together with the pairs the closure added
/// (1-based).
#[derive(Clone, Debug)]
pub struct LoadedOrder {
    pub order: QuasiOrder,
    pub added: Vec<[usize; 2]>,
}

impl QuasiOrderFile {
    pub fn from_order(order: &QuasiOrder) -> Self {
        QuasiOrderFile {
            n: order.n(),
            pairs: order.off_diagonal_pairs().map(|(i, j)| [i + 1, j + 1]).collect(),
        }
    }

    pub fn load(&self) -> Result<LoadedOrder> {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for &[i, j] in &self.pairs {
            for v in [i, j] {
                if v == 0 || v > self.n {
                    return Err(Error::Input(format!("index {v} is outside [1,{}]", self.n)));
                }
            }
            pairs.push((i - 1, j - 1));
        }
        let closure = QuasiOrder::closure(self.n, pairs)?;
        let added = closure.added.iter().map(|&(i, j)| [i + 1, j + 1]).collect();
        Ok(LoadedOrder { order: closure.order, added })
    }
}

pub fn matrix_from_json(text: &str) -> Result<CMatrix> {
    serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))
}

pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string(m).expect("matrix serialization")
}

pub fn order_from_json(text: &str) -> Result<LoadedOrder> {
    let f: QuasiOrderFile = serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
    f.load()
}

/// `{"pairs": [[i, j, [re, im]], ...]}`; diagonal entries may be omitted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitiveMapFile {
    pub pairs: Vec<(usize, usize, [f64; 2])>,
}

impl TransitiveMapFile {
    pub fn from_map(g: &TransitiveMap) -> Self {
        TransitiveMapFile {
            pairs: g.entries().into_iter().map(|(i, j, v)| (i + 1, j + 1, [v.re, v.im])).collect(),
        }
    }

    pub fn load(&self, order: &QuasiOrder) -> Result<TransitiveMap> {
        let mut entries = Vec::with_capacity(self.pairs.len());
        for &(i, j, [re, im]) in &self.pairs {
            for v in [i, j] {
                if v == 0 || v > order.n() {
                    return Err(Error::Input(format!("index {v} is outside [1,{}]", order.n())));
                }
            }
            entries.push((i - 1, j - 1, Complex64::new(re, im)));
        }
        TransitiveMap::from_pairs(order, entries)
    }
}

/// `{"quasi_order": .., "s": .., "g": .., "p": [1, 1, 0, ..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JordanSpecFile {
    pub quasi_order: QuasiOrderFile,
    pub s: MatrixFile,
    pub g: TransitiveMapFile,
    pub p: Vec<u8>,
}

impl JordanSpecFile {
    pub fn from_spec(spec: &JordanSpec) -> Self {
        JordanSpecFile {
            quasi_order: QuasiOrderFile::from_order(spec.order()),
            s: spec.s().clone().into(),
            g: TransitiveMapFile::from_map(spec.g()),
            p: spec.p().bits().iter().map(|&b| b as u8).collect(),
        }
    }

    pub fn load(&self) -> Result<JordanSpec> {
        let order = self.quasi_order.load()?.order;
        let s = CMatrix::try_from(self.s.clone())?;
        let g = self.g.load(&order)?;
        if let Some(&b) = self.p.iter().find(|&&b| b > 1) {
            return Err(Error::Input(format!("idempotent entries must be 0 or 1, got {b}")));
        }
        let p = CentralIdempotent::new(&order, self.p.iter().map(|&b| b == 1).collect())?;
        JordanSpec::new(order, s, g, p)
    }
}

pub fn spec_from_json(text: &str) -> Result<JordanSpec> {
    let f: JordanSpecFile = serde_json::from_str(text).map_err(|e| Error::Input(e.to_string()))?;
    f.load()
}

pub fn spec_to_json(spec: &JordanSpec) -> String {
    serde_json::to_string(&JordanSpecFile::from_spec(spec)).expect("spec serialization")
}
