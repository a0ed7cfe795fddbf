//! Checkpoint container: a JSON header followed by raw little-endian f64
//! values for each named array.
//!
//! Layout:
//! ```text
//! magic    8 bytes  "LBCKPT01"
//! hlen     8 bytes  little-endian u64, header byte length
//! header   hlen bytes of JSON (precision, seed, hyperparameters, array index)
//! data     concatenated f64 little-endian values, in header order
//! ```
//! The header lists every array name with its shape, so checkpoints can be
//! read back without knowing the model in advance.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numkit::dense::DenseArray;
use crate::numkit::params::ParamStore;

const MAGIC: &[u8; 8] = b"LBCKPT01";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub precision: String,
    pub seed: u64,
    pub model: String,
    /// Resolved hyperparameters of the run that produced this checkpoint.
    pub hyperparams: Value,
    pub arrays: Vec<ArrayEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

/// In-memory checkpoint: named arrays plus the header metadata. Trainable
/// parameters and auxiliary arrays (e.g. a static embedding matrix) share
/// the same container.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub seed: u64,
    pub model: String,
    pub hyperparams: Value,
    pub arrays: BTreeMap<String, DenseArray>,
}

impl Checkpoint {
    pub fn new(model: &str, seed: u64, hyperparams: Value) -> Self {
        Checkpoint {
            seed,
            model: model.to_string(),
            hyperparams,
            arrays: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, value: DenseArray) {
        self.arrays.insert(name.to_string(), value);
    }

    pub fn add_params(&mut self, store: &ParamStore) {
        for (name, entry) in store.iter() {
            self.insert(name, entry.value.clone());
        }
    }

    pub fn get(&self, name: &str) -> Result<&DenseArray> {
        self.arrays
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing array {name}")))
    }

    /// Copies checkpoint values into matching entries of an existing store.
    /// Extra checkpoint arrays are ignored; a missing one is an error.
    pub fn restore_params(&self, store: &mut ParamStore) -> Result<()> {
        let names: Vec<String> = store.names().map(|s| s.to_string()).collect();
        for name in names {
            let value = self.get(&name)?;
            let entry = store.get_mut(&name);
            if entry.value.shape != value.shape {
                return Err(Error::Checkpoint(format!(
                    "array {name} has shape {:?}, expected {:?}",
                    value.shape, entry.value.shape
                )));
            }
            entry.value = value.clone();
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = CheckpointHeader {
            precision: "f64".to_string(),
            seed: self.seed,
            model: self.model.clone(),
            hyperparams: self.hyperparams.clone(),
            arrays: self
                .arrays
                .iter()
                .map(|(name, a)| ArrayEntry {
                    name: name.clone(),
                    shape: a.shape.clone(),
                })
                .collect(),
        };
        let header_bytes = serde_json::to_vec(&header)?;
        out.write_all(MAGIC)?;
        out.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
        out.write_all(&header_bytes)?;
        for a in self.arrays.values() {
            for x in &a.data {
                out.write_all(&x.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut input = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic bytes".into()));
        }
        let mut len_bytes = [0u8; 8];
        input.read_exact(&mut len_bytes)?;
        let hlen = u64::from_le_bytes(len_bytes) as usize;
        let mut header_bytes = vec![0u8; hlen];
        input.read_exact(&mut header_bytes)?;
        let header: CheckpointHeader = serde_json::from_slice(&header_bytes)?;
        if header.precision != "f64" {
            return Err(Error::Checkpoint(format!(
                "unsupported precision {}",
                header.precision
            )));
        }

        let mut arrays = BTreeMap::new();
        for entry in &header.arrays {
            let len: usize = entry.shape.iter().product();
            let mut raw = vec![0u8; len * 8];
            input.read_exact(&mut raw)?;
            let data: Vec<f64> = raw
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            arrays.insert(
                entry.name.clone(),
                DenseArray::from_vec(&entry.shape, data),
            );
        }
        Ok(Checkpoint {
            seed: header.seed,
            model: header.model,
            hyperparams: header.hyperparams,
            arrays,
        })
    }
}
