use std::path::Path;

use sha2::{Digest, Sha256};

use super::{read_checkpoint, write_checkpoint, CheckpointEntry, Result, Tensor, TensorError};

/// An ordered collection of named parameter handles.
///
/// Names are hierarchical (`encoder.layer0.attn.wq`); the order is the
/// order parameters were registered in and is also the checkpoint order.
#[derive(Clone, Default, Debug)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: &Tensor) {
        self.entries.push((name.into(), tensor.clone()));
    }

    /// Appends every entry of `other` under `prefix.`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: ParamSet) {
        for (name, t) in other.entries {
            self.entries.push((format!("{prefix}.{name}"), t));
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn tensors(&self) -> Vec<Tensor> {
        self.entries.iter().map(|(_, t)| t.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn numel(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn set_requires_grad(&self, on: bool) {
        for (_, t) in &self.entries {
            t.set_requires_grad(on);
        }
    }

    pub fn zero_grad(&self) {
        for (_, t) in &self.entries {
            t.zero_grad();
        }
    }

    /// SHA-256 over names, shapes and the exact bit patterns of the values.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (name, t) in &self.entries {
            h.update(name.as_bytes());
            for d in t.shape() {
                h.update((*d as u64).to_le_bytes());
            }
            for v in t.data().iter() {
                h.update(v.to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_entries(&self) -> Vec<CheckpointEntry> {
        self.entries.iter().map(|(name, t)| CheckpointEntry { name: name.clone(), shape: t.shape().to_vec(), data: t.to_vec() }).collect()
    }

    /// Copies values from checkpoint entries into the matching parameters.
    /// Every parameter must be present with an identical shape.
    pub fn load_entries(&self, entries: &[CheckpointEntry]) -> Result<()> {
        for (name, t) in &self.entries {
            let e = entries.iter().find(|e| &e.name == name).ok_or_else(|| TensorError::Checkpoint(format!("missing parameter {name}")))?;
            if e.shape != t.shape() {
                return Err(TensorError::Checkpoint(format!("{name}: checkpoint shape {:?}, model shape {:?}", e.shape, t.shape())));
            }
            t.assign(&e.data)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| TensorError::Checkpoint(e.to_string()))?;
        write_checkpoint(std::io::BufWriter::new(file), &self.to_entries())
    }

    pub fn load(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::open(path).map_err(|e| TensorError::Checkpoint(e.to_string()))?;
        let entries = read_checkpoint(std::io::BufReader::new(file))?;
        self.load_entries(&entries)
    }
}
