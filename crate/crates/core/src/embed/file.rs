//! `CTXEMB1` bundle files.
//!
//! Two files travel together:
//!
//! * an index, JSON lines, one object per bundle:
//!   `{"id":..,"dim":..,"n_tokens":..,"offsets":[[s,e],..],"byte_offset":..,"has_eos":..,"prompt_variant":..}`
//! * a payload of little-endian `f32`, row-major. Each bundle occupies
//!   `(n_tokens + has_eos) * dim` floats starting at `byte_offset`: token rows
//!   first, then the EOS row.
//!
//! Values are widened to `f64` on read and narrowed on write, so reading then
//! writing reproduces the payload bit for bit.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EmbeddingBundle, PromptVariant};
use crate::error::{Error, LineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleIndexEntry {
    pub id: String,
    pub dim: usize,
    pub n_tokens: usize,
    pub offsets: Vec<[usize; 2]>,
    pub byte_offset: u64,
    pub has_eos: bool,
    pub prompt_variant: Option<PromptVariant>,
}

/// Writes bundles in order; the payload is laid out contiguously.
pub fn write_bundles<W1: Write, W2: Write>(
    bundles: &[EmbeddingBundle],
    mut index: W1,
    mut payload: W2,
) -> std::io::Result<()> {
    let mut offset = 0u64;
    for b in bundles {
        let entry = BundleIndexEntry {
            id: b.context_id().to_string(),
            dim: b.dim(),
            n_tokens: b.n_tokens(),
            offsets: b.tokens().iter().map(|&(s, e)| [s, e]).collect(),
            byte_offset: offset,
            has_eos: b.eos().is_some(),
            prompt_variant: b.prompt_variant(),
        };
        serde_json::to_writer(&mut index, &entry)?;
        index.write_all(b"\n")?;
        let values = b.matrix().iter().chain(b.eos().into_iter().flatten());
        for &v in values {
            payload.write_all(&(v as f32).to_le_bytes())?;
            offset += 4;
        }
    }
    index.flush()?;
    payload.flush()
}

/// Parses an index and its payload into bundles, in index order.
pub fn read_bundles<R: Read>(index: R, payload: &[u8], index_path: &Path) -> Result<Vec<EmbeddingBundle>> {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in BufReader::new(index).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(index_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_entry(&line, payload) {
            Ok(b) => out.push(b),
            Err(message) => errors.push(LineError {
                line: line_no,
                message,
            }),
        }
    }
    if !errors.is_empty() {
        return Err(Error::Input {
            path: index_path.to_path_buf(),
            errors,
        });
    }
    Ok(out)
}

fn parse_entry(line: &str, payload: &[u8]) -> std::result::Result<EmbeddingBundle, String> {
    let entry: BundleIndexEntry =
        serde_json::from_str(line).map_err(|e| format!("malformed index entry: {e}"))?;
    if entry.offsets.len() != entry.n_tokens {
        return Err(format!(
            "'{}': {} offsets for n_tokens {}",
            entry.id,
            entry.offsets.len(),
            entry.n_tokens
        ));
    }
    let rows = entry.n_tokens + usize::from(entry.has_eos);
    let n_floats = rows
        .checked_mul(entry.dim)
        .ok_or_else(|| format!("'{}': size overflow", entry.id))?;
    let start = usize::try_from(entry.byte_offset).map_err(|_| "byte_offset overflow".to_string())?;
    let end = start
        .checked_add(n_floats * 4)
        .filter(|&e| e <= payload.len())
        .ok_or_else(|| {
            format!(
                "'{}': payload range {start}+{} exceeds {} bytes",
                entry.id,
                n_floats * 4,
                payload.len()
            )
        })?;
    let values: Vec<f64> = payload[start..end]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    let split = entry.n_tokens * entry.dim;
    let tokens = entry.offsets.iter().map(|o| (o[0], o[1])).collect();
    let bundle = EmbeddingBundle::new(&entry.id, entry.dim, tokens, values[..split].to_vec())
        .map_err(|e| e.to_string())?;
    if entry.has_eos {
        bundle
            .with_eos(values[split..].to_vec(), entry.prompt_variant)
            .map_err(|e| e.to_string())
    } else {
        Ok(bundle)
    }
}

/// Bundles keyed by context id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BundleSet {
    bundles: BTreeMap<String, EmbeddingBundle>,
}

impl BundleSet {
    pub fn new(bundles: impl IntoIterator<Item = EmbeddingBundle>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for b in bundles {
            let id = b.context_id().to_string();
            if map.insert(id.clone(), b).is_some() {
                return Err(Error::Embedding(format!("duplicate bundle for '{id}'")));
            }
        }
        Ok(BundleSet { bundles: map })
    }

    /// Payload path paired with an index path: `x.index.jsonl` -> `x.bin`,
    /// anything else gets its extension replaced by `bin`.
    pub fn payload_path(index_path: &Path) -> PathBuf {
        let name = index_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        match name.strip_suffix(".index.jsonl") {
            Some(stem) => index_path.with_file_name(format!("{stem}.bin")),
            None => index_path.with_extension("bin"),
        }
    }

    pub fn load(index_path: impl AsRef<Path>, payload_path: impl AsRef<Path>) -> Result<Self> {
        let index_path = index_path.as_ref();
        let payload_path = payload_path.as_ref();
        let index = File::open(index_path).map_err(|e| Error::io(index_path, e))?;
        let payload = fs::read(payload_path).map_err(|e| Error::io(payload_path, e))?;
        BundleSet::new(read_bundles(index, &payload, index_path)?)
    }

    pub fn save(&self, index_path: impl AsRef<Path>, payload_path: impl AsRef<Path>) -> Result<()> {
        let index_path = index_path.as_ref();
        let payload_path = payload_path.as_ref();
        let index = File::create(index_path).map_err(|e| Error::io(index_path, e))?;
        let payload = File::create(payload_path).map_err(|e| Error::io(payload_path, e))?;
        let bundles: Vec<EmbeddingBundle> = self.bundles.values().cloned().collect();
        write_bundles(&bundles, BufWriter::new(index), BufWriter::new(payload))
            .map_err(|e| Error::io(payload_path, e))
    }

    pub fn get(&self, id: &str) -> Option<&EmbeddingBundle> {
        self.bundles.get(id)
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EmbeddingBundle> {
        self.bundles.values()
    }

    pub fn insert(&mut self, bundle: EmbeddingBundle) -> Option<EmbeddingBundle> {
        self.bundles.insert(bundle.context_id().to_string(), bundle)
    }
}
