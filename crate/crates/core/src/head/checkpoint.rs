//! Binary head checkpoints.
//!
//! All integers are little-endian `u64`, all reals little-endian `f64`:
//!
//! ```text
//! "CTXHEAD1"                      8-byte magic
//! input_dim
//! n_hidden, hidden_dims[n_hidden]
//! dropout (f64)
//! seed
//! n_params, params[n_params]      layer order: weights [out][in], then biases
//! n_features                      0 when the head takes no handcrafted features
//! mean[n_features], sd[n_features], fitted_on   (only if n_features > 0)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{HeadConfig, MlpHead};
use crate::error::{Error, Result};
use crate::features::NormStats;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CTXHEAD1";

pub fn write_checkpoint<W: Write>(head: &MlpHead, norm: Option<&NormStats>, mut out: W) -> std::io::Result<()> {
    let cfg = head.config();
    out.write_all(CHECKPOINT_MAGIC)?;
    let put = |v: u64, out: &mut W| out.write_all(&v.to_le_bytes());
    put(cfg.input_dim as u64, &mut out)?;
    put(cfg.hidden_dims.len() as u64, &mut out)?;
    for &h in &cfg.hidden_dims {
        put(h as u64, &mut out)?;
    }
    out.write_all(&cfg.dropout.to_le_bytes())?;
    put(head.seed(), &mut out)?;
    put(head.n_params() as u64, &mut out)?;
    for p in head.params() {
        out.write_all(&p.to_le_bytes())?;
    }
    match norm {
        None => put(0, &mut out)?,
        Some(n) => {
            put(n.width() as u64, &mut out)?;
            for v in n.mean.iter().chain(&n.sd) {
                out.write_all(&v.to_le_bytes())?;
            }
            put(n.fitted_on as u64, &mut out)?;
        }
    }
    out.flush()
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes8(&mut self, what: &str) -> Result<[u8; 8]> {
        let mut b = [0u8; 8];
        self.inner
            .read_exact(&mut b)
            .map_err(|_| Error::Checkpoint(format!("truncated while reading {what}")))?;
        Ok(b)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes8(what)?))
    }

    fn usize(&mut self, what: &str, max: u64) -> Result<usize> {
        let v = self.u64(what)?;
        if v > max {
            return Err(Error::Checkpoint(format!("{what} = {v} is implausible")));
        }
        Ok(v as usize)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes8(what)?))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64(what)).collect()
    }
}

const MAX_DIM: u64 = 1 << 32;

pub fn read_checkpoint<R: Read>(input: R) -> Result<(MlpHead, Option<NormStats>)> {
    let mut c = Cursor { inner: input };
    if &c.bytes8("magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic, expected CTXHEAD1".into()));
    }
    let input_dim = c.usize("input_dim", MAX_DIM)?;
    let n_hidden = c.usize("n_hidden", 1 << 16)?;
    let hidden_dims = (0..n_hidden)
        .map(|_| c.usize("hidden width", MAX_DIM))
        .collect::<Result<Vec<_>>>()?;
    let dropout = c.f64("dropout")?;
    let seed = c.u64("seed")?;
    let config = HeadConfig {
        input_dim,
        hidden_dims,
        dropout,
    };
    config
        .validate()
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let n_params = c.usize("n_params", 1 << 40)?;
    if n_params != config.n_params() {
        return Err(Error::Checkpoint(format!(
            "{n_params} parameters stored, architecture needs {}",
            config.n_params()
        )));
    }
    let params = c.f64s(n_params, "parameters")?;
    let head = MlpHead::from_params(&config, seed, params)?;
    let n_features = c.usize("n_features", MAX_DIM)?;
    let norm = if n_features == 0 {
        None
    } else {
        let mean = c.f64s(n_features, "feature means")?;
        let sd = c.f64s(n_features, "feature sds")?;
        let fitted_on = c.usize("fitted_on", u64::MAX)?;
        Some(NormStats { mean, sd, fitted_on })
    };
    let mut rest = [0u8; 1];
    if c.inner.read(&mut rest).unwrap_or(0) != 0 {
        return Err(Error::Checkpoint("trailing bytes after checkpoint".into()));
    }
    Ok((head, norm))
}

pub fn save_checkpoint(head: &MlpHead, norm: Option<&NormStats>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(head, norm, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(MlpHead, Option<NormStats>)> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(f))
}
