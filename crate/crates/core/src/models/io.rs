//! Model file layout, all integers little-endian:
//!
//! ```text
//! magic "PCLMODEL" | u32 version
//! spec block       u64 len + `key=value` lines
//! metadata block   u64 len + `key=value` lines
//! vocab            u64 count, then (u32 len + utf8) per token
//! history          u64 count, then (u64 epoch, f64 train, u8 has_val, f64 val)
//! parameters       u64 count, then name, u8 trainable, u32 ndim, u64 dims, f64 data
//! sha-256 of every preceding byte
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{EpochStats, ModelSpec, TrainedModel};
use crate::error::{Error, Result};
use crate::nncore::{ParamStore, Tensor};
use crate::textprep::Vocabulary;

pub const MODEL_MAGIC: &[u8; 8] = b"PCLMODEL";
pub const MODEL_FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&raw)
}

fn kv_block<'a>(pairs: impl Iterator<Item = (&'a str, &'a str)>) -> Vec<u8> {
    let mut s = String::new();
    for (k, v) in pairs {
        s.push_str(k);
        s.push('=');
        s.push_str(v);
        s.push('\n');
    }
    s.into_bytes()
}

pub(crate) fn encode(model: &TrainedModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());

    let spec = model.spec.to_kv();
    let mut spec_pairs: Vec<(&str, &str)> = spec.iter().map(|(k, v)| (*k, v.as_str())).collect();
    spec_pairs.push(("vocab_fingerprint", &model.vocab_fingerprint));
    put_bytes(&mut out, &kv_block(spec_pairs.into_iter()));
    put_bytes(
        &mut out,
        &kv_block(model.metadata.iter().map(|(k, v)| (k.as_str(), v.as_str()))),
    );

    put_u64(&mut out, model.vocab.len() as u64);
    for t in model.vocab.tokens() {
        put_str(&mut out, t);
    }

    put_u64(&mut out, model.history.len() as u64);
    for h in &model.history {
        put_u64(&mut out, h.epoch as u64);
        out.extend_from_slice(&h.train_loss.to_le_bytes());
        out.push(h.val_loss.is_some() as u8);
        out.extend_from_slice(&h.val_loss.unwrap_or(0.0).to_le_bytes());
    }

    put_u64(&mut out, model.params.len() as u64);
    for e in model.params.iter() {
        put_str(&mut out, &e.name);
        out.push(e.trainable as u8);
        out.extend_from_slice(&(e.tensor.shape().len() as u32).to_le_bytes());
        for &d in e.tensor.shape() {
            put_u64(&mut out, d as u64);
        }
        for v in e.tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub(crate) fn decode(raw: &[u8]) -> Result<TrainedModel> {
    if raw.len() < MODEL_MAGIC.len() + 4 || &raw[..8] != MODEL_MAGIC {
        return Err(Error::Model("not a model file (bad magic bytes)".into()));
    }
    let version = u32::from_le_bytes(raw[8..12].try_into().expect("4 bytes"));
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: MODEL_FORMAT_VERSION,
        });
    }
    if raw.len() < 12 + DIGEST_LEN {
        return Err(Error::Checksum);
    }
    let (body, digest) = raw.split_at(raw.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum);
    }

    let mut r = Reader { buf: body, pos: 12 };
    let mut spec_map = parse_kv(r.bytes()?)?;
    let fingerprint = spec_map
        .remove("vocab_fingerprint")
        .ok_or_else(|| Error::Model("model spec is missing `vocab_fingerprint`".into()))?;
    let spec = ModelSpec::from_kv(&spec_map)?;
    let metadata = parse_kv(r.bytes()?)?;

    let n_tokens = r.count()?;
    let mut tokens = Vec::with_capacity(n_tokens.min(1 << 20));
    for _ in 0..n_tokens {
        tokens.push(r.string()?);
    }
    let vocab = Vocabulary::from_tokens(tokens)?;
    if vocab.fingerprint() != fingerprint {
        return Err(Error::VocabMismatch {
            expected: fingerprint,
            found: vocab.fingerprint(),
        });
    }

    let n_hist = r.count()?;
    let mut history = Vec::new();
    for _ in 0..n_hist {
        let epoch = r.u64()? as usize;
        let train_loss = r.f64()?;
        let has_val = r.u8()? == 1;
        let val = r.f64()?;
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss: has_val.then_some(val),
        });
    }

    let n_params = r.count()?;
    let mut params = ParamStore::new();
    for _ in 0..n_params {
        let name = r.string()?;
        let trainable = r.u8()? == 1;
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim.min(8));
        for _ in 0..ndim {
            shape.push(r.u64()? as usize);
        }
        let len: usize = shape.iter().product();
        let data = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        params.insert(name, Tensor::new(shape, data)?, trainable)?;
    }
    if r.pos != body.len() {
        return Err(Error::Model(format!(
            "{} trailing bytes after parameters",
            body.len() - r.pos
        )));
    }

    Ok(TrainedModel {
        spec,
        params,
        vocab,
        vocab_fingerprint: fingerprint,
        history,
        metadata,
    })
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u64(out, b.len() as u64);
    out.extend_from_slice(b);
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn parse_kv(raw: &[u8]) -> Result<BTreeMap<String, String>> {
    let text = std::str::from_utf8(raw)
        .map_err(|_| Error::Model("key-value block is not utf-8".into()))?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Model(format!("bad key-value line `{l}`")))
        })
        .collect()
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Model("model file ends mid-record".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    /// A record count, bounded by the bytes left so corrupt counts fail fast.
    fn count(&mut self) -> Result<usize> {
        let n = self.u64()?;
        if n > (self.buf.len() - self.pos) as u64 {
            return Err(Error::Model(format!("record count {n} exceeds file size")));
        }
        Ok(n as usize)
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.count()?;
        self.take(n)
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Model("string is not utf-8".into()))
    }
}
