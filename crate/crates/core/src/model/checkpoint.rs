//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//! `EDAM1`, seven u64 config fields (d, k, n_k, l_k, pad_len, top_vocab,
//! conv span 0 = shared / 1 = channels), u64 operator count, u32 tensor count, then per tensor: u32 name length, name
//! bytes, u32 rank, u64 dims, raw f64 values.

use std::io::{Read, Write};
use std::path::Path;

use crate::eventgraph::Operator;
use crate::numkernel::{DenseTensor, ParamSet};

use super::params::{tensor_layout, ConvSpan, ModelConfig, ModelParams};
use super::ModelError;

const MAGIC: &[u8; 5] = b"EDAM1";

pub fn write_checkpoint<W: Write>(params: &ModelParams, mut out: W) -> Result<(), ModelError> {
    let cfg = params.config();
    out.write_all(MAGIC)?;
    let span = match cfg.conv_span {
        ConvSpan::Shared => 0,
        ConvSpan::Channels => 1,
    };
    for v in [cfg.d, cfg.k, cfg.n_k, cfg.l_k, cfg.pad_len, cfg.top_vocab, span, Operator::COUNT] {
        out.write_all(&(v as u64).to_le_bytes())?;
    }
    let layout = tensor_layout(cfg);
    out.write_all(&(layout.len() as u32).to_le_bytes())?;
    for ((name, _), t) in layout.iter().zip(params.tensors()) {
        out.write_all(&(name.len() as u32).to_le_bytes())?;
        out.write_all(name.as_bytes())?;
        out.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &dim in t.shape() {
            out.write_all(&(dim as u64).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(t.len() * 8);
        for x in t.data() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, ModelError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, ModelError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn bad(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<ModelParams, ModelError> {
    let mut magic = [0u8; 5];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint (bad magic)"));
    }
    let mut fields = [0usize; 8];
    for f in &mut fields {
        *f = read_u64(&mut input)? as usize;
    }
    let [d, k, n_k, l_k, pad_len, top_vocab, span, ops] = fields;
    let conv_span = match span {
        0 => ConvSpan::Shared,
        1 => ConvSpan::Channels,
        other => return Err(bad(format!("unknown convolution span {other}"))),
    };
    if ops != Operator::COUNT {
        return Err(bad(format!("checkpoint has {ops} operators, expected {}", Operator::COUNT)));
    }
    let config = ModelConfig { d, k, n_k, l_k, pad_len, top_vocab, conv_span };
    config.validate()?;
    let layout = tensor_layout(&config);
    let count = read_u32(&mut input)? as usize;
    if count != layout.len() {
        return Err(bad(format!("checkpoint has {count} tensors, expected {}", layout.len())));
    }
    let mut tensors = Vec::with_capacity(count);
    for (name, shape) in &layout {
        let len = read_u32(&mut input)? as usize;
        if len > 256 {
            return Err(bad("tensor name too long"));
        }
        let mut raw = vec![0u8; len];
        input.read_exact(&mut raw)?;
        if raw != name.as_bytes() {
            return Err(bad(format!("expected tensor `{name}`, found `{}`", String::from_utf8_lossy(&raw))));
        }
        let rank = read_u32(&mut input)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank.min(3) {
            dims.push(read_u64(&mut input)? as usize);
        }
        if rank > 3 || &dims != shape {
            return Err(bad(format!("tensor `{name}` has shape {dims:?}, config requires {shape:?}")));
        }
        let mut buf = vec![0u8; shape.iter().product::<usize>() * 8];
        input.read_exact(&mut buf)?;
        let data = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        tensors.push(DenseTensor::new(dims, data).map_err(|e| bad(format!("tensor `{name}`: {e}")))?);
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(bad("trailing bytes after last tensor"));
    }
    ModelParams::from_tensors(config, tensors)
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<(), ModelError> {
    let file = std::fs::File::create(path)?;
    write_checkpoint(params, std::io::BufWriter::new(file))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams, ModelError> {
    let file = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(file))
}
