//! Model file: little-endian, `LCT1` magic, format version, architecture
//! name, input shape and seed, then each layer's kind, shape and float32
//! parameters.

use std::path::Path;

use super::layer::Layer;
use super::model::Model;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const MODEL_MAGIC: &[u8; 4] = b"LCT1";
pub const MODEL_VERSION: u32 = 1;

const CONV: u8 = 0;
const RELU: u8 = 1;
const POOL: u8 = 2;
const DROPOUT: u8 = 3;
const FLATTEN: u8 = 4;
const DENSE: u8 = 5;
const SOFTMAX: u8 = 6;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f32s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&(*x as f32).to_le_bytes());
    }
}

pub fn write_model(m: &Model) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 4 * m.num_params());
    out.extend_from_slice(MODEL_MAGIC);
    put_u32(&mut out, MODEL_VERSION as usize);
    put_u32(&mut out, m.arch.len());
    out.extend_from_slice(m.arch.as_bytes());
    put_u32(&mut out, m.input_frames);
    put_u32(&mut out, m.input_channels);
    out.extend_from_slice(&m.seed.to_le_bytes());
    put_u32(&mut out, m.layers.len());
    for l in &m.layers {
        match l {
            Layer::Conv1d {
                kernel,
                in_ch,
                out_ch,
                weights,
                bias,
            } => {
                out.push(CONV);
                put_u32(&mut out, *kernel);
                put_u32(&mut out, *in_ch);
                put_u32(&mut out, *out_ch);
                put_f32s(&mut out, weights);
                put_f32s(&mut out, bias);
            }
            Layer::Relu => out.push(RELU),
            Layer::MaxPool => out.push(POOL),
            Layer::Dropout { rate } => {
                out.push(DROPOUT);
                out.extend_from_slice(&rate.to_le_bytes());
            }
            Layer::Flatten => out.push(FLATTEN),
            Layer::Dense {
                inputs,
                outputs,
                weights,
                bias,
            } => {
                out.push(DENSE);
                put_u32(&mut out, *inputs);
                put_u32(&mut out, *outputs);
                put_f32s(&mut out, weights);
                put_f32s(&mut out, bias);
            }
            Layer::Softmax => out.push(SOFTMAX),
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::CorruptModel(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::CorruptModel("layer too large".into()))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect())
    }
}

pub fn read_model(buf: &[u8]) -> Result<Model> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4).map_err(|_| Error::CorruptModel("file too short".into()))? != MODEL_MAGIC {
        return Err(Error::CorruptModel("bad magic; not a model file".into()));
    }
    let version = r.u32()? as u32;
    if version != MODEL_VERSION {
        return Err(Error::ModelVersion {
            got: version,
            expected: MODEL_VERSION,
        });
    }
    let name_len = r.u32()?;
    let arch = String::from_utf8(r.take(name_len)?.to_vec())
        .map_err(|_| Error::CorruptModel("architecture name is not UTF-8".into()))?;
    let input_frames = r.u32()?;
    let input_channels = r.u32()?;
    let seed = r.u64()?;
    let n_layers = r.u32()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        let layer = match r.u8()? {
            CONV => {
                let (kernel, in_ch, out_ch) = (r.u32()?, r.u32()?, r.u32()?);
                Layer::Conv1d {
                    kernel,
                    in_ch,
                    out_ch,
                    weights: r.f32s(kernel * in_ch * out_ch)?,
                    bias: r.f32s(out_ch)?,
                }
            }
            RELU => Layer::Relu,
            POOL => Layer::MaxPool,
            DROPOUT => Layer::Dropout { rate: r.f64()? },
            FLATTEN => Layer::Flatten,
            DENSE => {
                let (inputs, outputs) = (r.u32()?, r.u32()?);
                Layer::Dense {
                    inputs,
                    outputs,
                    weights: r.f32s(inputs * outputs)?,
                    bias: r.f32s(outputs)?,
                }
            }
            SOFTMAX => Layer::Softmax,
            k => return Err(Error::CorruptModel(format!("unknown layer kind {k}"))),
        };
        layers.push(layer);
    }
    if r.pos != buf.len() {
        return Err(Error::CorruptModel(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    let model = Model {
        arch,
        input_frames,
        input_channels,
        seed,
        layers,
    };
    model
        .shape_chain()
        .map_err(|e| Error::CorruptModel(format!("layers do not compose: {e}")))?;
    if !matches!(model.layers.last(), Some(Layer::Softmax)) {
        return Err(Error::CorruptModel("last layer is not softmax".into()));
    }
    Ok(model)
}

pub fn save_model(m: &Model, path: &Path) -> Result<()> {
    write_atomic(path, &write_model(m))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&buf)
}
