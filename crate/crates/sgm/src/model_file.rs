//! `SGM1` binary model container, little-endian:
//!
//! ```text
//! "SGM1" | u32 version | u32 m | u32 k | u32 dims[m+1] | u32 r_min[m+1]
//! | u32 refine_iters | f64 trace_ratio | f64 weights[m]
//! | for each modality: f64 A_i (k x d_i, row-major), f64 b_i (k)
//! ```

use std::path::Path;

use sgm_core::{LinearMap, Matrix, SgmModel};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SGM1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelFileError {
    #[error("not an SGM1 model file")]
    BadMagic,
    #[error("unsupported model version {0}")]
    Version(u32),
    #[error("model file is truncated")]
    Truncated,
    #[error("{0} unexpected bytes after the model")]
    TrailingBytes(usize),
    #[error("invalid model: {0}")]
    Invalid(#[from] sgm_core::Error),
}

pub fn encode(model: &SgmModel) -> Vec<u8> {
    let mut out = Vec::new();
    let u32s = |out: &mut Vec<u8>, v: usize| out.extend_from_slice(&(v as u32).to_le_bytes());
    let f64s = |out: &mut Vec<u8>, v: f64| out.extend_from_slice(&v.to_le_bytes());
    out.extend_from_slice(MAGIC);
    u32s(&mut out, VERSION as usize);
    u32s(&mut out, model.m());
    u32s(&mut out, model.k);
    model.dims().into_iter().for_each(|d| u32s(&mut out, d));
    model.r_min.iter().for_each(|&r| u32s(&mut out, r));
    u32s(&mut out, model.refine_iters);
    f64s(&mut out, model.trace_ratio);
    model.weights.iter().for_each(|&w| f64s(&mut out, w));
    for map in &model.maps {
        map.a.as_slice().iter().for_each(|&v| f64s(&mut out, v));
        map.b.iter().for_each(|&v| f64s(&mut out, v));
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], ModelFileError> {
        let end = self.pos.checked_add(n).ok_or(ModelFileError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(ModelFileError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<usize, ModelFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> std::result::Result<f64, ModelFileError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32s(&mut self, n: usize) -> std::result::Result<Vec<usize>, ModelFileError> {
        (0..n).map(|_| self.u32()).collect()
    }

    fn f64s(&mut self, n: usize) -> std::result::Result<Vec<f64>, ModelFileError> {
        // Bound the allocation by what is actually left.
        if n.saturating_mul(8) > self.bytes.len() - self.pos {
            return Err(ModelFileError::Truncated);
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn decode(bytes: &[u8]) -> std::result::Result<SgmModel, ModelFileError> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4).map_err(|_| ModelFileError::BadMagic)? != MAGIC {
        return Err(ModelFileError::BadMagic);
    }
    let version = c.u32()? as u32;
    if version != VERSION {
        return Err(ModelFileError::Version(version));
    }
    let m = c.u32()?;
    let k = c.u32()?;
    if m.saturating_add(1).saturating_mul(8) > bytes.len() {
        return Err(ModelFileError::Truncated);
    }
    let dims = c.u32s(m + 1)?;
    let r_min = c.u32s(m + 1)?;
    let refine_iters = c.u32()?;
    let trace_ratio = c.f64()?;
    let weights = c.f64s(m)?;
    let mut maps = Vec::with_capacity(m + 1);
    for &d in &dims {
        let a = c.f64s(k.saturating_mul(d))?;
        let b = c.f64s(k)?;
        let a = Matrix::from_row_major(k, d, a)?;
        maps.push(LinearMap { a, b });
    }
    if c.pos != bytes.len() {
        return Err(ModelFileError::TrailingBytes(bytes.len() - c.pos));
    }
    let model = SgmModel { k, weights, maps, r_min, trace_ratio, refine_iters };
    model.validate()?;
    Ok(model)
}

pub fn save_model(path: &Path, model: &SgmModel) -> Result<()> {
    std::fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<SgmModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| Error::model(path, e))
}
