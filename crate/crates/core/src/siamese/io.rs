//! The `KSNM` model file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "KSNM"  u32 version (= 1)
//! for each tensor in conv1.w, conv1.b, conv2.w, conv2.b, fc.w, fc.b, head.alpha, head.b:
//!     u32 rank, rank x u32 dims, prod(dims) x f64
//! ```
//!
//! `head.b` is a rank-0 tensor holding one value.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{ModelError, ParamSet, SiameseModel, Tensor};

pub const MODEL_MAGIC: &[u8; 4] = b"KSNM";
pub const MODEL_VERSION: u32 = 1;

pub fn write_model(model: &SiameseModel, out: &mut impl Write) -> std::io::Result<()> {
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&MODEL_VERSION.to_le_bytes())?;
    for (t, values) in model.params().iter() {
        let dims = t.dims();
        out.write_all(&(dims.len() as u32).to_le_bytes())?;
        for &d in dims {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        for v in values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_model(input: &mut impl Read) -> Result<SiameseModel, ModelError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    parse(&bytes)
}

pub fn save_model(model: &SiameseModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let mut buf = Vec::new();
    write_model(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SiameseModel, ModelError> {
    parse(&fs::read(path)?)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(ModelError::TruncatedFile)?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn parse(bytes: &[u8]) -> Result<SiameseModel, ModelError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4).map_err(|_| ModelError::BadMagic)? != MODEL_MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = cur.u32()?;
    if version != MODEL_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }

    let mut params = ParamSet::zeros();
    for t in Tensor::ALL {
        let rank = cur.u32()? as usize;
        let dims = (0..rank)
            .map(|_| cur.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if dims != t.dims() {
            return Err(ModelError::CorruptFile(format!(
                "tensor {} has dims {dims:?}, expected {:?}",
                t.name(),
                t.dims()
            )));
        }
        let raw = cur.take(t.len() * 8)?;
        for (slot, chunk) in params.get_mut(t).iter_mut().zip(raw.chunks_exact(8)) {
            *slot = f64::from_le_bytes(chunk.try_into().unwrap());
        }
    }
    if cur.pos != bytes.len() {
        return Err(ModelError::CorruptFile(format!(
            "{} trailing bytes",
            bytes.len() - cur.pos
        )));
    }
    if !params.all_finite() {
        return Err(ModelError::CorruptFile("non-finite parameter".into()));
    }
    Ok(SiameseModel::from_params(params))
}
