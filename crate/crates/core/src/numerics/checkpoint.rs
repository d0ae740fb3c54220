//! Parameter checkpoint container.
//!
//! Little-endian layout:
//!
//! ```text
//! magic        8 bytes   "TRJPCKPT"
//! version      u32       currently 1
//! record_count u32
//! record_count times:
//!   name_len   u32
//!   name       name_len bytes, UTF-8
//!   ndim       u32
//!   dims       ndim x u64
//!   data       product(dims) x f64
//! ```

use std::io::{Read, Write};

use crate::numerics::{ModelParams, Scalar, Tensor};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"TRJPCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn write_checkpoint<F: Scalar, W: Write>(params: &ModelParams<F>, mut w: W) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for b in params.blocks() {
        let name = b.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(b.value.shape().len() as u32).to_le_bytes())?;
        for &d in b.value.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in b.value.data() {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Vec<CheckpointRecord>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Load("not a checkpoint (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Load(format!("unsupported checkpoint version {version}")));
    }
    let count = read_u32(&mut r)?;
    let mut records = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::Load("parameter name is not UTF-8".into()))?;
        let ndim = read_u32(&mut r)? as usize;
        let shape = (0..ndim).map(|_| read_u64(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let mut bytes = vec![0u8; n * 8];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        records.push(CheckpointRecord { name, shape, data });
    }
    Ok(records)
}

impl<F: Scalar> ModelParams<F> {
    /// Overwrites values from checkpoint records. Names and shapes must match
    /// this registry exactly.
    pub fn load_records(&mut self, records: &[CheckpointRecord]) -> Result<()> {
        if records.len() != self.len() {
            return Err(Error::Load(format!(
                "checkpoint has {} tensors, model expects {}",
                records.len(),
                self.len()
            )));
        }
        for rec in records {
            let id = self
                .id(&rec.name)
                .ok_or_else(|| Error::Load(format!("unexpected tensor `{}`", rec.name)))?;
            let block = self.block_mut(id);
            if block.value.shape() != rec.shape.as_slice() {
                return Err(Error::Load(format!(
                    "tensor `{}` has shape {:?}, model expects {:?}",
                    rec.name,
                    rec.shape,
                    block.value.shape()
                )));
            }
            block.value = Tensor::from_f64(rec.shape.clone(), &rec.data)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip_preserves_bits(values in proptest::collection::vec(-1e6f64..1e6, 1..40), split in 1usize..4) {
            let n = values.len();
            let mut p = ModelParams::<f64>::new();
            p.register("a.w", Tensor::new(vec![n], values.clone()).unwrap()).unwrap();
            p.register("b", Tensor::from_f64(vec![split, 1], &vec![0.5; split]).unwrap()).unwrap();
            let mut buf = Vec::new();
            write_checkpoint(&p, &mut buf).unwrap();
            let records = read_checkpoint(buf.as_slice()).unwrap();
            prop_assert_eq!(&records[0].data, &values);
            let mut q = p.clone();
            q.block_mut(0).value.data_mut().iter_mut().for_each(|v| *v = 0.0);
            q.load_records(&records).unwrap();
            prop_assert_eq!(q.flat_values(), p.flat_values());
        }
    }

    #[test]
    fn header_layout() {
        let mut p = ModelParams::<f64>::new();
        p.register("x", Tensor::from_f64(vec![1], &[2.0]).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();
        assert_eq!(&buf[..8], b"TRJPCKPT");
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..16], &1u32.to_le_bytes());
        assert_eq!(buf.len(), 16 + 4 + 1 + 4 + 8 + 8);
    }

    #[test]
    fn shape_mismatch_is_a_load_error() {
        let mut p = ModelParams::<f64>::new();
        p.register("x", Tensor::zeros(&[2])).unwrap();
        let recs = vec![CheckpointRecord { name: "x".into(), shape: vec![3], data: vec![0.0; 3] }];
        assert!(matches!(p.load_records(&recs), Err(Error::Load(_))));
        assert!(read_checkpoint(&b"NOTACKPT\x01\0\0\0"[..]).is_err());
    }
}
