//! Tucker model file format (magic `NTM1`), used by the CLI to persist and
//! cache decompositions. All integers little-endian:
//!
//! ```text
//! offset        field
//! 0             magic bytes "NTM1"
//! 4             order N (u32)
//! 8             extents I_n (u64 each, N values)
//! 8+8N          ranks R_n (u64 each, N values)
//! 8+16N         identity-fixed flags (u8 each, N values)
//! ...           factor matrices (f64 LE, column-major, I_n*R_n each)
//! ...           core entries (f64 LE, storage order, prod R_n)
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::TuckerModel;
use crate::error::{CoreError, Result};
use crate::tensor::{DenseTensor, Matrix};

pub const MODEL_MAGIC: &[u8; 4] = b"NTM1";

pub fn write_model<W: Write>(w: &mut W, m: &TuckerModel) -> Result<()> {
    w.write_all(MODEL_MAGIC)?;
    let order = m.order() as u32;
    w.write_all(&order.to_le_bytes())?;
    for &e in &m.extents() {
        w.write_all(&(e as u64).to_le_bytes())?;
    }
    for &r in &m.ranks() {
        w.write_all(&(r as u64).to_le_bytes())?;
    }
    for &flag in m.identity_flags() {
        w.write_all(&[u8::from(flag)])?;
    }
    for f in m.factors() {
        for &v in f.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for &v in m.core().data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_model<R: Read>(r: &mut R) -> Result<TuckerModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(CoreError::Parse(format!(
            "bad magic {:?}, expected {:?}",
            magic, MODEL_MAGIC
        )));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let order = u32::from_le_bytes(buf4) as usize;
    if order == 0 || order > 64 {
        return Err(CoreError::Parse(format!("implausible order {order}")));
    }
    let mut buf8 = [0u8; 8];
    let mut read_usizes = |r: &mut R, count: usize| -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut buf8)?;
            out.push(u64::from_le_bytes(buf8) as usize);
        }
        Ok(out)
    };
    let extents = read_usizes(r, order)?;
    let ranks = read_usizes(r, order)?;
    let mut flags = vec![0u8; order];
    r.read_exact(&mut flags)?;
    let identity_fixed: Vec<bool> = flags.iter().map(|&b| b != 0).collect();

    let read_f64s = |r: &mut R, count: usize| -> Result<Vec<f64>> {
        let mut buf = [0u8; 8];
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(out)
    };
    let mut factors = Vec::with_capacity(order);
    for n in 0..order {
        let data = read_f64s(r, extents[n] * ranks[n])?;
        factors.push(Matrix::new(extents[n], ranks[n], data)?);
    }
    let core_len: usize = ranks.iter().product();
    let core = DenseTensor::new(ranks, read_f64s(r, core_len)?)?;
    TuckerModel::with_identity_modes(core, factors, identity_fixed)
}

pub fn write_model_file<P: AsRef<Path>>(path: P, m: &TuckerModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_model(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn read_model_file<P: AsRef<Path>>(path: P) -> Result<TuckerModel> {
    let mut f = File::open(path)?;
    read_model(&mut f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lra::hosvd;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn model_roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let data: Vec<f64> = (0..60).map(|_| rng.random()).collect();
        let t = DenseTensor::new(vec![3, 4, 5], data).unwrap();
        let model = hosvd(&t, &[2, 2, 3]).unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &model).unwrap();
        let back = read_model(&mut buf.as_slice()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn identity_flags_survive_roundtrip() {
        let core = DenseTensor::new(vec![2, 3], (0..6).map(|v| v as f64).collect()).unwrap();
        let model = TuckerModel::with_identity_modes(
            core,
            vec![Matrix::new(4, 2, vec![0.5; 8]).unwrap(), Matrix::identity(3)],
            vec![false, true],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &model).unwrap();
        let back = read_model(&mut buf.as_slice()).unwrap();
        assert!(back.is_identity_fixed(1));
        assert_eq!(back, model);
    }

    #[test]
    fn truncated_stream_is_rejected() {
        let core = DenseTensor::zeros(vec![2, 2]);
        let model =
            TuckerModel::new(core, vec![Matrix::zeros(3, 2), Matrix::zeros(3, 2)]).unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &model).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_model(&mut buf.as_slice()).is_err());
    }
}
