//! Tensor file formats.
//!
//! Binary container (magic `NTN1`), all integers little-endian:
//!
//! ```text
//! offset  size          field
//! 0       4             magic bytes "NTN1"
//! 4       4             order N (u32)
//! 8       8*N           extents (u64 each)
//! 8+8N    8*prod(I_n)   entries (f64, IEEE 754 LE) in storage order
//! ```
//!
//! Text format for small fixtures: one line with the space-separated
//! extents, then one scalar per line in storage order. Blank lines and
//! lines starting with `#` are ignored. Readers auto-detect the format
//! from the magic bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::DenseTensor;
use crate::error::{CoreError, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"NTN1";

pub fn write_tensor_binary<W: Write>(w: &mut W, t: &DenseTensor) -> Result<()> {
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &e in t.shape() {
        w.write_all(&(e as u64).to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_tensor_binary<R: Read>(r: &mut R) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(CoreError::Parse(format!(
            "bad magic {:?}, expected {:?}",
            magic, TENSOR_MAGIC
        )));
    }
    let (shape, data) = read_shape_and_data(r)?;
    DenseTensor::new(shape, data)
}

fn read_shape_and_data<R: Read>(r: &mut R) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let order = u32::from_le_bytes(buf4) as usize;
    if order == 0 || order > 64 {
        return Err(CoreError::Parse(format!("implausible order {order}")));
    }
    let mut shape = Vec::with_capacity(order);
    let mut buf8 = [0u8; 8];
    for _ in 0..order {
        r.read_exact(&mut buf8)?;
        shape.push(u64::from_le_bytes(buf8) as usize);
    }
    let len: usize = shape.iter().product();
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut buf8)?;
        data.push(f64::from_le_bytes(buf8));
    }
    Ok((shape, data))
}

pub fn write_tensor_text<W: Write>(w: &mut W, t: &DenseTensor) -> Result<()> {
    let shape: Vec<String> = t.shape().iter().map(|e| e.to_string()).collect();
    writeln!(w, "{}", shape.join(" "))?;
    for &v in t.data() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn read_tensor_text<R: BufRead>(r: &mut R) -> Result<DenseTensor> {
    let mut lines = r.lines();
    let shape_line = loop {
        match lines.next() {
            Some(line) => {
                let line = line?;
                let trimmed = line.trim().to_string();
                if !trimmed.is_empty() && !trimmed.starts_with('#') {
                    break trimmed;
                }
            }
            None => return Err(CoreError::Parse("empty tensor file".into())),
        }
    };
    let shape: Vec<usize> = shape_line
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|e| CoreError::Parse(format!("bad extent {tok:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let len: usize = shape.iter().product();
    let mut data = Vec::with_capacity(len);
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        for tok in trimmed.split_whitespace() {
            let v = tok
                .parse::<f64>()
                .map_err(|e| CoreError::Parse(format!("bad scalar {tok:?}: {e}")))?;
            data.push(v);
        }
    }
    DenseTensor::new(shape, data)
}

/// Writes the binary format to `path`.
pub fn write_tensor_file<P: AsRef<Path>>(path: P, t: &DenseTensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor_binary(&mut w, t)?;
    w.flush()?;
    Ok(())
}

/// Reads a tensor from `path`, auto-detecting binary vs text.
pub fn read_tensor_file<P: AsRef<Path>>(path: P) -> Result<DenseTensor> {
    let mut f = File::open(path)?;
    let mut magic = [0u8; 4];
    let n = f.read(&mut magic)?;
    let is_binary = n == 4 && &magic == TENSOR_MAGIC;
    if is_binary {
        let mut rest = Vec::new();
        f.read_to_end(&mut rest)?;
        let mut cursor = std::io::Cursor::new(rest);
        let (shape, data) = read_shape_and_data(&mut cursor)?;
        DenseTensor::new(shape, data)
    } else {
        use std::io::Seek;
        f.seek(std::io::SeekFrom::Start(0))?;
        read_tensor_text(&mut BufReader::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binary_roundtrip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data: Vec<f64> = (0..24).map(|_| rng.random::<f64>() - 0.5).collect();
        let t = DenseTensor::new(vec![2, 3, 4], data).unwrap();
        let mut buf = Vec::new();
        write_tensor_binary(&mut buf, &t).unwrap();
        let back = read_tensor_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn text_roundtrip_and_fixture_parsing() {
        let t = DenseTensor::new(vec![2, 2], vec![1.0, -0.5, 3.25, 1e-3]).unwrap();
        let mut buf = Vec::new();
        write_tensor_text(&mut buf, &t).unwrap();
        let back = read_tensor_text(&mut buf.as_slice()).unwrap();
        assert_eq!(back, t);

        let fixture = "# comment\n2 2\n1\n2\n3\n4\n";
        let parsed = read_tensor_text(&mut fixture.as_bytes()).unwrap();
        assert_eq!(parsed.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn file_reader_autodetects_format() {
        let dir = tempfile::tempdir().unwrap();
        let t = DenseTensor::new(vec![3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();

        let bin_path = dir.path().join("t.nt");
        write_tensor_file(&bin_path, &t).unwrap();
        assert_eq!(read_tensor_file(&bin_path).unwrap(), t);

        let txt_path = dir.path().join("t.txt");
        let mut buf = Vec::new();
        write_tensor_text(&mut buf, &t).unwrap();
        std::fs::write(&txt_path, buf).unwrap();
        assert_eq!(read_tensor_file(&txt_path).unwrap(), t);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        assert!(read_tensor_binary(&mut &b"XXXX"[..]).is_err());
        let fixture = "2 2\n1\n2\n3\n"; // one scalar short
        assert!(matches!(
            read_tensor_text(&mut fixture.as_bytes()),
            Err(CoreError::LengthMismatch { .. })
        ));
    }
}
