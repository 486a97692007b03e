//! Binary checkpoint of named tensors.
//!
//! Layout, all integers `u32` little-endian:
//!
//! ```text
//! b"HVNCKPT1"
//! tensor count
//! per tensor: name length, UTF-8 name, rows, cols, rows*cols f64 LE in row-major order
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::params::ParamTensors;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HVNCKPT1";

pub fn save_checkpoint<P: ParamTensors>(path: &Path, params: &P) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let named = params.named();
    w.write_all(MAGIC)?;
    write_u32(&mut w, named.len())?;
    for (name, t) in named {
        write_u32(&mut w, name.len())?;
        w.write_all(name.as_bytes())?;
        write_u32(&mut w, t.nrows())?;
        write_u32(&mut w, t.ncols())?;
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                w.write_all(&t[(i, j)].to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Every tensor in file order.
pub fn read_checkpoint(path: &Path) -> Result<Vec<(String, DMatrix<f64>)>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let count = read_u32(&mut r)?;
    let mut out = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let len = read_u32(&mut r)?;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(truncated)?;
        let name = String::from_utf8(name).map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rows = read_u32(&mut r)?;
        let cols = read_u32(&mut r)?;
        let mut values = Vec::with_capacity(rows * cols);
        let mut buf = [0u8; 8];
        for _ in 0..rows * cols {
            r.read_exact(&mut buf).map_err(truncated)?;
            values.push(f64::from_le_bytes(buf));
        }
        out.push((name, DMatrix::from_row_slice(rows, cols, &values)));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok(out)
}

/// Fill `params` from a checkpoint; names and shapes must match exactly.
pub fn load_checkpoint<P: ParamTensors>(path: &Path, params: &mut P) -> Result<()> {
    let stored = read_checkpoint(path)?;
    let expected: Vec<(String, (usize, usize))> =
        params.named().into_iter().map(|(n, t)| (n, t.shape())).collect();
    if stored.len() != expected.len() {
        return Err(Error::Checkpoint(format!("expected {} tensors, found {}", expected.len(), stored.len())));
    }
    for ((name, t), (ename, eshape)) in stored.iter().zip(&expected) {
        if name != ename || t.shape() != *eshape {
            return Err(Error::Checkpoint(format!(
                "tensor {name} {:?} does not match {ename} {eshape:?}",
                t.shape()
            )));
        }
    }
    for (dst, (_, src)) in params.tensors_mut().into_iter().zip(stored) {
        *dst = src;
    }
    Ok(())
}

fn write_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<usize> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(u32::from_le_bytes(buf) as usize)
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Checkpoint("truncated file".into())
    } else {
        Error::Io(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::hvn::{HvnConfig, HvnParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let config = HvnConfig::new(3, 2, 4, 2, vec![5], 2);
        let p = HvnParams::init(&config, &mut ChaCha8Rng::seed_from_u64(9));
        save_checkpoint(&path, &p).unwrap();
        let mut q = HvnParams::zeros(&config);
        load_checkpoint(&path, &mut q).unwrap();
        assert_eq!(p, q);
        let names: Vec<_> = read_checkpoint(&path).unwrap().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names[0], "layer.0.tap.0");
        assert_eq!(names.last().unwrap(), "head.1.bias");
    }

    #[test]
    fn rejects_mismatch_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let p = HvnParams::init(&HvnConfig::new(3, 1, 4, 1, vec![5], 2), &mut ChaCha8Rng::seed_from_u64(1));
        save_checkpoint(&path, &p).unwrap();
        let mut other = HvnParams::zeros(&HvnConfig::new(3, 1, 4, 2, vec![5], 2));
        assert!(matches!(load_checkpoint(&path, &mut other), Err(Error::Checkpoint(_))));

        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Checkpoint(_))));
        std::fs::write(&path, b"NOTACKPT").unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Checkpoint(_))));
    }
}
