//! Checkpoint container: magic `WDNN`, format version, a config echo, then
//! named tensors (rank, dims, row-major 64-bit little-endian values).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"WDNN";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    config_echo: &str,
    tensors: &[NamedTensor],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&1u32.to_le_bytes())?;
    let echo = config_echo.as_bytes();
    w.write_all(&(echo.len() as u32).to_le_bytes())?;
    w.write_all(echo)?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in tensors {
        let name = t.name.as_bytes();
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(t.dims.len() as u32).to_le_bytes())?;
        let mut expected = 1usize;
        for &d in &t.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
            expected *= d;
        }
        debug_assert_eq!(expected, t.data.len());
        for &v in &t.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(String, Vec<NamedTensor>)> {
    let path = path.as_ref();
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::format(format!("{}: not a checkpoint", path.display())));
    }
    let version = read_u32(&mut r)?;
    if version != 1 {
        return Err(Error::format(format!(
            "{}: unsupported checkpoint version {version}",
            path.display()
        )));
    }
    let echo_len = read_u32(&mut r)? as usize;
    let mut echo = vec![0u8; echo_len];
    r.read_exact(&mut echo)?;
    let echo = String::from_utf8(echo)
        .map_err(|_| Error::format(format!("{}: config echo is not UTF-8", path.display())))?;
    let n = read_u32(&mut r)? as usize;
    let mut tensors = Vec::with_capacity(n);
    for _ in 0..n {
        let mut len_buf = [0u8; 2];
        r.read_exact(&mut len_buf)?;
        let mut name = vec![0u8; u16::from_le_bytes(len_buf) as usize];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::format(format!("{}: tensor name is not UTF-8", path.display())))?;
        let rank = read_u32(&mut r)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u32(&mut r)? as usize);
        }
        let count: usize = dims.iter().product();
        let mut data = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        tensors.push(NamedTensor { name, dims, data });
    }
    Ok((echo, tensors))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.wdnn");
        let tensors = vec![
            NamedTensor {
                name: "a".into(),
                dims: vec![2, 3],
                data: vec![1.0, -2.5, 3.0, 0.0, 1e-30, 4.25],
            },
            NamedTensor {
                name: "bias".into(),
                dims: vec![2],
                data: vec![0.5, -0.5],
            },
        ];
        save_checkpoint(&path, "seed = 1\n", &tensors).unwrap();
        let (echo, loaded) = load_checkpoint(&path).unwrap();
        assert_eq!(echo, "seed = 1\n");
        assert_eq!(loaded, tensors);
    }

    #[test]
    fn rejects_wrong_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad");
        std::fs::write(&path, b"NOPE....").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
