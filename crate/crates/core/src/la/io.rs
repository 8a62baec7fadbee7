//! SKM1 matrix files: the 4 bytes `SKM1`, rows and cols as little-endian
//! u64, then `rows * cols` little-endian binary64 values in column-major
//! order. No padding, no checksum.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::DenseMatrix;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SKM1";
const HEADER_LEN: u64 = 20;

pub fn write_matrix(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
    put(MAGIC)?;
    put(&(a.rows() as u64).to_le_bytes())?;
    put(&(a.cols() as u64).to_le_bytes())?;
    for x in a.as_slice() {
        put(&x.to_le_bytes())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let found = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let mut r = BufReader::new(file);
    let truncated = |expected: u64| Error::Truncated {
        path: path.to_path_buf(),
        expected,
        found,
    };

    let mut magic = [0u8; 4];
    if found < 4 {
        return Err(truncated(HEADER_LEN));
    }
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    if found < HEADER_LEN {
        return Err(truncated(HEADER_LEN));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word).map_err(|e| Error::io(path, e))?;
    let rows = u64::from_le_bytes(word);
    r.read_exact(&mut word).map_err(|e| Error::io(path, e))?;
    let cols = u64::from_le_bytes(word);

    let expected = rows
        .checked_mul(cols)
        .and_then(|k| k.checked_mul(8))
        .and_then(|k| k.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Parse {
            what: path.display().to_string(),
            detail: format!("implausible shape {rows}x{cols}"),
        })?;
    if found < expected {
        return Err(truncated(expected));
    }
    if found > expected {
        return Err(Error::Parse {
            what: path.display().to_string(),
            detail: format!("{} trailing bytes after payload", found - expected),
        });
    }

    let (rows, cols) = (rows as usize, cols as usize);
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        r.read_exact(&mut word).map_err(|e| Error::io(path, e))?;
        data.push(f64::from_le_bytes(word));
    }
    let m = DenseMatrix::from_col_major(rows, cols, data)?;
    if !m.is_finite() {
        return Err(Error::NonFinite(path.display().to_string()));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.skm");
        let mut rng = StdRng::seed_from_u64(9);
        let a = DenseMatrix::from_fn(7, 3, |_, _| rng.random::<f64>() * 1e3 - 5e2);
        write_matrix(&path, &a).unwrap();
        let b = read_matrix(&path).unwrap();
        assert_eq!(a.shape(), b.shape());
        assert!(a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 20 + 7 * 3 * 8);
    }

    #[test]
    fn layout_is_little_endian_column_major() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.skm");
        write_matrix(&path, &DenseMatrix::from_rows(&[&[1.0, 2.0]])).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"SKM1");
        assert_eq!(&bytes[4..12], &1u64.to_le_bytes());
        assert_eq!(&bytes[12..20], &2u64.to_le_bytes());
        assert_eq!(&bytes[20..28], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[28..36], &2.0f64.to_le_bytes());
    }

    #[test]
    fn wrong_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.skm");
        std::fs::write(&path, b"SKM2\0\0\0\0\0\0\0\0\0\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::BadMagic(_))));
    }

    #[test]
    fn truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.skm");
        write_matrix(&path, &DenseMatrix::identity(3)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::Truncated { .. })));
        std::fs::write(&path, &bytes[..10]).unwrap();
        assert!(matches!(read_matrix(&path), Err(Error::Truncated { .. })));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(read_matrix("/nonexistent/x.skm"), Err(Error::Io { .. })));
    }
}
