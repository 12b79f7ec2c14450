//! The BED1 batch file format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "BED1"
//! 4       4     version (u32 LE, = 1)
//! 8       4     batch   (u32 LE)
//! 12      4     rows    (u32 LE)
//! 16      4     cols    (u32 LE)
//! 20      8·N   N = batch·rows·cols f64 LE, matrices concatenated, row-major
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::tensor::{validate, BatchedMatrix, BatchedSymmetric, DEFAULT_SYMMETRY_TOL};

pub const MAGIC: [u8; 4] = *b"BED1";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 20;

pub fn write_matrix<W: Write>(m: &BatchedMatrix, mut w: W) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4..8].copy_from_slice(&VERSION.to_le_bytes());
    for (slot, value) in [m.batch(), m.rows(), m.cols()].into_iter().enumerate() {
        let v = u32::try_from(value)
            .map_err(|_| Error::DimMismatch(format!("dimension {value} does not fit in u32")))?;
        header[8 + 4 * slot..12 + 4 * slot].copy_from_slice(&v.to_le_bytes());
    }
    w.write_all(&header)?;
    let mut payload = Vec::with_capacity(m.data().len() * 8);
    for x in m.data() {
        payload.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

pub fn write_batch<W: Write>(a: &BatchedSymmetric, w: W) -> Result<()> {
    write_matrix(a.as_matrix(), w)
}

/// Reads any BED1 batch (no symmetry requirement).
pub fn read_matrix<R: Read>(mut r: R) -> Result<BatchedMatrix> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 4 || bytes[0..4] != MAGIC {
        let mut found = [0u8; 4];
        let n = bytes.len().min(4);
        found[..n].copy_from_slice(&bytes[..n]);
        return Err(Error::BadMagic { found });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected: 0,
            found: 0,
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    let version = word(1);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let (batch, rows, cols) = (word(2) as usize, word(3) as usize, word(4) as usize);
    let expected = batch
        .checked_mul(rows)
        .and_then(|x| x.checked_mul(cols))
        .ok_or_else(|| Error::DimMismatch("header dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() % 8 != 0 {
        return Err(Error::DimMismatch(format!(
            "payload length {} is not a whole number of f64 values",
            payload.len()
        )));
    }
    let found = payload.len() / 8;
    if found < expected {
        return Err(Error::TruncatedPayload { expected, found });
    }
    if found > expected {
        return Err(Error::DimMismatch(format!(
            "header declares {expected} reals but payload holds {found}"
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    BatchedMatrix::new(batch, rows, cols, data)
}

/// Reads a square BED1 batch and validates it as symmetric.
pub fn read_batch<R: Read>(r: R) -> Result<BatchedSymmetric> {
    let m = read_matrix(r)?;
    if m.rows() != m.cols() {
        return Err(Error::DimMismatch(format!(
            "expected square matrices, file holds {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    validate(m, DEFAULT_SYMMETRY_TOL)
}
