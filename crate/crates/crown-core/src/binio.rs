//! Little-endian read/write helpers for the versioned binary artifacts.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

// Hard cap on any single length field; a corrupted file must not drive
// a multi-gigabyte allocation.
const MAX_STRING_LEN: usize = 1 << 22;

pub(crate) fn write_u32(w: &mut impl Write, path: &Path, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_u64(w: &mut impl Write, path: &Path, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_f64(w: &mut impl Write, path: &Path, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_str(w: &mut impl Write, path: &Path, s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    write_u32(w, path, bytes.len() as u32)?;
    w.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn fill(r: &mut impl Read, path: &Path, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Truncated { path: path.into() }
        } else {
            Error::io(path, e)
        }
    })
}

pub(crate) fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    fill(r, path, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut b = [0u8; 8];
    fill(r, path, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64(r: &mut impl Read, path: &Path) -> Result<f64> {
    let mut b = [0u8; 8];
    fill(r, path, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub(crate) fn read_str(r: &mut impl Read, path: &Path) -> Result<String> {
    let len = read_u32(r, path)? as usize;
    if len > MAX_STRING_LEN {
        return Err(Error::parse(path, 0, format!("string length {len} too large")));
    }
    let mut buf = vec![0u8; len];
    fill(r, path, &mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::parse(path, 0, "invalid UTF-8 string"))
}

/// Check a 4-byte magic of the form `XXXn` where `n` is the version digit.
/// A matching family with a different version is reported as a version
/// mismatch; anything else as a bad magic.
pub(crate) fn expect_magic(r: &mut impl Read, path: &Path, expected: &[u8; 4]) -> Result<()> {
    let mut got = [0u8; 4];
    fill(r, path, &mut got)?;
    if &got == expected {
        return Ok(());
    }
    if got[..3] == expected[..3] {
        return Err(Error::VersionMismatch {
            path: path.into(),
            family: String::from_utf8_lossy(&expected[..3]).into_owned(),
            found: String::from_utf8_lossy(&got).into_owned(),
        });
    }
    Err(Error::BadMagic {
        path: path.into(),
        expected: String::from_utf8_lossy(expected).into_owned(),
    })
}
