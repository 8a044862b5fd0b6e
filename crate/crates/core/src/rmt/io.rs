//! Binary matrix blobs with a JSON sidecar.
//!
//! A complex matrix is stored as little-endian IEEE-754 doubles, interleaved
//! `(re, im)`, column-major, in `<stem>.bin`. The sidecar `<stem>.json`
//! carries `{"rows", "cols", "dtype": "c128", "layout": "col-major"}` plus
//! optional extra header fields such as `n_snapshots`.

use std::fs;
use std::path::{Path, PathBuf};

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DTYPE: &str = "c128";
pub const LAYOUT: &str = "col-major";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub layout: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_snapshots: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test: Option<usize>,
}

impl MatrixHeader {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            dtype: DTYPE.to_owned(),
            layout: LAYOUT.to_owned(),
            n_snapshots: None,
            n_test: None,
        }
    }

    pub fn byte_len(&self) -> usize {
        self.rows * self.cols * 16
    }

    pub fn validate(&self) -> Result<()> {
        if self.dtype != DTYPE {
            return Err(Error::Format(format!("unsupported dtype {:?}", self.dtype)));
        }
        if self.layout != LAYOUT {
            return Err(Error::Format(format!("unsupported layout {:?}", self.layout)));
        }
        if let Some(ns) = self.n_snapshots {
            if ns + self.n_test.unwrap_or(0) != self.cols {
                return Err(Error::Format(format!(
                    "n_snapshots {ns} + n_test {} does not match {} columns",
                    self.n_test.unwrap_or(0),
                    self.cols
                )));
            }
        }
        Ok(())
    }
}

pub fn encode(m: MatRef<'_, c64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols() * 16);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8], header: &MatrixHeader) -> Result<Mat<c64>> {
    header.validate()?;
    if bytes.len() != header.byte_len() {
        return Err(Error::Format(format!(
            "expected {} bytes for a {}x{} c128 matrix, found {}",
            header.byte_len(),
            header.rows,
            header.cols,
            bytes.len()
        )));
    }
    let read = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
    Ok(Mat::<c64>::from_fn(header.rows, header.cols, |i, j| {
        let k = 2 * (j * header.rows + i);
        c64::new(read(k), read(k + 1))
    }))
}

/// `<stem>.bin` and `<stem>.json` for a stem path (extension is replaced).
pub fn paths_for(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

/// Writes the blob and its sidecar; returns both paths.
pub fn write_matrix(stem: &Path, m: MatRef<'_, c64>, header: &MatrixHeader) -> Result<(PathBuf, PathBuf)> {
    if header.rows != m.nrows() || header.cols != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: header.rows * header.cols,
            found: m.nrows() * m.ncols(),
        });
    }
    header.validate()?;
    let (bin, json) = paths_for(stem);
    fs::write(&bin, encode(m))?;
    fs::write(&json, serde_json::to_string_pretty(header)?)?;
    Ok((bin, json))
}

pub fn read_header(stem: &Path) -> Result<MatrixHeader> {
    let (_, json) = paths_for(stem);
    let header: MatrixHeader = serde_json::from_slice(&fs::read(json)?)?;
    header.validate()?;
    Ok(header)
}

pub fn read_matrix(stem: &Path) -> Result<(Mat<c64>, MatrixHeader)> {
    let header = read_header(stem)?;
    let (bin, _) = paths_for(stem);
    let bytes = fs::read(bin)?;
    Ok((decode(&bytes, &header)?, header))
}

/// Checks that a written blob matches its sidecar without decoding it.
pub fn validate_files(stem: &Path) -> Result<MatrixHeader> {
    let header = read_header(stem)?;
    let (bin, _) = paths_for(stem);
    let len = fs::metadata(bin)?.len() as usize;
    if len != header.byte_len() {
        return Err(Error::Format(format!(
            "blob has {len} bytes, sidecar declares {}",
            header.byte_len()
        )));
    }
    Ok(header)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_interleaved_column_major() {
        let m = Mat::<c64>::from_fn(2, 2, |i, j| c64::new((10 * i + j) as f64, -((10 * i + j) as f64)));
        let bytes = encode(m.as_ref());
        let first: Vec<f64> = bytes
            .chunks(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        // (0,0), (1,0), (0,1), (1,1)
        assert_eq!(first, vec![0.0, -0.0, 10.0, -10.0, 1.0, -1.0, 11.0, -11.0]);
    }

    #[test]
    fn sidecar_schema() {
        let h = MatrixHeader::new(3, 4);
        let v: serde_json::Value = serde_json::to_value(&h).unwrap();
        assert_eq!(v, serde_json::json!({"rows": 3, "cols": 4, "dtype": "c128", "layout": "col-major"}));
        let bad = MatrixHeader {
            dtype: "f64".into(),
            ..h.clone()
        };
        assert!(decode(&[0u8; 192], &bad).is_err());
        assert!(decode(&[0u8; 10], &h).is_err());
    }

    #[test]
    fn file_roundtrip_with_snapshot_header() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("cube");
        let m = Mat::<c64>::from_fn(3, 5, |i, j| c64::new(i as f64, j as f64 * 0.5));
        let mut h = MatrixHeader::new(3, 5);
        h.n_snapshots = Some(4);
        h.n_test = Some(1);
        write_matrix(&stem, m.as_ref(), &h).unwrap();
        let (back, hb) = read_matrix(&stem).unwrap();
        assert_eq!(hb, h);
        assert_eq!(back, m);
        assert_eq!(validate_files(&stem).unwrap(), h);
    }

    proptest! {
        #[test]
        fn encode_decode_is_bit_exact(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
            let m = Mat::<c64>::from_fn(rows, cols, |i, j| {
                let k = (seed ^ ((i * 31 + j) as u64).wrapping_mul(0x9E3779B97F4A7C15)) as f64;
                c64::new(k.sin() * 1e3, (k * 0.5).cos() * 1e-3)
            });
            let h = MatrixHeader::new(rows, cols);
            let back = decode(&encode(m.as_ref()), &h).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
