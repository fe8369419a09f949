//! Compact binary container for K×K matrices.
//!
//! A file is a sequence of records. Each record is a 24-byte little-endian
//! header followed by K² `f64` values in row-major order:
//!
//! | offset | size | field                                         |
//! |-------:|-----:|-----------------------------------------------|
//! | 0      | 4    | magic `MSMX`                                  |
//! | 4      | 2    | format version (1)                            |
//! | 6      | 1    | kind (0 standard, 1 reduced_cov, 2 reduced_corr, 3 demeaned) |
//! | 7      | 1    | reserved, 0                                   |
//! | 8      | 4    | K                                             |
//! | 12     | 4    | epoch index (1-based; state number for typical states, 0 for none) |
//! | 16     | 4    | mid date, days since 1970-01-01 (`i32::MIN` for none) |
//! | 20     | 4    | reserved, 0                                   |

use std::path::Path;

use chrono::NaiveDate;
use marketstates_core::{DMatrix, MatrixKind};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"MSMX";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;
const NO_DATE: i32 = i32::MIN;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRecord {
    pub kind: MatrixKind,
    pub epoch: u32,
    pub mid_date: Option<NaiveDate>,
    pub values: DMatrix<f64>,
}

fn kind_code(kind: MatrixKind) -> u8 {
    match kind {
        MatrixKind::Standard => 0,
        MatrixKind::ReducedCov => 1,
        MatrixKind::ReducedCorr => 2,
        MatrixKind::Demeaned => 3,
    }
}

fn kind_from_code(code: u8) -> Option<MatrixKind> {
    MatrixKind::ALL.into_iter().find(|&k| kind_code(k) == code)
}

fn epoch_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}

/// Appends one record to `out`.
pub fn encode(record: &MatrixRecord, out: &mut Vec<u8>) -> Result<()> {
    let k = record.values.nrows();
    if !record.values.is_square() {
        return Err(CliError::data("only square matrices can be stored"));
    }
    let k32 = u32::try_from(k).map_err(|_| CliError::data("matrix too large"))?;
    let date = match record.mid_date {
        Some(d) => i32::try_from((d - epoch_day()).num_days()).map_err(|_| CliError::data("date out of range"))?,
        None => NO_DATE,
    };
    out.reserve(HEADER_LEN + 8 * k * k);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(kind_code(record.kind));
    out.push(0);
    out.extend_from_slice(&k32.to_le_bytes());
    out.extend_from_slice(&record.epoch.to_le_bytes());
    out.extend_from_slice(&date.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for i in 0..k {
        for j in 0..k {
            out.extend_from_slice(&record.values[(i, j)].to_le_bytes());
        }
    }
    Ok(())
}

/// Decodes every record of a byte buffer.
pub fn decode_all(bytes: &[u8]) -> Result<Vec<MatrixRecord>> {
    let mut records = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let (record, used) = decode(&bytes[pos..]).map_err(|e| e.context(format!("record at byte {pos}")))?;
        records.push(record);
        pos += used;
    }
    Ok(records)
}

/// Decodes the record at the start of `bytes`; returns it and its length.
pub fn decode(bytes: &[u8]) -> Result<(MatrixRecord, usize)> {
    let header = bytes
        .get(..HEADER_LEN)
        .ok_or_else(|| CliError::data("truncated header"))?;
    if &header[0..4] != MAGIC {
        return Err(CliError::data("bad magic"));
    }
    let u16_at = |o: usize| u16::from_le_bytes([header[o], header[o + 1]]);
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().expect("4 bytes"));
    let version = u16_at(4);
    if version != VERSION {
        return Err(CliError::data(format!("unsupported version {version}")));
    }
    let kind = kind_from_code(header[6]).ok_or_else(|| CliError::data(format!("unknown kind code {}", header[6])))?;
    let k = u32_at(8) as usize;
    let epoch = u32_at(12);
    let date = u32_at(16) as i32;
    let mid_date = if date == NO_DATE {
        None
    } else {
        Some(epoch_day() + chrono::Duration::days(i64::from(date)))
    };
    let len = k
        .checked_mul(k)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| CliError::data("matrix size overflows"))?;
    let body = bytes
        .get(HEADER_LEN..len)
        .ok_or_else(|| CliError::data("truncated matrix data"))?;
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((
        MatrixRecord {
            kind,
            epoch,
            mid_date,
            values: DMatrix::from_row_slice(k, k, &values),
        },
        len,
    ))
}

pub fn write_container(path: &Path, records: &[MatrixRecord]) -> Result<()> {
    let mut bytes = Vec::new();
    for r in records {
        encode(r, &mut bytes)?;
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_container(path: &Path) -> Result<Vec<MatrixRecord>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_all(&bytes).map_err(|e| e.context(path.display()))
}
