//! fvecs / ivecs containers.
//!
//! Both are a concatenation of little-endian records: an `i32` dimension `d`
//! followed by `d` values (`f32` for fvecs, `i32` for ivecs). The record count
//! follows from the file size.

use std::fs;
use std::path::Path;

use finger_core::{GroundTruth, Metric, VectorSet};

use crate::binio::{Reader, Writer};
use crate::FileError;

/// Parsed records, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Records<T> {
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T> Records<T> {
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

fn parse<T>(bytes: &[u8], mut value: impl FnMut([u8; 4]) -> T) -> Result<Records<T>, FileError> {
    if bytes.is_empty() {
        return Err(FileError::NoRecords);
    }
    let mut reader = Reader::new(bytes);
    let mut dim = None;
    let mut data = Vec::new();
    while reader.remaining() > 0 {
        let at = reader.offset();
        let d = reader.i32()?;
        if d <= 0 {
            return Err(FileError::Invalid {
                offset: at,
                detail: format!("record dimension {d}"),
            });
        }
        let d = d as usize;
        match dim {
            None => {
                dim = Some(d);
                data.reserve(bytes.len() / (4 * (d + 1)) * d);
            }
            Some(expected) if expected != d => {
                return Err(FileError::DimensionMismatch {
                    offset: at,
                    expected,
                    found: d,
                });
            }
            Some(_) => {}
        }
        let body = reader.take(4 * d)?;
        data.extend(body.chunks_exact(4).map(|c| value(c.try_into().unwrap())));
    }
    Ok(Records {
        dim: dim.unwrap(),
        data,
    })
}

pub fn parse_fvecs(bytes: &[u8]) -> Result<Records<f32>, FileError> {
    parse(bytes, f32::from_le_bytes)
}

pub fn parse_ivecs(bytes: &[u8]) -> Result<Records<i32>, FileError> {
    parse(bytes, i32::from_le_bytes)
}

fn encode<T: Copy>(rows: &[T], dim: usize, mut bytes: impl FnMut(T) -> [u8; 4]) -> Vec<u8> {
    assert!(
        dim > 0 && rows.len().is_multiple_of(dim),
        "rows must be a whole number of records"
    );
    let mut w = Writer::default();
    for row in rows.chunks_exact(dim) {
        w.u32(dim as u32);
        for &v in row {
            w.raw(&bytes(v));
        }
    }
    w.bytes
}

pub fn encode_fvecs(rows: &[f32], dim: usize) -> Vec<u8> {
    encode(rows, dim, f32::to_le_bytes)
}

pub fn encode_ivecs(rows: &[i32], dim: usize) -> Vec<u8> {
    encode(rows, dim, i32::to_le_bytes)
}

/// Loads an fvecs file as a dataset; cosine rows are normalized.
pub fn load_fvecs(path: impl AsRef<Path>, metric: Metric) -> Result<VectorSet, FileError> {
    let records = parse_fvecs(&fs::read(path)?)?;
    Ok(VectorSet::new(records.data, records.dim, metric)?)
}

pub fn save_fvecs(path: impl AsRef<Path>, set: &VectorSet) -> Result<(), FileError> {
    fs::write(path, encode_fvecs(set.as_slice(), set.dim()))?;
    Ok(())
}

/// Loads neighbor ids from an ivecs file (one record per query).
pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth, FileError> {
    let records = parse_ivecs(&fs::read(path)?)?;
    let ids = records
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            u32::try_from(v).map_err(|_| FileError::Invalid {
                offset: 4 * (i / records.dim * (records.dim + 1) + i % records.dim + 1),
                detail: format!("negative neighbor id {v}"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GroundTruth::from_ids(records.dim, ids)?)
}

pub fn save_ground_truth(path: impl AsRef<Path>, truth: &GroundTruth) -> Result<(), FileError> {
    let ids: Vec<i32> = truth.all_ids().iter().map(|&v| v as i32).collect();
    fs::write(path, encode_ivecs(&ids, truth.k()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_records() {
        let bytes = encode_fvecs(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], 4);
        let rec = parse_fvecs(&bytes).unwrap();
        assert_eq!((rec.len(), rec.dim), (2, 4));
        assert_eq!(rec.data[4..], [5.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn empty_file_has_no_records() {
        let err = parse_fvecs(&[]).unwrap_err();
        assert_eq!(err.to_string(), "no records");
    }

    #[test]
    fn mismatch_names_offset() {
        let mut bytes = encode_fvecs(&[1.0, 2.0], 2);
        bytes.extend(encode_fvecs(&[1.0, 2.0, 3.0], 3));
        match parse_fvecs(&bytes) {
            Err(FileError::DimensionMismatch {
                offset,
                expected,
                found,
            }) => {
                assert_eq!((offset, expected, found), (12, 2, 3));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_record() {
        let bytes = encode_fvecs(&[1.0, 2.0, 3.0], 3);
        assert!(matches!(
            parse_fvecs(&bytes[..14]),
            Err(FileError::Truncated { offset: 4, .. })
        ));
        assert!(matches!(
            parse_fvecs(&bytes[..2]),
            Err(FileError::Truncated { offset: 0, .. })
        ));
    }

    #[test]
    fn ivecs_round_trip() {
        let rows = [3, 1, 4, 1, 5, 9];
        assert_eq!(parse_ivecs(&encode_ivecs(&rows, 3)).unwrap().data, rows);
    }
}
