//! Little-endian byte helpers with offset-aware errors.

use crate::FileError;

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn take(&mut self, len: usize) -> Result<&'a [u8], FileError> {
        if self.remaining() < len {
            return Err(FileError::Truncated {
                offset: self.pos,
                needed: len,
                available: self.remaining(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], FileError> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub fn u8(&mut self) -> Result<u8, FileError> {
        Ok(self.array::<1>()?[0])
    }

    pub fn u32(&mut self) -> Result<u32, FileError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn i32(&mut self) -> Result<i32, FileError> {
        Ok(i32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, FileError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64, FileError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    /// Reads a `u64` length that must fit in memory-sized arithmetic.
    pub fn len(&mut self) -> Result<usize, FileError> {
        let at = self.pos;
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&v| v <= u32::MAX as usize + 1)
            .ok_or_else(|| FileError::Invalid {
                offset: at,
                detail: format!("length {v} out of range"),
            })
    }

    pub fn f32s(&mut self, count: usize) -> Result<Vec<f32>, FileError> {
        let bytes = self.take_array(count, 4)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn u32s(&mut self, count: usize) -> Result<Vec<u32>, FileError> {
        let bytes = self.take_array(count, 4)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn u64s(&mut self, count: usize) -> Result<Vec<u64>, FileError> {
        let bytes = self.take_array(count, 8)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn take_array(&mut self, count: usize, width: usize) -> Result<&'a [u8], FileError> {
        let len = count.checked_mul(width).ok_or_else(|| FileError::Invalid {
            offset: self.pos,
            detail: format!("{count} elements overflow"),
        })?;
        self.take(len)
    }

    pub fn magic(&mut self, expected: &[u8; 8]) -> Result<(), FileError> {
        let found = self.take(expected.len().min(self.remaining()))?;
        if found != expected {
            return Err(FileError::BadMagic {
                found: String::from_utf8_lossy(found).into_owned(),
                expected: String::from_utf8_lossy(expected).into_owned(),
            });
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<(), FileError> {
        match self.remaining() {
            0 => Ok(()),
            extra => Err(FileError::Trailing {
                offset: self.pos,
                extra,
            }),
        }
    }
}

#[derive(Default)]
pub(crate) struct Writer {
    pub bytes: Vec<u8>,
}

impl Writer {
    pub fn raw(&mut self, b: &[u8]) {
        self.bytes.extend_from_slice(b);
    }

    pub fn u8(&mut self, v: u8) {
        self.bytes.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.raw(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.raw(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.raw(&v.to_le_bytes());
    }

    pub fn f32s(&mut self, v: &[f32]) {
        self.bytes.reserve(v.len() * 4);
        for x in v {
            self.raw(&x.to_le_bytes());
        }
    }

    pub fn u32s(&mut self, v: &[u32]) {
        self.bytes.reserve(v.len() * 4);
        for x in v {
            self.raw(&x.to_le_bytes());
        }
    }
}
