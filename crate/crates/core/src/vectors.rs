use alloc::vec::Vec;

use crate::metric::{sq_norm, Metric};
use crate::{Error, Result};

/// Dense row-major matrix of `n` points in `m` dimensions, tagged with the
/// metric it is searched under.
///
/// Rows of a [`Metric::Cosine`] set are normalized to unit length on
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    n: usize,
    m: usize,
    data: Vec<f32>,
    metric: Metric,
}

impl VectorSet {
    pub fn new(data: Vec<f32>, m: usize, metric: Metric) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter(
                "dimensionality must be at least 1".into(),
            ));
        }
        if data.is_empty() {
            return Err(Error::Empty("vector set has no rows"));
        }
        if !data.len().is_multiple_of(m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: data.len() % m,
            });
        }
        let mut set = Self {
            n: data.len() / m,
            m,
            data,
            metric,
        };
        if metric == Metric::Cosine {
            set.normalize_rows()?;
        }
        Ok(set)
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R], metric: Metric) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("vector set has no rows"))?;
        let m = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * m);
        for row in rows {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, m, metric)
    }

    fn normalize_rows(&mut self) -> Result<()> {
        for (i, row) in self.data.chunks_exact_mut(self.m).enumerate() {
            let norm = libm::sqrt(sq_norm(row) as f64);
            if norm == 0.0 {
                return Err(Error::ZeroNorm { row: i });
            }
            for x in row.iter_mut() {
                *x = (*x as f64 / norm) as f32;
            }
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn metric(&self) -> Metric {
        self.metric
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.m)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.data
    }

    /// Same data under a different metric (re-normalizing for cosine).
    pub fn with_metric(self, metric: Metric) -> Result<Self> {
        Self::new(self.data, self.m, metric)
    }

    /// Rows `[start, end)` as a new set.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n {
            return Err(Error::InvalidParameter(alloc::format!(
                "row range {start}..{end} out of bounds for {} rows",
                self.n
            )));
        }
        Self::new(
            self.data[start * self.m..end * self.m].to_vec(),
            self.m,
            self.metric,
        )
    }
}
