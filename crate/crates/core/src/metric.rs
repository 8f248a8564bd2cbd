//! Distance metrics and the scalar kernels shared by every module.
//!
//! All queues in this crate order by a single "smaller is closer" score:
//! squared L2 for [`Metric::L2`] and the negated inner product for
//! [`Metric::InnerProduct`] and [`Metric::Cosine`]. Cosine data is normalized
//! at load time, so its score is the negated inner product of unit vectors.

use core::fmt;
use core::str::FromStr;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Metric {
    L2 = 0,
    InnerProduct = 1,
    Cosine = 2,
}

impl Metric {
    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Self::L2),
            1 => Some(Self::InnerProduct),
            2 => Some(Self::Cosine),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::L2 => "l2",
            Self::InnerProduct => "ip",
            Self::Cosine => "cosine",
        }
    }

    /// True when the score is a negated inner product.
    pub fn is_inner_product(self) -> bool {
        !matches!(self, Self::L2)
    }

    /// Ordering score between two stored vectors (smaller is closer).
    #[inline]
    pub fn score(self, a: &[f32], b: &[f32]) -> f32 {
        match self {
            Self::L2 => sq_l2(a, b),
            Self::InnerProduct | Self::Cosine => -dot(a, b),
        }
    }

    /// Maps an internal score to the value reported by [`exact_distance`].
    #[inline]
    pub fn score_to_distance(self, score: f32) -> f32 {
        match self {
            Self::L2 => libm::sqrtf(score.max(0.0)),
            Self::InnerProduct | Self::Cosine => score,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "euclidean" => Ok(Self::L2),
            "ip" | "inner_product" | "innerproduct" | "dot" => Ok(Self::InnerProduct),
            "cosine" | "angular" => Ok(Self::Cosine),
            other => Err(Error::InvalidParameter(alloc::format!(
                "unknown metric `{other}`"
            ))),
        }
    }
}

/// Distance between `a` and `b` under `metric`.
///
/// L2 returns the Euclidean distance, InnerProduct returns `-a·b` and Cosine
/// returns `-cos(a, b)`.
///
/// Panics if the slices differ in length.
pub fn exact_distance(a: &[f32], b: &[f32], metric: Metric) -> f32 {
    assert_eq!(a.len(), b.len(), "exact_distance: dimension mismatch");
    match metric {
        Metric::L2 => libm::sqrtf(sq_l2(a, b)),
        Metric::InnerProduct => -dot(a, b),
        Metric::Cosine => -cosine(a, b),
    }
}

/// Inner product with an f64 accumulator.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    dot_f64(a, b) as f32
}

#[inline]
pub fn dot_f64(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rem_a, rem_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        for i in 0..4 {
            acc[i] += x[i] as f64 * y[i] as f64;
        }
    }
    let mut tail = 0.0f64;
    for (x, y) in rem_a.iter().zip(rem_b) {
        tail += *x as f64 * *y as f64;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Squared Euclidean distance with an f64 accumulator.
#[inline]
pub fn sq_l2(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rem_a, rem_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        for i in 0..4 {
            let d = x[i] as f64 - y[i] as f64;
            acc[i] += d * d;
        }
    }
    let mut tail = 0.0f64;
    for (x, y) in rem_a.iter().zip(rem_b) {
        let d = *x as f64 - *y as f64;
        tail += d * d;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3]) + tail) as f32
}

#[inline]
pub fn sq_norm(a: &[f32]) -> f32 {
    dot(a, a)
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> f32 {
    let ab = dot_f64(a, b);
    let aa = dot_f64(a, a);
    let bb = dot_f64(b, b);
    cosine_from_parts(ab, aa, bb) as f32
}

#[inline]
pub(crate) fn cosine_from_parts(ab: f64, aa: f64, bb: f64) -> f64 {
    if aa <= 0.0 || bb <= 0.0 {
        return 0.0;
    }
    ab / libm::sqrt(aa * bb)
}
