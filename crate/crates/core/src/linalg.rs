//! Low-rank basis extraction for residual vectors.
//!
//! The top left singular vectors of a sample matrix `D` (m x N) are the top
//! eigenvectors of its m x m Gram matrix `D Dᵀ`, so samples are streamed into
//! an f64 [`GramAccumulator`] and the Gram matrix is diagonalized with cyclic
//! Jacobi rotations. Memory stays O(m²) however many samples are added.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

const JACOBI_TOLERANCE: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Streaming accumulator for `Σ x xᵀ` over f32 samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GramAccumulator {
    dim: usize,
    /// Upper triangle, row-major m x m.
    upper: Vec<f64>,
    samples: usize,
}

impl GramAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            upper: vec![0.0; dim * dim],
            samples: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn add(&mut self, x: &[f32]) {
        assert_eq!(
            x.len(),
            self.dim,
            "GramAccumulator::add: dimension mismatch"
        );
        let m = self.dim;
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let xi = xi as f64;
            let row = &mut self.upper[i * m + i..(i + 1) * m];
            for (g, &xj) in row.iter_mut().zip(&x[i..]) {
                *g += xi * xj as f64;
            }
        }
        self.samples += 1;
    }

    /// Adds a partial accumulator computed over another shard of samples.
    pub fn merge(&mut self, other: &GramAccumulator) {
        assert_eq!(
            self.dim, other.dim,
            "GramAccumulator::merge: dimension mismatch"
        );
        for (a, b) in self.upper.iter_mut().zip(&other.upper) {
            *a += b;
        }
        self.samples += other.samples;
    }

    /// Full symmetric Gram matrix, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        let m = self.dim;
        let mut full = self.upper.clone();
        for i in 0..m {
            for j in 0..i {
                full[i * m + j] = full[j * m + i];
            }
        }
        full
    }
}

/// A general r x m linear map, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    rank: usize,
    dim: usize,
    matrix: Vec<f32>,
}

impl Projection {
    pub fn new(matrix: Vec<f32>, rank: usize, dim: usize) -> Result<Self> {
        if rank == 0 || dim == 0 || matrix.len() != rank * dim {
            return Err(Error::InvalidParameter(alloc::format!(
                "projection of {} values is not {rank} x {dim}",
                matrix.len()
            )));
        }
        Ok(Self { rank, dim, matrix })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.matrix
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// `P x`.
    pub fn project(&self, x: &[f32]) -> Vec<f32> {
        let mut out = vec![0.0; self.rank];
        self.project_into(x, &mut out);
        out
    }

    pub fn project_into(&self, x: &[f32], out: &mut [f32]) {
        assert_eq!(x.len(), self.dim, "project: dimension mismatch");
        for (o, row) in out.iter_mut().zip(self.matrix.chunks_exact(self.dim)) {
            *o = crate::metric::dot(row, x);
        }
    }

    pub fn project_f64(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "project: dimension mismatch");
        self.matrix
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(x).map(|(&p, &v)| p as f64 * v).sum())
            .collect()
    }
}

/// Orthonormal projection onto the top singular directions of a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    projection: Projection,
    singular_values: Vec<f64>,
    total_energy: f64,
}

impl Basis {
    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn into_projection(self) -> Projection {
        self.projection
    }

    pub fn rank(&self) -> usize {
        self.projection.rank
    }

    pub fn dim(&self) -> usize {
        self.projection.dim
    }

    /// Non-increasing, non-negative.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// `Σ_{i<r} s_i² / Σ_i s_i²`; one for an all-zero sample set.
    pub fn captured_energy(&self) -> f64 {
        if self.total_energy <= 0.0 {
            return 1.0;
        }
        let kept: f64 = self.singular_values.iter().map(|s| s * s).sum();
        (kept / self.total_energy).min(1.0)
    }

    pub fn project(&self, x: &[f32]) -> Vec<f32> {
        self.projection.project(x)
    }

    /// The leading `rank` directions of this basis.
    pub fn truncated(&self, rank: usize) -> Result<Basis> {
        if rank == 0 || rank > self.rank() {
            return Err(Error::InvalidParameter(alloc::format!(
                "cannot truncate a rank-{} basis to {rank}",
                self.rank()
            )));
        }
        let dim = self.dim();
        Ok(Basis {
            projection: Projection {
                rank,
                dim,
                matrix: self.projection.matrix[..rank * dim].to_vec(),
            },
            singular_values: self.singular_values[..rank].to_vec(),
            total_energy: self.total_energy,
        })
    }
}

/// Top-`rank` left singular directions of the accumulated samples.
///
/// Rank-deficient inputs still yield `rank` orthonormal rows; directions
/// beyond the data's rank carry zero singular values.
pub fn top_r_basis(samples: &GramAccumulator, rank: usize) -> Result<Basis> {
    let m = samples.dim();
    if rank == 0 || rank > m {
        return Err(Error::InvalidParameter(alloc::format!(
            "rank {rank} must be in 1..={m}"
        )));
    }
    if samples.samples() == 0 {
        return Err(Error::Empty("no residual samples to decompose"));
    }
    let (values, vectors) = symmetric_eigen(&samples.matrix(), m);
    let total_energy: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let matrix = vectors[..rank * m].iter().map(|&v| v as f32).collect();
    let singular_values = values[..rank]
        .iter()
        .map(|v| libm::sqrt(v.max(0.0)))
        .collect();
    Ok(Basis {
        projection: Projection {
            rank,
            dim: m,
            matrix,
        },
        singular_values,
        total_energy,
    })
}

/// Eigen-decomposition of a dense symmetric `n x n` matrix by cyclic Jacobi.
///
/// Returns eigenvalues in descending order and the matching unit eigenvectors
/// as rows of a row-major `n x n` matrix. Each eigenvector's largest
/// component is made positive.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(matrix.len(), n * n, "symmetric_eigen: matrix is not n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = libm::sqrt(a.iter().map(|x| x * x).sum::<f64>());

    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .map(|(i, j)| 2.0 * a[i * n + j] * a[i * n + j])
                .sum();
            if libm::sqrt(off) <= JACOBI_TOLERANCE * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, n, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &col in &order {
        let mut vec: Vec<f64> = (0..n).map(|r| v[r * n + col]).collect();
        let pivot = vec.iter().copied().fold(
            0.0f64,
            |best, x| if x.abs() > best.abs() { x } else { best },
        );
        if pivot < 0.0 {
            vec.iter_mut().for_each(|x| *x = -*x);
        }
        vectors.extend(vec);
    }
    (values, vectors)
}

fn rotate(a: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = a[p * n + p];
    let aqq = a[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta >= 0.0 {
        1.0 / (theta + libm::sqrt(theta * theta + 1.0))
    } else {
        -1.0 / (-theta + libm::sqrt(theta * theta + 1.0))
    };
    let c = 1.0 / libm::sqrt(t * t + 1.0);
    let s = t * c;

    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = c * akp - s * akq;
        a[k * n + q] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = c * apk - s * aqk;
        a[q * n + k] = s * apk + c * aqk;
    }
    a[p * n + q] = 0.0;
    a[q * n + p] = 0.0;
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> Vec<f32> {
        (0..len)
            .map(|_| rng.sample::<f32, _>(StandardNormal))
            .collect()
    }

    #[test]
    fn exact_low_rank_is_fully_captured() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = gaussian(&mut rng, 8);
        let w = gaussian(&mut rng, 8);
        let mut acc = GramAccumulator::new(8);
        for _ in 0..500 {
            let (a, b): (f32, f32) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            let x: Vec<f32> = u.iter().zip(&w).map(|(p, q)| a * p + b * q).collect();
            acc.add(&x);
        }
        let basis = top_r_basis(&acc, 2).unwrap();
        assert!(
            (basis.captured_energy() - 1.0).abs() < 1e-5,
            "{}",
            basis.captured_energy()
        );
    }

    #[test]
    fn energy_matches_reference_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = 64;
        let scales: Vec<f32> = (0..m).map(|i| 1.0 / (1.0 + i as f32 * 0.2)).collect();
        let mut acc = GramAccumulator::new(m);
        let mut rows = Vec::new();
        for _ in 0..5000 {
            let x: Vec<f32> = gaussian(&mut rng, m)
                .iter()
                .zip(&scales)
                .map(|(v, s)| v * s)
                .collect();
            acc.add(&x);
            rows.extend(x.iter().map(|&v| v as f64));
        }
        let a = nalgebra::DMatrix::from_row_slice(5000, m, &rows);
        let mut reference: Vec<f64> = a.singular_values().iter().map(|s| s * s).collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        let expected = reference[..16].iter().sum::<f64>() / reference.iter().sum::<f64>();
        let basis = top_r_basis(&acc, 16).unwrap();
        assert!(
            (basis.captured_energy() - expected).abs() < 1e-4,
            "{} vs {expected}",
            basis.captured_energy()
        );
    }

    #[test]
    fn rows_are_orthonormal_and_values_descend() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut acc = GramAccumulator::new(12);
        for _ in 0..300 {
            let mut x = gaussian(&mut rng, 12);
            x[0] *= 5.0;
            x[3] *= 3.0;
            acc.add(&x);
        }
        let basis = top_r_basis(&acc, 6).unwrap();
        let p = basis.projection();
        for i in 0..6 {
            for j in 0..6 {
                let d = crate::metric::dot(p.row(i), p.row(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((d - expected).abs() < 1e-4, "({i},{j}) = {d}");
            }
        }
        let s = basis.singular_values();
        assert!(s.windows(2).all(|w| w[0] >= w[1]) && s.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn full_rank_preserves_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut acc = GramAccumulator::new(10);
        for _ in 0..50 {
            acc.add(&gaussian(&mut rng, 10));
        }
        let basis = top_r_basis(&acc, 10).unwrap();
        for _ in 0..20 {
            let x = gaussian(&mut rng, 10);
            let px = basis.project(&x);
            let (nx, npx) = (
                crate::metric::sq_norm(&x).sqrt(),
                crate::metric::sq_norm(&px).sqrt(),
            );
            assert!((nx - npx).abs() <= 1e-4 * nx.max(1.0));
        }
    }

    #[test]
    fn rank_deficient_input_is_completed() {
        let mut acc = GramAccumulator::new(4);
        acc.add(&[1.0, 0.0, 0.0, 0.0]);
        let basis = top_r_basis(&acc, 3).unwrap();
        assert_eq!(basis.rank(), 3);
        assert_eq!(&basis.singular_values()[1..], &[0.0, 0.0]);
        assert!((basis.singular_values()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_rank() {
        let mut acc = GramAccumulator::new(4);
        assert!(matches!(top_r_basis(&acc, 2), Err(Error::Empty(_))));
        acc.add(&[1.0, 2.0, 3.0, 4.0]);
        assert!(top_r_basis(&acc, 5).is_err());
        assert!(top_r_basis(&acc, 0).is_err());
    }

    #[test]
    fn projection_special_cases() {
        let p = Projection::new(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0], 2, 3).unwrap();
        assert_eq!(p.project(&[0.0, 0.0, 7.0]), vec![0.0, 0.0]);
        assert_eq!(p.project(p.row(1)), vec![0.0, 1.0]);
        assert!(Projection::new(vec![1.0; 5], 2, 3).is_err());
    }

    #[test]
    fn merge_matches_single_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f32>> = (0..40).map(|_| gaussian(&mut rng, 5)).collect();
        let mut whole = GramAccumulator::new(5);
        let (mut left, mut right) = (GramAccumulator::new(5), GramAccumulator::new(5));
        for (i, r) in rows.iter().enumerate() {
            whole.add(r);
            if i % 2 == 0 {
                left.add(r)
            } else {
                right.add(r)
            }
        }
        left.merge(&right);
        assert_eq!(left.samples(), whole.samples());
        for (a, b) in left.matrix().iter().zip(whole.matrix()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    proptest::proptest! {
        #[test]
        fn projection_is_linear(
            m in proptest::collection::vec(-1.0f32..1.0, 12),
            x in proptest::collection::vec(-10.0f32..10.0, 4),
            y in proptest::collection::vec(-10.0f32..10.0, 4),
            a in -3.0f32..3.0,
        ) {
            let p = Projection::new(m, 3, 4).unwrap();
            let combo: Vec<f32> = x.iter().zip(&y).map(|(xi, yi)| a * xi + yi).collect();
            let lhs = p.project(&combo);
            let (px, py) = (p.project(&x), p.project(&y));
            for i in 0..3 {
                let rhs = a * px[i] + py[i];
                proptest::prop_assert!((lhs[i] - rhs).abs() <= 1e-3 * (1.0 + rhs.abs()));
            }
        }
    }
}
