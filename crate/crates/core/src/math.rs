#![allow(clippy::needless_range_loop)]
//! Minimal dense linear algebra and simplex primitives.
//!
//! Dimensions here are small (contexts of dimension d <= 32, K <= a few
//! dozen arms), so everything is a flat `Vec<f64>` with hand-rolled loops.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

/// Dense vector of dimension `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(pub Vec<f64>);

impl Vector {
    pub fn zeros(d: usize) -> Self {
        Vector(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn add_assign(&mut self, other: &Vector) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * c).collect())
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

/// Inner product.
pub fn dot(a: &Vector, b: &Vector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(a.0.iter().zip(b.0.iter()).map(|(x, y)| x * y).sum())
}

/// Rank-1 matrix `a b^T`.
pub fn outer(a: &Vector, b: &Vector) -> Result<Matrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let d = a.dim();
    let mut m = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            m.data[i * d + j] = a.0[i] * b.0[j];
        }
    }
    Ok(m)
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(d: usize) -> Self {
        Matrix {
            dim: d,
            data: vec![0.0; d * d],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let d = rows.len();
        let mut m = Self::zeros(d);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), d, "from_rows requires a square matrix");
            m.data[i * d..(i + 1) * d].copy_from_slice(r);
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn add_assign(&mut self, other: &Matrix) {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    pub fn add_scaled_assign(&mut self, other: &Matrix, c: f64) {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &Vector) -> Vector {
        assert_eq!(self.dim, x.dim(), "matrix-vector dimension mismatch");
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            let mut s = 0.0;
            for j in 0..d {
                s += row[j] * x.0[j];
            }
            out[i] = s;
        }
        Vector(out)
    }

    /// In-place right-multiplication by `(I - c * x x^T)`, a rank-1 update:
    /// `M <- M - c (M x) x^T`.
    pub fn mul_one_minus_scaled_outer_assign(&mut self, x: &Vector, c: f64) {
        let d = self.dim;
        let mx = self.mul_vec(x);
        for i in 0..d {
            let mi = c * mx.0[i];
            let row = &mut self.data[i * d..(i + 1) * d];
            for j in 0..d {
                row[j] -= mi * x.0[j];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Matrix product `A B`.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.dim, b.dim, "matrix dimension mismatch");
    let d = a.dim;
    let mut out = Matrix::zeros(d);
    for i in 0..d {
        for k in 0..d {
            let aik = a.data[i * d + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.data[k * d..(k + 1) * d];
            let orow = &mut out.data[i * d..(i + 1) * d];
            for j in 0..d {
                orow[j] += aik * brow[j];
            }
        }
    }
    out
}

/// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
///
/// Adequate for d <= 32. Returns eigenvalues in ascending order.
pub fn sym_eigenvalues(s: &Matrix) -> Result<Vec<f64>> {
    let asym = s.max_asymmetry();
    let scale = s.max_abs().max(1.0);
    if asym > 1e-9 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let d = s.dim;
    let mut a = s.clone();
    // Symmetrize exactly so rotations stay consistent.
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, v);
            a.set(j, i, v);
        }
    }
    let off = |m: &Matrix| -> f64 {
        let mut s2 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    s2 += m.get(i, j) * m.get(i, j);
                }
            }
        }
        s2
    };
    for _sweep in 0..100 {
        if off(&a) <= 1e-28 * scale * scale {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..d {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..d {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..d).map(|i| a.get(i, i)).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Probability distribution over K arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simplex(Vec<f64>);

impl Simplex {
    /// Validate and construct. Small drift in the sum (below 1e-9) is
    /// renormalized away; drift within 1e-12 is accepted as-is.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidSimplex("empty".into()));
        }
        for &p in &probs {
            if !p.is_finite() || !(-1e-12..=1.0 + 1e-9).contains(&p) {
                return Err(Error::InvalidSimplex(format!("entry {p} out of [0,1]")));
            }
        }
        let sum: f64 = probs.iter().sum();
        let drift = (sum - 1.0).abs();
        if drift <= 1e-12 {
            Ok(Simplex(probs))
        } else if drift < 1e-9 {
            Ok(Simplex(probs.into_iter().map(|p| p.max(0.0) / sum).collect()))
        } else {
            Err(Error::InvalidSimplex(format!("sum {sum} drifts by {drift:.3e}")))
        }
    }

    pub fn uniform(k: usize) -> Self {
        Simplex(vec![1.0 / k as f64; k])
    }

    pub fn point_mass(k: usize, arm: usize) -> Self {
        let mut p = vec![0.0; k];
        p[arm] = 1.0;
        Simplex(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prob(&self, arm: usize) -> f64 {
        self.0[arm]
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn min_prob(&self) -> f64 {
        self.0.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Shannon entropy in nats; `0 log(1/0)` is taken as 0.
pub fn entropy(q: &Simplex) -> f64 {
    q.probs()
        .iter()
        .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
        .sum()
}

/// Sample an arm index from `q`, consuming exactly one uniform draw.
pub fn sample_categorical(q: &Simplex, rng: &mut RngStream) -> usize {
    let r = rng.next_f64();
    let mut cdf = 0.0;
    for (i, &p) in q.probs().iter().enumerate() {
        cdf += p;
        if r < cdf {
            return i;
        }
    }
    // Rounding left a sliver of mass unassigned; return the last arm
    // with nonzero probability.
    q.probs()
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(q.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec2(a: f64, b: f64) -> Vector {
        Vector(vec![a, b])
    }

    #[test]
    fn dot_orthogonal_is_zero() {
        assert_eq!(dot(&vec2(1.0, 0.0), &vec2(0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn dot_hand_value() {
        // 1*3 + 2*4
        assert_eq!(dot(&vec2(1.0, 2.0), &vec2(3.0, 4.0)).unwrap(), 11.0);
    }

    #[test]
    fn dot_zero_vector() {
        assert_eq!(dot(&vec2(3.0, -1.0), &Vector::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn dot_dimension_mismatch_errors() {
        let e = dot(&vec2(1.0, 2.0), &Vector(vec![1.0])).unwrap_err();
        assert!(matches!(e, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn outer_basis() {
        let m = outer(&vec2(1.0, 0.0), &vec2(1.0, 0.0)).unwrap();
        assert_eq!(m.data, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn outer_hand_value() {
        let m = outer(&vec2(1.0, 2.0), &vec2(3.0, 4.0)).unwrap();
        assert_eq!(m.data, vec![3.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn outer_with_zero_is_zero() {
        let m = outer(&Vector::zeros(2), &vec2(5.0, 6.0)).unwrap();
        assert!(m.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mat_mul_identity() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let i = Matrix::identity(2);
        assert_eq!(mat_mul(&a, &i), a);
        assert_eq!(mat_mul(&i, &a), a);
    }

    #[test]
    fn permutation_squares_to_identity() {
        let p = Matrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(mat_mul(&p, &p), Matrix::identity(2));
    }

    #[test]
    fn rank_one_update_matches_full_product() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let x = vec2(0.5, -1.5);
        let c = 0.3;
        let mut fast = m.clone();
        fast.mul_one_minus_scaled_outer_assign(&x, c);
        let mut factor = Matrix::identity(2);
        factor.add_scaled_assign(&outer(&x, &x).unwrap(), -c);
        let slow = mat_mul(&m, &factor);
        for (a, b) in fast.data.iter().zip(slow.data.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_uniform_is_log_k() {
        let q = Simplex::uniform(4);
        assert!((entropy(&q) - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_point_mass_is_zero() {
        let q = Simplex::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(entropy(&q), 0.0);
    }

    #[test]
    fn entropy_two_point() {
        let q = Simplex::new(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((entropy(&q) - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn simplex_renormalizes_small_drift() {
        let q = Simplex::new(vec![0.5 + 3e-10, 0.5]).unwrap();
        assert!((q.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_rejects_large_drift() {
        assert!(Simplex::new(vec![0.6, 0.5]).is_err());
        assert!(Simplex::new(vec![0.5, -0.1, 0.6]).is_err());
    }

    #[test]
    fn point_mass_sampling_is_constant() {
        let q = Simplex::new(vec![1.0, 0.0, 0.0]).unwrap();
        let mut rng = RngStream::new(3);
        for _ in 0..100 {
            assert_eq!(sample_categorical(&q, &mut rng), 0);
        }
    }

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let q = Simplex::new(vec![0.3, 0.3, 0.4]).unwrap();
        let mut a = RngStream::new(11);
        let mut b = RngStream::new(11);
        let xs: Vec<usize> = (0..200).map(|_| sample_categorical(&q, &mut a)).collect();
        let ys: Vec<usize> = (0..200).map(|_| sample_categorical(&q, &mut b)).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let q = Simplex::uniform(2);
        let mut rng = RngStream::new(5);
        let n = 100_000;
        let mut count = 0usize;
        for _ in 0..n {
            if sample_categorical(&q, &mut rng) == 0 {
                count += 1;
            }
        }
        let freq = count as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn chi_square_convergence() {
        // chi^2 over K=4 at N=1e5 should stay below the p=0.001 critical
        // value (16.27 for 3 degrees of freedom).
        let q = Simplex::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut rng = RngStream::new(17);
        let n = 100_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_categorical(&q, &mut rng)] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(q.probs())
            .map(|(&c, &p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn jacobi_diagonal() {
        let s = Matrix::from_rows(&[&[0.5, 0.0], &[0.0, 2.0]]);
        let eig = sym_eigenvalues(&s).unwrap();
        assert!((eig[0] - 0.5).abs() < 1e-12);
        assert!((eig[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_two_by_two() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let s = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let eig = sym_eigenvalues(&s).unwrap();
        assert!((eig[0] - 1.0).abs() < 1e-10);
        assert!((eig[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn jacobi_rejects_asymmetric() {
        let s = Matrix::from_rows(&[&[1.0, 0.5], &[0.0, 1.0]]);
        assert!(matches!(sym_eigenvalues(&s), Err(Error::NotSymmetric(_))));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn entropy_bounds(probs in proptest::collection::vec(0.001f64..1.0, 2..9)) {
                let sum: f64 = probs.iter().sum();
                let q = Simplex::new(probs.iter().map(|p| p / sum).collect()).unwrap();
                let h = entropy(&q);
                let k = q.len() as f64;
                prop_assert!(h >= -1e-12);
                prop_assert!(h <= k.ln() + 1e-10);
            }

            #[test]
            fn entropy_max_iff_uniform(k in 2usize..9) {
                let q = Simplex::uniform(k);
                prop_assert!((entropy(&q) - (k as f64).ln()).abs() < 1e-10);
            }

            #[test]
            fn mat_mul_associative(seed in any::<u64>()) {
                let mut rng = RngStream::new(seed);
                let d = 4;
                let mut rand_mat = || {
                    let mut m = Matrix::zeros(d);
                    for v in m.data.iter_mut() {
                        *v = 2.0 * rng.next_f64() - 1.0;
                    }
                    m
                };
                let a = rand_mat();
                let b = rand_mat();
                let c = rand_mat();
                let left = mat_mul(&mat_mul(&a, &b), &c);
                let right = mat_mul(&a, &mat_mul(&b, &c));
                for (x, y) in left.data.iter().zip(right.data.iter()) {
                    prop_assert!((x - y).abs() < 1e-10);
                }
            }
        }
    }
}
