//! Context distributions known to the decision-maker.
//!
//! Two families are shipped:
//!  - finite discrete support with weights, whose covariance and every
//!    policy-dependent expectation can be enumerated exactly;
//!  - a Gaussian direction scaled to a fixed radius (uniform on the sphere),
//!    a continuous stress case with closed-form covariance `r^2/d * I`.
//!
//! Both expose exact moments alongside sampling. The resampling estimator
//! only ever samples; the brute-force oracles use the exact moments.

use crate::error::{Error, Result};
use crate::math::{outer, sym_eigenvalues, Matrix, Vector};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ContextKind {
    /// Finite support `points` with sampling `weights`.
    DiscreteSupport {
        points: Vec<Vector>,
        weights: Vec<f64>,
    },
    /// Uniform on the sphere of the given radius (a standard Gaussian
    /// direction scaled to fixed length).
    ScaledSphereGaussian { dim: usize, radius: f64 },
}

/// A sampleable context distribution with exactly known covariance,
/// smallest eigenvalue, and norm bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContextModel {
    kind: ContextKind,
    dim: usize,
    covariance: Matrix,
    lambda_min: f64,
    norm_bound: f64,
}

impl ContextModel {
    /// Finite-support model. Rejects rank-deficient supports: the covariance
    /// must be positive definite.
    pub fn discrete(points: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidConfig(
                "discrete support needs matching, nonempty points and weights".into(),
            ));
        }
        let dim = points[0].dim();
        if dim == 0 {
            return Err(Error::InvalidConfig("context dimension must be >= 1".into()));
        }
        let wsum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) || (wsum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(
                "support weights must be positive and sum to 1".into(),
            ));
        }
        let mut covariance = Matrix::zeros(dim);
        let mut norm_bound = 0.0f64;
        for (x, &w) in points.iter().zip(weights.iter()) {
            if x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: x.dim(),
                });
            }
            if !x.is_finite() {
                return Err(Error::InvalidConfig("non-finite support point".into()));
            }
            covariance.add_scaled_assign(&outer(x, x)?, w);
            norm_bound = norm_bound.max(x.norm2());
        }
        let lambda_min = *sym_eigenvalues(&covariance)?
            .first()
            .expect("d >= 1");
        if lambda_min <= 1e-10 {
            return Err(Error::NotPositiveDefinite(lambda_min));
        }
        Ok(Self {
            kind: ContextKind::DiscreteSupport { points, weights },
            dim,
            covariance,
            lambda_min,
            norm_bound,
        })
    }

    /// Sphere model of a given radius; covariance is `radius^2 / d * I`.
    pub fn scaled_sphere(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("context dimension must be >= 1".into()));
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidConfig("sphere radius must be positive".into()));
        }
        let lambda = radius * radius / dim as f64;
        Ok(Self {
            kind: ContextKind::ScaledSphereGaussian { dim, radius },
            dim,
            covariance: Matrix::identity(dim).scale(lambda),
            lambda_min: lambda,
            norm_bound: radius,
        })
    }

    pub fn kind(&self) -> &ContextKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Exact covariance `E[X X^T]`, cached at construction.
    pub fn exact_covariance(&self) -> &Matrix {
        &self.covariance
    }

    /// Smallest eigenvalue of the covariance, cached at construction.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Bound on `||x||_2` over the support.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// The support, when finite.
    pub fn support(&self) -> Option<(&[Vector], &[f64])> {
        match &self.kind {
            ContextKind::DiscreteSupport { points, weights } => {
                Some((points.as_slice(), weights.as_slice()))
            }
            ContextKind::ScaledSphereGaussian { .. } => None,
        }
    }

    /// One i.i.d. draw.
    pub fn sample(&self, rng: &mut RngStream) -> Vector {
        match &self.kind {
            ContextKind::DiscreteSupport { points, .. } => {
                let idx = self.sample_support_index(rng);
                points[idx].clone()
            }
            ContextKind::ScaledSphereGaussian { dim, radius } => {
                loop {
                    let g: Vec<f64> = (0..*dim).map(|_| rng.next_standard_normal()).collect();
                    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if n > 1e-12 {
                        return Vector(g.into_iter().map(|v| v * radius / n).collect());
                    }
                }
            }
        }
    }

    /// Draw a support index (finite support only); consumes one uniform.
    pub fn sample_support_index(&self, rng: &mut RngStream) -> usize {
        match &self.kind {
            ContextKind::DiscreteSupport { weights, .. } => {
                let r = rng.next_f64();
                let mut cdf = 0.0;
                for (i, &w) in weights.iter().enumerate() {
                    cdf += w;
                    if r < cdf {
                        return i;
                    }
                }
                weights.len() - 1
            }
            ContextKind::ScaledSphereGaussian { .. } => {
                unreachable!("sample_support_index requires a finite support")
            }
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(s: &Matrix) -> Result<f64> {
    Ok(*sym_eigenvalues(s)?.first().expect("nonempty matrix"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, d: usize) -> Vector {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        Vector(v)
    }

    #[test]
    fn two_point_covariance() {
        let m = ContextModel::discrete(vec![e(0, 2), e(1, 2)], vec![0.5, 0.5]).unwrap();
        let c = m.exact_covariance();
        assert_eq!(c.data, vec![0.5, 0.0, 0.0, 0.5]);
        assert!((m.lambda_min() - 0.5).abs() < 1e-12);
        assert_eq!(m.norm_bound(), 1.0);
    }

    #[test]
    fn four_point_symmetric_covariance() {
        // uniform over {+-e1, +-e2} has covariance 0.5 I
        let pts = vec![
            e(0, 2),
            e(0, 2).scaled(-1.0),
            e(1, 2),
            e(1, 2).scaled(-1.0),
        ];
        let m = ContextModel::discrete(pts, vec![0.25; 4]).unwrap();
        assert_eq!(m.exact_covariance().data, vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn point_mass_rejected_when_rank_deficient() {
        let err = ContextModel::discrete(vec![e(0, 2)], vec![1.0]).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite(_)));
    }

    #[test]
    fn point_mass_sampling_in_one_dimension() {
        let m = ContextModel::discrete(vec![Vector(vec![1.0])], vec![1.0]).unwrap();
        let mut rng = RngStream::new(0);
        for _ in 0..10 {
            assert_eq!(m.sample(&mut rng).0, vec![1.0]);
        }
    }

    #[test]
    fn discrete_sampling_frequencies() {
        let m = ContextModel::discrete(vec![e(0, 2), e(1, 2)], vec![0.5, 0.5]).unwrap();
        let mut rng = RngStream::new(9);
        let n = 100_000;
        let mut first = 0usize;
        for _ in 0..n {
            if m.sample(&mut rng).0[0] == 1.0 {
                first += 1;
            }
        }
        let freq = first as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq = {freq}");
    }

    #[test]
    fn samples_respect_norm_bound() {
        let m = ContextModel::scaled_sphere(3, 0.8).unwrap();
        let mut rng = RngStream::new(4);
        for _ in 0..1000 {
            let x = m.sample(&mut rng);
            assert!(x.norm2() <= m.norm_bound() + 1e-12);
        }
    }

    #[test]
    fn sphere_empirical_covariance_matches_exact() {
        let m = ContextModel::scaled_sphere(2, 1.0).unwrap();
        let mut rng = RngStream::new(21);
        let n = 1_000_000;
        let mut acc = Matrix::zeros(2);
        for _ in 0..n {
            let x = m.sample(&mut rng);
            acc.add_assign(&outer(&x, &x).unwrap());
        }
        let emp = acc.scale(1.0 / n as f64);
        for (a, b) in emp.data.iter().zip(m.exact_covariance().data.iter()) {
            assert!((a - b).abs() < 5e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn discrete_empirical_covariance_matches_exact() {
        let pts = vec![Vector(vec![1.0, 0.0]), Vector(vec![0.5, 0.5])];
        let m = ContextModel::discrete(pts, vec![0.3, 0.7]).unwrap();
        let mut rng = RngStream::new(33);
        let n = 1_000_000;
        let mut acc = Matrix::zeros(2);
        for _ in 0..n {
            let x = m.sample(&mut rng);
            acc.add_assign(&outer(&x, &x).unwrap());
        }
        let emp = acc.scale(1.0 / n as f64);
        for (a, b) in emp.data.iter().zip(m.exact_covariance().data.iter()) {
            assert!((a - b).abs() < 5e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn min_eigenvalue_matches_characteristic_roots() {
        // d=2: roots of x^2 - tr x + det
        let s = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let tr = 4.0f64;
        let det = 3.0;
        let root = (tr - (tr * tr - 4.0 * det).sqrt()) / 2.0;
        assert!((min_eigenvalue(&s).unwrap() - root).abs() < 1e-8);

        let s3 = Matrix::from_rows(&[&[3.0, 0.2, 0.1], &[0.2, 1.5, 0.1], &[0.1, 0.1, 0.5]]);
        let lam = min_eigenvalue(&s3).unwrap();
        // brute force: bisect the characteristic polynomial around the
        // reported smallest root (eigenvalues are well separated here)
        let charpoly = |x: f64| {
            let m = Matrix::from_rows(&[
                &[3.0 - x, 0.2, 0.1],
                &[0.2, 1.5 - x, 0.1],
                &[0.1, 0.1, 0.5 - x],
            ]);
            let d = &m.data;
            d[0] * (d[4] * d[8] - d[5] * d[7]) - d[1] * (d[3] * d[8] - d[5] * d[6])
                + d[2] * (d[3] * d[7] - d[4] * d[6])
        };
        let (mut lo, mut hi) = (lam - 0.3, lam + 0.3);
        assert!(charpoly(lo) * charpoly(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if charpoly(lo) * charpoly(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((lam - 0.5 * (lo + hi)).abs() < 1e-8);
    }

    #[test]
    fn min_eigenvalue_identity() {
        assert!((min_eigenvalue(&Matrix::identity(3)).unwrap() - 1.0).abs() < 1e-12);
    }
}
