//! Matrix geometric resampling and the loss-parameter estimator built on it.
//!
//! The resampler estimates the inverse of `E[1[A=a] X X^T]` by simulation:
//! it draws fresh contexts from the known distribution, simulated actions
//! from the current policy, and accumulates the truncated matrix geometric
//! series `delta (I + sum_k prod_j (I - delta W_j))`. Its conditional
//! expectation is `delta sum_{k=0}^{M} (I - delta Sigma)^k`.

use crate::context::ContextModel;
use crate::error::{Error, Result};
use crate::math::{dot, Matrix, Simplex, Vector};
use crate::rng::RngStream;

/// Resampling parameters. The step is pinned to `1/(2 * loss_bound *
/// context_bound)` so that every factor `I - delta x x^T` is a contraction.
#[derive(Debug, Clone, Copy)]
pub struct MgrConfig {
    pub delta: f64,
    pub iterations: usize,
}

impl MgrConfig {
    pub fn new(loss_bound: f64, context_bound: f64, iterations: usize) -> Result<Self> {
        if !loss_bound.is_finite()
            || loss_bound <= 0.0
            || !context_bound.is_finite()
            || context_bound <= 0.0
        {
            return Err(Error::InvalidConfig(
                "loss and context bounds must be positive".into(),
            ));
        }
        Ok(Self {
            delta: 1.0 / (2.0 * loss_bound * context_bound),
            iterations,
        })
    }
}

/// One round's estimator output: the resampled inverse for the played arm
/// and the per-arm parameter estimates (zero for every arm not played).
#[derive(Debug, Clone)]
pub struct LossEstimate {
    pub played: usize,
    pub sigma_dagger: Matrix,
    pub theta_hat: Vec<Vector>,
}

impl LossEstimate {
    /// An estimate that contributes nothing (used when an agent does not
    /// consume loss estimates).
    pub fn empty(arms: usize, dim: usize) -> Self {
        LossEstimate {
            played: 0,
            sigma_dagger: Matrix::zeros(dim),
            theta_hat: vec![Vector::zeros(dim); arms],
        }
    }
}

/// Matrix geometric resampling for one arm against a policy snapshot.
///
/// Runs up to `cfg.iterations` simulated rounds. The running product only
/// shrinks, so once it underflows relative to the accumulated sum the
/// remaining terms cannot change the result in f64 and the loop stops early.
pub fn mgr<F>(
    model: &ContextModel,
    policy: F,
    arm: usize,
    cfg: &MgrConfig,
    rng: &mut RngStream,
) -> Matrix
where
    F: Fn(&Vector) -> Simplex,
{
    let d = model.dim();
    let mut product = Matrix::identity(d);
    let mut sum = Matrix::identity(d);

    // For a finite support the policy is evaluated once per support point.
    let support_probs: Option<Vec<f64>> = model.support().map(|(points, _)| {
        points.iter().map(|x| policy(x).prob(arm)).collect()
    });

    // The running product only changes on simulated rounds that play `arm`;
    // between hits the pending copies of it are added in one batch.
    let mut pending = 0usize;
    for _ in 0..cfg.iterations {
        let hit_context: Option<Vector> = match (&support_probs, model.support()) {
            (Some(probs), Some((points, _))) => {
                let idx = model.sample_support_index(rng);
                let u = rng.next_f64();
                (u < probs[idx]).then(|| points[idx].clone())
            }
            _ => {
                let x = model.sample(rng);
                let q = policy(&x);
                let u = rng.next_f64();
                (u < q.prob(arm)).then_some(x)
            }
        };
        match hit_context {
            Some(x) => {
                if pending > 0 {
                    sum.add_scaled_assign(&product, pending as f64);
                    pending = 0;
                }
                product.mul_one_minus_scaled_outer_assign(&x, cfg.delta);
                sum.add_assign(&product);
                if product.max_abs() < 1e-18 * sum.max_abs().max(1.0) {
                    return sum.scale(cfg.delta);
                }
            }
            None => pending += 1,
        }
    }
    if pending > 0 {
        sum.add_scaled_assign(&product, pending as f64);
    }
    sum.scale(cfg.delta)
}

/// Parameter estimate `sigma_dagger * x * loss` for the played arm, zero
/// otherwise.
pub fn estimate_theta(
    sigma_dagger: &Matrix,
    played: usize,
    arm: usize,
    x: &Vector,
    loss: f64,
) -> Vector {
    if arm != played {
        return Vector::zeros(x.dim());
    }
    sigma_dagger.mul_vec(x).scaled(loss)
}

/// Estimated loss `<x, theta_hat>`.
pub fn estimate_loss(theta_hat: &Vector, x: &Vector) -> Result<f64> {
    dot(x, theta_hat)
}

/// Full per-round estimate for all arms.
pub fn estimate_round(
    sigma_dagger: Matrix,
    played: usize,
    arms: usize,
    x: &Vector,
    loss: f64,
) -> LossEstimate {
    let theta_hat = (0..arms)
        .map(|a| estimate_theta(&sigma_dagger, played, a, x, loss))
        .collect();
    LossEstimate {
        played,
        sigma_dagger,
        theta_hat,
    }
}
