//! Loss-parameter generators for the three regimes.
//!
//! A loss is `<x, theta_t(a)> + eps_t(a)` with `|eps| <= noise_bound`. The
//! stochastic regime emits fixed base parameters every round; the corrupted
//! regime deviates from them under an accounted budget; the adversarial
//! regime applies a configured strategy to past observations. Round-t
//! parameters are committed before the round-t context is sampled, and the
//! emitter only ever sees rounds `< t`.

use crate::context::ContextModel;
use crate::error::{Error, Result};
use crate::math::{dot, Vector};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Stochastic,
    Adversarial,
    Corrupted,
}

/// Adversary strategies. `SignFlip` is budget-accounted (corrupted regime);
/// the other two are purely adversarial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryStrategy {
    /// Emit base parameters every round.
    None,
    /// Emit `-theta_0` for the first `rounds` rounds, then `theta_0`.
    SignFlip { rounds: usize },
    /// Rotate the arm-to-parameter assignment every `period` rounds:
    /// in block `b`, arm `a` receives `theta_0((a + b) mod K)`.
    BestArmSwitcher { period: usize },
    /// Hand the arm with the fewest past pulls the lowest-mean-loss base
    /// vector and every other arm the highest-mean-loss one.
    FavorLeastPulled,
}

/// What the adversary may look at when committing round-t parameters:
/// strictly the first `t-1` rounds of contexts, actions, and losses.
#[derive(Debug, Clone, Copy)]
pub struct PastObservations<'a> {
    pub contexts: &'a [Vector],
    pub actions: &'a [usize],
    pub losses: &'a [f64],
}

impl PastObservations<'_> {
    pub const EMPTY: PastObservations<'static> = PastObservations {
        contexts: &[],
        actions: &[],
        losses: &[],
    };
}

/// Per-context optimal arm and a uniform gap certified over the support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapCertificate {
    pub gap: f64,
    /// `(context, optimal arm)` over the support points.
    pub optimal_arms: Vec<(Vector, usize)>,
}

#[derive(Debug, Clone)]
pub struct Environment {
    regime: Regime,
    arms: usize,
    dim: usize,
    theta0: Vec<Vector>,
    strategy: AdversaryStrategy,
    budget: f64,
    noise_bound: f64,
    param_bound: f64,
    context_bound: f64,
    loss_bound: f64,
    /// Expected per-arm loss under the base parameters, used by the
    /// history-reactive strategy to rank base vectors.
    mean_base_loss: Vec<f64>,
    history: Vec<Vec<Vector>>,
}

impl Environment {
    /// Build an environment and validate its bounds. `param_bound` must
    /// dominate every base parameter norm; the corrupted budget is checked
    /// against the strategy's worst-case planned consumption.
    pub fn new(
        regime: Regime,
        theta0: Vec<Vector>,
        strategy: AdversaryStrategy,
        budget: f64,
        noise_bound: f64,
        param_bound: f64,
        model: &ContextModel,
    ) -> Result<Self> {
        let arms = theta0.len();
        if arms == 0 {
            return Err(Error::InvalidConfig("need at least one arm".into()));
        }
        let dim = theta0[0].dim();
        for th in &theta0 {
            if th.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: th.dim(),
                });
            }
            if !th.is_finite() || th.norm2() > param_bound + 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "base parameter norm {} exceeds bound {}",
                    th.norm2(),
                    param_bound
                )));
            }
        }
        if model.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: model.dim(),
            });
        }
        if noise_bound < 0.0 || budget < 0.0 {
            return Err(Error::InvalidConfig("bounds must be nonnegative".into()));
        }
        match (&regime, &strategy) {
            (Regime::Stochastic, AdversaryStrategy::None) => {}
            (Regime::Corrupted, AdversaryStrategy::SignFlip { rounds }) => {
                // Per flipped round the deviation from theta_0 is -2 theta_0;
                // its worst inner product over the support is the planned
                // per-round consumption.
                let per_round = 2.0 * max_abs_inner(&theta0, model);
                let needed = per_round * *rounds as f64;
                if needed > budget + 1e-9 {
                    return Err(Error::BudgetExceeded { needed, budget });
                }
            }
            (Regime::Corrupted, AdversaryStrategy::None) => {}
            (Regime::Adversarial, AdversaryStrategy::BestArmSwitcher { period }) => {
                if *period == 0 {
                    return Err(Error::InvalidConfig("switch period must be >= 1".into()));
                }
            }
            (Regime::Adversarial, AdversaryStrategy::FavorLeastPulled) => {}
            (r, s) => {
                return Err(Error::InvalidConfig(format!(
                    "strategy {s:?} is not valid for regime {r:?}"
                )));
            }
        }
        let context_bound = model.norm_bound();
        // Tight loss bound: Cauchy-Schwarz on the linear part plus the noise.
        let loss_bound = context_bound * param_bound + noise_bound;
        let mean_base_loss = mean_losses(&theta0, model);
        Ok(Self {
            regime,
            arms,
            dim,
            theta0,
            strategy,
            budget,
            noise_bound,
            param_bound,
            context_bound,
            loss_bound,
            mean_base_loss,
            history: Vec::new(),
        })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_bound(&self) -> f64 {
        self.noise_bound
    }

    pub fn param_bound(&self) -> f64 {
        self.param_bound
    }

    pub fn loss_bound(&self) -> f64 {
        self.loss_bound
    }

    pub fn context_bound(&self) -> f64 {
        self.context_bound
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn base_params(&self) -> &[Vector] {
        &self.theta0
    }

    /// Emitted parameters for rounds `1..=t`, in order.
    pub fn history(&self) -> &[Vec<Vector>] {
        &self.history
    }

    /// Emitted-parameter history as JSON (audit export): one row per round,
    /// one vector per arm.
    pub fn history_json(&self) -> String {
        serde_json::to_string(&self.history).expect("vectors serialize")
    }

    /// Commit round-t parameters given rounds `< t` only. Rounds are
    /// 1-indexed and must be emitted strictly in order. The shipped
    /// strategies are deterministic given the history; the stream exists
    /// for randomized adversaries.
    pub fn emit_round_params(
        &mut self,
        t: usize,
        past: PastObservations<'_>,
        rng: &mut RngStream,
    ) -> &[Vector] {
        let _ = rng;
        assert_eq!(
            t,
            self.history.len() + 1,
            "rounds must be emitted sequentially"
        );
        assert!(
            past.contexts.len() == t - 1
                && past.actions.len() == t - 1
                && past.losses.len() == t - 1,
            "emitter must see exactly rounds 1..t-1"
        );
        let params: Vec<Vector> = match &self.strategy {
            AdversaryStrategy::None => self.theta0.clone(),
            AdversaryStrategy::SignFlip { rounds } => {
                if t <= *rounds {
                    self.theta0.iter().map(|v| v.scaled(-1.0)).collect()
                } else {
                    self.theta0.clone()
                }
            }
            AdversaryStrategy::BestArmSwitcher { period } => {
                let block = (t - 1) / period;
                (0..self.arms)
                    .map(|a| self.theta0[(a + block) % self.arms].clone())
                    .collect()
            }
            AdversaryStrategy::FavorLeastPulled => {
                let mut pulls = vec![0usize; self.arms];
                for &a in past.actions {
                    pulls[a] += 1;
                }
                let target = (0..self.arms)
                    .min_by_key(|&a| (pulls[a], a))
                    .expect("at least one arm");
                let best = argmin_by_value(&self.mean_base_loss);
                let worst = argmax_by_value(&self.mean_base_loss);
                (0..self.arms)
                    .map(|a| {
                        if a == target {
                            self.theta0[best].clone()
                        } else {
                            self.theta0[worst].clone()
                        }
                    })
                    .collect()
            }
        };
        self.history.push(params);
        self.history.last().expect("just pushed")
    }

    /// Realized loss for round `t`: the linear part plus fresh uniform noise
    /// on `[-noise_bound, noise_bound]`.
    pub fn realize_loss(&self, t: usize, arm: usize, x: &Vector, rng: &mut RngStream) -> f64 {
        let theta = &self.history[t - 1][arm];
        let linear = dot(x, theta).expect("dimensions checked at construction");
        linear + rng.next_symmetric(self.noise_bound)
    }

    /// Cumulative parameters over the emitted history.
    pub fn cumulative_params(&self) -> Vec<Vector> {
        let mut acc = vec![Vector::zeros(self.dim); self.arms];
        for row in &self.history {
            for (sum, theta) in acc.iter_mut().zip(row.iter()) {
                sum.add_assign(theta);
            }
        }
        acc
    }

    /// Post-hoc optimal arm at `x`: argmin over arms of the cumulative inner
    /// product, ties broken by lowest index.
    pub fn optimal_arm(&self, cumulative: &[Vector], x: &Vector) -> usize {
        let values: Vec<f64> = cumulative
            .iter()
            .map(|th| dot(x, th).expect("dimension"))
            .collect();
        argmin_by_value(&values)
    }

    /// Gap certificate at the claimed level, checked exactly at every
    /// support point of a finite-support model against the base parameters.
    pub fn verify_gap(&self, model: &ContextModel, claimed: f64) -> Result<GapCertificate> {
        let (points, _) = model.support().ok_or_else(|| {
            Error::Unsupported(
                "gap verification needs a finite-support context model".into(),
            )
        })?;
        if self.regime == Regime::Adversarial {
            return Err(Error::Unsupported(
                "gap certificates apply to stochastic or corrupted regimes".into(),
            ));
        }
        let mut optimal_arms = Vec::with_capacity(points.len());
        for x in points {
            let values: Vec<f64> = self
                .theta0
                .iter()
                .map(|th| dot(x, th).expect("dimension"))
                .collect();
            let best = argmin_by_value(&values);
            let runner_up = values
                .iter()
                .enumerate()
                .filter(|(a, _)| *a != best)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min);
            let observed = runner_up - values[best];
            if observed + 1e-12 < claimed {
                return Err(Error::GapViolation {
                    context: x.0.clone(),
                    observed,
                    claimed,
                });
            }
            optimal_arms.push((x.clone(), best));
        }
        Ok(GapCertificate {
            gap: claimed,
            optimal_arms,
        })
    }

    /// Corruption actually consumed by the emitted history:
    /// `sum_t max_a sup_x |<x, theta_t(a) - theta_0(a)>|` with the sup taken
    /// over the support (or bounded by Cauchy-Schwarz for continuous models).
    pub fn consumed_budget(&self, model: &ContextModel) -> f64 {
        let mut total = 0.0;
        for row in &self.history {
            let mut worst = 0.0f64;
            for (theta, base) in row.iter().zip(self.theta0.iter()) {
                let mut dev = theta.clone();
                dev.add_assign(&base.scaled(-1.0));
                let v = match model.support() {
                    Some((points, _)) => points
                        .iter()
                        .map(|x| dot(x, &dev).expect("dimension").abs())
                        .fold(0.0f64, f64::max),
                    None => model.norm_bound() * dev.norm2(),
                };
                worst = worst.max(v);
            }
            total += worst;
        }
        total
    }
}

/// Self-bounding diagnostic `R_T - (gap * q_bar - budget)`; nonnegative
/// (within Monte Carlo error) certifies the regime.
pub fn self_bounding_gap(gap: f64, budget: f64, q_bar: f64, regret: f64) -> f64 {
    regret - (gap * q_bar - budget)
}

fn argmin_by_value(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn argmax_by_value(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn max_abs_inner(thetas: &[Vector], model: &ContextModel) -> f64 {
    match model.support() {
        Some((points, _)) => {
            let mut worst = 0.0f64;
            for th in thetas {
                for x in points {
                    worst = worst.max(dot(x, th).expect("dimension").abs());
                }
            }
            worst
        }
        None => thetas
            .iter()
            .map(|th| th.norm2() * model.norm_bound())
            .fold(0.0f64, f64::max),
    }
}

fn mean_losses(thetas: &[Vector], model: &ContextModel) -> Vec<f64> {
    match model.support() {
        Some((points, weights)) => thetas
            .iter()
            .map(|th| {
                points
                    .iter()
                    .zip(weights.iter())
                    .map(|(x, &w)| w * dot(x, th).expect("dimension"))
                    .sum()
            })
            .collect(),
        // Sphere and any other mean-zero family: all arms tie at zero.
        None => vec![0.0; thetas.len()],
    }
}
