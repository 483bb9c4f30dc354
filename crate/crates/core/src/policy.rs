//! Arm-selection policies behind a common agent interface.
//!
//! The flagship agent is BoBW-RealFTRL: follow-the-regularized-leader over
//! the simplex with a negative-entropy regularizer, an entropy-adaptive
//! learning-rate schedule, and uniform exploration mixing. With the entropy
//! regularizer the FTRL minimizer has a closed form, the Gibbs distribution
//! over cumulative estimated losses; a numeric argmin oracle cross-checks
//! that closed form in the verification suite.
//!
//! RealLinExp3 is the fixed-schedule ancestor (constant learning rate,
//! constant exploration, constant resampling depth) and shares the same
//! interface, as does a uniform-play baseline.

use crate::error::{Error, Result};
use crate::estimator::LossEstimate;
use crate::math::{dot, entropy, sample_categorical, Simplex, Vector};
use crate::rng::RngStream;
use serde::{Deserialize, Serialize};

/// Which tuning to use for the initial learning scale `beta_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beta1Mode {
    /// `omega * sqrt(K log(T) (log(T) / (delta lambda_min log K) + d))`:
    /// scales with the full problem size; the regret guarantees assume it.
    /// Default.
    #[default]
    HorizonTuned,
    /// `omega * sqrt(log(KdT) / log(K))`: a smaller, horizon-log-only scale
    /// that commits to the data faster.
    LogRatio,
}

/// Initial learning scale `beta_1`.
pub fn beta_one(
    omega: f64,
    arms: usize,
    dim: usize,
    horizon: f64,
    delta: f64,
    lambda_min: f64,
    mode: Beta1Mode,
) -> Result<f64> {
    if arms < 2 {
        return Err(Error::InvalidConfig(
            "the learning-scale formulas divide by log K; need K >= 2".into(),
        ));
    }
    let log_k = (arms as f64).ln();
    let log_t = horizon.ln();
    match mode {
        Beta1Mode::HorizonTuned => {
            let inner = log_t / (delta * lambda_min * log_k) + dim as f64;
            let arg = arms as f64 * log_t * inner;
            if !arg.is_finite() || arg <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "horizon-tuned beta_1 argument {arg} must be positive (is T >= 2?)"
                )));
            }
            Ok(omega * arg.sqrt())
        }
        Beta1Mode::LogRatio => {
            let arg = (arms as f64 * dim as f64 * horizon).ln() / log_k;
            if !arg.is_finite() || arg <= 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "log-ratio beta_1 argument {arg} must be positive"
                )));
            }
            Ok(omega * arg.sqrt())
        }
    }
}

/// Exploration rate `min(1, K log(T) / (2 delta lambda_min beta))`. The raw
/// formula can exceed 1 for small beta; clamping keeps the mixed policy a
/// distribution and only ever adds exploration.
pub fn exploration_rate(arms: usize, log_horizon: f64, delta: f64, lambda_min: f64, beta: f64) -> f64 {
    if log_horizon <= 0.0 {
        return 0.0;
    }
    (arms as f64 * log_horizon / (2.0 * delta * lambda_min * beta)).min(1.0)
}

/// Resampling depth for the current round: the smallest iteration count
/// that pushes the resampling bias below `1/T` at exploration rate `gamma`,
/// `ceil(K log(T) / (gamma delta lambda_min))`. When the clamp on `gamma`
/// is inactive this equals `ceil(2 beta)`.
pub fn mgr_iterations(arms: usize, log_horizon: f64, delta: f64, lambda_min: f64, gamma: f64) -> usize {
    if log_horizon <= 0.0 || gamma <= 0.0 {
        return 0;
    }
    (arms as f64 * log_horizon / (gamma * delta * lambda_min)).ceil() as usize
}

/// Gibbs distribution `q(a) proportional to exp(-score(a) / beta)`, computed
/// with max-subtraction; probabilities are floored at 1e-300 before
/// normalization since cumulative scores grow linearly with t.
pub fn gibbs_dist(scores: &[f64], beta: f64) -> Simplex {
    let min_score = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = scores
        .iter()
        .map(|s| (-(s - min_score) / beta).exp().max(1e-300))
        .collect();
    let sum: f64 = weights.iter().sum();
    Simplex::new(weights.iter().map(|w| w / sum).collect())
        .expect("normalized positive weights form a simplex")
}

/// Exploration mixture `(1-gamma) q + gamma/K`.
pub fn mix_uniform(q: &Simplex, gamma: f64) -> Simplex {
    let k = q.len() as f64;
    Simplex::new(
        q.probs()
            .iter()
            .map(|&p| (1.0 - gamma) * p + gamma / k)
            .collect(),
    )
    .expect("convex mixture of distributions")
}

/// One round's committed decision.
#[derive(Debug, Clone)]
pub struct AgentDecision {
    /// FTRL distribution at the observed context.
    pub q: Simplex,
    /// Mixed sampling distribution `(1-gamma) q + gamma/K`.
    pub pi: Simplex,
    pub gamma: f64,
    pub beta: f64,
    pub arm: usize,
}

/// Common agent interface driven by the simulator. Per round:
/// `act` commits a decision at the realized context, `policy_probs` exposes
/// the same round's sampling distribution at arbitrary contexts (for the
/// resampler and the probe bookkeeping), and `observe` folds in the round's
/// estimator output.
pub trait Agent {
    fn act(&mut self, x: &Vector, rng: &mut RngStream) -> AgentDecision;
    fn policy_probs(&self, x: &Vector) -> Simplex;
    /// The unmixed FTRL distribution at `x` (equals `policy_probs` for
    /// agents without exploration mixing).
    fn q_probs(&self, x: &Vector) -> Simplex {
        self.policy_probs(x)
    }
    fn observe(&mut self, x: &Vector, decision: &AgentDecision, estimate: &LossEstimate);
    /// Resampling iterations for the current round; 0 skips estimation.
    fn mgr_iterations(&self) -> usize;
    fn id(&self) -> &'static str;
}

/// Constants shared by the adaptive schedules.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleConstants {
    pub arms: usize,
    pub dim: usize,
    pub horizon: f64,
    pub log_horizon: f64,
    pub delta: f64,
    pub lambda_min: f64,
    pub beta1: f64,
}

impl ScheduleConstants {
    pub fn new(
        arms: usize,
        dim: usize,
        horizon: usize,
        loss_bound: f64,
        context_bound: f64,
        lambda_min: f64,
        mode: Beta1Mode,
    ) -> Result<Self> {
        let omega = loss_bound * context_bound;
        if !omega.is_finite() || omega <= 0.0 || !lambda_min.is_finite() || lambda_min <= 0.0 {
            return Err(Error::InvalidConfig(
                "loss bound, context bound, and lambda_min must be positive".into(),
            ));
        }
        let delta = 1.0 / (2.0 * omega);
        let horizon = horizon as f64;
        let beta1 = beta_one(omega, arms, dim, horizon, delta, lambda_min, mode)?;
        Ok(Self {
            arms,
            dim,
            horizon,
            log_horizon: horizon.ln().max(0.0),
            delta,
            lambda_min,
            beta1,
        })
    }
}

/// BoBW-RealFTRL agent state.
#[derive(Debug, Clone)]
pub struct BobwRealFtrl {
    consts: ScheduleConstants,
    /// Per-arm cumulative estimated parameters, `sum_{s<t} theta_hat_s(a)`.
    cum_theta: Vec<Vector>,
    beta: f64,
    /// Cumulative entropy `sum_{s<t} H(q_s(X_s))`.
    entropy_sum: f64,
    round: usize,
}

impl BobwRealFtrl {
    pub fn new(consts: ScheduleConstants) -> Self {
        let cum_theta = vec![Vector::zeros(consts.dim); consts.arms];
        Self {
            consts,
            cum_theta,
            beta: consts.beta1,
            entropy_sum: 0.0,
            round: 1,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn entropy_sum(&self) -> f64 {
        self.entropy_sum
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn constants(&self) -> &ScheduleConstants {
        &self.consts
    }

    fn gamma(&self) -> f64 {
        exploration_rate(
            self.consts.arms,
            self.consts.log_horizon,
            self.consts.delta,
            self.consts.lambda_min,
            self.beta,
        )
    }

    /// FTRL distribution `q_t(.|x)`: the closed-form entropic minimizer.
    pub fn ftrl_dist(&self, x: &Vector) -> Simplex {
        let scores: Vec<f64> = self
            .cum_theta
            .iter()
            .map(|l| dot(x, l).expect("dimensions fixed at construction"))
            .collect();
        gibbs_dist(&scores, self.beta)
    }

    /// Fold one observed entropy value into the learning-scale schedule:
    /// `beta <- beta + beta_1 / sqrt(1 + S_H / log K)`.
    fn update_beta(&mut self, observed_entropy: f64) {
        self.entropy_sum += observed_entropy;
        let log_k = (self.consts.arms as f64).ln();
        self.beta += self.consts.beta1 / (1.0 + self.entropy_sum / log_k).sqrt();
    }
}

impl Agent for BobwRealFtrl {
    fn act(&mut self, x: &Vector, rng: &mut RngStream) -> AgentDecision {
        let q = self.ftrl_dist(x);
        let gamma = self.gamma();
        let pi = mix_uniform(&q, gamma);
        let arm = sample_categorical(&pi, rng);
        AgentDecision {
            q,
            pi,
            gamma,
            beta: self.beta,
            arm,
        }
    }

    fn policy_probs(&self, x: &Vector) -> Simplex {
        mix_uniform(&self.ftrl_dist(x), self.gamma())
    }

    fn q_probs(&self, x: &Vector) -> Simplex {
        self.ftrl_dist(x)
    }

    fn observe(&mut self, x: &Vector, decision: &AgentDecision, estimate: &LossEstimate) {
        let _ = x;
        for (l, th) in self.cum_theta.iter_mut().zip(estimate.theta_hat.iter()) {
            l.add_assign(th);
        }
        self.update_beta(entropy(&decision.q));
        self.round += 1;
    }

    fn mgr_iterations(&self) -> usize {
        mgr_iterations(
            self.consts.arms,
            self.consts.log_horizon,
            self.consts.delta,
            self.consts.lambda_min,
            self.gamma(),
        )
    }

    fn id(&self) -> &'static str {
        "bobw_real_ftrl"
    }
}

/// Fixed-schedule RealLinExp3 configuration.
#[derive(Debug, Clone, Copy)]
pub struct RealLinExp3Config {
    pub eta: f64,
    pub gamma: f64,
    pub iterations: usize,
}

impl RealLinExp3Config {
    /// Horizon-tuned defaults: a fixed learning rate balancing the entropy
    /// term against the per-round stability cost over T rounds, with the
    /// exploration rate and resampling depth that push the resampling bias
    /// below 1/T at that rate.
    pub fn tuned(
        arms: usize,
        dim: usize,
        horizon: usize,
        delta: f64,
        lambda_min: f64,
    ) -> Result<Self> {
        if arms < 2 {
            return Err(Error::InvalidConfig("need K >= 2".into()));
        }
        let k = arms as f64;
        let t = horizon as f64;
        let log_t = t.ln().max(0.0);
        let log_k = k.ln();
        let per_round = k * log_t / (2.0 * delta * lambda_min) + 3.0 * k * dim as f64;
        let beta_fixed = (t * per_round / log_k).sqrt();
        let gamma = exploration_rate(arms, log_t, delta, lambda_min, beta_fixed);
        let iterations = mgr_iterations(arms, log_t, delta, lambda_min, gamma);
        Ok(Self {
            eta: 1.0 / beta_fixed,
            gamma,
            iterations,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        if !self.gamma.is_finite() || self.gamma <= 0.0 || self.gamma > 1.0 {
            return Err(Error::InvalidConfig("gamma must be in (0, 1]".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("need at least one resampling iteration".into()));
        }
        Ok(())
    }
}

/// RealLinExp3: exponential weights over cumulative estimated losses with a
/// fixed learning rate and fixed exploration mixing.
#[derive(Debug, Clone)]
pub struct RealLinExp3 {
    cfg: RealLinExp3Config,
    cum_theta: Vec<Vector>,
}

impl RealLinExp3 {
    pub fn new(arms: usize, dim: usize, cfg: RealLinExp3Config) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            cum_theta: vec![Vector::zeros(dim); arms],
        })
    }

    fn q_dist(&self, x: &Vector) -> Simplex {
        let scores: Vec<f64> = self
            .cum_theta
            .iter()
            .map(|l| self.cfg.eta * dot(x, l).expect("dimensions fixed at construction"))
            .collect();
        gibbs_dist(&scores, 1.0)
    }
}

impl Agent for RealLinExp3 {
    fn act(&mut self, x: &Vector, rng: &mut RngStream) -> AgentDecision {
        let q = self.q_dist(x);
        let pi = mix_uniform(&q, self.cfg.gamma);
        let arm = sample_categorical(&pi, rng);
        AgentDecision {
            q,
            pi,
            gamma: self.cfg.gamma,
            beta: 1.0 / self.cfg.eta,
            arm,
        }
    }

    fn policy_probs(&self, x: &Vector) -> Simplex {
        mix_uniform(&self.q_dist(x), self.cfg.gamma)
    }

    fn q_probs(&self, x: &Vector) -> Simplex {
        self.q_dist(x)
    }

    fn observe(&mut self, _x: &Vector, _decision: &AgentDecision, estimate: &LossEstimate) {
        for (l, th) in self.cum_theta.iter_mut().zip(estimate.theta_hat.iter()) {
            l.add_assign(th);
        }
    }

    fn mgr_iterations(&self) -> usize {
        self.cfg.iterations
    }

    fn id(&self) -> &'static str {
        "real_lin_exp3"
    }
}

/// Uniform-play baseline; ignores all feedback.
#[derive(Debug, Clone)]
pub struct UniformAgent {
    arms: usize,
}

impl UniformAgent {
    pub fn new(arms: usize) -> Self {
        Self { arms }
    }
}

impl Agent for UniformAgent {
    fn act(&mut self, _x: &Vector, rng: &mut RngStream) -> AgentDecision {
        let q = Simplex::uniform(self.arms);
        let arm = sample_categorical(&q, rng);
        AgentDecision {
            pi: q.clone(),
            q,
            gamma: 0.0,
            beta: 0.0,
            arm,
        }
    }

    fn policy_probs(&self, _x: &Vector) -> Simplex {
        Simplex::uniform(self.arms)
    }

    fn observe(&mut self, _x: &Vector, _decision: &AgentDecision, _estimate: &LossEstimate) {}

    fn mgr_iterations(&self) -> usize {
        0
    }

    fn id(&self) -> &'static str {
        "uniform"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::LossEstimate;
    use crate::math::Matrix;

    fn consts(arms: usize, horizon: usize) -> ScheduleConstants {
        ScheduleConstants::new(arms, 2, horizon, 0.5, 1.0, 0.5, Beta1Mode::HorizonTuned).unwrap()
    }

    fn zero_estimate(arms: usize, dim: usize) -> LossEstimate {
        LossEstimate::empty(arms, dim)
    }

    #[test]
    fn ftrl_dist_uniform_at_start() {
        let agent = BobwRealFtrl::new(consts(4, 100));
        let q = agent.ftrl_dist(&Vector(vec![1.0, 0.0]));
        for &p in q.probs() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_two_thirds_one_third() {
        let beta = 3.0;
        let q = gibbs_dist(&[0.0, beta * 2.0f64.ln()], beta);
        assert!((q.prob(0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((q.prob(1) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_shift_invariance() {
        let beta = 0.7;
        let base = gibbs_dist(&[0.1, -0.4, 0.3], beta);
        let shifted = gibbs_dist(&[0.1 + 5.0, -0.4 + 5.0, 0.3 + 5.0], beta);
        for (a, b) in base.probs().iter().zip(shifted.probs().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_scale_invariance() {
        let q1 = gibbs_dist(&[0.2, -0.3, 0.9], 0.8);
        let q2 = gibbs_dist(&[2.0, -3.0, 9.0], 8.0);
        for (a, b) in q1.probs().iter().zip(q2.probs().iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn beta_update_zero_entropy_path() {
        let c = consts(2, 100);
        let mut agent = BobwRealFtrl::new(c);
        let x = Vector(vec![1.0, 0.0]);
        let est = zero_estimate(2, 2);
        for t in 1..=5usize {
            // force a degenerate decision: zero entropy observed
            let decision = AgentDecision {
                q: Simplex::point_mass(2, 0),
                pi: Simplex::point_mass(2, 0),
                gamma: 0.0,
                beta: agent.beta(),
                arm: 0,
            };
            agent.observe(&x, &decision, &est);
            assert!((agent.beta() - (t as f64 + 1.0) * c.beta1).abs() < 1e-9);
        }
    }

    #[test]
    fn beta_update_first_round_uniform() {
        let c = consts(2, 100);
        let mut agent = BobwRealFtrl::new(c);
        let x = Vector(vec![1.0, 0.0]);
        let mut rng = RngStream::new(0);
        let decision = agent.act(&x, &mut rng);
        agent.observe(&x, &decision, &zero_estimate(2, 2));
        // H(q_1) = log K, so beta_2 = beta_1 (1 + 1/sqrt(2))
        let expect = c.beta1 * (1.0 + 1.0 / 2.0f64.sqrt());
        assert!((agent.beta() - expect).abs() < 1e-12);
    }

    #[test]
    fn beta_update_uniform_every_round_telescopes() {
        let c = consts(3, 100);
        let mut agent = BobwRealFtrl::new(c);
        let x = Vector(vec![0.0, 1.0]);
        let est = zero_estimate(3, 2);
        let mut rng = RngStream::new(1);
        for _ in 0..10 {
            let d = agent.act(&x, &mut rng);
            agent.observe(&x, &d, &est);
        }
        // with zero estimates q stays uniform, so
        // beta_{t+1} = beta_1 (1 + sum_{u=1}^{t} 1/sqrt(1+u))
        let expect = c.beta1 * (1.0 + (1..=10).map(|u| 1.0 / (1.0 + u as f64).sqrt()).sum::<f64>());
        assert!((agent.beta() - expect).abs() < 1e-9);
    }

    #[test]
    fn beta_lower_bound_chain_holds_each_round() {
        // beta_t >= t beta_1 / sqrt(1 + S_H / log K)
        let c = consts(2, 1000);
        let mut agent = BobwRealFtrl::new(c);
        let x = Vector(vec![1.0, 0.0]);
        let mut rng = RngStream::new(3);
        for t in 1..=200usize {
            let d = agent.act(&x, &mut rng);
            // feed small random estimates so q drifts
            let mut est = zero_estimate(2, 2);
            est.theta_hat[0] = Vector(vec![rng.next_symmetric(0.2), 0.0]);
            est.theta_hat[1] = Vector(vec![0.0, rng.next_symmetric(0.2)]);
            agent.observe(&x, &d, &est);
            let log_k = 2.0f64.ln();
            let floor = t as f64 * c.beta1 / (1.0 + agent.entropy_sum() / log_k).sqrt();
            assert!(
                agent.beta() >= floor - 1e-9,
                "round {t}: beta {} < floor {floor}",
                agent.beta()
            );
        }
    }

    #[test]
    fn gamma_plug_in_value() {
        // K=2, delta=0.5, lambda_min=0.5, beta=400, log T = 10 -> 0.1
        let g = exploration_rate(2, 10.0, 0.5, 0.5, 400.0);
        assert!((g - 0.1).abs() < 1e-12);
    }

    #[test]
    fn gamma_vanishes_with_large_beta_and_clamps_small_beta() {
        assert!(exploration_rate(2, 10.0, 0.5, 0.5, 1e12) < 1e-10);
        assert_eq!(exploration_rate(2, 10.0, 0.5, 0.5, 1e-6), 1.0);
    }

    #[test]
    fn beta_one_horizon_tuned_plug_in() {
        // omega=1, K=2, T=e, delta=0.5, lambda_min=1, d=2
        let b = beta_one(1.0, 2, 2, std::f64::consts::E, 0.5, 1.0, Beta1Mode::HorizonTuned).unwrap();
        let inner = 1.0 / (0.5 * 2.0f64.ln()) + 2.0;
        assert!((b - (2.0 * inner).sqrt()).abs() < 1e-12);
        assert!((b - 3.1257).abs() < 1e-3);
    }

    #[test]
    fn beta_one_scales_linearly_in_omega() {
        let b1 = beta_one(1.0, 2, 2, 100.0, 0.5, 1.0, Beta1Mode::HorizonTuned).unwrap();
        let b2 = beta_one(2.0, 2, 2, 100.0, 0.5, 1.0, Beta1Mode::HorizonTuned).unwrap();
        assert!((b2 - 2.0 * b1).abs() < 1e-12);
    }

    #[test]
    fn beta_one_log_ratio_unit_case() {
        // K=d=2 and 4T = 2 make log(KdT) = log K, so beta_1 = omega
        let b = beta_one(1.0, 2, 2, 0.5, 0.5, 1.0, Beta1Mode::LogRatio).unwrap();
        assert!((b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_one_rejects_single_arm() {
        assert!(beta_one(1.0, 1, 2, 100.0, 0.5, 1.0, Beta1Mode::HorizonTuned).is_err());
    }

    #[test]
    fn act_first_round_is_uniform_mixing() {
        let mut agent = BobwRealFtrl::new(consts(3, 100));
        let mut rng = RngStream::new(0);
        let d = agent.act(&Vector(vec![1.0, 0.0]), &mut rng);
        for &p in d.pi.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixing_floor_holds() {
        let c = consts(2, 1000);
        let mut agent = BobwRealFtrl::new(c);
        let x = Vector(vec![1.0, 0.0]);
        let mut rng = RngStream::new(7);
        for _ in 0..100 {
            let d = agent.act(&x, &mut rng);
            let floor = d.gamma / 2.0;
            assert!(d.pi.min_prob() >= floor - 1e-15);
            // push hard on one arm so q concentrates
            let mut est = zero_estimate(2, 2);
            est.theta_hat[1] = Vector(vec![1.0, 0.0]);
            agent.observe(&x, &d, &est);
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let q = Simplex::new(vec![0.9, 0.1]).unwrap();
        let pi = mix_uniform(&q, 1.0);
        assert!((pi.prob(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mgr_iterations_matches_two_beta_when_unclamped() {
        // unclamped gamma: K log T / (gamma delta lambda) = 2 beta
        let beta = 400.0;
        let gamma = exploration_rate(2, 10.0, 0.5, 0.5, beta);
        assert!(gamma < 1.0);
        let m = mgr_iterations(2, 10.0, 0.5, 0.5, gamma);
        assert_eq!(m, (2.0 * beta).ceil() as usize);
    }

    #[test]
    fn replay_determinism() {
        let run = || {
            let mut agent = BobwRealFtrl::new(consts(2, 500));
            let mut rng = RngStream::new(99);
            let x = Vector(vec![1.0, 0.0]);
            let mut arms = Vec::new();
            for _ in 0..50 {
                let d = agent.act(&x, &mut rng);
                let mut est = zero_estimate(2, 2);
                est.theta_hat[d.arm] = Vector(vec![0.1, -0.1]);
                est.sigma_dagger = Matrix::identity(2);
                agent.observe(&x, &d, &est);
                arms.push(d.arm);
            }
            (arms, agent.beta().to_bits())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn cumulative_estimates_equal_log_replay() {
        let mut agent = BobwRealFtrl::new(consts(2, 500));
        let mut rng = RngStream::new(4);
        let x = Vector(vec![1.0, 0.0]);
        let mut replay = vec![Vector::zeros(2); 2];
        for _ in 0..30 {
            let d = agent.act(&x, &mut rng);
            let mut est = zero_estimate(2, 2);
            est.theta_hat[d.arm] = Vector(vec![rng.next_symmetric(0.5), rng.next_symmetric(0.5)]);
            for (r, th) in replay.iter_mut().zip(est.theta_hat.iter()) {
                r.add_assign(th);
            }
            agent.observe(&x, &d, &est);
        }
        for (have, want) in agent.cum_theta.iter().zip(replay.iter()) {
            assert_eq!(have.0, want.0);
        }
    }

    #[test]
    fn real_lin_exp3_limits() {
        // eta -> 0 gives uniform play
        let a = RealLinExp3::new(
            2,
            2,
            RealLinExp3Config {
                eta: 1e-15,
                gamma: 0.1,
                iterations: 1,
            },
        )
        .unwrap();
        let q = a.q_dist(&Vector(vec![1.0, 0.0]));
        assert!((q.prob(0) - 0.5).abs() < 1e-9);

        // gamma = 1 plays uniformly regardless of q
        let mut b = RealLinExp3::new(
            2,
            2,
            RealLinExp3Config {
                eta: 10.0,
                gamma: 1.0,
                iterations: 1,
            },
        )
        .unwrap();
        let mut rng = RngStream::new(0);
        let d = b.act(&Vector(vec![1.0, 0.0]), &mut rng);
        assert!((d.pi.prob(0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bobw_with_frozen_schedule_reproduces_real_lin_exp3() {
        // structural equivalence: fixing beta = 1/eta and gamma makes the
        // adaptive code path produce identical decisions
        let eta = 0.05;
        let gamma = 0.2;
        let cfg = RealLinExp3Config {
            eta,
            gamma,
            iterations: 7,
        };
        let mut fixed = RealLinExp3::new(2, 2, cfg).unwrap();
        let mut adaptive = BobwRealFtrl::new(consts(2, 100));

        let x = Vector(vec![1.0, -0.5]);
        let mut rng_a = RngStream::new(2024);
        let mut rng_b = RngStream::new(2024);
        for i in 0..40 {
            // freeze the adaptive schedule at the fixed agent's values
            adaptive.beta = 1.0 / eta;
            let q_a = adaptive.ftrl_dist(&x);
            let pi_a = mix_uniform(&q_a, gamma);
            let arm_a = sample_categorical(&pi_a, &mut rng_a);
            let d_b = fixed.act(&x, &mut rng_b);
            assert_eq!(arm_a, d_b.arm, "round {i}");
            for (p, q) in pi_a.probs().iter().zip(d_b.pi.probs().iter()) {
                assert!((p - q).abs() < 1e-12);
            }
            let mut est = zero_estimate(2, 2);
            est.theta_hat[d_b.arm] = Vector(vec![0.3, -0.2]);
            adaptive.observe(
                &x,
                &AgentDecision {
                    q: q_a,
                    pi: pi_a,
                    gamma,
                    beta: 1.0 / eta,
                    arm: arm_a,
                },
                &est,
            );
            fixed.observe(&x, &d_b, &est);
        }
    }

    #[test]
    fn uniform_agent_is_uniform_and_stateless() {
        let mut agent = UniformAgent::new(4);
        let mut rng = RngStream::new(1);
        let x = Vector(vec![1.0]);
        let d = agent.act(&x, &mut rng);
        assert_eq!(d.pi.probs(), &[0.25, 0.25, 0.25, 0.25]);
        assert_eq!(agent.mgr_iterations(), 0);
    }
}
