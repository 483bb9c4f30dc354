//! Trial orchestration: the per-round loop, regret accounting, probe
//! bookkeeping, and aggregation across seeds.
//!
//! Round order is fixed: the environment commits parameters from rounds
//! `< t` only, then the context is sampled, the agent acts, the loss is
//! realized, the resampler estimates, and the agent observes. The
//! comparator arm is resolved post-hoc from the recorded parameter history,
//! so the conditional-expectation regret curve can be produced even when an
//! adversary moved the optimum mid-run.

use crate::context::ContextModel;
use crate::env::{Environment, PastObservations};
use crate::error::{Error, Result};
use crate::estimator::{estimate_loss, estimate_round, mgr, LossEstimate, MgrConfig};
use crate::math::{dot, entropy, Simplex, Vector};
use crate::oracle;
use crate::policy::{mix_uniform, Agent};
use crate::rng::{purpose, RngStream};
use serde::{Deserialize, Serialize};

/// How to pick the probe contexts used for `Q(a*|x)` and the entropy-sum
/// bookkeeping: the full support (exhaustive, exact weights) or fresh draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSpec {
    #[default]
    Support,
    Samples(usize),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrialOptions {
    pub probes: ProbeSpec,
    /// Collect per-round estimator diagnostics (loss-estimate floor, bias
    /// bound, operator norms). Costs a little time; verification runs turn
    /// it on.
    pub diagnostics: bool,
}

/// One round of a trial. Comparator-relative fields are filled post-hoc.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundLog {
    pub t: usize,
    pub context: Vector,
    pub q: Simplex,
    pub pi: Simplex,
    pub gamma: f64,
    pub beta: f64,
    pub arm: usize,
    pub loss: f64,
    /// `sum_a pi(a|x_t) <x_t, theta_t(a)>`.
    pub expected_loss: f64,
    pub entropy: f64,
    pub mgr_iterations: usize,
    /// Conditional-expectation instantaneous regret.
    pub regret_inst: f64,
    /// `1 - pi_t(a*(x_t) | x_t)`.
    pub suboptimal_mass: f64,
}

/// Per-probe accumulators over a completed run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeStat {
    pub context: Vector,
    pub weight: f64,
    /// `sum_t pi_t(a | probe)` per arm.
    pub arm_mass: Vec<f64>,
    /// `sum_t H(q_t(probe))`.
    pub entropy_sum: f64,
    /// Post-hoc optimal arm at this probe.
    pub optimal_arm: usize,
    /// `Q(a*|x) = T - arm_mass[optimal_arm]`.
    pub q_mass: f64,
}

/// Estimator diagnostics accumulated over a run (when enabled).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrialDiagnostics {
    /// Minimum of `l_hat(A_t, x) / beta_t` over rounds and probe contexts.
    pub floor_min: f64,
    /// Worst `bound / target` for the resampling bias inequality.
    pub bias_worst_ratio: f64,
    /// Rounds where the bias bound exceeded its `1/T` target.
    pub bias_violations: usize,
    /// Rounds where `||sigma_dagger||_op` exceeded `delta (M+1)`.
    pub op_norm_violations: usize,
    /// Rounds where the instantaneous regret left `[-2 C_l, 2 C_l]`.
    pub regret_range_violations: usize,
}

/// Per-seed result of one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub seed: u64,
    pub agent_id: String,
    pub env_id: String,
    pub config_hash: String,
    pub horizon: usize,
    pub arms: usize,
    pub dim: usize,
    /// Cumulative conditional-expectation regret, length `horizon`.
    pub regret_curve: Vec<f64>,
    /// Final cumulative realized-loss regret (noise not conditioned away).
    pub realized_regret_final: f64,
    /// Exhaustive (or Monte Carlo) estimate of `Q_bar(a*)`.
    pub q_bar: f64,
    /// Cumulative `sum_s H(q_s(X_s))`, length `horizon`.
    pub entropy_sum_trace: Vec<f64>,
    pub probe_stats: Vec<ProbeStat>,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrialOutput {
    pub result: ExperimentResult,
    pub logs: Vec<RoundLog>,
    pub diagnostics: TrialDiagnostics,
}

/// Conditional-expectation regret for one round:
/// `sum_a pi(a|x) <x, theta_t(a)> - <x, theta_t(a*)>`.
pub fn regret_increment(pi: &Simplex, x: &Vector, theta_row: &[Vector], a_star: usize) -> f64 {
    let expected: f64 = pi
        .probs()
        .iter()
        .zip(theta_row.iter())
        .map(|(&p, th)| p * dot(x, th).expect("dimension"))
        .sum();
    expected - dot(x, &theta_row[a_star]).expect("dimension")
}

/// Run one seeded trial of `horizon` rounds.
pub fn run_trial(
    env: &mut Environment,
    model: &ContextModel,
    agent: &mut dyn Agent,
    horizon: usize,
    seed: u64,
    opts: &TrialOptions,
) -> Result<TrialOutput> {
    let start = std::time::Instant::now();
    if env.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: env.dim(),
            actual: model.dim(),
        });
    }
    let arms = env.arms();
    let dim = env.dim();
    let root = RngStream::new(seed);

    // Probe contexts with weights.
    let probes: Vec<(Vector, f64)> = match opts.probes {
        ProbeSpec::Support => {
            let (points, weights) = model.support().ok_or_else(|| {
                Error::Unsupported(
                    "support probes need a finite-support model; use sampled probes".into(),
                )
            })?;
            points
                .iter()
                .cloned()
                .zip(weights.iter().cloned())
                .collect()
        }
        ProbeSpec::Samples(n) => {
            if n == 0 {
                return Err(Error::InvalidConfig("need at least one probe".into()));
            }
            let mut rng = root.substream(&[0, purpose::PROBE]);
            (0..n)
                .map(|_| (model.sample(&mut rng), 1.0 / n as f64))
                .collect()
        }
    };
    let mut probe_mass = vec![vec![0.0f64; arms]; probes.len()];
    let mut probe_entropy = vec![0.0f64; probes.len()];

    let mut logs: Vec<RoundLog> = Vec::with_capacity(horizon);
    let mut entropy_trace = Vec::with_capacity(horizon);
    let mut past_contexts: Vec<Vector> = Vec::with_capacity(horizon);
    let mut past_actions: Vec<usize> = Vec::with_capacity(horizon);
    let mut past_losses: Vec<f64> = Vec::with_capacity(horizon);
    let mut diag = TrialDiagnostics {
        floor_min: f64::INFINITY,
        ..Default::default()
    };
    let mut entropy_running = 0.0;

    for t in 1..=horizon {
        // Step 1: the adversary commits from rounds < t.
        let theta_row = env
            .emit_round_params(
                t,
                PastObservations {
                    contexts: &past_contexts,
                    actions: &past_actions,
                    losses: &past_losses,
                },
                &mut root.substream(&[t as u64, purpose::ADVERSARY]),
            )
            .to_vec();
        assert_eq!(env.history().len(), t, "parameters must precede the context");

        // Step 2: observe the context.
        let x = model.sample(&mut root.substream(&[t as u64, purpose::CONTEXT]));

        // Steps 3-4: decide and draw the arm.
        let decision = agent.act(&x, &mut root.substream(&[t as u64, purpose::ACTION]));
        if decision.pi.len() != arms {
            return Err(Error::DimensionMismatch {
                expected: arms,
                actual: decision.pi.len(),
            });
        }

        // Step 5: incur the loss.
        let loss = env.realize_loss(
            t,
            decision.arm,
            &x,
            &mut root.substream(&[t as u64, purpose::NOISE]),
        );

        // Estimate the loss parameters for this round.
        let m = agent.mgr_iterations();
        let estimate = if m > 0 {
            let cfg = MgrConfig::new(env.loss_bound(), model.norm_bound(), m)?;
            let sigma = mgr(
                model,
                |ctx| agent.policy_probs(ctx),
                decision.arm,
                &cfg,
                &mut root.substream(&[t as u64, purpose::MGR]),
            );
            if opts.diagnostics {
                let norm = oracle::operator_norm(&sigma);
                if norm > cfg.delta * (m as f64 + 1.0) + 1e-9 {
                    diag.op_norm_violations += 1;
                }
            }
            estimate_round(sigma, decision.arm, arms, &x, loss)
        } else {
            LossEstimate::empty(arms, dim)
        };

        if opts.diagnostics {
            accumulate_diagnostics(
                &mut diag,
                env,
                model,
                &decision,
                &estimate,
                &probes,
                &x,
                m,
                horizon,
            );
        }

        // Probe bookkeeping for the round-t policy.
        for ((mass, ent), (probe, _)) in probe_mass
            .iter_mut()
            .zip(probe_entropy.iter_mut())
            .zip(probes.iter())
        {
            let q = agent.q_probs(probe);
            *ent += entropy(&q);
            let pi = mix_uniform(&q, decision.gamma);
            for (acc, &p) in mass.iter_mut().zip(pi.probs()) {
                *acc += p;
            }
        }

        let expected_loss: f64 = decision
            .pi
            .probs()
            .iter()
            .zip(theta_row.iter())
            .map(|(&p, th)| p * dot(&x, th).expect("dimension"))
            .sum();
        let h = entropy(&decision.q);
        entropy_running += h;
        entropy_trace.push(entropy_running);

        agent.observe(&x, &decision, &estimate);
        past_contexts.push(x.clone());
        past_actions.push(decision.arm);
        past_losses.push(loss);
        logs.push(RoundLog {
            t,
            context: x,
            q: decision.q,
            pi: decision.pi,
            gamma: decision.gamma,
            beta: decision.beta,
            arm: decision.arm,
            loss,
            expected_loss,
            entropy: h,
            mgr_iterations: m,
            regret_inst: f64::NAN,
            suboptimal_mass: f64::NAN,
        });
    }

    // Post-hoc comparator from the full recorded history.
    let cumulative = env.cumulative_params();
    let history = env.history();
    let mut regret_curve = Vec::with_capacity(horizon);
    let mut running = 0.0;
    let mut realized_running = 0.0;
    let loss_cap = 2.0 * env.loss_bound();
    for log in logs.iter_mut() {
        let a_star = env.optimal_arm(&cumulative, &log.context);
        let comparator = dot(&log.context, &history[log.t - 1][a_star]).expect("dimension");
        log.regret_inst = log.expected_loss - comparator;
        log.suboptimal_mass = 1.0 - log.pi.prob(a_star);
        if log.regret_inst.abs() > loss_cap + 1e-9 {
            diag.regret_range_violations += 1;
        }
        running += log.regret_inst;
        realized_running += log.loss - comparator;
        regret_curve.push(running);
    }

    let probe_stats: Vec<ProbeStat> = probes
        .into_iter()
        .zip(probe_mass)
        .zip(probe_entropy)
        .map(|(((context, weight), arm_mass), entropy_sum)| {
            let optimal_arm = env.optimal_arm(&cumulative, &context);
            let q_mass = horizon as f64 - arm_mass[optimal_arm];
            ProbeStat {
                context,
                weight,
                arm_mass,
                entropy_sum,
                optimal_arm,
                q_mass,
            }
        })
        .collect();
    let q_bar = probe_stats
        .iter()
        .map(|p| p.weight * p.q_mass)
        .sum::<f64>();

    if diag.floor_min == f64::INFINITY {
        diag.floor_min = 0.0;
    }

    let result = ExperimentResult {
        seed,
        agent_id: agent.id().to_string(),
        env_id: format!("{:?}", env.regime()).to_lowercase(),
        config_hash: String::new(),
        horizon,
        arms,
        dim,
        regret_curve,
        realized_regret_final: realized_running,
        q_bar,
        entropy_sum_trace: entropy_trace,
        probe_stats,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    };
    Ok(TrialOutput {
        result,
        logs,
        diagnostics: diag,
    })
}

#[allow(clippy::too_many_arguments)]
fn accumulate_diagnostics(
    diag: &mut TrialDiagnostics,
    env: &Environment,
    model: &ContextModel,
    decision: &crate::policy::AgentDecision,
    estimate: &LossEstimate,
    probes: &[(Vector, f64)],
    x_t: &Vector,
    m: usize,
    horizon: usize,
) {
    if decision.beta > 0.0 {
        // Loss-estimate floor over the realized context and every probe.
        let theta_hat = &estimate.theta_hat[estimate.played];
        let mut check = |ctx: &Vector| {
            let l_hat = estimate_loss(theta_hat, ctx).expect("dimension");
            let ratio = l_hat / decision.beta;
            if ratio < diag.floor_min {
                diag.floor_min = ratio;
            }
        };
        check(x_t);
        for (probe, _) in probes {
            check(probe);
        }
    }
    if m > 0 && decision.gamma > 0.0 {
        let eval = oracle::bias_bound_eval(
            decision.gamma,
            1.0 / (2.0 * env.loss_bound() * model.norm_bound()),
            model.lambda_min(),
            m,
            env.arms(),
            model.norm_bound(),
            env.param_bound(),
            horizon as f64,
        );
        let ratio = eval.bound / eval.target;
        if ratio > diag.bias_worst_ratio {
            diag.bias_worst_ratio = ratio;
        }
        if !eval.pass {
            diag.bias_violations += 1;
        }
    }
}

/// Summary across seeds (and, when present, across a horizon grid).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateSummary {
    pub agent_id: String,
    pub env_id: String,
    pub config_hash: String,
    pub schema_version: u32,
    pub groups: Vec<HorizonGroup>,
    /// OLS slope of `ln(mean final regret)` against `ln(T)` over the grid,
    /// when at least two horizons with positive mean regret are present.
    pub loglog_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorizonGroup {
    pub horizon: usize,
    pub seeds: Vec<u64>,
    /// Round stride of the stored curves: 1 up to 10^5 rounds, 10 above
    /// (entry i covers round `stride * (i + 1)`).
    pub curve_stride: usize,
    pub mean_regret_curve: Vec<f64>,
    pub stderr_regret_curve: Vec<f64>,
    pub final_mean: f64,
    pub final_stderr: f64,
    pub final_min: f64,
    pub final_max: f64,
    pub q_bar_mean: f64,
    pub q_bar_stderr: f64,
    pub realized_final_mean: f64,
}

pub const AGGREGATE_SCHEMA_VERSION: u32 = 1;

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregate homogeneous results (same config, agent, environment; distinct
/// seeds) grouped by horizon.
pub fn aggregate(results: &[ExperimentResult]) -> Result<AggregateSummary> {
    let first = results
        .first()
        .ok_or_else(|| Error::InvalidConfig("nothing to aggregate".into()))?;
    for r in results {
        if r.agent_id != first.agent_id
            || r.env_id != first.env_id
            || r.config_hash != first.config_hash
            || r.arms != first.arms
            || r.dim != first.dim
        {
            return Err(Error::InvalidConfig(
                "aggregate requires homogeneous configurations".into(),
            ));
        }
    }
    let mut horizons: Vec<usize> = results.iter().map(|r| r.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();

    let mut groups = Vec::with_capacity(horizons.len());
    for &h in &horizons {
        let members: Vec<&ExperimentResult> =
            results.iter().filter(|r| r.horizon == h).collect();
        let mut seeds: Vec<u64> = members.iter().map(|r| r.seed).collect();
        let unique: std::collections::BTreeSet<u64> = seeds.iter().copied().collect();
        if unique.len() != seeds.len() {
            return Err(Error::InvalidConfig(format!(
                "duplicate seeds in horizon {h} group"
            )));
        }
        seeds.sort_unstable();
        let n = members.len() as f64;
        let stride = if h > 100_000 { 10 } else { 1 };
        let points = h / stride;
        let mut mean_curve = vec![0.0f64; points];
        for r in &members {
            for (i, acc) in mean_curve.iter_mut().enumerate() {
                *acc += r.regret_curve[stride * (i + 1) - 1];
            }
        }
        for v in mean_curve.iter_mut() {
            *v /= n;
        }
        let mut stderr_curve = vec![0.0f64; points];
        if members.len() > 1 {
            for r in &members {
                for (i, se) in stderr_curve.iter_mut().enumerate() {
                    *se += (r.regret_curve[stride * (i + 1) - 1] - mean_curve[i]).powi(2);
                }
            }
            for se in stderr_curve.iter_mut() {
                *se = (*se / (n - 1.0) / n).sqrt();
            }
        }
        let finals: Vec<f64> = members
            .iter()
            .map(|r| r.regret_curve.last().copied().unwrap_or(0.0))
            .collect();
        let (final_mean, final_stderr) = mean_stderr(&finals);
        let q_bars: Vec<f64> = members.iter().map(|r| r.q_bar).collect();
        let (q_bar_mean, q_bar_stderr) = mean_stderr(&q_bars);
        let realized: Vec<f64> = members.iter().map(|r| r.realized_regret_final).collect();
        let (realized_final_mean, _) = mean_stderr(&realized);
        groups.push(HorizonGroup {
            horizon: h,
            seeds,
            curve_stride: stride,
            mean_regret_curve: mean_curve,
            stderr_regret_curve: stderr_curve,
            final_mean,
            final_stderr,
            final_min: finals.iter().cloned().fold(f64::INFINITY, f64::min),
            final_max: finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            q_bar_mean,
            q_bar_stderr,
            realized_final_mean,
        });
    }

    let loglog_slope = fit_loglog_slope(
        &groups
            .iter()
            .map(|g| (g.horizon as f64, g.final_mean))
            .collect::<Vec<_>>(),
    );

    Ok(AggregateSummary {
        agent_id: first.agent_id.clone(),
        env_id: first.env_id.clone(),
        config_hash: first.config_hash.clone(),
        schema_version: AGGREGATE_SCHEMA_VERSION,
        groups,
        loglog_slope,
    })
}

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "t,regret_cum,regret_inst,entropy,beta,gamma,arm,loss";

/// Render one trial's per-round CSV (the stable external schema). Floats use
/// the shortest round-trip representation, so identical runs yield identical
/// bytes.
pub fn trial_csv(logs: &[RoundLog], result: &ExperimentResult) -> String {
    let mut out = String::with_capacity(64 * (logs.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (log, cum) in logs.iter().zip(result.regret_curve.iter()) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            log.t, cum, log.regret_inst, log.entropy, log.beta, log.gamma, log.arm, log.loss
        ));
    }
    out
}

/// OLS slope of `ln(y)` on `ln(x)`; `None` unless at least two points with
/// positive coordinates exist.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}
