//! The verification suite: property checks with brute-force oracles.
//!
//! Each check pins a tolerance, measures its margin, and reports pass/fail.
//! The CLI `verify` subcommand runs `run_suite`; the acceptance test target
//! drives the same functions at their full scales.

use crate::context::ContextModel;
use crate::env::{self, AdversaryStrategy, Environment, Regime};
use crate::error::Result;
use crate::estimator::{mgr, MgrConfig};
use crate::math::{Matrix, Simplex, Vector};
use crate::oracle;
use crate::policy::{
    Beta1Mode, BobwRealFtrl, RealLinExp3, RealLinExp3Config, ScheduleConstants, UniformAgent,
};
use crate::rng::RngStream;
use crate::simulator::{
    mean_stderr, run_trial, ExperimentResult, ProbeSpec, TrialDiagnostics, TrialOptions,
};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckReport {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

// ---------------------------------------------------------------------------
// Reference instances
// ---------------------------------------------------------------------------

/// Two-context gap instance: support `{e1, e2}` with per-context gaps 0.3
/// and 0.4, so a gap of 0.3 certifies uniformly.
pub const GAP: f64 = 0.3;
pub const GAP_NOISE: f64 = 0.02;
pub const GAP_PARAM_BOUND: f64 = 0.25;

pub fn gap_model() -> ContextModel {
    ContextModel::discrete(
        vec![Vector(vec![1.0, 0.0]), Vector(vec![0.0, 1.0])],
        vec![0.5, 0.5],
    )
    .expect("static instance")
}

fn gap_theta() -> Vec<Vector> {
    vec![Vector(vec![-0.15, 0.2]), Vector(vec![0.15, -0.2])]
}

pub fn gap_env(model: &ContextModel) -> Environment {
    Environment::new(
        Regime::Stochastic,
        gap_theta(),
        AdversaryStrategy::None,
        0.0,
        GAP_NOISE,
        GAP_PARAM_BOUND,
        model,
    )
    .expect("static instance")
}

/// Sign-flip corruption of the gap instance. The accounted budget is
/// `rounds * 2 * max |<x, theta_0>| = 0.4 * rounds` on this support.
pub fn corrupted_env(model: &ContextModel, flip_rounds: usize) -> Environment {
    Environment::new(
        Regime::Corrupted,
        gap_theta(),
        AdversaryStrategy::SignFlip {
            rounds: flip_rounds,
        },
        corruption_budget(flip_rounds),
        GAP_NOISE,
        GAP_PARAM_BOUND,
        model,
    )
    .expect("static instance")
}

pub fn corruption_budget(flip_rounds: usize) -> f64 {
    0.4 * flip_rounds as f64
}

/// Three-arm switching instance: arm 0's base vector is best at every
/// support context, and the block rotation moves it across arms.
pub fn switcher_model() -> ContextModel {
    gap_model()
}

pub fn switcher_env(model: &ContextModel, horizon: usize) -> Environment {
    Environment::new(
        Regime::Adversarial,
        vec![
            Vector(vec![-0.2, -0.2]),
            Vector(vec![0.2, 0.0]),
            Vector(vec![0.0, 0.2]),
        ],
        AdversaryStrategy::BestArmSwitcher {
            period: (horizon / 4).max(1),
        },
        0.0,
        GAP_NOISE,
        0.3,
        model,
    )
    .expect("static instance")
}

pub fn reactive_env(model: &ContextModel) -> Environment {
    Environment::new(
        Regime::Adversarial,
        gap_theta(),
        AdversaryStrategy::FavorLeastPulled,
        0.0,
        GAP_NOISE,
        GAP_PARAM_BOUND,
        model,
    )
    .expect("static instance")
}

pub fn bobw_agent(env: &Environment, model: &ContextModel, horizon: usize) -> BobwRealFtrl {
    let consts = ScheduleConstants::new(
        env.arms(),
        env.dim(),
        horizon,
        env.loss_bound(),
        model.norm_bound(),
        model.lambda_min(),
        Beta1Mode::HorizonTuned,
    )
    .expect("static instance");
    BobwRealFtrl::new(consts)
}

pub fn real_lin_exp3_agent(
    env: &Environment,
    model: &ContextModel,
    horizon: usize,
) -> RealLinExp3 {
    let delta = 1.0 / (2.0 * env.loss_bound() * model.norm_bound());
    let cfg = RealLinExp3Config::tuned(env.arms(), env.dim(), horizon, delta, model.lambda_min())
        .expect("static instance");
    RealLinExp3::new(env.arms(), env.dim(), cfg).expect("static instance")
}

// ---------------------------------------------------------------------------
// Batteries of verification runs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatteryEnv {
    StochasticGap,
    CorruptedSignFlip,
    AdversarialSwitcher,
    AdversarialReactive,
    Tiny,
}

#[derive(Debug, Clone)]
pub struct BatteryRun {
    pub env: BatteryEnv,
    pub result: ExperimentResult,
    pub diagnostics: TrialDiagnostics,
    pub flip_rounds: usize,
}

fn battery_cell(env_kind: BatteryEnv, horizon: usize, seed: u64) -> Result<BatteryRun> {
    let model = gap_model();
    let flip_rounds = horizon / 50;
    let mut env = match env_kind {
        BatteryEnv::StochasticGap | BatteryEnv::Tiny => gap_env(&model),
        BatteryEnv::CorruptedSignFlip => corrupted_env(&model, flip_rounds),
        BatteryEnv::AdversarialSwitcher => switcher_env(&model, horizon),
        BatteryEnv::AdversarialReactive => reactive_env(&model),
    };
    let mut agent = bobw_agent(&env, &model, horizon);
    let opts = TrialOptions {
        probes: ProbeSpec::Support,
        diagnostics: true,
    };
    let out = run_trial(&mut env, &model, &mut agent, horizon, seed, &opts)?;
    Ok(BatteryRun {
        env: env_kind,
        result: out.result,
        diagnostics: out.diagnostics,
        flip_rounds,
    })
}

/// Run the standard battery: BoBW-RealFTRL on every reference environment,
/// `seeds` seeds each, plus one tiny run that exercises the small-Q branch
/// of the entropy bound.
pub fn run_battery(horizon: usize, seeds: u64, base_seed: u64) -> Result<Vec<BatteryRun>> {
    let mut cells: Vec<(BatteryEnv, usize, u64)> = Vec::new();
    for s in 0..seeds {
        cells.push((BatteryEnv::StochasticGap, horizon, base_seed + s));
        cells.push((BatteryEnv::CorruptedSignFlip, horizon, base_seed + s));
    }
    for s in 0..seeds.min(5) {
        cells.push((BatteryEnv::AdversarialSwitcher, horizon, base_seed + s));
        cells.push((BatteryEnv::AdversarialReactive, horizon, base_seed + s));
    }
    cells.push((BatteryEnv::Tiny, 3, base_seed));
    cells
        .into_par_iter()
        .map(|(kind, t, seed)| battery_cell(kind, t, seed))
        .collect()
}

// ---------------------------------------------------------------------------
// Individual checks
// ---------------------------------------------------------------------------

/// Closed-form FTRL distribution against the numeric argmin oracle.
pub fn check_ftrl_agreement(instances: usize, tol: f64, seed: u64) -> CheckReport {
    let mut rng = RngStream::new(seed);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for _ in 0..instances {
        let k = 2 + (rng.next_f64() * 7.0) as usize; // K in 2..=8
        let beta = 10f64.powf(-1.0 + 3.0 * rng.next_f64()); // log-uniform [0.1, 100]
        let losses: Vec<f64> = (0..k).map(|_| beta * rng.next_symmetric(3.0)).collect();
        let closed = crate::policy::gibbs_dist(&losses, beta);
        let numeric = match oracle::ftrl_argmin_numeric(&losses, beta) {
            Ok(q) => q,
            Err(e) => {
                return CheckReport::new(
                    "ftrl_agreement",
                    false,
                    format!("numeric argmin failed: {e}"),
                );
            }
        };
        let diff = closed
            .probs()
            .iter()
            .zip(numeric.probs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        worst = worst.max(diff);
        if diff > tol {
            failures += 1;
        }
    }
    CheckReport::new(
        "ftrl_agreement",
        failures == 0,
        format!("{instances} instances, sup-norm worst {worst:.2e} (tol {tol:.0e})"),
    )
}

/// Deterministic scalar resampling case: point-mass context, always-on
/// policy, exact truncated geometric series.
pub fn check_mgr_scalar() -> CheckReport {
    let model = ContextModel::discrete(vec![Vector(vec![1.0])], vec![1.0]).expect("static");
    let cfg = MgrConfig::new(1.0, 1.0, 3).expect("static");
    let mut rng = RngStream::new(0);
    let out = mgr(&model, |_| Simplex::point_mass(1, 0), 0, &cfg, &mut rng);
    let expect = 1.0 - (1.0 - cfg.delta).powi(4);
    let pass = out.data[0] == expect;
    CheckReport::new(
        "mgr_scalar_exact",
        pass,
        format!("got {}, want {} (exact)", out.data[0], expect),
    )
}

/// Monte Carlo mean of independent resampled inverses against the
/// closed-form truncated series.
pub fn check_mgr_expectation(samples: usize, tol: f64, seed: u64) -> CheckReport {
    let model = gap_model();
    let policy = |x: &Vector| {
        if x.0[0] > 0.5 {
            Simplex::new(vec![0.7, 0.3]).expect("static")
        } else {
            Simplex::new(vec![0.4, 0.6]).expect("static")
        }
    };
    let cfg = MgrConfig::new(1.0, 1.0, 10).expect("static");
    let root = RngStream::new(seed);
    let sum = (0..samples)
        .into_par_iter()
        .fold(
            || Matrix::zeros(2),
            |mut acc, i| {
                let mut rng = root.substream(&[i as u64]);
                acc.add_assign(&mgr(&model, policy, 0, &cfg, &mut rng));
                acc
            },
        )
        .reduce(|| Matrix::zeros(2), |mut a, b| {
            a.add_assign(&b);
            a
        });
    let mean = sum.scale(1.0 / samples as f64);
    let sigma_ta = oracle::exact_sigma_ta(&model, policy, 0).expect("finite support");
    let closed = oracle::mgr_expectation_closed_form(&sigma_ta, cfg.delta, cfg.iterations);
    let worst = mean
        .data
        .iter()
        .zip(closed.data.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    CheckReport::new(
        "mgr_expectation",
        worst < tol,
        format!("{samples} draws, entrywise worst {worst:.4} (tol {tol})"),
    )
}

/// Resampling bias bound at every round of every battery run that used the
/// estimator: zero violations allowed.
pub fn check_bias_bound(battery: &[BatteryRun]) -> CheckReport {
    let violations: usize = battery.iter().map(|r| r.diagnostics.bias_violations).sum();
    let worst = battery
        .iter()
        .map(|r| r.diagnostics.bias_worst_ratio)
        .fold(0.0f64, f64::max);
    CheckReport::new(
        "bias_bound",
        violations == 0,
        format!("{violations} violations, worst bound/target ratio {worst:.4}"),
    )
}

/// Loss-estimate floor `l_hat / beta >= -1 - 1e-9` at every round, every
/// probe context, every battery run.
pub fn check_loss_floor(battery: &[BatteryRun]) -> CheckReport {
    let floor = battery
        .iter()
        .map(|r| r.diagnostics.floor_min)
        .fold(f64::INFINITY, f64::min);
    CheckReport::new(
        "loss_floor",
        floor >= -1.0 - 1e-9,
        format!("min l_hat/beta = {floor:.6} (floor -1 - 1e-9)"),
    )
}

/// Operator-norm cap on every resampled inverse.
pub fn check_op_norm(battery: &[BatteryRun]) -> CheckReport {
    let violations: usize = battery
        .iter()
        .map(|r| r.diagnostics.op_norm_violations)
        .sum();
    CheckReport::new(
        "mgr_operator_norm",
        violations == 0,
        format!("{violations} rounds exceeded delta (M+1)"),
    )
}

/// Cumulative-entropy bound at every probe of every battery run; both the
/// small-Q and large-Q branches must be exercised.
pub fn check_entropy_bound(battery: &[BatteryRun]) -> CheckReport {
    let mut worst_slack = f64::INFINITY;
    let mut failures = 0usize;
    let mut small_branch = 0usize;
    let mut large_branch = 0usize;
    for run in battery {
        for probe in &run.result.probe_stats {
            let eval = oracle::entropy_bound_eval(
                probe.entropy_sum,
                probe.q_mass,
                run.result.arms,
                run.result.horizon,
            );
            if probe.q_mass <= std::f64::consts::E {
                small_branch += 1;
            } else {
                large_branch += 1;
            }
            if !eval.pass {
                failures += 1;
            }
            worst_slack = worst_slack.min(eval.rhs - eval.lhs);
        }
    }
    let both = small_branch > 0 && large_branch > 0;
    CheckReport::new(
        "entropy_bound",
        failures == 0 && both,
        format!(
            "{failures} violations, min slack {worst_slack:.3}, branches small/large = {small_branch}/{large_branch}"
        ),
    )
}

/// Self-bounding constraint over seeds: `mean(D) >= -3 stderr(D)` where
/// `D = R_T - (gap * Q_bar - C)`.
pub fn check_self_bounding(battery: &[BatteryRun], env_kind: BatteryEnv) -> CheckReport {
    let name = match env_kind {
        BatteryEnv::StochasticGap => "self_bounding_stochastic",
        BatteryEnv::CorruptedSignFlip => "self_bounding_corrupted",
        _ => "self_bounding",
    };
    let diagnostics: Vec<f64> = battery
        .iter()
        .filter(|r| r.env == env_kind)
        .map(|r| {
            let regret = r.result.regret_curve.last().copied().unwrap_or(0.0);
            let budget = match env_kind {
                BatteryEnv::CorruptedSignFlip => corruption_budget(r.flip_rounds),
                _ => 0.0,
            };
            env::self_bounding_gap(GAP, budget, r.result.q_bar, regret)
        })
        .collect();
    if diagnostics.is_empty() {
        return CheckReport::new(name, false, "no runs for this environment".into());
    }
    let (mean, stderr) = mean_stderr(&diagnostics);
    let pass = mean >= -3.0 * stderr;
    CheckReport::new(
        name,
        pass,
        format!(
            "mean diagnostic {mean:.3} over {} seeds (threshold -3 stderr = {:.3})",
            diagnostics.len(),
            -3.0 * stderr
        ),
    )
}

/// Uniform baseline against the exhaustive per-round expectation.
pub fn check_uniform_calibration(horizon: usize, seeds: u64, base_seed: u64) -> CheckReport {
    let model = gap_model();
    // Exhaustive per-round expected regret of uniform play.
    let (points, weights) = model.support().expect("finite support");
    let theta = gap_theta();
    let per_round: f64 = points
        .iter()
        .zip(weights.iter())
        .map(|(x, &w)| {
            let values: Vec<f64> = theta
                .iter()
                .map(|th| crate::math::dot(x, th).expect("dimension"))
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
            w * (mean - best)
        })
        .sum();
    let expect = per_round * horizon as f64;

    let finals: Vec<f64> = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let mut env = gap_env(&model);
            let mut agent = UniformAgent::new(env.arms());
            let out = run_trial(
                &mut env,
                &model,
                &mut agent,
                horizon,
                base_seed + s,
                &TrialOptions::default(),
            )
            .expect("static instance");
            out.result.regret_curve.last().copied().unwrap_or(0.0)
        })
        .collect();
    let (mean, stderr) = mean_stderr(&finals);
    let pass = (mean - expect).abs() <= 3.0 * stderr.max(1e-12);
    CheckReport::new(
        "uniform_calibration",
        pass,
        format!(
            "empirical {mean:.3} vs oracle {expect:.3}, |diff| = {:.3} <= 3 stderr = {:.3}",
            (mean - expect).abs(),
            3.0 * stderr
        ),
    )
}

/// Bit-identical replay of a full trial under one seed, compared on the
/// rendered CSV bytes (the externally visible numeric columns).
pub fn check_determinism(horizon: usize, seed: u64) -> CheckReport {
    let run = || {
        let model = gap_model();
        let mut env = gap_env(&model);
        let mut agent = bobw_agent(&env, &model, horizon);
        let out = run_trial(
            &mut env,
            &model,
            &mut agent,
            horizon,
            seed,
            &TrialOptions::default(),
        )
        .expect("static instance");
        crate::simulator::trial_csv(&out.logs, &out.result)
    };
    let a = run();
    let b = run();
    CheckReport::new(
        "determinism",
        a == b,
        format!(
            "two runs of T={horizon}, CSV bytes identical: {} ({} bytes)",
            a == b,
            a.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// Suite driver
// ---------------------------------------------------------------------------

pub fn run_suite(level: Level) -> Result<Vec<CheckReport>> {
    let (battery_t, battery_seeds, mgr_samples, mgr_tol) = match level {
        Level::Quick => (2_000, 6, 20_000, 0.05),
        Level::Full => (10_000, 20, 100_000, 0.02),
    };
    let mut reports = Vec::new();
    reports.push(check_ftrl_agreement(200, 1e-6, 7));
    reports.push(check_mgr_scalar());
    reports.push(check_mgr_expectation(mgr_samples, mgr_tol, 11));
    let battery = run_battery(battery_t, battery_seeds, 100)?;
    reports.push(check_bias_bound(&battery));
    reports.push(check_loss_floor(&battery));
    reports.push(check_op_norm(&battery));
    reports.push(check_entropy_bound(&battery));
    reports.push(check_self_bounding(&battery, BatteryEnv::StochasticGap));
    reports.push(check_self_bounding(&battery, BatteryEnv::CorruptedSignFlip));
    reports.push(check_uniform_calibration(2_000, 20, 500));
    reports.push(check_determinism(500, 42));
    Ok(reports)
}

/// Convenience: certify the gap instance (used by docs and the CLI).
pub fn certify_gap_instance() -> Result<crate::env::GapCertificate> {
    let model = gap_model();
    let env = gap_env(&model);
    env.verify_gap(&model, GAP)
}
