//! Experiment configuration.
//!
//! One schema, two encodings: TOML (primary, diffable) and JSON (accepted
//! anywhere a config is accepted; detected by a leading `{`). The canonical
//! serialized form is JSON and the config hash is taken over it.

use crate::context::ContextModel;
use crate::env::{AdversaryStrategy, Environment, Regime};
use crate::error::{Error, Result};
use crate::math::Vector;
use crate::policy::{
    Agent, Beta1Mode, BobwRealFtrl, RealLinExp3, RealLinExp3Config, ScheduleConstants,
    UniformAgent,
};
use crate::simulator::ProbeSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub context: ContextSection,
    pub environment: EnvironmentSection,
    pub agent: AgentSection,
    #[serde(default)]
    pub probes: ProbeSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentSection {
    /// Horizon grid; one batch of seeds runs per entry.
    pub t_grid: Vec<usize>,
    /// Number of seeds; seed i is `base_seed + i`.
    pub seeds: u32,
    pub base_seed: u64,
    /// Output directory (under the output root) for artifacts.
    #[serde(default)]
    pub out_dir: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextSection {
    Discrete {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    Sphere {
        dim: usize,
        radius: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EnvironmentSection {
    pub regime: Regime,
    pub theta0: Vec<Vec<f64>>,
    #[serde(default)]
    pub noise_bound: f64,
    pub param_bound: f64,
    #[serde(default)]
    pub budget: f64,
    #[serde(default)]
    pub strategy: Option<AdversaryStrategy>,
    /// Claimed uniform gap; when present it is certified at startup.
    #[serde(default)]
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    BobwRealFtrl,
    RealLinExp3,
    Uniform,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AgentSection {
    pub kind: AgentKind,
    #[serde(default)]
    pub beta1_mode: Beta1Mode,
    /// RealLinExp3 overrides; horizon-tuned defaults apply when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ProbeSection {
    pub mode: ProbeSpec,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self {
            mode: ProbeSpec::Support,
        }
    }
}

impl ExperimentConfig {
    /// Parse either encoding; JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text)
                .map_err(|e| Error::InvalidConfig(format!("json: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("toml: {e}")))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.t_grid.is_empty() || self.experiment.t_grid.iter().any(|&t| t < 1) {
            return Err(Error::InvalidConfig(
                "experiment.t_grid must be nonempty with T >= 1".into(),
            ));
        }
        if self.experiment.seeds < 1 {
            return Err(Error::InvalidConfig("experiment.seeds must be >= 1".into()));
        }
        if self.environment.theta0.is_empty() {
            return Err(Error::InvalidConfig("environment.theta0 must list arms".into()));
        }
        Ok(())
    }

    /// Canonical serialized form (JSON). Identical configs hash identically.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical_json().as_bytes()))
    }

    pub fn build_model(&self) -> Result<ContextModel> {
        match &self.context {
            ContextSection::Discrete { points, weights } => ContextModel::discrete(
                points.iter().cloned().map(Vector).collect(),
                weights.clone(),
            ),
            ContextSection::Sphere { dim, radius } => ContextModel::scaled_sphere(*dim, *radius),
        }
    }

    pub fn build_env(&self, model: &ContextModel) -> Result<Environment> {
        let strategy = self
            .environment
            .strategy
            .clone()
            .unwrap_or(AdversaryStrategy::None);
        let env = Environment::new(
            self.environment.regime,
            self.environment.theta0.iter().cloned().map(Vector).collect(),
            strategy,
            self.environment.budget,
            self.environment.noise_bound,
            self.environment.param_bound,
            model,
        )?;
        if let Some(gap) = self.environment.gap {
            env.verify_gap(model, gap)?;
        }
        Ok(env)
    }

    pub fn build_agent(
        &self,
        env: &Environment,
        model: &ContextModel,
        horizon: usize,
    ) -> Result<Box<dyn Agent + Send>> {
        match self.agent.kind {
            AgentKind::Uniform => Ok(Box::new(UniformAgent::new(env.arms()))),
            AgentKind::BobwRealFtrl => {
                let consts = ScheduleConstants::new(
                    env.arms(),
                    env.dim(),
                    horizon,
                    env.loss_bound(),
                    model.norm_bound(),
                    model.lambda_min(),
                    self.agent.beta1_mode,
                )?;
                Ok(Box::new(BobwRealFtrl::new(consts)))
            }
            AgentKind::RealLinExp3 => {
                let delta = 1.0 / (2.0 * env.loss_bound() * model.norm_bound());
                let mut cfg = RealLinExp3Config::tuned(
                    env.arms(),
                    env.dim(),
                    horizon,
                    delta,
                    model.lambda_min(),
                )?;
                if let Some(eta) = self.agent.eta {
                    cfg.eta = eta;
                }
                if let Some(gamma) = self.agent.gamma {
                    cfg.gamma = gamma;
                }
                if let Some(m) = self.agent.iterations {
                    cfg.iterations = m;
                }
                Ok(Box::new(RealLinExp3::new(env.arms(), env.dim(), cfg)?))
            }
        }
    }

    pub fn probe_spec(&self) -> ProbeSpec {
        self.probes.mode
    }

    pub fn agent_label(&self) -> &'static str {
        match self.agent.kind {
            AgentKind::BobwRealFtrl => "bobw_real_ftrl",
            AgentKind::RealLinExp3 => "real_lin_exp3",
            AgentKind::Uniform => "uniform",
        }
    }
}

/// FNV-1a 64-bit over the canonical bytes; stable across runs and platforms.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
