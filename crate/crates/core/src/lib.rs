//! Simulation library for K-armed linear contextual bandits under
//! stochastic, adversarial, and budget-corrupted loss sequences.
//!
//! The centerpiece agent is BoBW-RealFTRL: entropic follow-the-regularized-
//! leader with entropy-adaptive learning rates, uniform exploration mixing,
//! and matrix-geometric-resampling loss estimates. RealLinExp3 and a uniform
//! baseline sit behind the same agent interface. A brute-force oracle module
//! (exact design matrices, numeric FTRL argmin, closed-form resampling
//! expectations) backs the verification suite; nothing in it is reachable
//! from the agents.

pub mod config;
pub mod context;
pub mod env;
pub mod error;
pub mod estimator;
pub mod math;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod simulator;
pub mod verify;

pub use config::ExperimentConfig;
pub use context::ContextModel;
pub use env::{AdversaryStrategy, Environment, GapCertificate, Regime};
pub use error::{Error, Result};
pub use estimator::{LossEstimate, MgrConfig};
pub use math::{Matrix, Simplex, Vector};
pub use policy::{Agent, AgentDecision, Beta1Mode, BobwRealFtrl, RealLinExp3, UniformAgent};
pub use rng::RngStream;
pub use simulator::{
    aggregate, run_trial, AggregateSummary, ExperimentResult, ProbeSpec, RoundLog, TrialOptions,
    TrialOutput,
};
