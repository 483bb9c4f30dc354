//! The `run` subcommand: execute every (horizon, seed) cell of a config,
//! write one CSV per trial, one aggregate JSON per horizon, and a manifest.
//!
//! Cells run on a rayon work pool; every file is written by the cell that
//! owns it and the manifest is written last. Numeric CSV columns are fully
//! reproducible for a given config and seed; wall-clock only appears in the
//! manifest and the aggregates.

use anyhow::{anyhow, Context, Result};
use bobw_core::simulator::{aggregate, run_trial, trial_csv, TrialOptions, CSV_HEADER, CSV_SCHEMA_VERSION};
use bobw_core::{ExperimentConfig, ExperimentResult};
use rayon::prelude::*;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub fn run_command(config_path: &Path, out_override: Option<&Path>) -> Result<i32> {
    let started = epoch_secs();
    let cfg = ExperimentConfig::load(config_path)
        .with_context(|| format!("loading config {}", config_path.display()))?;
    let hash = cfg.hash();
    let dir = output_dir(&cfg, &hash, out_override);
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;

    // Validate the model/env once up front so a bad config fails before any
    // cell runs.
    let model = cfg.build_model()?;
    cfg.build_env(&model)?;

    let mut cells: Vec<(usize, u64)> = Vec::new();
    for &t in &cfg.experiment.t_grid {
        for i in 0..cfg.experiment.seeds {
            cells.push((t, cfg.experiment.base_seed + i as u64));
        }
    }

    let outcomes: Vec<Result<(usize, u64, PathBuf, ExperimentResult)>> = cells
        .par_iter()
        .map(|&(horizon, seed)| run_cell(&cfg, &hash, &dir, horizon, seed))
        .collect();

    let mut completed = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(cell) => completed.push(cell),
            Err(e) => failures.push(format!("{e:#}")),
        }
    }

    // One aggregate per horizon over the completed cells.
    let mut aggregate_files = Vec::new();
    for &t in &cfg.experiment.t_grid {
        let results: Vec<ExperimentResult> = completed
            .iter()
            .filter(|(h, _, _, _)| *h == t)
            .map(|(_, _, _, r)| r.clone())
            .collect();
        if results.is_empty() {
            continue;
        }
        let summary = aggregate(&results)?;
        let name = format!("{}_aggregate_T{}.json", &hash[..8], t);
        let path = dir.join(&name);
        std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
        aggregate_files.push(name);
    }

    let manifest = json!({
        "config_hash": hash,
        "version": env!("CARGO_PKG_VERSION"),
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "csv_header": CSV_HEADER,
        "config": serde_json::from_str::<serde_json::Value>(&cfg.canonical_json())?,
        "cells": completed.iter().map(|(t, seed, path, _)| json!({
            "t": t,
            "seed": seed,
            "files": [path.file_name().unwrap().to_string_lossy()],
        })).collect::<Vec<_>>(),
        "aggregates": aggregate_files,
        "failures": failures,
        "timestamps": { "started": started, "finished": epoch_secs() },
    });
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;

    if failures.is_empty() {
        println!(
            "{} cells -> {} (hash {})",
            completed.len(),
            dir.display(),
            hash
        );
        Ok(0)
    } else {
        eprintln!(
            "{} of {} cells failed; completed results preserved in {}",
            failures.len(),
            cells.len(),
            dir.display()
        );
        for f in &failures {
            eprintln!("  {f}");
        }
        Ok(1)
    }
}

fn run_cell(
    cfg: &ExperimentConfig,
    hash: &str,
    dir: &Path,
    horizon: usize,
    seed: u64,
) -> Result<(usize, u64, PathBuf, ExperimentResult)> {
    let model = cfg.build_model()?;
    let mut env = cfg.build_env(&model)?;
    let mut agent = cfg.build_agent(&env, &model, horizon)?;
    let opts = TrialOptions {
        probes: cfg.probe_spec(),
        diagnostics: false,
    };
    let out = run_trial(&mut env, &model, agent.as_mut(), horizon, seed, &opts)
        .map_err(|e| anyhow!("cell T={horizon} seed={seed}: {e}"))?;
    let mut result = out.result;
    result.config_hash = hash.to_string();
    let name = format!("{}_T{}_seed{}.csv", &hash[..8], horizon, seed);
    let path = dir.join(&name);
    std::fs::write(&path, trial_csv(&out.logs, &result))?;
    Ok((horizon, seed, path, result))
}

fn output_dir(cfg: &ExperimentConfig, hash: &str, out_override: Option<&Path>) -> PathBuf {
    let root = out_override
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("BOBW_OUT_ROOT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let leaf = cfg
        .experiment
        .out_dir
        .clone()
        .unwrap_or_else(|| format!("exp-{}", &hash[..8]));
    root.join(leaf)
}

fn epoch_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
