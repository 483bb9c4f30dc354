//! Minimal library walkthrough: run BoBW-RealFTRL on the bundled gap
//! instance and print the regret trajectory and diagnostics.

use bobw_core::simulator::{run_trial, ProbeSpec, TrialOptions};
use bobw_core::verify;

fn main() {
    let horizon = 5_000;
    let model = verify::gap_model();
    let mut env = verify::gap_env(&model);
    let mut agent = verify::bobw_agent(&env, &model, horizon);

    let out = run_trial(
        &mut env,
        &model,
        &mut agent,
        horizon,
        42,
        &TrialOptions {
            probes: ProbeSpec::Support,
            diagnostics: true,
        },
    )
    .expect("gap instance is well-formed");

    for checkpoint in [10, 100, 1000, horizon] {
        println!(
            "t = {checkpoint:>5}: cumulative regret {:8.2}",
            out.result.regret_curve[checkpoint - 1]
        );
    }
    println!(
        "Q-bar {:.1}, worst bias bound/target {:.3}, loss-floor margin {:.3}",
        out.result.q_bar,
        out.diagnostics.bias_worst_ratio,
        out.diagnostics.floor_min
    );
}
