use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use bobw_core::estimator::{mgr, MgrConfig};
use bobw_core::policy::{gibbs_dist, Agent};
use bobw_core::simulator::{run_trial, ProbeSpec, TrialOptions};
use bobw_core::verify;
use bobw_core::{RngStream, Simplex, Vector};

fn bench_gibbs(c: &mut Criterion) {
    let scores: Vec<f64> = (0..8).map(|i| (i as f64) * 0.37 - 1.2).collect();
    c.bench_function("gibbs_dist_k8", |b| {
        b.iter(|| gibbs_dist(black_box(&scores), black_box(3.5)))
    });
}

fn bench_mgr(c: &mut Criterion) {
    let model = verify::gap_model();
    let policy = |x: &Vector| {
        if x.0[0] > 0.5 {
            Simplex::new(vec![0.8, 0.2]).unwrap()
        } else {
            Simplex::new(vec![0.3, 0.7]).unwrap()
        }
    };
    let cfg = MgrConfig::new(0.27, 1.0, 500).unwrap();
    c.bench_function("mgr_d2_m500", |b| {
        let mut seed = 0u64;
        b.iter_batched(
            || {
                seed += 1;
                RngStream::new(seed)
            },
            |mut rng| mgr(&model, policy, 0, &cfg, &mut rng),
            BatchSize::SmallInput,
        )
    });
}

fn bench_trial(c: &mut Criterion) {
    c.bench_function("bobw_trial_t1000", |b| {
        b.iter(|| {
            let model = verify::gap_model();
            let mut env = verify::gap_env(&model);
            let mut agent = verify::bobw_agent(&env, &model, 1000);
            run_trial(
                &mut env,
                &model,
                &mut agent,
                1000,
                7,
                &TrialOptions {
                    probes: ProbeSpec::Support,
                    diagnostics: false,
                },
            )
            .unwrap()
        })
    });
}

fn bench_act(c: &mut Criterion) {
    let model = verify::gap_model();
    let env = verify::gap_env(&model);
    let mut agent = verify::bobw_agent(&env, &model, 10_000);
    let x = Vector(vec![1.0, 0.0]);
    let mut rng = RngStream::new(3);
    c.bench_function("bobw_act", |b| b.iter(|| agent.act(black_box(&x), &mut rng)));
}

criterion_group!(benches, bench_gibbs, bench_mgr, bench_trial, bench_act);
criterion_main!(benches);
