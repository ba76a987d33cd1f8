use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use lia2c_core::env::{OrgAction, OrgConfig, OrgEnv};
use lia2c_core::harness::{run_training, ExperimentConfig};
use lia2c_core::latent::{EdSample, EncoderInput, LatentConfig, LatentModel};
use lia2c_core::nn::{Activation, Head, Mlp};
use lia2c_core::population::{config_distribution, Configuration, DirichletParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn configuration_dp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let per_agent: Vec<Vec<f64>> = (0..30)
        .map(|_| {
            let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    c.bench_function("config_distribution 30 agents 4 actions", |b| {
        b.iter(|| config_distribution(black_box(&per_agent), 4).unwrap())
    });
}

fn mlp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = Mlp::init(&[25, 64, 64, 1], Activation::Tanh, Head::Linear, &mut rng).unwrap();
    let x: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
    c.bench_function("mlp forward 25-64-64-1", |b| b.iter(|| net.forward(black_box(&x)).unwrap()));
    c.bench_function("mlp gradient 25-64-64-1", |b| b.iter(|| net.grad(black_box(&x), &[1.0]).unwrap()));
}

fn env_step(c: &mut Criterion) {
    let mut env = OrgEnv::new(OrgConfig::default(), ChaCha8Rng::seed_from_u64(3)).unwrap();
    env.reset().unwrap();
    let joint = vec![OrgAction::Group; env.state().roster.len()];
    c.bench_function("closed org step", |b| {
        b.iter(|| {
            if env.step(&joint).unwrap().done {
                env.reset().unwrap();
            }
        })
    });
}

fn ed_step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = LatentModel::new(&LatentConfig::default(), 3, 3, &mut rng).unwrap();
    let batch: Vec<EdSample> = (0..50)
        .map(|t| EdSample {
            input: EncoderInput {
                public_obs: t % 3,
                private_obs: vec![0.5, 0.25, 0.25],
                self_action: t % 3,
                theta: vec![0.2, 0.3, 0.5],
            },
            next_obs: (t + 1) % 3,
            rectified: Configuration::new(vec![2, 1, 1]),
            prior: DirichletParams::ones(3),
        })
        .collect();
    c.bench_function("encoder-decoder step, 50 tuples", |b| {
        b.iter_batched(
            || (model.clone(), ChaCha8Rng::seed_from_u64(5)),
            |(mut m, mut r)| m.ed_train_step(&batch, true, &mut r).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn training_episode(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        total_steps: 50,
        seeds: vec![1],
        ..ExperimentConfig::default()
    };
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("one closed-org LIA2C episode", |b| b.iter(|| run_training(&cfg, 1, None).unwrap()));
    group.finish();
}

criterion_group!(benches, configuration_dp, mlp, env_step, ed_step, training_episode);
criterion_main!(benches);
