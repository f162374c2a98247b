use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use putraffic_core::{
    apply_sensing_errors, count_transitions, generate_samples, loglik_clean, loglik_clean_general,
    loglik_noisy_forward, SamplingPlan, SensingModel, TrafficParams,
};

fn likelihood(c: &mut Criterion) {
    let params = TrafficParams::from_u_lambda_f(0.3, 0.9).unwrap();
    let model = SensingModel::new(0.05, 0.05).unwrap();
    let mut group = c.benchmark_group("loglik");
    for n in [100usize, 1_000, 10_000] {
        let plan = SamplingPlan::uniform(50.0, n).unwrap();
        let clean = generate_samples(&params, &plan, 1);
        let noisy = apply_sensing_errors(&clean, &model, 2);
        let counts = count_transitions(&clean).unwrap();
        let t_c = plan.uniform_gap().unwrap();

        group.bench_with_input(BenchmarkId::new("counts", n), &n, |b, _| {
            b.iter(|| loglik_clean(black_box(&counts), black_box(&params), t_c))
        });
        group.bench_with_input(BenchmarkId::new("per_gap", n), &n, |b, _| {
            b.iter(|| loglik_clean_general(black_box(&clean), black_box(&params)))
        });
        group.bench_with_input(BenchmarkId::new("forward", n), &n, |b, _| {
            b.iter(|| loglik_noisy_forward(black_box(&noisy), black_box(&params), &model))
        });
    }
    group.finish();
}

fn generation(c: &mut Criterion) {
    let params = TrafficParams::from_u_lambda_f(0.3, 0.9).unwrap();
    let plan = SamplingPlan::uniform(50.0, 1_000).unwrap();
    c.bench_function("generate_samples/1000", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            generate_samples(&params, &plan, seed)
        })
    });
}

criterion_group!(benches, likelihood, generation);
criterion_main!(benches);
