use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use fringe::circuit::{Interferometer, NoiseConfig, Probe};
use fringe::estimate::{GridSpec, PosteriorGrid};
use fringe::fisher;
use fringe::fock::Response;
use fringe::sampling;
use fringe::shift::ShiftRule;

/// Run `f` on a single-thread rayon pool so the same code path can be
/// timed with and without parallelism in one session. With the
/// `parallel` feature disabled both variants are sequential.
fn sequential<T>(f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

fn posterior_update(c: &mut Criterion) {
    let dev = Interferometer::four_mode();
    let probe = Probe::Pair {
        inputs: [0, 1],
        overlap: 1.0,
    };
    let resp = Response::new(&dev, probe, NoiseConfig::default());
    let truth = [1.856, -1.782, -0.896];
    let theta = [0.0; 3];
    let p = resp.probs(&truth, &theta);
    let counts: Vec<f64> = sampling::sample_counts(&p, 500, &mut sampling::rng_for(1, 0))
        .iter()
        .map(|&x| x as f64)
        .collect();
    let spec = GridSpec::windowed(120, &truth, 1.0);
    let fresh = || PosteriorGrid::new(3, &spec).unwrap();

    let mut group = c.benchmark_group("posterior_update");
    group.bench_function("parallel", |b| {
        b.iter_batched(
            fresh,
            |mut g| g.update(&resp, &theta, &counts).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("sequential", |b| {
        b.iter_batched(
            fresh,
            |mut g| sequential(|| g.update(&resp, &theta, &counts).unwrap()),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn sampled_fim(c: &mut Criterion) {
    let dev = Interferometer::four_mode();
    let probe = Probe::Pair {
        inputs: [0, 1],
        overlap: 1.0,
    };
    let resp = Response::new(&dev, probe, NoiseConfig::default());
    let model = move |x: &[f64]| resp.probs_at(x);
    let x = [0.8921, 2.2415, 0.6372];
    let rule = ShiftRule::four_term();

    let mut group = c.benchmark_group("sampled_fim_100k");
    group.sample_size(20);
    group.bench_function("parallel", |b| {
        b.iter(|| fisher::fim_sampled(&model, &x, &rule, 100_000, 7, 0))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| sequential(|| fisher::fim_sampled(&model, &x, &rule, 100_000, 7, 0)))
    });
    group.finish();
}

criterion_group!(benches, posterior_update, sampled_fim);
criterion_main!(benches);
