use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use grainfront::kinetics::{compute_velocities, BoundaryProps, KineticsInput};
use grainfront::microgen::{generate, GeneratorSpec, Preset};
use grainfront::par::ExecPolicy;
use grainfront::rex::energy_field;
use grainfront::sim::{RunConfig, Simulation};

fn aggregate() -> GeneratorSpec {
    GeneratorSpec {
        domain: [1.0, 1.0],
        h: 0.004,
        preset: Preset::LaguerreVoronoi { n: 300, seed: 1, radius_min: 0.0, radius_max: 0.0, rho: 1.0 },
    }
}

fn velocities(c: &mut Criterion) {
    let g = generate(&aggregate()).unwrap();
    let props = BoundaryProps { mobility: 1.0, gamma: 1.0, delta: 1.0 };
    let field = energy_field(&g.grains, 1.0);
    let input = KineticsInput { props: &props, field: &field, capillarity: 1.0, implicit_dt: 1e-6 };
    let mut group = c.benchmark_group("velocities");
    for (name, policy) in [("sequential", ExecPolicy::Sequential), ("parallel", ExecPolicy::Parallel)] {
        group.bench_function(name, |b| {
            b.iter(|| compute_velocities(black_box(&g.mesh), &g.topology, &input, policy).unwrap())
        });
    }
    group.finish();
}

const STEPS: &str = r#"
[generator]
domain = [1.0, 1.0]
h = 0.004
preset = { kind = "laguerre-voronoi", n = 300, seed = 1, rho = 1.0 }

[boundary]
mobility = 1.0
gamma = 1.0
delta = 1.0
tau = 1.0

[remesh]
h = 0.004

[schedule]
dt = 1e-6
segments = [{ duration = 1.0 }]

[output]
stats_every = 1.0
"#;

fn steps(c: &mut Criterion) {
    let cfg = RunConfig::from_toml(STEPS, "bench").unwrap();
    let base = Simulation::new(cfg).unwrap();
    let mut group = c.benchmark_group("ten_steps");
    group.sample_size(10);
    for (name, policy) in [("sequential", ExecPolicy::Sequential), ("parallel", ExecPolicy::Parallel)] {
        group.bench_function(name, |b| {
            b.iter_batched(
                || Simulation {
                    cfg: base.cfg.clone(),
                    state: base.state.clone(),
                    policy,
                    nuclei: Vec::new(),
                    oracle: None,
                },
                |mut s| {
                    for _ in 0..10 {
                        s.step(f64::INFINITY).unwrap();
                    }
                    s
                },
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, velocities, steps);
criterion_main!(benches);
