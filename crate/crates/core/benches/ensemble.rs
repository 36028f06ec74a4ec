use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use probedim::dynamics::{add_noise, plan_sampling, simulate_lti};
use probedim::estimation::{build_hankel, noisy_order, svd_ratios, PeakPolicy};
use probedim::parallel::map_indexed;
use probedim::{
    build_realization, discretize, AccessibleSet, CouplingType, Execution, InteractionModel, PauliString, SystemSpace,
};

struct Setup {
    model: InteractionModel,
    space: SystemSpace,
    g: AccessibleSet,
    measured: PauliString,
    dt: f64,
}

impl Setup {
    fn new(n: usize) -> Self {
        let model = InteractionModel::new(CouplingType::Exchange, false).unwrap();
        let space = SystemSpace::new(model);
        Setup {
            model,
            space,
            g: space.accessible_set(n, 1_000_000).unwrap(),
            measured: space.measured(n).unwrap(),
            dt: plan_sampling(&model, 10, 100.0).unwrap().dt,
        }
    }
}

/// One ensemble cell: `instances` Hamiltonians, two noise draws each, 100x100 ratio peaks.
fn cell(exec: Execution, setup: &Setup, n: usize, instances: usize) -> usize {
    let Setup { model, space, g, measured, dt } = setup;
    let dt = *dt;
    let picks = map_indexed(exec, instances, |i| {
        let inst = model.sample_instance(n, i as u64, (10.0, 100.0), true).unwrap();
        let r = build_realization(&inst, g, measured, &space.recipe).unwrap();
        let clean = simulate_lti(&discretize(&r, dt).unwrap(), &r, 199);
        (0..2)
            .map(|d| {
                let ts = add_noise(&clean, 1e-6, (i * 2 + d) as u64).unwrap();
                let s = svd_ratios(&build_hankel(&ts, 100, 100).unwrap(), None).unwrap();
                noisy_order(&s.ratios, PeakPolicy::default()).unwrap().order
            })
            .filter(|&k| k == n)
            .count()
    });
    picks.into_iter().sum()
}

fn ensemble(c: &mut Criterion) {
    let setup = Setup::new(5);
    let mut group = c.benchmark_group("ensemble_cell");
    group.sample_size(10);
    for instances in [8usize, 32] {
        for (name, exec) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
            group.bench_with_input(BenchmarkId::new(name, instances), &instances, |b, &m| {
                b.iter(|| cell(exec, &setup, 5, m))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, ensemble);
criterion_main!(benches);
