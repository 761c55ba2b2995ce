use criterion::{criterion_group, criterion_main, Criterion};
use heatopt_bench::cloak_problem;
use heatopt_core::assembly::{assemble_matrix, Conductivity, Parts, StateSolver};
use heatopt_core::splines::BasisEval;

fn basis(c: &mut Criterion) {
    let (p, _) = cloak_problem(18, 20);
    let patch = &p.disc.model.patches[0].nurbs;
    let [u, v] = patch.domain();
    let mut out = BasisEval::default();
    c.bench_function("basis_eval_100", |b| {
        b.iter(|| {
            for k in 0..100 {
                let s = (k as f64 + 0.5) / 100.0;
                let xi = [u[0] + s * (u[1] - u[0]), v[0] + (1.0 - s) * (v[1] - v[0])];
                patch.eval_basis_into(xi, &mut out).unwrap();
            }
        })
    });
}

fn assembly(c: &mut Criterion) {
    let (p, x) = cloak_problem(18, 20);
    let cond = Conductivity::from_level_set(&p.disc, &p.symmetry.expand(&x), p.smoothing);
    let solver = StateSolver::new(&p.disc).unwrap();
    let mut g = c.benchmark_group("cloak_5720");
    g.sample_size(10);
    g.bench_function("assemble_matrix", |b| b.iter(|| assemble_matrix(&p.disc, &cond, Parts::ALL).unwrap()));
    g.bench_function("solve_state", |b| b.iter(|| solver.solve_state(&p.disc, &cond).unwrap()));
    g.bench_function("eval_total", |b| b.iter(|| p.eval_total(&x).unwrap()));
    g.finish();
}

criterion_group!(benches, basis, assembly);
criterion_main!(benches);
