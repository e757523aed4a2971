use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use stokes_core::fields::{Field, Rank, SlabGrid};
use stokes_core::kernels::{green_full, heat_kernel, kernel_hs_tensor, KernelTableHs};
use stokes_core::mild::{model_initial_data, Propagator, Space};
use stokes_core::pressure::{pressure_half, PressureOptions};
use stokes_core::{KernelQuery, QuadratureSpec};

fn point_kernels(c: &mut Criterion) {
    let spec = QuadratureSpec::new(1e-8, 1e-14).unwrap();
    let (x, y, t) = ([0.3, -0.1, 0.4], [-0.2, 0.2, 0.6], 0.15);
    c.bench_function("heat_kernel", |b| b.iter(|| heat_kernel(black_box(&KernelQuery::new(x, y, t))).unwrap()));
    c.bench_function("green_full", |b| {
        b.iter(|| green_full(black_box(&KernelQuery::new(x, y, t).comp([0, 2, 0])), &spec).unwrap())
    });
    c.bench_function("kernel_hs_tensor", |b| b.iter(|| kernel_hs_tensor(black_box(&x), &y, t, &spec).unwrap()));
}

fn tables(c: &mut Criterion) {
    let mut g = c.benchmark_group("table");
    g.sample_size(10);
    g.bench_function("kernel_table_hs_build", |b| b.iter(|| KernelTableHs::new(0.4, 0.6, 0.15, 2.0, 1.0).unwrap()));
    let tab = KernelTableHs::new(0.4, 0.6, 0.15, 2.0, 1.0).unwrap();
    g.bench_function("kernel_table_hs_eval", |b| b.iter(|| tab.eval(black_box([0.3, -0.7]))));
    g.finish();
}

fn grid_operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("grid");
    g.sample_size(10);
    let grid = SlabGrid::new(2.0, 2.0, 16, 16, 16).unwrap();
    let h = Field::from_fn(grid, Rank::Tensor, |p| {
        let w = (-(p[0] * p[0] + p[1] * p[1] + (p[2] - 1.0).powi(2)) / 0.03).exp();
        vec![w, 0.0, 0.0, 0.0, 0.5 * w, 0.0, 0.0, 0.0, -w]
    });
    let opts = PressureOptions { support_tol: None, bmo_max_cube: Some(1.0) };
    g.bench_function("pressure_half_16", |b| b.iter(|| pressure_half(black_box(&h), &opts).unwrap()));
    let vgrid = SlabGrid::new(2.0, 3.0, 16, 16, 12).unwrap();
    let u = model_initial_data(vgrid, [0.0, 0.0, 1.0], 0.4, 1.0);
    let prop = Propagator::new(vgrid, Space::Half);
    prop.prepare(0.1);
    g.bench_function("propagate_16x16x12", |b| b.iter(|| prop.propagate(black_box(&u), 0.1)));
    g.finish();
}

criterion_group!(benches, point_kernels, tables, grid_operators);
criterion_main!(benches);
