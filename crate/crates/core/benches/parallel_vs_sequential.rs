use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stokes_darcy_nn::manufactured::{CaseConfig, CaseLabel};
use stokes_darcy_nn::report::{table1_row, Table1Config, REFERENCE};
use stokes_darcy_nn::weights::{minmax_oracle, weight_grid_scan, GridSpec};
use stokes_darcy_nn::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn weight_grid(c: &mut Criterion) {
    let cfg = CaseConfig::new(CaseLabel::B, 3).unwrap();
    let mut g = c.benchmark_group("weight_grid_scan");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, 201), |b| {
            b.iter(|| weight_grid_scan(cfg.analysis(), cfg.band(), (-16.0, 0.5), (-16.0, 0.5), 201, black_box(exec)))
        });
    }
    g.finish();
}

fn minmax(c: &mut Criterion) {
    let cfg = CaseConfig::new(CaseLabel::C, 2).unwrap();
    let spec = GridSpec { n: 61, k_samples: 2000, polish: false, ..GridSpec::default() };
    let mut g = c.benchmark_group("minmax_oracle");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| minmax_oracle(cfg.analysis(), cfg.band(), &spec, black_box(exec))));
    }
    g.finish();
}

fn interface_operator(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble_sigma");
    g.sample_size(10);
    for (name, exec) in MODES {
        let ip = CaseConfig::new(CaseLabel::A, 3).unwrap().interface_problem(exec).unwrap();
        g.bench_function(BenchmarkId::new(name, ip.dim()), |b| {
            b.iter(|| ip.assemble_operator(|x| ip.apply_sigma(x)).unwrap())
        });
    }
    g.finish();
}

fn table_row(c: &mut Criterion) {
    let config = Table1Config::default();
    let mut g = c.benchmark_group("table1_row_b3");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| table1_row(REFERENCE[6], &config, black_box(exec)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, weight_grid, minmax, interface_operator, table_row);
criterion_main!(benches);
