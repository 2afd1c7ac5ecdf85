//! Sequential and parallel execution must agree bit for bit.

use stokes_darcy_nn::manufactured::{convergence_study, CaseConfig, CaseLabel};
use stokes_darcy_nn::report::{table1, Table1Config};
use stokes_darcy_nn::weights::{minmax_oracle, weight_grid_scan, GridSpec};
use stokes_darcy_nn::Execution::{Parallel, Sequential};

#[test]
fn interface_operator_matrix() {
    let cfg = CaseConfig::new(CaseLabel::C, 2).unwrap();
    let s = cfg.interface_problem(Sequential).unwrap();
    let p = cfg.interface_problem(Parallel).unwrap();
    let ms = s.assemble_operator(|x| s.apply_sigma(x)).unwrap();
    let mp = p.assemble_operator(|x| p.apply_sigma(x)).unwrap();
    assert_eq!(ms.add_scaled(&mp, -1.0).max_abs(), 0.0);
}

#[test]
fn table_rows() {
    let config = Table1Config { levels: [true, true, false, false], ..Default::default() };
    let mut s = table1(&config, Sequential).unwrap();
    let mut p = table1(&config, Parallel).unwrap();
    for r in s.iter_mut().chain(p.iter_mut()) {
        for rep in [&mut r.pcg, &mut r.cg].into_iter().flatten() {
            rep.wall_time_secs = 0.0;
        }
    }
    assert_eq!(s, p);
}

#[test]
fn weight_searches() {
    let cfg = CaseConfig::new(CaseLabel::A, 3).unwrap();
    let spec = GridSpec { n: 41, k_samples: 500, ..GridSpec::default() };
    assert_eq!(
        minmax_oracle(cfg.analysis(), cfg.band(), &spec, Sequential),
        minmax_oracle(cfg.analysis(), cfg.band(), &spec, Parallel)
    );
    let g = |e| weight_grid_scan(cfg.analysis(), cfg.band(), (-12.0, 0.0), (-3.0, 0.0), 31, e);
    assert_eq!(g(Sequential), g(Parallel));
}

#[test]
fn convergence_rows() {
    let s = convergence_study(CaseLabel::D, &[1, 2, 3], Sequential).unwrap();
    let p = convergence_study(CaseLabel::D, &[1, 2, 3], Parallel).unwrap();
    assert_eq!(s, p);
}
