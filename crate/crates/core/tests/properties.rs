use std::sync::OnceLock;

use proptest::prelude::*;

use stokes_darcy_nn::krylov::LinearOperator;
use stokes_darcy_nn::manufactured::{CaseConfig, CaseLabel};
use stokes_darcy_nn::schur::InterfaceProblem;
use stokes_darcy_nn::weights::{
    frequency_band, max_abs_rho, mode_composition_oracle, optimal_weights, reduction_factor, AnalysisParams,
    KmaxConvention, WeightPair,
};
use stokes_darcy_nn::Execution;

fn problem() -> &'static (InterfaceProblem, WeightPair) {
    static P: OnceLock<(InterfaceProblem, WeightPair)> = OnceLock::new();
    P.get_or_init(|| {
        let cfg = CaseConfig::new(CaseLabel::B, 1).unwrap();
        (cfg.interface_problem(Execution::Sequential).unwrap(), cfg.optimal_weights())
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn vector() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 11).prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn check_spd(op: &dyn LinearOperator, x: &[f64], y: &[f64]) -> Result<(), TestCaseError> {
    let (ax, ay) = (op.apply(x).unwrap(), op.apply(y).unwrap());
    let scale = dot(&ax, &ax).sqrt() * dot(y, y).sqrt();
    prop_assert!((dot(&ax, y) - dot(x, &ay)).abs() <= 1e-10 * scale, "{} not symmetric", op.name());
    prop_assert!(dot(&ax, x) > 0.0, "{} not positive", op.name());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn schur_operator_is_spd(x in vector(), y in vector()) {
        let (ip, _) = problem();
        check_spd(&ip.sigma_operator(), &x, &y)?;
    }

    #[test]
    fn preconditioner_is_spd(x in vector(), y in vector()) {
        let (ip, w) = problem();
        check_spd(&ip.preconditioner(*w), &x, &y)?;
    }

    #[test]
    fn rho_is_even_in_k(k in 0.1f64..1e4, af in 1e-12f64..1.0, ap in 1e-3f64..1.0) {
        let a = AnalysisParams::new(1.0, 4e-7).unwrap();
        let w = WeightPair::new(af, ap).unwrap();
        prop_assert_eq!(reduction_factor(w, k, a).unwrap(), reduction_factor(w, -k, a).unwrap());
    }

    #[test]
    fn optimal_weights_contract(mu in 1e-2f64..10.0, log_eta in -10.0f64..0.0, level in 1i32..6) {
        let a = AnalysisParams::new(mu, 10f64.powf(log_eta)).unwrap();
        let band = frequency_band(0.5, 0.1 * 2f64.powi(1 - level), KmaxConvention::Dof).unwrap();
        let w = optimal_weights(a, band);
        prop_assert!(w.is_positive());
        prop_assert!(max_abs_rho(w, a, band) < 1.0);
    }

    #[test]
    fn one_sweep_is_rho(k in 1.0f64..1e3, ap in 0.1f64..1.0, log_af in -12.0f64..-2.0) {
        let a = AnalysisParams::new(10.0, 4e-9).unwrap();
        let w = WeightPair::new(10f64.powf(log_af), ap).unwrap();
        let r = reduction_factor(w, k, a).unwrap();
        prop_assert!((mode_composition_oracle(1.0, k, w, a, 1) - r).abs() <= 1e-12 * r.abs().max(1.0));
    }
}
