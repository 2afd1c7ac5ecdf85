//! Independent checks of the closed forms: a literal per-mode evaluation of
//! one sweep, and a brute-force min-max search.

use serde::{Deserialize, Serialize};

use super::{rho_unchecked, AnalysisParams, FrequencyBand, WeightPair};
use crate::exec::{map_range, Execution};

/// Interface amplitude after `m` sweeps of the half-plane iteration for the
/// single mode `lambda0 e^{iky}`, following the sweep step by step.
pub fn mode_composition_oracle(lambda0: f64, k: f64, w: WeightPair, a: AnalysisParams, m: usize) -> f64 {
    let k = k.abs();
    let (mu, eta) = (a.mu_f, a.eta_p);
    let mut lambda = lambda0;
    for _ in 0..m {
        // fluid: u_1 = (U + P x / 2mu) e^{|k| x}, U = lambda
        // porous: p = Phi e^{-|k| x}, Phi = lambda / (eta |k|)
        let phi = lambda / (eta * k);
        // normal stress mismatch
        let sigma = -2.0 * mu * k * lambda - phi;
        // fluid correction with stress sigma: v_1(0) = -sigma / (2 mu |k|)
        let v1 = -sigma / (2.0 * mu * k);
        // porous correction with trace sigma: eta d_x q(0) = -eta |k| sigma
        let flux = -eta * k * sigma;
        lambda -= w.alpha_f * v1 + w.alpha_p * flux;
    }
    lambda
}

/// Search grid for [`minmax_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per weight axis.
    pub n: usize,
    pub log10_f: (f64, f64),
    pub log10_p: (f64, f64),
    /// Log-spaced frequencies (ends included) on which `|rho|` is sampled.
    pub k_samples: usize,
    /// Refine the best grid cell by nested golden-section search.
    pub polish: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 201, log10_f: (-16.0, 0.5), log10_p: (-16.0, 0.5), k_samples: 10_000, polish: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinmaxResult {
    pub weights: WeightPair,
    pub max_abs_rho: f64,
    /// Best point of the grid stage alone.
    pub grid_weights: WeightPair,
    pub grid_max_abs_rho: f64,
}

struct Objective {
    t: Vec<f64>,
    a: f64,
}

impl Objective {
    fn eval(&self, af: f64, ap: f64) -> f64 {
        let w = WeightPair { alpha_f: af, alpha_p: ap };
        self.t.iter().fold(0.0f64, |m, &t| m.max(rho_unchecked(w, t, self.a).abs()))
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimize a unimodal function on `[lo, hi]` down to an interval of width
/// `tol`; returns `(argmin, min)`. Ties move right, away from the flat
/// `rho -> 1` region at vanishing weights.
fn golden(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Brute-force solution of `min_{alpha_f, alpha_p} max_k |rho|`.
///
/// `max_k |rho|` is sampled, never taken from the closed-form extremum. The
/// objective is convex in `(alpha_f, alpha_p)` (a maximum of moduli of affine
/// functions), hence unimodal along coordinate lines in log coordinates too,
/// which is what the golden-section polish relies on.
pub fn minmax_oracle(a: AnalysisParams, band: FrequencyBand, spec: &GridSpec, exec: Execution) -> MinmaxResult {
    let obj = Objective { t: band.log_samples(spec.k_samples).iter().map(|k| k * k).collect(), a: a.a() };
    let n = spec.n.max(2);
    let step = |(lo, hi): (f64, f64)| (hi - lo) / (n - 1) as f64;
    let coord = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;

    let rows = map_range(exec, n, |i| {
        let af = 10f64.powf(coord(spec.log10_f, i));
        (0..n)
            .map(|j| (obj.eval(af, 10f64.powf(coord(spec.log10_p, j))), j))
            .fold((f64::INFINITY, 0), |best, c| if c.0 < best.0 { c } else { best })
    });
    let (i, (grid_max, j)) = rows
        .into_iter()
        .enumerate()
        .fold((0, (f64::INFINITY, 0)), |best, (i, r)| if r.0 < best.1 .0 { (i, r) } else { best });
    let grid_weights =
        WeightPair { alpha_f: 10f64.powf(coord(spec.log10_f, i)), alpha_p: 10f64.powf(coord(spec.log10_p, j)) };

    let mut result = MinmaxResult { weights: grid_weights, max_abs_rho: grid_max, grid_weights, grid_max_abs_rho: grid_max };
    if !spec.polish {
        return result;
    }
    // Nested golden sections in log coordinates on a box around the grid
    // optimum; the box follows the optimum until it is interior.
    let (hf, hp) = (3.0 * step(spec.log10_f), 3.0 * step(spec.log10_p));
    let (mut cf, mut cp) = (coord(spec.log10_f, i), coord(spec.log10_p, j));
    let eval = |lf: f64, lp: f64| obj.eval(10f64.powf(lf), 10f64.powf(lp));
    for _ in 0..50 {
        let inner = |lf: f64| golden(cp - hp, cp + hp, 1e-14, |lp| eval(lf, lp));
        let (nf, _) = golden(cf - hf, cf + hf, 1e-14, |lf| inner(lf).1);
        let (np, val) = inner(nf);
        if val < result.max_abs_rho {
            result.weights = WeightPair { alpha_f: 10f64.powf(nf), alpha_p: 10f64.powf(np) };
            result.max_abs_rho = val;
        }
        let interior = (nf - cf).abs() < 0.9 * hf && (np - cp).abs() < 0.9 * hp;
        (cf, cp) = (nf, np);
        if interior {
            break;
        }
    }
    result
}
