//! Fourier analysis of the Neumann-Neumann iteration on the half-plane model
//! and the resulting optimized weights.
//!
//! For a tangential frequency `k` one sweep multiplies the interface error by
//!
//! ```text
//! rho(k) = 1 - alpha_p (1 + 2 a k^2) - alpha_f (1 + 1 / (2 a k^2)),   a = mu_f eta_p.
//! ```
//!
//! As a function of `t = k^2`, `rho` is concave, so on a band `[k_min, k_max]`
//! its maximum modulus is attained at one of the ends or at the interior
//! stationary point `k*`.

mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};

pub use oracle::{minmax_oracle, mode_composition_oracle, GridSpec, MinmaxResult};

/// Weights of the preconditioner `alpha_f Sigma_f^{-1} + alpha_p Sigma_p^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub alpha_f: f64,
    pub alpha_p: f64,
}

impl WeightPair {
    /// Non-negative finite weights, not both zero.
    pub fn new(alpha_f: f64, alpha_p: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(alpha_f) || !ok(alpha_p) || alpha_f + alpha_p == 0.0 {
            return Err(Error::Parameter(format!("invalid weights ({alpha_f}, {alpha_p})")));
        }
        Ok(Self { alpha_f, alpha_p })
    }

    pub fn is_positive(&self) -> bool {
        self.alpha_f > 0.0 && self.alpha_p > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub mu_f: f64,
    pub eta_p: f64,
}

impl AnalysisParams {
    pub fn new(mu_f: f64, eta_p: f64) -> Result<Self> {
        if !(mu_f > 0.0 && mu_f.is_finite() && eta_p > 0.0 && eta_p.is_finite()) {
            return Err(Error::Parameter(format!("mu_f = {mu_f}, eta_p = {eta_p} must be positive")));
        }
        Ok(Self { mu_f, eta_p })
    }

    /// `mu_f eta_p`.
    pub fn a(&self) -> f64 {
        self.mu_f * self.eta_p
    }
}

impl From<&crate::fem::ProblemParams> for AnalysisParams {
    fn from(p: &crate::fem::ProblemParams) -> Self {
        Self { mu_f: p.mu_f, eta_p: p.eta_p() }
    }
}

/// How the highest resolved frequency relates to the mesh.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KmaxConvention {
    /// `k_max = pi / (h / 2)`: spacing of the quadratic interface nodes.
    #[default]
    Dof,
    /// `k_max = pi / h`: element size.
    Element,
}

impl KmaxConvention {
    /// Resolution length `s` with `k_max = pi / s`.
    pub fn spacing(self, h: f64) -> f64 {
        match self {
            KmaxConvention::Dof => 0.5 * h,
            KmaxConvention::Element => h,
        }
    }
}

impl std::str::FromStr for KmaxConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dof" => Ok(Self::Dof),
            "element" => Ok(Self::Element),
            _ => Err(Error::Parameter(format!("unknown k_max convention '{s}' (dof|element)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBand {
    pub k_min: f64,
    pub k_max: f64,
}

impl FrequencyBand {
    pub fn new(k_min: f64, k_max: f64) -> Result<Self> {
        if !(k_min > 0.0 && k_min < k_max && k_max.is_finite()) {
            return Err(Error::Parameter(format!("invalid frequency band [{k_min}, {k_max}]")));
        }
        Ok(Self { k_min, k_max })
    }

    /// `n >= 2` log-spaced frequencies including both ends.
    pub fn log_samples(&self, n: usize) -> Vec<f64> {
        assert!(n >= 2);
        let (l0, l1) = (self.k_min.ln(), self.k_max.ln());
        (0..n)
            .map(|i| match i {
                0 => self.k_min,
                _ if i == n - 1 => self.k_max,
                _ => (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp(),
            })
            .collect()
    }
}

/// `[pi / L, pi / s]` with `s` given by the convention.
pub fn frequency_band(length: f64, h: f64, convention: KmaxConvention) -> Result<FrequencyBand> {
    if !(length > 0.0 && h > 0.0) {
        return Err(Error::Parameter(format!("interface length {length} and mesh size {h} must be positive")));
    }
    FrequencyBand::new(std::f64::consts::PI / length, std::f64::consts::PI / convention.spacing(h))
}

/// Reduction factor `rho(alpha_f, alpha_p, k)`; even in `k`.
pub fn reduction_factor(w: WeightPair, k: f64, a: AnalysisParams) -> Result<f64> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::Parameter(format!("reduction factor undefined at k = {k}")));
    }
    Ok(rho_unchecked(w, k * k, a.a()))
}

#[inline]
pub(crate) fn rho_unchecked(w: WeightPair, k2: f64, a: f64) -> f64 {
    let t = 2.0 * a * k2;
    ((1.0 - w.alpha_p) - w.alpha_f) - w.alpha_p * t - w.alpha_f / t
}

/// Closed-form solution of the min-max problem over the band.
pub fn optimal_weights(a: AnalysisParams, band: FrequencyBand) -> WeightPair {
    let a = a.a();
    let x = 2.0 * a * band.k_min * band.k_max;
    let s = band.k_min + band.k_max;
    let d = 1.0 + x * x + a * s * s;
    WeightPair { alpha_f: x * x / d, alpha_p: 1.0 / d }
}

/// Interior stationary point `(alpha_f / (alpha_p (2a)^2))^{1/4}` of `rho`.
pub fn k_star(w: WeightPair, a: AnalysisParams) -> Result<f64> {
    if !w.is_positive() {
        return Err(Error::Parameter("k* needs positive weights".into()));
    }
    let two_a = 2.0 * a.a();
    Ok((w.alpha_f / w.alpha_p).sqrt().sqrt() / two_a.sqrt())
}

/// `rho(k*) = 1 - (sqrt(alpha_f) + sqrt(alpha_p))^2`.
pub fn rho_at_k_star(w: WeightPair) -> f64 {
    let s = w.alpha_f.sqrt() + w.alpha_p.sqrt();
    (1.0 - s) * (1.0 + s)
}

/// Positive zeros `k1 <= k2` of `rho`, or `None` if `rho < 0` everywhere.
pub fn rho_zeros(w: WeightPair, a: AnalysisParams) -> Result<Option<(f64, f64)>> {
    let ks = k_star(w, a)?;
    let c = 1.0 - w.alpha_f - w.alpha_p;
    let disc = c * c - 4.0 * w.alpha_f * w.alpha_p;
    if c < 0.0 || disc < 0.0 {
        return Ok(None);
    }
    // 2 a alpha_p t^2 - c t + alpha_f / (2a) = 0 in t = k^2; take the large
    // root stably, the small one from the product of roots.
    let t2 = (c + disc.sqrt()) / (4.0 * a.a() * w.alpha_p);
    let k2 = t2.sqrt();
    Ok(Some((ks * ks / k2, k2)))
}

/// `max |rho|` over the band, exact (ends plus interior stationary point).
pub fn max_abs_rho(w: WeightPair, a: AnalysisParams, band: FrequencyBand) -> f64 {
    let aa = a.a();
    let mut m = rho_unchecked(w, band.k_min.powi(2), aa).abs().max(rho_unchecked(w, band.k_max.powi(2), aa).abs());
    if let Ok(ks) = k_star(w, a) {
        if ks > band.k_min && ks < band.k_max {
            m = m.max(rho_at_k_star(w).abs());
        }
    }
    m
}

/// `max |rho|` over the given frequency samples.
pub fn sampled_max_abs_rho(w: WeightPair, a: AnalysisParams, ks: &[f64]) -> f64 {
    let aa = a.a();
    ks.iter().fold(0.0f64, |m, &k| m.max(rho_unchecked(w, k * k, aa).abs()))
}

/// `(k, rho(k))` on `n` log-spaced frequencies of the band.
pub fn rho_scan(w: WeightPair, a: AnalysisParams, band: FrequencyBand, n: usize) -> Vec<(f64, f64)> {
    band.log_samples(n).into_iter().map(|k| (k, rho_unchecked(w, k * k, a.a()))).collect()
}

/// One point of a weight-grid scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub alpha_f: f64,
    pub alpha_p: f64,
    pub max_abs_rho: f64,
}

/// Exact `max |rho|` on an `n x n` log grid; rows run in parallel when enabled.
pub fn weight_grid_scan(
    a: AnalysisParams,
    band: FrequencyBand,
    log10_f: (f64, f64),
    log10_p: (f64, f64),
    n: usize,
    exec: Execution,
) -> Vec<GridPoint> {
    let lin = |(lo, hi): (f64, f64), i: usize| 10f64.powf(lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64);
    map_range(exec, n, |i| {
        let af = lin(log10_f, i);
        (0..n)
            .map(|j| {
                let w = WeightPair { alpha_f: af, alpha_p: lin(log10_p, j) };
                GridPoint { alpha_f: w.alpha_f, alpha_p: w.alpha_p, max_abs_rho: max_abs_rho(w, a, band) }
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Leading terms of the weights and of `rho(k_max)` as the resolution length
/// `s = pi / k_max` goes to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticWeights {
    pub alpha_f: f64,
    pub alpha_p: f64,
    pub rho_kmax: f64,
}

pub fn asymptotic_weights(length: f64, s: f64, a: AnalysisParams) -> AsymptoticWeights {
    use std::f64::consts::PI;
    let a = a.a();
    let l = length;
    let c = 1.0 / (4.0 * PI * PI * a + l * l);
    AsymptoticWeights {
        alpha_f: 4.0 * PI * PI * a * c * (1.0 - 2.0 * l * c * s),
        alpha_p: l * l * c * s * s / (PI * PI * a),
        rho_kmax: -l * l * c + (8.0 * PI * PI * a * l + 4.0 * l * l * l) * c * c * s,
    }
}

/// The alternative choice with `sqrt(alpha_f) + sqrt(alpha_p) = 1` and
/// `|rho(k_min)| = |rho(k_max)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryChoice {
    pub weights: WeightPair,
    /// Whether `1 + 2 a k_min k_max > sqrt(2a) (k_max - k_min)`, which
    /// guarantees `|rho| < 1` on the band.
    pub sufficient_condition: bool,
}

pub fn boundary_weights(a: AnalysisParams, band: FrequencyBand) -> BoundaryChoice {
    let aa = a.a();
    let x = 2.0 * aa * band.k_min * band.k_max;
    let d = (1.0 + x) * (1.0 + x);
    BoundaryChoice {
        weights: WeightPair { alpha_f: x * x / d, alpha_p: 1.0 / d },
        sufficient_condition: 1.0 + x > (2.0 * aa).sqrt() * (band.k_max - band.k_min),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn sig3(v: f64) -> String {
        format!("{v:.2e}")
    }

    #[test]
    fn trivial_weights() {
        let a = AnalysisParams::new(1.0, 1.0).unwrap();
        let zero = WeightPair { alpha_f: 0.0, alpha_p: 0.0 };
        assert_eq!(reduction_factor(zero, 3.0, a).unwrap(), 1.0);
        let q = WeightPair { alpha_f: 0.25, alpha_p: 0.25 };
        let ks = k_star(q, a).unwrap();
        assert!(reduction_factor(q, ks, a).unwrap().abs() < 1e-15);
        assert!((ks - 2f64.sqrt().recip()).abs() < 1e-15);
        assert!(reduction_factor(q, 0.0, a).is_err());
    }

    #[test]
    fn rho_is_even() {
        let a = AnalysisParams::new(10.0, 4e-9).unwrap();
        let w = WeightPair { alpha_f: 1e-8, alpha_p: 0.99 };
        for k in [0.3, 7.0, 400.0] {
            assert_eq!(reduction_factor(w, k, a).unwrap(), reduction_factor(w, -k, a).unwrap());
        }
    }

    #[test]
    fn spot_rows() {
        let band = frequency_band(0.5, 0.1, KmaxConvention::Dof).unwrap();
        assert!(rel(band.k_min, 2.0 * PI) < 1e-15 && rel(band.k_max, 20.0 * PI) < 1e-15);
        let w = optimal_weights(AnalysisParams::new(10.0, 4e-10).unwrap(), band);
        assert_eq!((sig3(w.alpha_f).as_str(), sig3(w.alpha_p).as_str()), ("9.97e-12", "1.00e0"));

        let band = frequency_band(0.5, 0.0125, KmaxConvention::Dof).unwrap();
        assert!(rel(band.k_max, 160.0 * PI) < 1e-15);
        let a = AnalysisParams::new(1.0, 4e-7).unwrap();
        let w = optimal_weights(a, band);
        assert_eq!((sig3(w.alpha_f).as_str(), sig3(w.alpha_p).as_str()), ("5.78e-6", "9.06e-1"));
        // 1 - (sqrt(5.78e-6) + sqrt(0.906))^2 = 0.0894 from the rounded weights
        let r = reduction_factor(w, band.k_min, a).unwrap().abs();
        assert!((r - 0.0894).abs() < 5e-4, "{r}");
        assert!(rel(r, rho_at_k_star(w)) < 1e-10);
    }

    #[test]
    fn element_convention_halves_kmax() {
        let d = frequency_band(0.5, 0.1, KmaxConvention::Dof).unwrap();
        let e = frequency_band(0.5, 0.1, KmaxConvention::Element).unwrap();
        assert!(rel(2.0 * e.k_max, d.k_max) < 1e-15);
        let w = optimal_weights(AnalysisParams::new(10.0, 4e-10).unwrap(), e);
        assert_eq!(sig3(w.alpha_f), "2.49e-12");
    }

    #[test]
    fn equioscillation() {
        let a = AnalysisParams::new(10.0, 4e-9).unwrap();
        let band = frequency_band(0.5, 0.05, KmaxConvention::Dof).unwrap();
        let w = optimal_weights(a, band);
        let ks = k_star(w, a).unwrap();
        assert!(rel(ks, (band.k_min * band.k_max).sqrt()) < 1e-12);
        let top = rho_at_k_star(w);
        assert!(rel(-reduction_factor(w, band.k_min, a).unwrap(), top) < 1e-10);
        assert!(rel(-reduction_factor(w, band.k_max, a).unwrap(), top) < 1e-10);
        assert!(rel(reduction_factor(w, ks, a).unwrap(), top) < 1e-10);
        assert!(max_abs_rho(w, a, band) < 1.0);
    }

    #[test]
    fn k_star_is_stationary() {
        let a = AnalysisParams::new(1.0, 4e-7).unwrap();
        let w = WeightPair { alpha_f: 3e-6, alpha_p: 0.8 };
        let ks = k_star(w, a).unwrap();
        let d = 1e-4 * ks;
        let fd = (reduction_factor(w, ks + d, a).unwrap() - reduction_factor(w, ks - d, a).unwrap()) / (2.0 * d);
        assert!(fd.abs() * ks < 1e-6);
    }

    #[test]
    fn zeros_bracket_k_star() {
        let a = AnalysisParams::new(10.0, 4e-9).unwrap();
        let band = frequency_band(0.5, 0.05, KmaxConvention::Dof).unwrap();
        let w = optimal_weights(a, band);
        let (k1, k2) = rho_zeros(w, a).unwrap().unwrap();
        let ks = k_star(w, a).unwrap();
        assert!(band.k_min < k1 && k1 < ks && ks < k2 && k2 < band.k_max);
        assert!(reduction_factor(w, k1, a).unwrap().abs() < 1e-10);
        assert!(reduction_factor(w, k2, a).unwrap().abs() < 1e-10);
    }

    #[test]
    fn zeros_double_and_missing() {
        let a = AnalysisParams::new(1.0, 1.0).unwrap();
        let w = WeightPair { alpha_f: 0.25, alpha_p: 0.25 };
        let (k1, k2) = rho_zeros(w, a).unwrap().unwrap();
        assert!(rel(k1, k2) < 1e-7);
        let w = WeightPair { alpha_f: 0.5, alpha_p: 0.5 };
        assert_eq!(rho_zeros(w, a).unwrap(), None);
    }

    #[test]
    fn boundary_choice_balances_ends() {
        let a = AnalysisParams::new(1.0, 4e-7).unwrap();
        let band = frequency_band(0.5, 0.1, KmaxConvention::Dof).unwrap();
        let c = boundary_weights(a, band);
        let w = c.weights;
        assert!((w.alpha_f.sqrt() + w.alpha_p.sqrt() - 1.0).abs() < 1e-14);
        let lo = reduction_factor(w, band.k_min, a).unwrap().abs();
        let hi = reduction_factor(w, band.k_max, a).unwrap().abs();
        assert!(rel(lo, hi) < 1e-9);
        assert!(c.sufficient_condition);
    }

    #[test]
    fn asymptotics_in_small_a_limit() {
        let a = AnalysisParams::new(10.0, 4e-10).unwrap();
        let w = asymptotic_weights(0.5, 0.05, a);
        assert!(rel(1.0 / (4.0 * PI * PI * a.a() + 0.25), 4.0) < 1e-6);
        assert!(w.rho_kmax < 0.0);
    }

    #[test]
    fn grid_scan_is_execution_independent() {
        let a = AnalysisParams::new(1.0, 4e-7).unwrap();
        let band = frequency_band(0.5, 0.1, KmaxConvention::Dof).unwrap();
        let s = weight_grid_scan(a, band, (-10.0, 0.0), (-2.0, 0.0), 15, Execution::Sequential);
        let p = weight_grid_scan(a, band, (-10.0, 0.0), (-2.0, 0.0), 15, Execution::Parallel);
        assert_eq!(s, p);
        assert_eq!(s.len(), 225);
    }

    #[test]
    fn band_validation() {
        assert!(FrequencyBand::new(2.0, 1.0).is_err());
        assert!(frequency_band(0.0, 0.1, KmaxConvention::Dof).is_err());
        let s = FrequencyBand::new(1.0, 100.0).unwrap().log_samples(3);
        assert_eq!(s[0], 1.0);
        assert_eq!(s[2], 100.0);
        assert!(rel(s[1], 10.0) < 1e-14);
    }
}
