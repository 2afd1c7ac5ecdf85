//! Gauss-Legendre rules and tensor-product Lagrange shape functions on the
//! unit reference square `[0, 1]^2`.

/// Gauss-Legendre points and weights on `[0, 1]` with `n` points (2..=5).
pub fn gauss_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (pts, wts): (&[f64], &[f64]) = match n {
        2 => (&[-0.577_350_269_189_625_8, 0.577_350_269_189_625_8], &[1.0, 1.0]),
        3 => (
            &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
            &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
        ),
        4 => (
            &[
                -0.861_136_311_594_052_6,
                -0.339_981_043_584_856_3,
                0.339_981_043_584_856_3,
                0.861_136_311_594_052_6,
            ],
            &[
                0.347_854_845_137_453_9,
                0.652_145_154_862_546_1,
                0.652_145_154_862_546_1,
                0.347_854_845_137_453_9,
            ],
        ),
        5 => (
            &[
                -0.906_179_845_938_664,
                -0.538_469_310_105_683_1,
                0.0,
                0.538_469_310_105_683_1,
                0.906_179_845_938_664,
            ],
            &[
                0.236_926_885_056_189_1,
                0.478_628_670_499_366_5,
                0.568_888_888_888_888_9,
                0.478_628_670_499_366_5,
                0.236_926_885_056_189_1,
            ],
        ),
        _ => panic!("unsupported Gauss rule with {n} points"),
    };
    (
        pts.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        wts.iter().map(|w| 0.5 * w).collect(),
    )
}

/// Quadratic Lagrange basis on `[0, 1]` with nodes `0, 1/2, 1`.
#[inline]
pub fn quad_1d(t: f64) -> [f64; 3] {
    [(1.0 - t) * (1.0 - 2.0 * t), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)]
}

#[inline]
pub fn quad_1d_deriv(t: f64) -> [f64; 3] {
    [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0]
}

#[inline]
pub fn lin_1d(t: f64) -> [f64; 2] {
    [1.0 - t, t]
}

#[inline]
pub fn lin_1d_deriv(_t: f64) -> [f64; 2] {
    [-1.0, 1.0]
}

/// Q2 values and physical gradients at reference point `(s, t)` on an
/// element of size `h`. Local index `3 * b + a`.
pub fn q2_eval(s: f64, t: f64, h: f64) -> ([f64; 9], [[f64; 2]; 9]) {
    let (ls, lt) = (quad_1d(s), quad_1d(t));
    let (ds, dt) = (quad_1d_deriv(s), quad_1d_deriv(t));
    let mut val = [0.0; 9];
    let mut grad = [[0.0; 2]; 9];
    for b in 0..3 {
        for a in 0..3 {
            let k = 3 * b + a;
            val[k] = ls[a] * lt[b];
            grad[k] = [ds[a] * lt[b] / h, ls[a] * dt[b] / h];
        }
    }
    (val, grad)
}

/// Q1 values and physical gradients. Local index `2 * b + a`.
pub fn q1_eval(s: f64, t: f64, h: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let (ls, lt) = (lin_1d(s), lin_1d(t));
    let (ds, dt) = (lin_1d_deriv(s), lin_1d_deriv(t));
    let mut val = [0.0; 4];
    let mut grad = [[0.0; 2]; 4];
    for b in 0..2 {
        for a in 0..2 {
            let k = 2 * b + a;
            val[k] = ls[a] * lt[b];
            grad[k] = [ds[a] * lt[b] / h, ls[a] * dt[b] / h];
        }
    }
    (val, grad)
}

/// 1D quadratic mass matrix on an edge of length `len`.
pub fn edge_mass(len: f64) -> [[f64; 3]; 3] {
    let s = len / 30.0;
    [[4.0 * s, 2.0 * s, -s], [2.0 * s, 16.0 * s, 2.0 * s], [-s, 2.0 * s, 4.0 * s]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials() {
        for n in 2..=5 {
            let (p, w) = gauss_1d(n);
            for deg in 0..2 * n {
                let q: f64 = p.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        for &(s, t) in &[(0.1, 0.7), (0.5, 0.5), (0.93, 0.02)] {
            let (v2, g2) = q2_eval(s, t, 0.3);
            let (v1, g1) = q1_eval(s, t, 0.3);
            assert!((v2.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!((v1.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for d in 0..2 {
                assert!(g2.iter().map(|g| g[d]).sum::<f64>().abs() < 1e-12);
                assert!(g1.iter().map(|g| g[d]).sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn edge_mass_matches_quadrature() {
        let (p, w) = gauss_1d(3);
        let m = edge_mass(0.2);
        for i in 0..3 {
            for j in 0..3 {
                let q: f64 =
                    p.iter().zip(&w).map(|(&t, &wt)| 0.2 * wt * quad_1d(t)[i] * quad_1d(t)[j]).sum();
                assert!((q - m[i][j]).abs() < 1e-15);
            }
        }
    }
}
