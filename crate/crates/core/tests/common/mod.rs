//! Oracles shared by the integration and acceptance suites. None of them go
//! through the incomplete beta function or the closed-form probabilities they
//! are used to check.

#![allow(dead_code)]

use entropic::specialfn::{quadrature_oracle, BetaIntegrand};

/// Relative accuracy requested from the quadrature oracle.
const REL_TOL: f64 = 1e-13;

/// ∫_lo^hi x^{a−1}(1−x)^{b−1} w(x) dx to relative accuracy [`REL_TOL`]. The
/// absolute tolerance is tightened until it is small against the estimate.
fn relative_quadrature(a: f64, b: f64, w: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let f = BetaIntegrand::new(a, b, w).unwrap();
    let mut tol = 1e-6;
    for _ in 0..64 {
        let v = quadrature_oracle(&f, lo, hi, tol).unwrap().abs();
        if tol <= REL_TOL * v {
            return v;
        }
        tol = (REL_TOL * v).max(tol * 1e-8).min(tol * 1e-2);
    }
    panic!("quadrature scale did not settle");
}

/// ln ∫_lo^hi x^{a−1}(1−x)^{b−1} dx by quadrature.
pub fn ln_beta_integral(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    relative_quadrature(a, b, |_| 1.0, lo, hi).ln()
}

/// Q(g(s) > c) as the ratio of two quadratures, in log space.
pub fn quad_log_prob_above(s: f64, c: f64, beta: f64) -> f64 {
    let (a, b) = (beta * s, beta * (1.0 - s));
    if c == 0.0 {
        return 0.0;
    }
    ln_beta_integral(a, b, c, 1.0) - ln_beta_integral(a, b, 0.0, 1.0)
}

pub fn quad_prob_above(s: f64, c: f64, beta: f64) -> f64 {
    quad_log_prob_above(s, c, beta).exp()
}

/// Small-s limit of R(s)/s^t: the event probabilities behave like
/// βs·∫_c^1 x^{−1}(1−x)^{β−1} dx, so the constant is
/// β^t · J((1−t)/2) / J(½)^{1−t}.
pub fn ratio_constant(beta: f64, t: f64) -> f64 {
    let j = |c: f64| relative_quadrature(1.0, beta, |x| 1.0 / x, c, 1.0);
    beta.powf(t) * j((1.0 - t) / 2.0) / j(0.5).powf(1.0 - t)
}

/// Sample mean and variance (unbiased) with the standard errors of both.
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub mean_se: f64,
    pub var_se: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    Moments {
        mean,
        var,
        mean_se: (var / n).sqrt(),
        var_se: ((m4 - m2 * m2) / n).sqrt(),
    }
}

/// Binomial standard error at the exact probability.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
