//! Adaptive Gauss–Kronrod integration with analytic handling of the
//! algebraic endpoint singularities x^{a−1} and (1−x)^{b−1}.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SpecialFnError;

pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_INTERVALS: usize = 20_000;

// Kronrod 15-point nodes/weights on [-1, 1] and the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Max-heap on the error estimate.
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive integration of a finite integrand over `[lo, hi]`.
///
/// Converged when the summed error estimate is within `tol` (or within a few
/// ulps of the running total). Returns the value and its error estimate.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64), SpecialFnError> {
    if lo == hi {
        return Ok((0.0, 0.0));
    }
    let first = kronrod(&f, lo, hi);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::from([first]);
    loop {
        if !value.is_finite() {
            return Err(SpecialFnError::NonFiniteIntegrand);
        }
        if error <= tol.max(64.0 * f64::EPSILON * value.abs()) {
            // resum to shed the drift of the running totals
            let value: f64 = heap.iter().map(|s| s.value).sum();
            let error: f64 = heap.iter().map(|s| s.error).sum();
            return Ok((value, error));
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(SpecialFnError::QuadratureNoConvergence {
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            return Err(SpecialFnError::QuadratureNoConvergence {
                estimate: value,
                error,
            });
        }
        let left = kronrod(&f, worst.lo, mid);
        let right = kronrod(&f, mid, worst.hi);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

/// Integrand x^{a−1} (1−x)^{b−1} w(x) on a subinterval of [0, 1].
pub struct BetaIntegrand<W> {
    pub a: f64,
    pub b: f64,
    pub weight: W,
}

impl<W: Fn(f64) -> f64> BetaIntegrand<W> {
    pub fn new(a: f64, b: f64, weight: W) -> Result<Self, SpecialFnError> {
        for (what, v) in [("integrand exponent a", a), ("integrand exponent b", b)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(SpecialFnError::Domain { what, value: v });
            }
        }
        Ok(Self { a, b, weight })
    }
}

/// ∫_lo^hi x^{a−1}(1−x)^{b−1} w(x) dx for `0 ≤ lo < hi ≤ 1`.
///
/// The interval is split at ½. A piece touching a singular endpoint has the
/// leading term integrated in closed form (e.g. k(0)·m^a/a on [0, m]) and
/// only the bounded remainder handed to the adaptive rule. The right piece
/// is integrated in the reflected variable y = 1 − x so that nodes close to
/// x = 1 keep full precision.
pub fn quadrature_oracle<W: Fn(f64) -> f64>(
    f: &BetaIntegrand<W>,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, SpecialFnError> {
    if !(0.0..1.0).contains(&lo) || !(lo < hi && hi <= 1.0) {
        return Err(SpecialFnError::Domain {
            what: "quadrature interval",
            value: if (0.0..1.0).contains(&lo) { hi } else { lo },
        });
    }
    if !(tol > 0.0) {
        return Err(SpecialFnError::Domain {
            what: "quadrature tolerance",
            value: tol,
        });
    }
    let (a, b) = (f.a, f.b);
    let w = &f.weight;
    let mut total = 0.0;
    let mut pieces = 0;
    if lo < 0.5 {
        pieces += 1;
    }
    if hi > 0.5 {
        pieces += 1;
    }
    let piece_tol = tol / pieces as f64;

    if lo < 0.5 {
        let top = hi.min(0.5);
        // x^{a−1} k(x) with k(x) = (1−x)^{b−1} w(x)
        let k = |x: f64| ((-x).ln_1p() * (b - 1.0)).exp() * w(x);
        total += singular_piece(a, &k, lo, top, piece_tol)?;
    }
    if hi > 0.5 {
        let bottom = lo.max(0.5);
        // y^{b−1} j(y) with y = 1 − x and j(y) = (1−y)^{a−1} w(1−y)
        let j = |y: f64| ((-y).ln_1p() * (a - 1.0)).exp() * w(1.0 - y);
        total += singular_piece(b, &j, 1.0 - hi, 1.0 - bottom, piece_tol)?;
    }
    Ok(total)
}

/// ∫_lo^hi y^{p−1} k(y) dy with k bounded and continuous on [lo, hi] ⊂ [0, ½].
fn singular_piece<K: Fn(f64) -> f64>(
    p: f64,
    k: &K,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, SpecialFnError> {
    if lo == 0.0 && p < 1.0 {
        let k0 = k(0.0);
        let head = k0 * (p * hi.ln()).exp() / p;
        let remainder = |y: f64| {
            if y == 0.0 {
                0.0
            } else {
                ((p - 1.0) * y.ln()).exp() * (k(y) - k0)
            }
        };
        let (rest, _) = adaptive_integrate(remainder, 0.0, hi, tol)?;
        Ok(head + rest)
    } else {
        let integrand = |y: f64| {
            if y == 0.0 {
                // only reachable for p ≥ 1
                if p == 1.0 {
                    k(0.0)
                } else {
                    0.0
                }
            } else {
                ((p - 1.0) * y.ln()).exp() * k(y)
            }
        };
        let (v, _) = adaptive_integrate(integrand, lo, hi, tol)?;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let k: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        let g: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_integrand() {
        let f = BetaIntegrand::new(1.0, 1.0, |_| 1.0).unwrap();
        let v = quadrature_oracle(&f, 0.0, 1.0, DEFAULT_TOL).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn euler_reflection_beta() {
        // B(a, 1−a) = Γ(a)Γ(1−a) = π / sin(πa)
        let f = BetaIntegrand::new(0.3, 0.7, |_| 1.0).unwrap();
        let v = quadrature_oracle(&f, 0.0, 1.0, DEFAULT_TOL).unwrap();
        let want = PI / (0.3 * PI).sin();
        assert!((v - want).abs() < 1e-9, "{v} vs {want}");
        assert!((v - 3.8833).abs() < 1e-4);
    }

    #[test]
    fn reciprocal_on_quarter_interval() {
        let f = BetaIntegrand::new(1.0, 1.0, |x: f64| 1.0 / x).unwrap();
        let v = quadrature_oracle(&f, 0.25, 1.0, DEFAULT_TOL).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn tiny_exponents_against_closed_forms() {
        // ∫₀^1 x^{a−1} dx = 1/a
        for a in [1e-9, 1e-6, 1e-3, 0.5] {
            let f = BetaIntegrand::new(a, 1.0, |_| 1.0).unwrap();
            let v = quadrature_oracle(&f, 0.0, 1.0, DEFAULT_TOL).unwrap();
            assert!(((v - 1.0 / a) * a).abs() < 1e-12, "a={a}: {v}");
        }
        // ∫_{0.3}^1 (1−x)^{b−1} dx = 0.7^b / b
        for b in [1e-9, 1e-4, 0.2] {
            let f = BetaIntegrand::new(1.0, b, |_| 1.0).unwrap();
            let v = quadrature_oracle(&f, 0.3, 1.0, DEFAULT_TOL).unwrap();
            let want = (b * 0.7f64.ln()).exp() / b;
            assert!(((v - want) * b).abs() < 1e-12, "b={b}: {v} vs {want}");
        }
    }

    #[test]
    fn smooth_weight() {
        // ∫₀^1 x^{-1/2} cos(x) dx = √(2π) C(√(2/π)), Fresnel; check against
        // the series Σ (−1)^n / ((2n)! (2n + ½)).
        let mut want = 0.0;
        let mut fact = 1.0;
        for n in 0..15 {
            if n > 0 {
                fact *= (2 * n - 1) as f64 * (2 * n) as f64;
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            want += sign / (fact * (2.0 * n as f64 + 0.5));
        }
        let f = BetaIntegrand::new(0.5, 1.0, f64::cos).unwrap();
        let v = quadrature_oracle(&f, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - want).abs() < 1e-11, "{v} vs {want}");
    }

    #[test]
    fn reports_non_convergence() {
        // Non-integrable oscillation gives a distinct error, not a value.
        let r = adaptive_integrate(|x: f64| (1.0 / x).sin() / x, 1e-300, 1.0, 1e-14);
        assert!(matches!(
            r,
            Err(SpecialFnError::QuadratureNoConvergence { .. }) | Err(SpecialFnError::NonFiniteIntegrand)
        ));
    }

    #[test]
    fn rejects_bad_interval() {
        let f = BetaIntegrand::new(1.0, 1.0, |_| 1.0).unwrap();
        assert!(quadrature_oracle(&f, 0.5, 0.5, 1e-10).is_err());
        assert!(quadrature_oracle(&f, -0.1, 0.5, 1e-10).is_err());
        assert!(quadrature_oracle(&f, 0.0, 1.5, 1e-10).is_err());
        assert!(quadrature_oracle(&f, 0.0, 1.0, 0.0).is_err());
    }
}
