use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::entropic_measure::Partition;
use crate::quantile_space::QuantileFunction;

/// Highest polynomial degree accepted for a direction. Products of two such
/// polynomials with a linear quantile piece stay within the exactness of the
/// 10-point Gauss–Legendre rule.
pub const MAX_POLY_DEGREE: usize = 8;

const GL_POINTS: usize = 10;

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Nodes and weights of the Gauss–Legendre rule on [−1, 1].
fn gauss_legendre() -> &'static [(f64, f64); GL_POINTS] {
    use std::sync::OnceLock;
    static RULE: OnceLock<[(f64, f64); GL_POINTS]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut rule = [(0.0, 0.0); GL_POINTS];
        for (i, slot) in rule.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

fn gl_cell(lo: f64, hi: f64, h: &impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    half * gauss_legendre().iter().map(|&(x, w)| w * h(mid + half * x)).sum::<f64>()
}

/// ∫ h over [lo, hi], exact when h is a polynomial of degree < 20 between
/// consecutive `breaks`.
fn integrate_cells(lo: f64, hi: f64, breaks: &[f64], h: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    let mut a = lo;
    for &b in breaks.iter().filter(|&&b| b > lo && b < hi) {
        total += gl_cell(a, b, &h);
        a = b;
    }
    total + gl_cell(a, hi, &h)
}

fn merge_breaks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// A direction f in ⟨f, g⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `values[i]` on `[knots[i], knots[i+1])`; knots run from 0 to 1.
    Step { knots: Vec<f64>, values: Vec<f64> },
    /// Σ coeffs[j]·x^j.
    Polynomial { coeffs: Vec<f64> },
}

impl TestFunction {
    pub fn step(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, ProbeError> {
        let f = TestFunction::Step { knots, values };
        f.validate()?;
        Ok(f)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self, ProbeError> {
        let f = TestFunction::Polynomial { coeffs };
        f.validate()?;
        Ok(f)
    }

    /// f ≡ 1.
    pub fn one() -> Self {
        TestFunction::Polynomial { coeffs: vec![1.0] }
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        match self {
            TestFunction::Step { knots, values } => {
                if knots.len() < 2 || values.len() + 1 != knots.len() {
                    return Err(ProbeError::Invalid("step direction needs one value per cell".into()));
                }
                if knots[0] != 0.0 || knots[knots.len() - 1] != 1.0 || knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(ProbeError::Invalid("step knots must increase strictly from 0 to 1".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(ProbeError::Invalid("step values must be finite".into()));
                }
            }
            TestFunction::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.len() > MAX_POLY_DEGREE + 1 {
                    return Err(ProbeError::Invalid(format!(
                        "polynomial direction needs 1 to {} coefficients",
                        MAX_POLY_DEGREE + 1
                    )));
                }
                if coeffs.iter().any(|v| !v.is_finite()) {
                    return Err(ProbeError::Invalid("polynomial coefficients must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Step { knots, values } => {
                let i = knots.partition_point(|&k| k <= x).saturating_sub(1);
                values[i.min(values.len() - 1)]
            }
            TestFunction::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
        }
    }

    fn breaks(&self) -> &[f64] {
        match self {
            TestFunction::Step { knots, .. } => &knots[1..knots.len() - 1],
            TestFunction::Polynomial { .. } => &[],
        }
    }

    /// ⟨f, h⟩ in L²[0,1].
    pub fn inner(&self, other: &TestFunction) -> f64 {
        let breaks = merge_breaks(self.breaks(), other.breaks());
        integrate_cells(0.0, 1.0, &breaks, |x| self.eval(x) * other.eval(x))
    }

    /// ⟨f, g⟩, integrated piece by piece of g.
    pub fn inner_quantile(&self, g: &QuantileFunction) -> f64 {
        let mut start = 0.0;
        let mut total = 0.0;
        for p in g.pieces() {
            let end = start + p.width;
            let slope = (p.right - p.left) / p.width;
            let a = start;
            total += integrate_cells(start, end, self.breaks(), |x| {
                let gx = if p.left == p.right { p.left } else { p.left + slope * (x - a) };
                self.eval(x) * gx
            });
            start = end;
        }
        total
    }

    /// ∫ f over each cell of a partition.
    pub fn cell_integrals(&self, partition: &Partition) -> Vec<f64> {
        partition
            .knots()
            .windows(2)
            .map(|w| integrate_cells(w[0], w[1], self.breaks(), |x| self.eval(x)))
            .collect()
    }
}

/// Outer map φ: ℝ^m → ℝ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OuterMap {
    /// offset + Σ w_k u_k.
    Linear { weights: Vec<f64>, offset: f64 },
    /// Σ q_k u_k² + Σ w_k u_k.
    Quadratic { quadratic: Vec<f64>, linear: Vec<f64> },
    /// amplitude · exp(−|u − center|² / (2 width²)).
    GaussianBump { center: Vec<f64>, width: f64, amplitude: f64 },
}

impl OuterMap {
    pub fn constant(m: usize, value: f64) -> Self {
        OuterMap::Linear {
            weights: vec![0.0; m],
            offset: value,
        }
    }

    pub fn identity() -> Self {
        OuterMap::Linear {
            weights: vec![1.0],
            offset: 0.0,
        }
    }

    fn arity(&self) -> usize {
        match self {
            OuterMap::Linear { weights, .. } => weights.len(),
            OuterMap::Quadratic { quadratic, .. } => quadratic.len(),
            OuterMap::GaussianBump { center, .. } => center.len(),
        }
    }

    fn validate(&self) -> Result<(), ProbeError> {
        let ok = match self {
            OuterMap::Linear { weights, offset } => weights.iter().chain([offset]).all(|v| v.is_finite()),
            OuterMap::Quadratic { quadratic, linear } => {
                quadratic.len() == linear.len() && quadratic.iter().chain(linear).all(|v| v.is_finite())
            }
            OuterMap::GaussianBump {
                center,
                width,
                amplitude,
            } => *width > 0.0 && width.is_finite() && center.iter().chain([amplitude]).all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(ProbeError::Invalid(format!("malformed outer map {self:?}")))
        }
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        match self {
            OuterMap::Linear { weights, offset } => offset + dot(weights, u),
            OuterMap::Quadratic { quadratic, linear } => {
                quadratic.iter().zip(u).map(|(q, x)| q * x * x).sum::<f64>() + dot(linear, u)
            }
            OuterMap::GaussianBump {
                center,
                width,
                amplitude,
            } => {
                let r2: f64 = center.iter().zip(u).map(|(c, x)| (x - c) * (x - c)).sum();
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }
        }
    }

    pub fn gradient(&self, u: &[f64], out: &mut [f64]) {
        match self {
            OuterMap::Linear { weights, .. } => out.copy_from_slice(weights),
            OuterMap::Quadratic { quadratic, linear } => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = 2.0 * quadratic[k] * u[k] + linear[k];
                }
            }
            OuterMap::GaussianBump { center, width, .. } => {
                let v = self.value(u);
                for (k, o) in out.iter_mut().enumerate() {
                    *o = -v * (u[k] - center[k]) / (width * width);
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// F(g) = φ(⟨f₁, g⟩, …, ⟨f_m, g⟩).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CylinderSpec", into = "CylinderSpec")]
pub struct CylinderFunction {
    directions: Vec<TestFunction>,
    outer: OuterMap,
    gram: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CylinderSpec {
    directions: Vec<TestFunction>,
    outer: OuterMap,
}

impl TryFrom<CylinderSpec> for CylinderFunction {
    type Error = ProbeError;
    fn try_from(spec: CylinderSpec) -> Result<Self, Self::Error> {
        CylinderFunction::new(spec.directions, spec.outer)
    }
}

impl From<CylinderFunction> for CylinderSpec {
    fn from(f: CylinderFunction) -> Self {
        CylinderSpec {
            directions: f.directions,
            outer: f.outer,
        }
    }
}

impl CylinderFunction {
    pub fn new(directions: Vec<TestFunction>, outer: OuterMap) -> Result<Self, ProbeError> {
        let m = directions.len();
        if m == 0 {
            return Err(ProbeError::Invalid("cylinder function needs at least one direction".into()));
        }
        if outer.arity() != m {
            return Err(ProbeError::Invalid(format!(
                "outer map takes {} arguments, {} directions given",
                outer.arity(),
                m
            )));
        }
        outer.validate()?;
        for f in &directions {
            f.validate()?;
        }
        let mut gram = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = directions[i].inner(&directions[j]);
                gram[i * m + j] = v;
                gram[j * m + i] = v;
            }
        }
        Ok(Self { directions, outer, gram })
    }

    pub fn directions(&self) -> &[TestFunction] {
        &self.directions
    }

    pub fn outer(&self) -> &OuterMap {
        &self.outer
    }

    pub fn arity(&self) -> usize {
        self.directions.len()
    }

    /// ⟨f_i, f_j⟩, row-major.
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    pub fn coordinates(&self, g: &QuantileFunction) -> Vec<f64> {
        self.directions.iter().map(|f| f.inner_quantile(g)).collect()
    }

    pub fn eval(&self, g: &QuantileFunction) -> f64 {
        self.outer.value(&self.coordinates(g))
    }

    /// ∇φᵀ G ∇φ at coordinates `u`, with `grad` as scratch space.
    pub(crate) fn energy_at(&self, u: &[f64], grad: &mut [f64]) -> f64 {
        self.outer.gradient(u, grad);
        let m = grad.len();
        let mut acc = 0.0;
        for i in 0..m {
            acc += grad[i] * dot(&self.gram[i * m..(i + 1) * m], grad);
        }
        acc.max(0.0)
    }
}

/// |𝔻F(g)|² in L²: Σ ∂_iφ ∂_jφ ⟨f_i, f_j⟩.
pub fn frechet_gradient_norm_sq(f: &CylinderFunction, g: &QuantileFunction) -> f64 {
    let u = f.coordinates(g);
    let mut grad = vec![0.0; u.len()];
    f.energy_at(&u, &mut grad)
}

/// A small fixed family covering each outer-map kind and both direction kinds.
pub fn builtin_family() -> Vec<(&'static str, CylinderFunction)> {
    let step = TestFunction::Step {
        knots: vec![0.0, 0.3, 0.7, 1.0],
        values: vec![1.0, -2.0, 0.5],
    };
    let ramp = TestFunction::Polynomial { coeffs: vec![0.0, 1.0] };
    let cubic = TestFunction::Polynomial {
        coeffs: vec![1.0, -3.0, 0.0, 2.0],
    };
    let make = |d: Vec<TestFunction>, o: OuterMap| CylinderFunction::new(d, o).expect("built-in cylinder function");
    vec![
        ("mean", make(vec![TestFunction::one()], OuterMap::identity())),
        (
            "linear_step_ramp",
            make(
                vec![step.clone(), ramp.clone()],
                OuterMap::Linear {
                    weights: vec![1.0, -0.5],
                    offset: 0.0,
                },
            ),
        ),
        (
            "quadratic_mean",
            make(
                vec![TestFunction::one()],
                OuterMap::Quadratic {
                    quadratic: vec![1.0],
                    linear: vec![0.0],
                },
            ),
        ),
        (
            "quadratic_mixed",
            make(
                vec![step.clone(), cubic.clone()],
                OuterMap::Quadratic {
                    quadratic: vec![2.0, -1.0],
                    linear: vec![0.5, 1.0],
                },
            ),
        ),
        (
            "bump",
            make(
                vec![TestFunction::one(), ramp],
                OuterMap::GaussianBump {
                    center: vec![0.5, 0.3],
                    width: 0.2,
                    amplitude: 1.0,
                },
            ),
        ),
        (
            "bump_step",
            make(
                vec![step],
                OuterMap::GaussianBump {
                    center: vec![0.0],
                    width: 0.1,
                    amplitude: 2.0,
                },
            ),
        ),
    ]
}
