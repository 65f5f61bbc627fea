use serde::{Deserialize, Serialize};

use super::QuantileError;
use crate::entropic_measure::{log_prob_above, EntropicParams};

const NORMALIZATION_TOL: f64 = 1e-9;

/// Reference measure a [`RestrictedMeasure`] is taken relative to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceMeasure {
    /// The entropic measure with parameter `beta`.
    Entropic { beta: f64 },
    /// Any other probability measure.
    Other,
}

/// The event {g : g(s) > c}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEvent {
    pub s: f64,
    pub c: f64,
}

/// The normalized restriction (1/m(E)) χ_E m of a reference measure to an event.
///
/// The mass is kept as its logarithm so that entropy is exactly −log m(E).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestrictedMeasure {
    pub base: ReferenceMeasure,
    pub event: ThresholdEvent,
    log_mass: f64,
}

impl RestrictedMeasure {
    pub fn new(base: ReferenceMeasure, event: ThresholdEvent, mass: f64) -> Result<Self, QuantileError> {
        if !(mass > 0.0 && mass <= 1.0) {
            return Err(QuantileError::Invalid(format!("event mass {mass} outside (0, 1]")));
        }
        Ok(Self {
            base,
            event,
            log_mass: mass.ln(),
        })
    }

    /// Restriction of the entropic measure to {g(s) > c}, with the event
    /// probability computed in closed form.
    pub fn entropic_threshold(params: EntropicParams, s: f64, c: f64) -> Result<Self, QuantileError> {
        let log_mass = log_prob_above(s, c, params).map_err(|e| QuantileError::Invalid(e.to_string()))?;
        Ok(Self {
            base: ReferenceMeasure::Entropic { beta: params.beta() },
            event: ThresholdEvent { s, c },
            log_mass,
        })
    }

    pub fn mass(&self) -> f64 {
        self.log_mass.exp()
    }

    pub fn log_mass(&self) -> f64 {
        self.log_mass
    }
}

/// Piecewise-constant density ρ on a finite partition of the reference space,
/// cell i carrying reference mass m_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseDensity {
    pub density: Vec<f64>,
    pub reference_mass: Vec<f64>,
}

impl PiecewiseDensity {
    pub fn new(density: Vec<f64>, reference_mass: Vec<f64>) -> Result<Self, QuantileError> {
        if density.len() != reference_mass.len() || density.is_empty() {
            return Err(QuantileError::Invalid("density and reference cells differ in length".into()));
        }
        if density.iter().chain(&reference_mass).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(QuantileError::Invalid("densities and cell masses must be finite and nonnegative".into()));
        }
        Ok(Self { density, reference_mass })
    }

    /// Density of μ⊗μ′ relative to m⊗m′ on the product partition.
    pub fn tensor(&self, other: &PiecewiseDensity) -> PiecewiseDensity {
        let mut density = Vec::with_capacity(self.density.len() * other.density.len());
        let mut reference_mass = Vec::with_capacity(density.capacity());
        for (r1, m1) in self.density.iter().zip(&self.reference_mass) {
            for (r2, m2) in other.density.iter().zip(&other.reference_mass) {
                density.push(r1 * r2);
                reference_mass.push(m1 * m2);
            }
        }
        PiecewiseDensity { density, reference_mass }
    }

    pub fn total_mass(&self) -> f64 {
        self.density.iter().zip(&self.reference_mass).map(|(r, m)| r * m).sum()
    }
}

/// A measure μ described relative to a reference measure m.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    PiecewiseConstant(PiecewiseDensity),
    Restricted(RestrictedMeasure),
    /// μ is flagged by the caller as not absolutely continuous w.r.t. m.
    Singular,
}

/// Relative entropy Ent(μ|m) = ∫ ρ log ρ dm; +∞ for flagged singular input.
pub fn entropy(rho: &Density) -> Result<f64, QuantileError> {
    match rho {
        Density::Singular => Ok(f64::INFINITY),
        Density::Restricted(r) => Ok(-r.log_mass),
        Density::PiecewiseConstant(p) => {
            let total = p.total_mass();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(QuantileError::NotNormalized { total });
            }
            Ok(p.density
                .iter()
                .zip(&p.reference_mass)
                .filter(|(r, m)| **r > 0.0 && **m > 0.0)
                .map(|(r, m)| r * r.ln() * m)
                .sum())
        }
    }
}

/// Outcome of a K-convexity check along sampled points of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityCheck {
    pub holds: bool,
    /// max_j e_j − bound_j; the inequality holds iff this is ≤ 0.
    pub worst_margin: f64,
    /// Time at which the worst margin occurs (NaN for an empty list).
    pub worst_t: f64,
}

/// Checks e(t) ≤ t·e1 + (1−t)·e0 − (K/2)·t(1−t)·dist² at every supplied point.
pub fn k_convexity_check(
    values: &[(f64, f64)],
    e0: f64,
    e1: f64,
    dist: f64,
    k: f64,
) -> Result<ConvexityCheck, QuantileError> {
    if !(dist >= 0.0) {
        return Err(QuantileError::Invalid(format!("distance {dist} is negative")));
    }
    let mut worst = ConvexityCheck {
        holds: true,
        worst_margin: f64::NEG_INFINITY,
        worst_t: f64::NAN,
    };
    for &(t, e) in values {
        if !(t > 0.0 && t < 1.0) {
            return Err(QuantileError::Invalid(format!("interior time {t} outside (0, 1)")));
        }
        let bound = t * e1 + (1.0 - t) * e0 - 0.5 * k * t * (1.0 - t) * dist * dist;
        let margin = e - bound;
        if margin > worst.worst_margin {
            worst.worst_margin = margin;
            worst.worst_t = t;
        }
    }
    worst.holds = !(worst.worst_margin > 0.0);
    Ok(worst)
}
