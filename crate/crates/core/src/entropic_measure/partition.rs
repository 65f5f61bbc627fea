use serde::{Deserialize, Serialize};

use super::MeasureError;

const MIN_GAP: f64 = 1e-12;

/// Knot vector 0 = t₀ < t₁ < … < t_N < t_{N+1} = 1 with N ≥ 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Partition {
    knots: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Partition {
    type Error = MeasureError;
    fn try_from(knots: Vec<f64>) -> Result<Self, Self::Error> {
        Partition::new(knots)
    }
}

impl From<Partition> for Vec<f64> {
    fn from(p: Partition) -> Self {
        p.knots
    }
}

impl Partition {
    /// Full knot vector including both endpoints.
    pub fn new(knots: Vec<f64>) -> Result<Self, MeasureError> {
        if knots.len() < 3 {
            return Err(MeasureError::Invalid("partition needs at least one interior knot".into()));
        }
        if knots[0] != 0.0 || knots[knots.len() - 1] != 1.0 {
            return Err(MeasureError::Invalid("partition must start at 0 and end at 1".into()));
        }
        for w in knots.windows(2) {
            if !(w[1] - w[0] > MIN_GAP) {
                return Err(MeasureError::Invalid(format!(
                    "knots {} and {} are not strictly increasing with gap > {MIN_GAP:e}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { knots })
    }

    /// Partition from interior knots only.
    pub fn from_interior(interior: &[f64]) -> Result<Self, MeasureError> {
        let mut knots = Vec::with_capacity(interior.len() + 2);
        knots.push(0.0);
        knots.extend_from_slice(interior);
        knots.push(1.0);
        Self::new(knots)
    }

    /// {0, s, 1}.
    pub fn single(s: f64) -> Result<Self, MeasureError> {
        Self::from_interior(&[s])
    }

    /// Dyadic knots j / 2^k, giving N = 2^k − 1 interior knots.
    pub fn dyadic(k: u32) -> Result<Self, MeasureError> {
        if !(1..=30).contains(&k) {
            return Err(MeasureError::Invalid(format!("dyadic level {k} outside 1..=30")));
        }
        let n = 1usize << k;
        Self::new((0..=n).map(|j| j as f64 / n as f64).collect())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn interior(&self) -> &[f64] {
        &self.knots[1..self.knots.len() - 1]
    }

    /// Number of interior knots N.
    pub fn len(&self) -> usize {
        self.knots.len() - 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Gaps t_{i+1} − t_i, i = 0..=N.
    pub fn gaps(&self) -> Vec<f64> {
        self.knots.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Keeps every other knot (even positions of the full vector, plus 1).
    /// A dyadic partition of level k coarsens to level k − 1.
    pub fn coarsen(&self) -> Result<Partition, MeasureError> {
        let mut knots: Vec<f64> = self.knots.iter().step_by(2).copied().collect();
        if *knots.last().expect("non-empty") != 1.0 {
            knots.push(1.0);
        }
        Partition::new(knots)
    }

    /// Positions in `self.knots()` of the interior knots of `coarse`, which
    /// must be a subset of this partition's knots.
    pub fn embed(&self, coarse: &Partition) -> Result<Vec<usize>, MeasureError> {
        coarse
            .interior()
            .iter()
            .map(|t| {
                self.knots
                    .iter()
                    .position(|k| k == t)
                    .ok_or_else(|| MeasureError::Invalid(format!("knot {t} is not in the finer partition")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(Partition::new(vec![0.0, 1.0]).is_err());
        assert!(Partition::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Partition::new(vec![0.1, 0.5, 1.0]).is_err());
        assert!(Partition::new(vec![0.0, 0.5, 0.9]).is_err());
        assert!(Partition::single(0.0).is_err());
        assert!(Partition::single(1.0).is_err());
        assert!(Partition::from_interior(&[0.5, 0.5 + 1e-13]).is_err());
        assert_eq!(Partition::single(0.3).unwrap().len(), 1);
    }

    #[test]
    fn dyadic_and_coarsening() {
        let p = Partition::dyadic(3).unwrap();
        assert_eq!(p.len(), 7);
        assert_eq!(p.coarsen().unwrap(), Partition::dyadic(2).unwrap());
        assert_eq!(p.embed(&Partition::dyadic(2).unwrap()).unwrap(), vec![2, 4, 6]);
        assert!(Partition::dyadic(1).unwrap().coarsen().is_err());
        let odd = Partition::from_interior(&[0.2, 0.4, 0.7]).unwrap();
        assert_eq!(odd.coarsen().unwrap().knots(), &[0.0, 0.4, 1.0]);
        assert!(p.embed(&Partition::single(0.3).unwrap()).is_err());
    }
}
