use serde::{Deserialize, Serialize};

use super::quantile::{Piece, QuantileFunction, MASS_TOL, MERGE_TOL};
use super::QuantileError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

impl From<[f64; 2]> for Atom {
    fn from(p: [f64; 2]) -> Self {
        Atom {
            location: p[0],
            mass: p[1],
        }
    }
}

impl From<Atom> for [f64; 2] {
    fn from(a: Atom) -> Self {
        [a.location, a.mass]
    }
}

/// A finitely supported probability measure on [0, 1], atoms sorted by
/// location with coincident locations merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    atoms: Vec<Atom>,
}

impl TryFrom<MeasureRepr> for DiscreteMeasure {
    type Error = QuantileError;
    fn try_from(r: MeasureRepr) -> Result<Self, Self::Error> {
        DiscreteMeasure::new(r.atoms)
    }
}

impl From<DiscreteMeasure> for MeasureRepr {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureRepr { atoms: m.atoms }
    }
}

impl DiscreteMeasure {
    pub fn new(mut atoms: Vec<Atom>) -> Result<Self, QuantileError> {
        if atoms.is_empty() {
            return Err(QuantileError::Invalid("measure has no atoms".into()));
        }
        for a in &atoms {
            if !(0.0..=1.0).contains(&a.location) {
                return Err(QuantileError::Invalid(format!("atom location {} outside [0, 1]", a.location)));
            }
            if !(a.mass > 0.0) || !a.mass.is_finite() {
                return Err(QuantileError::Invalid(format!("atom mass {} not positive", a.mass)));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.mass).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(QuantileError::Invalid(format!("atom masses sum to {total}, not 1")));
        }
        atoms.sort_by(|x, y| x.location.total_cmp(&y.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if a.location - last.location <= MERGE_TOL => last.mass += a.mass,
                _ => merged.push(a),
            }
        }
        Ok(Self { atoms: merged })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, QuantileError> {
        Self::new(
            pairs
                .iter()
                .map(|&(location, mass)| Atom { location, mass })
                .collect(),
        )
    }

    pub fn dirac(location: f64) -> Result<Self, QuantileError> {
        Self::from_pairs(&[(location, 1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

/// Ψ: g ↦ g_*Leb. Each flat piece of width w at height v becomes an atom (v, w).
pub fn pushforward_leb(g: &QuantileFunction) -> Result<DiscreteMeasure, QuantileError> {
    if !g.is_step() {
        return Err(QuantileError::NotStep);
    }
    // canonical step functions are strictly increasing across pieces, so the
    // atoms are already sorted and distinct
    Ok(DiscreteMeasure {
        atoms: g
            .pieces()
            .iter()
            .map(|p| Atom {
                location: p.left,
                mass: p.width,
            })
            .collect(),
    })
}

/// Ψ⁻¹: μ ↦ g_μ(s) = inf{r ∈ [0,1] : μ([0,r]) > s}.
pub fn inverse_distribution(m: &DiscreteMeasure) -> QuantileFunction {
    let pieces = m
        .atoms
        .iter()
        .map(|a| Piece {
            width: a.mass,
            left: a.location,
            right: a.location,
        })
        .collect();
    QuantileFunction::from_pieces(pieces).expect("a valid measure yields a valid quantile function")
}

/// Pointwise g_μ(s), with the convention inf ∅ = 1 (so g_μ(1) = 1).
pub fn inverse_cdf_at(m: &DiscreteMeasure, s: f64) -> f64 {
    let mut cdf = 0.0;
    for a in &m.atoms {
        cdf += a.mass;
        if cdf > s {
            return a.location;
        }
    }
    1.0
}

/// W₂ by the explicit monotone (north-west corner) coupling of the sorted
/// atoms, which is optimal on the line. Independent of the quantile route.
pub fn brute_force_w2(m1: &DiscreteMeasure, m2: &DiscreteMeasure) -> f64 {
    let (xs, ys) = (&m1.atoms, &m2.atoms);
    let (mut i, mut j) = (0, 0);
    let (mut ri, mut rj) = (xs[0].mass, ys[0].mass);
    let mut cost = 0.0;
    loop {
        let moved = ri.min(rj);
        let d = xs[i].location - ys[j].location;
        cost += moved * d * d;
        ri -= moved;
        rj -= moved;
        if ri <= 0.0 {
            i += 1;
            if i == xs.len() {
                break;
            }
            ri = xs[i].mass;
        }
        if rj <= 0.0 {
            j += 1;
            if j == ys.len() {
                break;
            }
            rj = ys[j].mass;
        }
    }
    cost.max(0.0).sqrt()
}
