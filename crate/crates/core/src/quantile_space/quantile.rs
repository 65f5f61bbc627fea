use serde::{Deserialize, Serialize};

use super::QuantileError;

/// Breakpoints or atom locations closer than this are treated as equal.
pub const MERGE_TOL: f64 = 1e-14;
/// Allowed deviation of total width / total mass from 1.
pub const MASS_TOL: f64 = 1e-12;

/// One piece of a quantile function: on an interval of length `width` the
/// function runs linearly from `left` (attained at the left end) to the left
/// limit `right` at the right end. Step pieces have `left == right`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub width: f64,
    pub left: f64,
    pub right: f64,
}

impl Piece {
    fn is_flat(&self) -> bool {
        self.left == self.right
    }

    /// Value at relative offset `u ∈ [0, width]` from the start of the piece.
    fn at(&self, u: f64) -> f64 {
        if self.is_flat() {
            self.left
        } else {
            self.left + (self.right - self.left) * (u / self.width)
        }
    }
}

/// A right-continuous nondecreasing map [0,1] → [0,1], stored as
/// consecutive pieces whose widths sum to one.
///
/// Storing widths (rather than absolute breakpoints) makes the
/// measure ↔ quantile correspondence exact: the widths of a step function are
/// literally the masses of its image measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuantileRepr", into = "QuantileRepr")]
pub struct QuantileFunction {
    pieces: Vec<Piece>,
}

impl QuantileFunction {
    /// Step function taking value `v_i` on `[s_i, s_{i+1})`; `s_0` must be 0.
    pub fn step(breakpoints: &[(f64, f64)]) -> Result<Self, QuantileError> {
        let starts: Vec<f64> = breakpoints.iter().map(|p| p.0).collect();
        let widths = widths_from_starts(&starts)?;
        let pieces = widths
            .into_iter()
            .zip(breakpoints)
            .map(|(width, &(_, v))| Piece {
                width,
                left: v,
                right: v,
            })
            .collect();
        Self::from_pieces(pieces)
    }

    /// Step function from explicit `(width, value)` pairs.
    pub fn step_from_widths(pieces: &[(f64, f64)]) -> Result<Self, QuantileError> {
        Self::from_pieces(
            pieces
                .iter()
                .map(|&(width, v)| Piece {
                    width,
                    left: v,
                    right: v,
                })
                .collect(),
        )
    }

    /// Continuous piecewise-linear function through `knots`, which must start
    /// at s = 0 and end at s = 1.
    pub fn linear(knots: &[(f64, f64)]) -> Result<Self, QuantileError> {
        if knots.len() < 2 {
            return Err(QuantileError::Invalid("a linear quantile needs at least two knots".into()));
        }
        if knots[knots.len() - 1].0 != 1.0 {
            return Err(QuantileError::Invalid("last linear knot must sit at s = 1".into()));
        }
        let starts: Vec<f64> = knots[..knots.len() - 1].iter().map(|p| p.0).collect();
        let widths = widths_from_starts(&starts)?;
        let pieces = widths
            .into_iter()
            .zip(knots.windows(2))
            .map(|(width, w)| Piece {
                width,
                left: w[0].1,
                right: w[1].1,
            })
            .collect();
        Self::from_pieces(pieces)
    }

    /// g ≡ v, the quantile function of δ_v.
    pub fn constant(v: f64) -> Result<Self, QuantileError> {
        Self::step(&[(0.0, v)])
    }

    /// g(s) = s, the quantile function of the uniform measure.
    pub fn identity() -> Self {
        Self {
            pieces: vec![Piece {
                width: 1.0,
                left: 0.0,
                right: 1.0,
            }],
        }
    }

    /// Validates and canonicalizes (adjacent flat pieces at equal heights merge).
    pub fn from_pieces(pieces: Vec<Piece>) -> Result<Self, QuantileError> {
        if pieces.is_empty() {
            return Err(QuantileError::Invalid("no pieces".into()));
        }
        let mut total = 0.0;
        let mut prev = 0.0;
        for (i, p) in pieces.iter().enumerate() {
            if !(p.width > 0.0) || !p.width.is_finite() {
                return Err(QuantileError::Invalid(format!("piece {i} has width {}", p.width)));
            }
            for v in [p.left, p.right] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(QuantileError::Invalid(format!("piece {i} value {v} outside [0, 1]")));
                }
            }
            if p.left < prev || p.right < p.left {
                return Err(QuantileError::NotMonotone { index: i });
            }
            prev = p.right;
            total += p.width;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(QuantileError::Invalid(format!("piece widths sum to {total}, not 1")));
        }
        Ok(Self {
            pieces: canonicalize(pieces),
        })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// True when every piece is flat (the canonical step representation).
    pub fn is_step(&self) -> bool {
        self.pieces.iter().all(Piece::is_flat)
    }

    /// Absolute start positions of the pieces (prefix sums of widths).
    pub fn starts(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.pieces
            .iter()
            .map(|p| {
                let s = acc;
                acc += p.width;
                s
            })
            .collect()
    }

    /// Right-continuous evaluation; at s = 1 returns the left limit.
    pub fn eval(&self, s: f64) -> f64 {
        let mut start = 0.0;
        for (i, p) in self.pieces.iter().enumerate() {
            let end = start + p.width;
            if s < end || i + 1 == self.pieces.len() {
                return p.at((s - start).clamp(0.0, p.width));
            }
            start = end;
        }
        unreachable!("at least one piece")
    }

    /// ∫₀¹ g(s) ds.
    pub fn mean(&self) -> f64 {
        self.pieces.iter().map(|p| 0.5 * p.width * (p.left + p.right)).sum()
    }
}

fn widths_from_starts(starts: &[f64]) -> Result<Vec<f64>, QuantileError> {
    if starts.first() != Some(&0.0) {
        return Err(QuantileError::Invalid("first breakpoint must be at s = 0".into()));
    }
    let mut widths = Vec::with_capacity(starts.len());
    for (i, s) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(1.0);
        if !(end > *s) || !(0.0..1.0).contains(s) {
            return Err(QuantileError::Invalid(format!(
                "breakpoints must be strictly increasing in [0, 1); got {s} then {end}"
            )));
        }
        widths.push(end - s);
    }
    Ok(widths)
}

fn canonicalize(pieces: Vec<Piece>) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let Some(last) = out.last_mut() {
            if last.is_flat() && p.is_flat() && (p.left - last.left).abs() <= MERGE_TOL {
                last.width += p.width;
                continue;
            }
        }
        out.push(p);
    }
    out
}

/// Walks two quantile functions over their merged breakpoint grid, calling
/// `visit(width, f_start, f_end, g_start, g_end)` on every common sub-interval.
fn merged_walk(f: &QuantileFunction, g: &QuantileFunction, mut visit: impl FnMut(f64, f64, f64, f64, f64)) {
    let (fp, gp) = (&f.pieces, &g.pieces);
    let (mut i, mut j) = (0, 0);
    // absolute start of the current piece of f and g, and the sweep cursor
    let (mut fs, mut gs, mut cur) = (0.0f64, 0.0f64, 0.0f64);
    while i < fp.len() && j < gp.len() {
        let fe = if i + 1 == fp.len() { 1.0 } else { fs + fp[i].width };
        let ge = if j + 1 == gp.len() { 1.0 } else { gs + gp[j].width };
        let end = fe.min(ge);
        let width = end - cur;
        if width > 0.0 {
            let (a0, a1) = (fp[i].at(cur - fs), fp[i].at(end - fs));
            let (b0, b1) = (gp[j].at(cur - gs), gp[j].at(end - gs));
            visit(width, a0, a1, b0, b1);
        }
        cur = end;
        let same = (fe - ge).abs() <= MERGE_TOL;
        if fe <= ge || same {
            fs = fe;
            i += 1;
        }
        if ge <= fe || same {
            gs = ge;
            j += 1;
        }
        if same {
            cur = fe.max(ge);
        }
    }
}

/// Exact L²[0,1] distance, i.e. the 2-Wasserstein distance of the image
/// measures. Linear pieces are integrated in closed form.
pub fn w2_distance(f: &QuantileFunction, g: &QuantileFunction) -> f64 {
    let mut sq = 0.0;
    merged_walk(f, g, |w, a0, a1, b0, b1| {
        let (d0, d1) = (a0 - b0, a1 - b1);
        sq += if d0 == d1 {
            w * d0 * d0
        } else {
            w * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0
        };
    });
    // values live in [0, 1], so the diameter is 1
    sq.max(0.0).sqrt().min(1.0)
}

/// Point γ(t) = (1−t) f + t g of the (unique) L² geodesic.
pub fn geodesic(f: &QuantileFunction, g: &QuantileFunction, t: f64) -> Result<QuantileFunction, QuantileError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(QuantileError::Invalid(format!("geodesic time {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    if t == 1.0 {
        return Ok(g.clone());
    }
    let mix = |a: f64, b: f64| ((1.0 - t) * a + t * b).clamp(0.0, 1.0);
    let mut pieces = Vec::with_capacity(f.pieces.len() + g.pieces.len());
    merged_walk(f, g, |width, a0, a1, b0, b1| {
        pieces.push(Piece {
            width,
            left: mix(a0, b0),
            right: mix(a1, b1),
        });
    });
    Ok(QuantileFunction {
        pieces: canonicalize(pieces),
    })
}

/// Wire format for [`QuantileFunction`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum QuantileRepr {
    /// `[s_i, v_i]`: value v_i on [s_i, s_{i+1}).
    Step { breakpoints: Vec<[f64; 2]> },
    /// `[s_i, v_i]` knots of a continuous piecewise-linear function, s from 0 to 1.
    Linear { knots: Vec<[f64; 2]> },
    /// `[s_i, left_i, right_i]`: linear from left_i to right_i on [s_i, s_{i+1}).
    Pieces { pieces: Vec<[f64; 3]> },
}

impl From<QuantileFunction> for QuantileRepr {
    fn from(q: QuantileFunction) -> Self {
        let starts = q.starts();
        if q.is_step() {
            return QuantileRepr::Step {
                breakpoints: starts.iter().zip(&q.pieces).map(|(&s, p)| [s, p.left]).collect(),
            };
        }
        let continuous = q.pieces.windows(2).all(|w| w[0].right == w[1].left);
        if continuous {
            let mut knots: Vec<[f64; 2]> = starts.iter().zip(&q.pieces).map(|(&s, p)| [s, p.left]).collect();
            knots.push([1.0, q.pieces[q.pieces.len() - 1].right]);
            return QuantileRepr::Linear { knots };
        }
        QuantileRepr::Pieces {
            pieces: starts
                .iter()
                .zip(&q.pieces)
                .map(|(&s, p)| [s, p.left, p.right])
                .collect(),
        }
    }
}

impl TryFrom<QuantileRepr> for QuantileFunction {
    type Error = QuantileError;

    fn try_from(r: QuantileRepr) -> Result<Self, Self::Error> {
        match r {
            QuantileRepr::Step { breakpoints } => {
                let bp: Vec<(f64, f64)> = breakpoints.iter().map(|p| (p[0], p[1])).collect();
                Self::step(&bp)
            }
            QuantileRepr::Linear { knots } => {
                let k: Vec<(f64, f64)> = knots.iter().map(|p| (p[0], p[1])).collect();
                Self::linear(&k)
            }
            QuantileRepr::Pieces { pieces } => {
                let starts: Vec<f64> = pieces.iter().map(|p| p[0]).collect();
                let widths = widths_from_starts(&starts)?;
                Self::from_pieces(
                    widths
                        .into_iter()
                        .zip(&pieces)
                        .map(|(width, p)| Piece {
                            width,
                            left: p[1],
                            right: p[2],
                        })
                        .collect(),
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn construction_rules() {
        assert!(QuantileFunction::step(&[(0.1, 0.5)]).is_err());
        assert!(QuantileFunction::step(&[(0.0, 0.5), (0.5, 0.4)]).is_err());
        assert!(QuantileFunction::step(&[(0.0, 0.5), (0.5, 1.2)]).is_err());
        assert!(QuantileFunction::step(&[(0.0, 0.1), (0.5, 0.2), (0.5, 0.3)]).is_err());
        assert!(QuantileFunction::linear(&[(0.0, 0.0), (0.5, 1.0)]).is_err());
        let merged = QuantileFunction::step(&[(0.0, 0.2), (0.3, 0.2), (0.6, 0.9)]).unwrap();
        assert_eq!(merged.pieces().len(), 2);
    }

    #[test]
    fn right_continuous_evaluation() {
        let g = QuantileFunction::step(&[(0.0, 0.0), (0.5, 1.0)]).unwrap();
        assert_eq!(g.eval(0.0), 0.0);
        assert_eq!(g.eval(0.4999), 0.0);
        assert_eq!(g.eval(0.5), 1.0);
        assert_eq!(g.eval(1.0), 1.0);
        let id = QuantileFunction::identity();
        assert!(close(id.eval(0.25), 0.25, 1e-16));
        assert_eq!(id.eval(1.0), 1.0);
    }

    #[test]
    fn distances_of_simple_pairs() {
        let a = QuantileFunction::constant(0.2).unwrap();
        let b = QuantileFunction::constant(0.7).unwrap();
        assert!(close(w2_distance(&a, &b), 0.5, 1e-15));
        let zero = QuantileFunction::constant(0.0).unwrap();
        let d = w2_distance(&QuantileFunction::identity(), &zero);
        assert!(close(d, 1.0 / 3f64.sqrt(), 1e-15));
        assert!(close(d, 0.577_350_3, 1e-7));
        assert_eq!(w2_distance(&a, &a), 0.0);
    }

    #[test]
    fn mixed_mode_distance_is_exact() {
        // ∫₀^½ s² ds + ∫_½^1 (1 − s)² ds = 1/24 + 1/24
        let step = QuantileFunction::step(&[(0.0, 0.0), (0.5, 1.0)]).unwrap();
        let d = w2_distance(&QuantileFunction::identity(), &step);
        assert!(close(d * d, 1.0 / 12.0, 1e-15));
    }

    #[test]
    fn geodesic_endpoints_and_midpoint() {
        let f = QuantileFunction::constant(0.0).unwrap();
        let g = QuantileFunction::constant(1.0).unwrap();
        assert_eq!(geodesic(&f, &g, 0.0).unwrap(), f);
        assert_eq!(geodesic(&f, &g, 1.0).unwrap(), g);
        let mid = geodesic(&f, &g, 0.5).unwrap();
        assert_eq!(mid, QuantileFunction::constant(0.5).unwrap());
        assert!(geodesic(&f, &g, 1.5).is_err());
    }

    #[test]
    fn geodesic_of_mixed_modes_has_general_pieces() {
        let step = QuantileFunction::step(&[(0.0, 0.0), (0.5, 1.0)]).unwrap();
        let mid = geodesic(&QuantileFunction::identity(), &step, 0.5).unwrap();
        assert!(!mid.is_step());
        assert!(close(mid.eval(0.25), 0.125, 1e-16));
        assert!(close(mid.eval(0.75), 0.875, 1e-16));
        let json = serde_json::to_string(&mid).unwrap();
        assert!(json.contains("\"mode\":\"pieces\""));
        let back: QuantileFunction = serde_json::from_str(&json).unwrap();
        assert!(w2_distance(&back, &mid) < 1e-15);
    }

    #[test]
    fn json_schema() {
        let g = QuantileFunction::step(&[(0.0, 0.1), (0.25, 0.4)]).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"mode":"step","breakpoints":[[0.0,0.1],[0.25,0.4]]}"#);
        let id = serde_json::to_string(&QuantileFunction::identity()).unwrap();
        assert_eq!(id, r#"{"mode":"linear","knots":[[0.0,0.0],[1.0,1.0]]}"#);
        let bad = r#"{"mode":"step","breakpoints":[[0.0,0.5],[0.5,0.1]]}"#;
        assert!(serde_json::from_str::<QuantileFunction>(bad).is_err());
    }
}
