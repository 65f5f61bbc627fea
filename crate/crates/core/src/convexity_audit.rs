//! Log-concavity audit of the entropic measure along threshold events.
//!
//! For A_s = {g(s) > ½}, B_s = {g(s) > 0} (full measure) and their
//! displacement interpolation C_s(t) = {g(s) > (1−t)/2}, K-convexity of the
//! entropy together with a unit diameter forces
//!
//! ```text
//! log Q(C_s(t)) − (1−t)·log Q(A_s) ≥ (K/2)·t(1−t)    for every K ≤ 0.
//! ```
//!
//! The left side tends to −∞ as s → 0, so every K is eventually contradicted.
//! [`scan`] tabulates the largest K still consistent at each s.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::entropic_measure::{log_prob_above, prob_above, EntropicParams, MeasureError, Partition, EntropicSampler};
use crate::rng::run_batches;

/// Smallest s accepted by [`scan`].
pub const S_FLOOR: f64 = 1e-12;

/// Minimum sample count for [`monte_carlo_cross_check`].
pub const MIN_MC_SAMPLES: usize = 1000;

/// Agreement band for Monte Carlo frequencies, in binomial standard errors.
pub const MC_Z_BAND: f64 = 4.0;

const MC_BATCHES: usize = 32;

pub const CSV_HEADER: &str = "beta,s,t,log_QA,log_QC,log_ratio,implied_K";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("invalid {field}: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("s = {s:e} is below the numerical floor {S_FLOOR:e}")]
    NumericalFloor { s: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

fn config(field: &'static str, reason: impl Into<String>) -> AuditError {
    AuditError::Config {
        field,
        reason: reason.into(),
    }
}

fn check_unit_open(field: &'static str, v: f64) -> Result<(), AuditError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(config(field, format!("{v} is outside (0, 1)")))
    }
}

/// Threshold c with C_s(t) = {g(s) > c}: (1−t)/2.
pub fn c_set_threshold(t: f64) -> Result<f64, AuditError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(config("t", format!("{t} is outside [0, 1]")));
    }
    Ok((1.0 - t) / 2.0)
}

/// −log Q(C_s(t)): a lower bound for the entropy of any measure concentrated
/// on C_s(t).
pub fn entropy_lower_bound(s: f64, t: f64, params: EntropicParams) -> Result<f64, AuditError> {
    check_unit_open("s", s)?;
    check_unit_open("t", t)?;
    Ok(-log_prob_above(s, c_set_threshold(t)?, params)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityAuditRow {
    pub beta: f64,
    pub s: f64,
    pub t: f64,
    #[serde(rename = "log_QA")]
    pub log_qa: f64,
    #[serde(rename = "log_QC")]
    pub log_qc: f64,
    pub log_ratio: f64,
    /// 2·log_ratio / (t(1−t)); positive values mean no contradiction here.
    #[serde(rename = "implied_K")]
    pub implied_k: f64,
}

pub fn audit_row(s: f64, t: f64, params: EntropicParams) -> Result<ConvexityAuditRow, AuditError> {
    check_unit_open("s", s)?;
    check_unit_open("t", t)?;
    let log_qa = log_prob_above(s, 0.5, params)?;
    let log_qc = log_prob_above(s, c_set_threshold(t)?, params)?;
    let log_ratio = log_qc - (1.0 - t) * log_qa;
    Ok(ConvexityAuditRow {
        beta: params.beta(),
        s,
        t,
        log_qa,
        log_qc,
        log_ratio,
        implied_k: 2.0 * log_ratio / (t * (1.0 - t)),
    })
}

/// s = 10^{−k}, k = 1..=decades.
pub fn default_s_grid(decades: u32) -> Vec<f64> {
    (1..=decades as i32).map(|k| 10f64.powi(-k)).collect()
}

pub const DEFAULT_T_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub beta: f64,
    pub t: f64,
    pub rows: Vec<ConvexityAuditRow>,
    /// First index from which implied_K is strictly decreasing to the end
    /// of the grid.
    pub decreasing_from: Option<usize>,
    pub min_implied_k: f64,
}

impl ScanReport {
    /// Whether this scan contradicts Ric ≥ K. Positive K is refuted as soon
    /// as any K ≤ 0 is, since K-convexity implies 0-convexity.
    pub fn refutes(&self, k: f64) -> bool {
        if k > 0.0 {
            self.min_implied_k < 0.0
        } else {
            k > self.min_implied_k
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_csv(&self.rows, out)
    }
}

fn decreasing_suffix_start(rows: &[ConvexityAuditRow]) -> Option<usize> {
    if rows.is_empty() {
        return None;
    }
    let mut start = rows.len() - 1;
    while start > 0 && rows[start].implied_k < rows[start - 1].implied_k {
        start -= 1;
    }
    (start + 1 < rows.len() || rows.len() == 1).then_some(start)
}

/// Audits every s in a strictly decreasing grid at a fixed t. Rows are
/// computed in parallel and returned in grid order.
pub fn scan(t: f64, params: EntropicParams, s_grid: &[f64]) -> Result<ScanReport, AuditError> {
    check_unit_open("t", t)?;
    if s_grid.is_empty() {
        return Err(config("s_grid", "grid is empty"));
    }
    for (i, &s) in s_grid.iter().enumerate() {
        if !(s < 1.0) || s.is_nan() {
            return Err(config("s_grid", format!("entry {i} = {s} is outside (0, 1)")));
        }
        if i > 0 && !(s < s_grid[i - 1]) {
            return Err(config("s_grid", format!("entry {i} = {s} does not decrease")));
        }
    }
    if let Some(&s) = s_grid.iter().find(|&&s| s < S_FLOOR) {
        return Err(AuditError::NumericalFloor { s });
    }
    let rows = s_grid
        .par_iter()
        .map(|&s| audit_row(s, t, params))
        .collect::<Result<Vec<_>, _>>()?;
    let min_implied_k = rows.iter().map(|r| r.implied_k).fold(f64::INFINITY, f64::min);
    Ok(ScanReport {
        beta: params.beta(),
        t,
        decreasing_from: decreasing_suffix_start(&rows),
        min_implied_k,
        rows,
    })
}

pub fn write_csv<W: Write>(rows: &[ConvexityAuditRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.beta, r.s, r.t, r.log_qa, r.log_qc, r.log_ratio, r.implied_k
        )?;
    }
    Ok(())
}

/// Empirical frequency of {g(s) > c} against its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventCheck {
    pub c: f64,
    pub exact: f64,
    pub estimate: f64,
    /// √(p(1−p)/n) at the exact p.
    pub stderr: f64,
    pub pass: bool,
}

impl EventCheck {
    fn new(c: f64, exact: f64, hits: usize, n: usize) -> Self {
        let estimate = hits as f64 / n as f64;
        let stderr = (exact * (1.0 - exact) / n as f64).sqrt();
        let pass = (estimate - exact).abs() <= MC_Z_BAND * stderr;
        Self {
            c,
            exact,
            estimate,
            stderr,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCrossCheck {
    pub beta: f64,
    pub s: f64,
    pub n: usize,
    pub seed: u64,
    pub events: Vec<EventCheck>,
    pub pass: bool,
}

/// Frequencies of arbitrary thresholds at a single knot s, sampled through
/// the marginal on {0, s, 1}.
pub fn monte_carlo_events(
    s: f64,
    thresholds: &[f64],
    params: EntropicParams,
    n: usize,
    seed: u64,
) -> Result<McCrossCheck, AuditError> {
    if n < MIN_MC_SAMPLES {
        return Err(config("n", format!("{n} is below the minimum {MIN_MC_SAMPLES}")));
    }
    let exact = thresholds
        .iter()
        .map(|&c| prob_above(s, c, params))
        .collect::<Result<Vec<_>, _>>()?;
    let sampler = EntropicSampler::new(Partition::single(s)?, params);
    let counts = run_batches(seed, n, MC_BATCHES, |rng, count| {
        let mut hits = vec![0usize; thresholds.len()];
        for _ in 0..count {
            let draw = sampler.sample(rng);
            for (h, &c) in hits.iter_mut().zip(thresholds) {
                *h += usize::from(draw.exceeds(0, c));
            }
        }
        hits
    });
    let events: Vec<EventCheck> = thresholds
        .iter()
        .zip(&exact)
        .enumerate()
        .map(|(j, (&c, &p))| EventCheck::new(c, p, counts.iter().map(|h| h[j]).sum(), n))
        .collect();
    Ok(McCrossCheck {
        beta: params.beta(),
        s,
        n,
        seed,
        pass: events.iter().all(|e| e.pass),
        events,
    })
}

/// Sampled Q(A_s) and Q(C_s(t)) against their closed forms.
pub fn monte_carlo_cross_check(
    s: f64,
    t: f64,
    params: EntropicParams,
    n: usize,
    seed: u64,
) -> Result<McCrossCheck, AuditError> {
    check_unit_open("s", s)?;
    check_unit_open("t", t)?;
    monte_carlo_events(s, &[0.5, c_set_threshold(t)?], params, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64) -> EntropicParams {
        EntropicParams::new(beta).unwrap()
    }

    // mpmath, 50 digits: β = 1, t = ½, s = 10^{−k}
    const REF_IMPLIED_K: [f64; 10] = [
        -5.396_108_652_336_056_1,
        -14.365_311_752_863_85,
        -23.554_242_057_868_556,
        -32.762_470_104_709_115,
        -41.972_599_532_707_487,
        -51.182_918_813_172_975,
        -60.393_257_076_026_961,
        -69.603_597_237_091_212,
        -78.813_937_587_976_205,
        -88.024_277_957_843_269,
    ];

    #[test]
    fn thresholds() {
        assert_eq!(c_set_threshold(0.0).unwrap(), 0.5);
        assert_eq!(c_set_threshold(1.0).unwrap(), 0.0);
        assert_eq!(c_set_threshold(0.5).unwrap(), 0.25);
        assert!(c_set_threshold(1.5).is_err());
    }

    #[test]
    fn entropy_bound_examples() {
        let b = entropy_lower_bound(0.5, 0.5, params(2.0)).unwrap();
        assert!((b + 0.75f64.ln()).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for k in 1..=12 {
            let b = entropy_lower_bound(0.9, 1.0 - 10f64.powi(-k), params(1.0)).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-9);
        for s in [1e-9, 0.2, 0.8] {
            for t in [0.05, 0.5, 0.95] {
                assert!(entropy_lower_bound(s, t, params(0.7)).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn uniform_marginal_row() {
        let r = audit_row(0.5, 0.5, params(2.0)).unwrap();
        assert!((r.log_qc - 0.75f64.ln()).abs() < 1e-15);
        assert!((r.log_qa - 0.5f64.ln()).abs() < 1e-15);
        assert!((r.log_ratio - 0.058_891_517_828_191_3).abs() < 1e-12);
        assert!((r.implied_k - 0.471_132_142_625_530_4).abs() < 1e-11);
        assert_eq!(r.log_ratio, r.log_qc - 0.5 * r.log_qa);
    }

    #[test]
    fn row_matches_references() {
        for (k, want) in REF_IMPLIED_K.iter().enumerate() {
            let s = 10f64.powi(-(k as i32 + 1));
            let r = audit_row(s, 0.5, params(1.0)).unwrap();
            assert!((r.implied_k - want).abs() < 1e-8 * want.abs(), "k={}: {}", k + 1, r.implied_k);
        }
    }

    #[test]
    fn scan_verdict() {
        let rep = scan(0.5, params(1.0), &default_s_grid(10)).unwrap();
        assert_eq!(rep.rows.len(), 10);
        assert_eq!(rep.decreasing_from, Some(0));
        assert!(rep.min_implied_k < -80.0);
        assert_eq!(rep.min_implied_k, rep.rows[9].implied_k);
        assert!(rep.refutes(-80.0) && rep.refutes(3.0) && !rep.refutes(-100.0));
    }

    #[test]
    fn decreasing_suffix_detection() {
        let row = |k| ConvexityAuditRow {
            beta: 1.0,
            s: 0.5,
            t: 0.5,
            log_qa: 0.0,
            log_qc: 0.0,
            log_ratio: 0.0,
            implied_k: k,
        };
        let rows: Vec<_> = [0.59, 0.7, 0.2, -1.0, -3.0].into_iter().map(row).collect();
        assert_eq!(decreasing_suffix_start(&rows), Some(1));
        let rows: Vec<_> = [1.0, 0.0, 0.0].into_iter().map(row).collect();
        assert_eq!(decreasing_suffix_start(&rows), None);
    }

    #[test]
    fn scan_rejects_bad_configs() {
        let p = params(1.0);
        assert!(matches!(scan(1.0, p, &[0.1]), Err(AuditError::Config { field: "t", .. })));
        assert!(matches!(scan(0.0, p, &[0.1]), Err(AuditError::Config { field: "t", .. })));
        assert!(matches!(scan(0.5, p, &[0.1, 0.2]), Err(AuditError::Config { field: "s_grid", .. })));
        assert!(matches!(scan(0.5, p, &[]), Err(AuditError::Config { .. })));
        assert!(matches!(scan(0.5, p, &[0.1, 1e-13]), Err(AuditError::NumericalFloor { .. })));
        assert!(matches!(scan(0.5, p, &[0.1, 0.0]), Err(AuditError::NumericalFloor { .. })));
    }

    #[test]
    fn endpoint_consistency() {
        for s in [1e-6, 0.3] {
            let r = audit_row(s, 1e-300, params(1.5)).unwrap();
            assert_eq!(r.log_qc, r.log_qa);
        }
    }

    #[test]
    fn csv_layout() {
        let rep = scan(0.5, params(1.0), &[0.1, 0.01]).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        let back: f64 = lines[2].split(',').nth(6).unwrap().parse().unwrap();
        assert_eq!(back, rep.rows[1].implied_k);
    }

    #[test]
    fn monte_carlo_examples() {
        let mc = monte_carlo_events(0.5, &[0.5, 0.0], params(2.0), 4000, 7).unwrap();
        assert!(mc.pass);
        assert!((mc.events[0].estimate - 0.5).abs() < 0.04);
        assert_eq!(mc.events[1].estimate, 1.0);
        assert_eq!(mc.events[1].exact, 1.0);
        let mc = monte_carlo_cross_check(0.01, 0.5, params(1.0), 20_000, 3).unwrap();
        assert!(mc.pass, "{mc:?}");
        assert!(monte_carlo_cross_check(0.01, 0.5, params(1.0), 999, 3).is_err());
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let a = monte_carlo_cross_check(0.2, 0.3, params(1.0), 2000, 11).unwrap();
        let b = monte_carlo_cross_check(0.2, 0.3, params(1.0), 2000, 11).unwrap();
        assert_eq!(a, b);
    }
}
