//! Monte Carlo probes of the Dirichlet form 𝔼(F) = E|𝔻F|² on cylinder
//! functions under the entropic measure.
//!
//! Each draw is taken on a fine partition and read off at the fine partition
//! and its dyadic coarsening, so every report carries two refinement levels.
//! Inner products against the step path are exact sums over precomputed cell
//! integrals. Standard errors use batch means over [`BATCHES`] batches, each
//! on its own random stream.

mod cylinder;

pub use cylinder::{builtin_family, frechet_gradient_norm_sq, CylinderFunction, OuterMap, TestFunction, MAX_POLY_DEGREE};

use serde::Serialize;
use thiserror::Error;

use crate::entropic_measure::{EntropicParams, EntropicSampler, MeasureError, Partition};
use crate::rng::run_batches;

pub const BATCHES: usize = 32;
pub const MIN_PROBE_SAMPLES: usize = 10_000;
/// Poincaré pass band, in standard errors of the margin.
pub const POINCARE_Z_BAND: f64 = 4.0;
pub const MIN_SECOND_MOMENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("invalid probe input: {0}")]
    Invalid(String),
    #[error("n = {n} is below the minimum of {MIN_PROBE_SAMPLES} samples")]
    TooFewSamples { n: usize },
    #[error("E[F²] = {second_moment:e} is too small for the log-Sobolev functional")]
    Degenerate { second_moment: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Poincare,
    LogSobolev,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    /// Number of partition cells N + 1.
    pub cells: usize,
    pub variance: Estimate,
    pub energy: Estimate,
    /// energy/β − variance.
    pub poincare_margin: Estimate,
    pub poincare_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logsob_lhs: Option<Estimate>,
    /// lhs / (energy/β); absent when the energy vanishes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logsob_ratio: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub probe: ProbeKind,
    pub beta: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub batches: usize,
    pub function: CylinderFunction,
    /// Finest level first.
    pub levels: Vec<LevelReport>,
}

impl ProbeReport {
    /// Poincaré verdict over all levels.
    pub fn poincare_pass(&self) -> bool {
        self.levels.iter().all(|l| l.poincare_pass)
    }
}

/// Everything needed to evaluate F on one refinement level from a fine draw.
struct Level {
    cells: usize,
    /// Positions in the fine value vector (1-based, 0 meaning g = 0).
    value_index: Vec<usize>,
    /// integrals[k][i] = ∫ f_k over cell i.
    integrals: Vec<Vec<f64>>,
}

impl Level {
    fn new(f: &CylinderFunction, partition: &Partition, value_index: Vec<usize>) -> Self {
        Self {
            cells: partition.len() + 1,
            value_index,
            integrals: f.directions().iter().map(|d| d.cell_integrals(partition)).collect(),
        }
    }

    fn coordinates(&self, fine_values: &[f64], u: &mut [f64]) {
        for (uk, ik) in u.iter_mut().zip(&self.integrals) {
            *uk = ik
                .iter()
                .zip(&self.value_index)
                .map(|(w, &pos)| if pos == 0 { 0.0 } else { w * fine_values[pos - 1] })
                .sum();
        }
    }
}

fn levels_for(f: &CylinderFunction, partition: &Partition) -> Result<Vec<Level>, ProbeError> {
    let n = partition.len();
    let mut levels = vec![Level::new(f, partition, (0..=n).collect())];
    if let Ok(coarse) = partition.coarsen() {
        let mut index = vec![0];
        index.extend(partition.embed(&coarse)?);
        levels.push(Level::new(f, &coarse, index));
    }
    Ok(levels)
}

/// Neumaier-compensated sum.
fn sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut total, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = total + x;
        comp += if total.abs() >= x.abs() { (total - t) + x } else { (x - t) + total };
        total = t;
    }
    total + comp
}

fn mean(xs: &[f64]) -> f64 {
    sum(xs.iter().copied()) / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    sum(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() as f64 - 1.0)
}

fn batch_stderr(per_batch: &[f64]) -> f64 {
    if per_batch.len() < 2 {
        return 0.0;
    }
    (variance(per_batch) / per_batch.len() as f64).sqrt()
}

fn estimate(overall: f64, per_batch: &[f64]) -> Estimate {
    Estimate {
        value: overall,
        stderr: batch_stderr(per_batch),
    }
}

fn logsob_lhs(values: &[f64]) -> f64 {
    let m2 = sum(values.iter().map(|v| v * v)) / values.len() as f64;
    if !(m2 > 0.0) {
        return 0.0;
    }
    sum(values.iter().map(|v| {
        let v2 = v * v;
        if v2 > 0.0 {
            v2 * (v2 / m2).ln()
        } else {
            0.0
        }
    })) / values.len() as f64
}

fn summarize(values: &[Vec<f64>], energies: &[Vec<f64>], cells: usize, beta: f64, logsob: bool) -> LevelReport {
    let all_values: Vec<f64> = values.concat();
    let all_energies: Vec<f64> = energies.concat();
    let var_b: Vec<f64> = values.iter().map(|v| variance(v)).collect();
    let en_b: Vec<f64> = energies.iter().map(|e| mean(e)).collect();
    let margin_b: Vec<f64> = en_b.iter().zip(&var_b).map(|(e, v)| e / beta - v).collect();
    let var = variance(&all_values);
    let energy = mean(&all_energies);
    let margin = estimate(energy / beta - var, &margin_b);
    let (logsob_lhs_est, logsob_ratio) = if logsob {
        let lhs_b: Vec<f64> = values.iter().map(|v| logsob_lhs(v)).collect();
        let lhs = logsob_lhs(&all_values);
        let ratio = (energy > 0.0 && en_b.iter().all(|&e| e > 0.0)).then(|| {
            let ratio_b: Vec<f64> = lhs_b.iter().zip(&en_b).map(|(l, e)| l / (e / beta)).collect();
            estimate(lhs / (energy / beta), &ratio_b)
        });
        (Some(estimate(lhs, &lhs_b)), ratio)
    } else {
        (None, None)
    };
    LevelReport {
        cells,
        variance: estimate(var, &var_b),
        energy: estimate(energy, &en_b),
        poincare_pass: margin.value >= -POINCARE_Z_BAND * margin.stderr,
        poincare_margin: margin,
        logsob_lhs: logsob_lhs_est,
        logsob_ratio,
    }
}

fn run_probe(
    kind: ProbeKind,
    functions: &[&CylinderFunction],
    params: EntropicParams,
    partition: &Partition,
    n: usize,
    seed: u64,
) -> Result<Vec<ProbeReport>, ProbeError> {
    if n < MIN_PROBE_SAMPLES {
        return Err(ProbeError::TooFewSamples { n });
    }
    let levels: Vec<Vec<Level>> = functions
        .iter()
        .map(|f| levels_for(f, partition))
        .collect::<Result<_, _>>()?;
    let sampler = EntropicSampler::new(partition.clone(), params);
    // [batch][function][level] -> (F values, energies)
    type Series = (Vec<f64>, Vec<f64>);
    let batches: Vec<Vec<Vec<Series>>> = run_batches(seed, n, BATCHES, |rng, count| {
        let mut out: Vec<Vec<Series>> = levels
            .iter()
            .map(|ls| {
                ls.iter()
                    .map(|_| (Vec::with_capacity(count), Vec::with_capacity(count)))
                    .collect()
            })
            .collect();
        let mut scratch: Vec<(Vec<f64>, Vec<f64>)> =
            functions.iter().map(|f| (vec![0.0; f.arity()], vec![0.0; f.arity()])).collect();
        for _ in 0..count {
            let draw = sampler.sample(rng);
            for (fi, f) in functions.iter().enumerate() {
                let (u, grad) = &mut scratch[fi];
                for (level, (vals, ens)) in levels[fi].iter().zip(out[fi].iter_mut()) {
                    level.coordinates(draw.values(), u);
                    vals.push(f.outer().value(u));
                    ens.push(f.energy_at(u, grad));
                }
            }
        }
        out
    });
    let logsob = kind == ProbeKind::LogSobolev;
    let mut reports = Vec::with_capacity(functions.len());
    for (fi, f) in functions.iter().enumerate() {
        let mut level_reports = Vec::with_capacity(levels[fi].len());
        for (li, level) in levels[fi].iter().enumerate() {
            let values: Vec<Vec<f64>> = batches.iter().map(|b| b[fi][li].0.clone()).collect();
            let energies: Vec<Vec<f64>> = batches.iter().map(|b| b[fi][li].1.clone()).collect();
            if logsob {
                let second_moment = sum(values.iter().flatten().map(|v| v * v)) / n as f64;
                if !(second_moment >= MIN_SECOND_MOMENT) {
                    return Err(ProbeError::Degenerate { second_moment });
                }
            }
            level_reports.push(summarize(&values, &energies, level.cells, params.beta(), logsob));
        }
        reports.push(ProbeReport {
            probe: kind,
            beta: params.beta(),
            n_samples: n,
            seed,
            batches: BATCHES.min(n),
            function: (*f).clone(),
            levels: level_reports,
        });
    }
    Ok(reports)
}

/// Var(F) ≤ 𝔼(F)/β, estimated by sampling.
pub fn poincare_probe(
    f: &CylinderFunction,
    params: EntropicParams,
    partition: &Partition,
    n: usize,
    seed: u64,
) -> Result<ProbeReport, ProbeError> {
    Ok(run_probe(ProbeKind::Poincare, &[f], params, partition, n, seed)?.remove(0))
}

/// Poincaré probes of several functions evaluated on one shared set of draws.
pub fn poincare_probe_family(
    functions: &[&CylinderFunction],
    params: EntropicParams,
    partition: &Partition,
    n: usize,
    seed: u64,
) -> Result<Vec<ProbeReport>, ProbeError> {
    run_probe(ProbeKind::Poincare, functions, params, partition, n, seed)
}

/// E[F² log(F²/E F²)] and its ratio to 𝔼(F)/β.
pub fn logsob_probe(
    f: &CylinderFunction,
    params: EntropicParams,
    partition: &Partition,
    n: usize,
    seed: u64,
) -> Result<ProbeReport, ProbeError> {
    Ok(run_probe(ProbeKind::LogSobolev, &[f], params, partition, n, seed)?.remove(0))
}
