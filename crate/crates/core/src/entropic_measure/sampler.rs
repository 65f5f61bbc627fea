use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01};
use serde::Serialize;

use super::{EntropicParams, MeasureError, Partition};
use crate::quantile_space::{QuantileFunction, QuantileRepr};
use crate::rng::SeededRng;

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Draws ln G for G ~ Gamma(shape, 1).
///
/// For shape < 1 uses Gamma(α) = Gamma(α + 1) · U^{1/α}, keeping the U^{1/α}
/// factor as ln U / α: the variate itself routinely underflows f64 when α is
/// small, its logarithm never does.
#[derive(Debug, Clone)]
struct LogGamma {
    shape: f64,
    boosted: Gamma<f64>,
}

impl LogGamma {
    fn new(shape: f64) -> Self {
        let base = if shape < 1.0 { shape + 1.0 } else { shape };
        Self {
            shape,
            boosted: Gamma::new(base, 1.0).expect("positive finite shape"),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = self.boosted.sample(rng).ln();
        if self.shape < 1.0 {
            let u: f64 = rng.sample(Open01);
            g + u.ln() / self.shape
        } else {
            g
        }
    }
}

/// One draw of (g(t₁), …, g(t_N)) under the entropic measure.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropicSample {
    partition: Partition,
    /// ln(x_{i+1} − x_i), i = 0..=N; always finite.
    log_increments: Vec<f64>,
    /// ln x_i, i = 1..=N; always finite.
    log_values: Vec<f64>,
    values: Vec<f64>,
}

impl EntropicSample {
    fn from_log_increments(partition: Partition, log_increments: Vec<f64>) -> Self {
        let n = partition.len();
        let mut log_values = Vec::with_capacity(n);
        let mut acc = f64::NEG_INFINITY;
        for &li in &log_increments[..n] {
            acc = log_add_exp(acc, li).min(0.0);
            log_values.push(acc);
        }
        let values = log_values.iter().map(|l| l.exp()).collect();
        Self {
            partition,
            log_increments,
            log_values,
            values,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// x_i = g(t_i), nondecreasing in [0, 1].
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn log_increments(&self) -> &[f64] {
        &self.log_increments
    }

    /// Whether g(t_index) > c, decided in log space (so c = 0 is always true).
    pub fn exceeds(&self, index: usize, c: f64) -> bool {
        self.log_values[index] > c.ln()
    }

    /// The step quantile function equal to x_i on [t_i, t_{i+1}), x₀ = 0.
    pub fn as_quantile(&self) -> QuantileFunction {
        let gaps = self.partition.gaps();
        let pieces: Vec<(f64, f64)> = gaps
            .into_iter()
            .zip(std::iter::once(0.0).chain(self.values.iter().copied()))
            .collect();
        QuantileFunction::step_from_widths(&pieces).expect("sampled values form a valid quantile function")
    }

    /// The same draw seen through a coarser partition whose knots are a subset
    /// of this one's. Increments aggregate by log-sum-exp.
    pub fn marginalize(&self, coarse: &Partition) -> Result<EntropicSample, MeasureError> {
        let positions = self.partition.embed(coarse)?;
        let mut log_increments = Vec::with_capacity(coarse.len() + 1);
        let mut start = 0;
        for end in positions.into_iter().chain(std::iter::once(self.partition.knots().len() - 1)) {
            let agg = self.log_increments[start..end]
                .iter()
                .fold(f64::NEG_INFINITY, |acc, &l| log_add_exp(acc, l));
            log_increments.push(agg);
            start = end;
        }
        Ok(Self::from_log_increments(coarse.clone(), log_increments))
    }
}

/// Reusable sampler for a fixed partition and β.
#[derive(Debug, Clone)]
pub struct EntropicSampler {
    partition: Partition,
    params: EntropicParams,
    gammas: Vec<LogGamma>,
}

impl EntropicSampler {
    pub fn new(partition: Partition, params: EntropicParams) -> Self {
        let gammas = partition
            .gaps()
            .into_iter()
            .map(|gap| LogGamma::new(params.beta() * gap))
            .collect();
        Self {
            partition,
            params,
            gammas,
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn params(&self) -> EntropicParams {
        self.params
    }

    /// Exact draw: independent Gamma(βΔt_i) variates normalized by their sum,
    /// all in log space.
    pub fn sample(&self, rng: &mut SeededRng) -> EntropicSample {
        let logs: Vec<f64> = self.gammas.iter().map(|g| g.sample(rng)).collect();
        let total = logs.iter().fold(f64::NEG_INFINITY, |acc, &l| log_add_exp(acc, l));
        let log_increments = logs.into_iter().map(|l| l - total).collect();
        EntropicSample::from_log_increments(self.partition.clone(), log_increments)
    }
}

/// One exact draw from the finite-dimensional marginal on `p`.
pub fn sample(p: &Partition, params: EntropicParams, rng: &mut SeededRng) -> EntropicSample {
    EntropicSampler::new(p.clone(), params).sample(rng)
}

/// Provenance attached to a serialized sample.
#[derive(Debug, Clone, Serialize)]
pub struct SampleMetadata {
    pub beta: f64,
    pub partition: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
    pub draw: usize,
}

/// Wire format: the quantile-function schema plus a `metadata` block.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    #[serde(flatten)]
    pub quantile: QuantileRepr,
    pub values: Vec<f64>,
    pub metadata: SampleMetadata,
}

impl SampleRecord {
    pub fn new(sample: &EntropicSample, beta: f64, seed: u64, stream: u64, draw: usize) -> Self {
        Self {
            quantile: sample.as_quantile().into(),
            values: sample.values().to_vec(),
            metadata: SampleMetadata {
                beta,
                partition: sample.partition().knots().to_vec(),
                seed,
                stream,
                draw,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let p = Partition::dyadic(4).unwrap();
        let params = EntropicParams::new(2.0).unwrap();
        let a = sample(&p, params, &mut SeededRng::new(42));
        let b = sample(&p, params, &mut SeededRng::new(42));
        let c = sample(&p, params, &mut SeededRng::new(43));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn values_monotone_and_log_finite() {
        let params = EntropicParams::new(1.0).unwrap();
        let sampler = EntropicSampler::new(Partition::dyadic(10).unwrap(), params);
        let mut rng = SeededRng::new(5);
        for _ in 0..50 {
            let s = sampler.sample(&mut rng);
            assert!(s.log_increments().iter().all(|l| l.is_finite()));
            assert!(s.log_values().iter().all(|l| l.is_finite() && *l <= 0.0));
            assert!(s.values().windows(2).all(|w| w[0] <= w[1]));
            assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((0..s.values().len()).all(|i| s.exceeds(i, 0.0)));
            let q = s.as_quantile();
            assert!(q.is_step());
        }
    }

    #[test]
    fn strictly_increasing_at_moderate_shapes() {
        let params = EntropicParams::new(50.0).unwrap();
        let sampler = EntropicSampler::new(Partition::dyadic(3).unwrap(), params);
        let mut rng = SeededRng::new(9);
        for _ in 0..200 {
            let s = sampler.sample(&mut rng);
            assert!(s.values().windows(2).all(|w| w[0] < w[1]));
            assert!(s.values()[0] > 0.0 && s.values()[6] < 1.0);
        }
    }

    #[test]
    fn tiny_shapes_never_produce_zero_in_log_space() {
        // βs = 1e-7: the Gamma variate underflows f64 on most draws
        let params = EntropicParams::new(1.0).unwrap();
        let sampler = EntropicSampler::new(Partition::single(1e-7).unwrap(), params);
        let mut rng = SeededRng::new(1);
        let mut underflowed = 0;
        for _ in 0..1000 {
            let s = sampler.sample(&mut rng);
            assert!(s.log_values()[0].is_finite());
            assert!(s.exceeds(0, 0.0));
            if s.values()[0] == 0.0 {
                underflowed += 1;
            }
        }
        assert!(underflowed > 0);
    }

    #[test]
    fn marginalize_matches_coarse_values() {
        let fine = Partition::dyadic(4).unwrap();
        let coarse = Partition::dyadic(2).unwrap();
        let s = sample(&fine, EntropicParams::new(3.0).unwrap(), &mut SeededRng::new(11));
        let m = s.marginalize(&coarse).unwrap();
        for (k, &pos) in fine.embed(&coarse).unwrap().iter().enumerate() {
            let fine_val = s.values()[pos - 1];
            assert!((m.values()[k] - fine_val).abs() < 1e-14);
        }
        let total = m.log_increments().iter().map(|l| l.exp()).sum::<f64>();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn record_schema() {
        let p = Partition::single(0.5).unwrap();
        let s = sample(&p, EntropicParams::new(2.0).unwrap(), &mut SeededRng::new(3));
        let rec = SampleRecord::new(&s, 2.0, 3, 0, 0);
        let v = serde_json::to_value(&rec).unwrap();
        assert_eq!(v["mode"], "step");
        assert_eq!(v["breakpoints"][0][0], 0.0);
        assert_eq!(v["metadata"]["seed"], 3);
        assert_eq!(v["metadata"]["partition"][1], 0.5);
        let q: QuantileFunction = serde_json::from_value(v).unwrap();
        assert_eq!(q.eval(0.75), s.values()[0]);
    }
}
