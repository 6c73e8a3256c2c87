//! Seeded Monte Carlo oracle.
//!
//! Every estimate is a pure function of `(seed, stream_index, sample_count)`:
//! the generator is ChaCha8 keyed by the seed, with `stream_index` selecting
//! an independent keystream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type McRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub sample_count: u64,
    pub seed: u64,
    #[serde(default)]
    pub stream_index: u64,
}

impl McSpec {
    pub fn new(sample_count: u64, seed: u64) -> Self {
        Self { sample_count, seed, stream_index: 0 }
    }

    pub fn rng(&self) -> McRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// A source of i.i.d. variates.
pub trait Sampler {
    fn draw(&self, rng: &mut McRng) -> f64;
}

impl<F: Fn(&mut McRng) -> f64> Sampler for F {
    fn draw(&self, rng: &mut McRng) -> f64 {
        self(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Running mean/variance (Welford).
#[derive(Debug, Default, Clone, Copy)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn estimate(&self) -> McEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n as f64).sqrt(),
            samples: self.n,
        }
    }
}

/// Estimate `E[g(X) 1{X < k}]` from `spec.sample_count` draws.
pub fn mc_left_tail_expectation<S, G>(sampler: &S, g: G, k: f64, spec: &McSpec) -> Result<McEstimate>
where
    S: Sampler + ?Sized,
    G: Fn(f64) -> f64,
{
    mc_expectation(sampler, |x| if x < k { g(x) } else { 0.0 }, spec)
}

/// Estimate `E[g(X)]`.
pub fn mc_expectation<S, G>(sampler: &S, g: G, spec: &McSpec) -> Result<McEstimate>
where
    S: Sampler + ?Sized,
    G: Fn(f64) -> f64,
{
    if spec.sample_count == 0 {
        return Err(Error::EmptySample);
    }
    let mut rng = spec.rng();
    let mut acc = Welford::default();
    for _ in 0..spec.sample_count {
        let x = sampler.draw(&mut rng);
        let y = g(x);
        if !y.is_finite() {
            return Err(Error::EvaluationFailure(format!(
                "non-finite Monte Carlo observation at x = {x}"
            )));
        }
        acc.push(y);
    }
    Ok(acc.estimate())
}

/// Draw `spec.sample_count` variates into a vector.
pub fn draw_samples<S: Sampler + ?Sized>(sampler: &S, spec: &McSpec) -> Result<Vec<f64>> {
    if spec.sample_count == 0 {
        return Err(Error::EmptySample);
    }
    let mut rng = spec.rng();
    Ok((0..spec.sample_count).map(|_| sampler.draw(&mut rng)).collect())
}

/// Moments and a histogram of a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSummary {
    pub count: u64,
    pub mean: f64,
    pub std_error: f64,
    pub variance: f64,
    pub third_central_moment: f64,
    pub skewness: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleSummary {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let (mut m2, mut m3) = (0.0, 0.0);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &x in xs {
            let d = x - mean;
            m2 += d * d;
            m3 += d * d * d;
            lo = lo.min(x);
            hi = hi.max(x);
        }
        let variance = if xs.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
        let third = m3 / n;
        let pop_sd = (m2 / n).sqrt();
        Ok(Self {
            count: xs.len() as u64,
            mean,
            std_error: (variance / n).sqrt(),
            variance,
            third_central_moment: third,
            skewness: if pop_sd > 0.0 { third / pop_sd.powi(3) } else { 0.0 },
            min: lo,
            max: hi,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    pub density: f64,
}

/// Equal-width histogram over `[min, max]` of the sample.
pub fn histogram(xs: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for &x in xs {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = xs.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| HistogramBin {
            lo: lo + i as f64 * width,
            hi: lo + (i + 1) as f64 * width,
            count: c,
            density: c as f64 / (n * width),
        })
        .collect())
}
