//! Overlap between downloaded and cited sets, and the random-download
//! baseline it is compared against.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IndicatorError;

/// Which set size the intersection is divided by.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapDenominator {
    /// |R ∩ C| / |C|
    #[default]
    Cited,
    /// |R ∩ C| / |R|
    Downloaded,
    /// |R ∩ C| / |R ∪ C|
    Union,
}

impl OverlapDenominator {
    pub fn as_str(self) -> &'static str {
        match self {
            OverlapDenominator::Cited => "cited",
            OverlapDenominator::Downloaded => "downloaded",
            OverlapDenominator::Union => "union",
        }
    }

    /// Fraction from set sizes.
    pub fn fraction(self, intersection: usize, downloaded: usize, cited: usize) -> Result<f64, IndicatorError> {
        let denom = match self {
            OverlapDenominator::Cited => cited,
            OverlapDenominator::Downloaded => downloaded,
            OverlapDenominator::Union => downloaded + cited - intersection,
        };
        if denom == 0 {
            return Err(IndicatorError::EmptyReferenceSet(self));
        }
        Ok(intersection as f64 / denom as f64)
    }
}

impl fmt::Display for OverlapDenominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OverlapDenominator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cited" => Ok(OverlapDenominator::Cited),
            "downloaded" => Ok(OverlapDenominator::Downloaded),
            "union" => Ok(OverlapDenominator::Union),
            other => Err(format!("unknown overlap denominator {other:?} (cited, downloaded, union)")),
        }
    }
}

/// |R ∩ C| / |C|.
pub fn overlap_fraction(downloaded: &BTreeSet<String>, cited: &BTreeSet<String>) -> Result<f64, IndicatorError> {
    overlap_fraction_with(downloaded, cited, OverlapDenominator::Cited)
}

pub fn overlap_fraction_with(
    downloaded: &BTreeSet<String>,
    cited: &BTreeSet<String>,
    denominator: OverlapDenominator,
) -> Result<f64, IndicatorError> {
    let (small, large) = if downloaded.len() <= cited.len() { (downloaded, cited) } else { (cited, downloaded) };
    let intersection = small.iter().filter(|p| large.contains(*p)).count();
    denominator.fraction(intersection, downloaded.len(), cited.len())
}

/// Samples download sets uniformly without replacement from a publication
/// slice and measures their overlap with a fixed cited set.
///
/// Sample `i` draws from its own ChaCha stream `i` under the master seed, so
/// splitting samples across threads gives exactly the single-threaded result.
#[derive(Debug, Clone)]
pub struct BaselineSampler {
    in_cited: Vec<bool>,
    cited_len: usize,
    denominator: OverlapDenominator,
}

impl BaselineSampler {
    pub fn new<S: AsRef<str>>(slice: &[S], cited: &BTreeSet<String>, denominator: OverlapDenominator) -> Self {
        Self {
            in_cited: slice.iter().map(|p| cited.contains(p.as_ref())).collect(),
            cited_len: cited.len(),
            denominator,
        }
    }

    pub fn population(&self) -> usize {
        self.in_cited.len()
    }

    fn check(&self, sample_size: usize, n_samples: usize) -> Result<(), IndicatorError> {
        if sample_size > self.population() {
            return Err(IndicatorError::SampleTooLarge { sample_size, population: self.population() });
        }
        if n_samples == 0 {
            return Err(IndicatorError::DegenerateInput("n_samples must be positive".into()));
        }
        // Surface an empty denominator before sampling.
        self.denominator.fraction(0, sample_size, self.cited_len).map(|_| ())
    }

    fn one(&self, sample_size: usize, seed: u64, index: u64) -> Result<f64, IndicatorError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let hits = rand::seq::index::sample(&mut rng, self.population(), sample_size)
            .iter()
            .filter(|&i| self.in_cited[i])
            .count();
        self.denominator.fraction(hits, sample_size, self.cited_len)
    }

    /// Overlap fraction of each of `n_samples` random sets, in sample order.
    pub fn samples(&self, sample_size: usize, n_samples: usize, seed: u64) -> Result<Vec<f64>, IndicatorError> {
        self.check(sample_size, n_samples)?;
        (0..n_samples as u64).map(|i| self.one(sample_size, seed, i)).collect()
    }

    pub fn par_samples(&self, sample_size: usize, n_samples: usize, seed: u64) -> Result<Vec<f64>, IndicatorError> {
        self.check(sample_size, n_samples)?;
        (0..n_samples as u64).into_par_iter().map(|i| self.one(sample_size, seed, i)).collect()
    }

    pub fn mean(&self, sample_size: usize, n_samples: usize, seed: u64) -> Result<f64, IndicatorError> {
        Ok(mean(&self.samples(sample_size, n_samples, seed)?))
    }

    pub fn par_mean(&self, sample_size: usize, n_samples: usize, seed: u64) -> Result<f64, IndicatorError> {
        Ok(mean(&self.par_samples(sample_size, n_samples, seed)?))
    }
}

fn mean(values: &[f64]) -> f64 {
    // Summed in sample order so parallel and sequential runs agree bit for bit.
    values.iter().sum::<f64>() / values.len() as f64
}

pub const DEFAULT_BASELINE_SAMPLES: usize = 10;

/// Mean |S ∩ C| / |C| over `n_samples` uniform random subsets `S` of `slice`
/// of size `sample_size`.
pub fn random_overlap_baseline<S: AsRef<str>>(
    slice: &[S],
    sample_size: usize,
    cited: &BTreeSet<String>,
    n_samples: usize,
    seed: u64,
) -> Result<f64, IndicatorError> {
    BaselineSampler::new(slice, cited, OverlapDenominator::Cited).mean(sample_size, n_samples, seed)
}
