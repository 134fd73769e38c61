//! Correlation spectra: histograms of pairwise correlation coefficients over a population.
//!
//! Buckets split `[-1, +1]` into equal widths, left-closed and right-open except the
//! last, which also holds `+1`. Coefficients come from integer mismatch counts, so
//! bucket assignment is done in exact integer arithmetic and never depends on
//! floating-point rounding.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolean::{coefficient_from_distance, ResponseBitVector};
use crate::error::{Error, Result};

pub const DEFAULT_BUCKETS: usize = 256;

/// Which pairs of a population enter a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Each unordered pair of distinct members once: `N (N - 1) / 2` pairs.
    UnorderedDistinct,
    /// Every ordered pair including self-pairs: `N^2` pairs. Matches the counting of the closed forms.
    OrderedWithSelf,
}

/// One compared pair, by position in the input list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCoefficient {
    pub i: usize,
    pub j: usize,
    pub mismatches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSpectrum {
    counts: Vec<u64>,
    raw: Vec<PairCoefficient>,
    vector_len: usize,
    labels: Vec<u64>,
    bit_index: Option<u8>,
    mode: PairMode,
}

/// Bucket of a coefficient `(L - 2d) / L`, computed from the agreement count `L - d`.
fn bucket_of(mismatches: usize, len: usize, buckets: usize) -> usize {
    let agree = (len - mismatches) as u128;
    let idx = (agree * buckets as u128 / len as u128) as usize;
    idx.min(buckets - 1)
}

/// Bucket of an arbitrary coefficient in `[-1, 1]`; values outside are clamped.
pub fn bucket_index(coeff: f64, buckets: usize) -> usize {
    let x = ((coeff + 1.0) / 2.0 * buckets as f64).floor();
    if x.is_nan() || x < 0.0 {
        0
    } else {
        (x as usize).min(buckets - 1)
    }
}

/// Lower and upper edge of bucket `b` out of `buckets`.
pub fn bucket_bounds(b: usize, buckets: usize) -> (f64, f64) {
    let edge = |k: usize| -1.0 + 2.0 * k as f64 / buckets as f64;
    (edge(b), edge(b + 1))
}

/// Histogram of pairwise coefficients of `vectors`, which must be mutually comparable.
pub fn build_spectrum(vectors: &[ResponseBitVector], bucket_count: usize, mode: PairMode) -> Result<CorrelationSpectrum> {
    if bucket_count < 2 {
        return Err(Error::domain(format!("bucket count {bucket_count} must be at least 2")));
    }
    let min_members = match mode {
        PairMode::UnorderedDistinct => 2,
        PairMode::OrderedWithSelf => 1,
    };
    if vectors.len() < min_members {
        return Err(Error::domain(format!(
            "need at least {min_members} vectors for a spectrum, got {}",
            vectors.len()
        )));
    }
    let first = &vectors[0];
    for v in &vectors[1..] {
        first.check_comparable(v)?;
    }
    let n = vectors.len();
    let raw: Vec<PairCoefficient> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let start = match mode {
                PairMode::UnorderedDistinct => i + 1,
                PairMode::OrderedWithSelf => 0,
            };
            (start..n).map(move |j| PairCoefficient {
                i,
                j,
                mismatches: vectors[i].bits().hamming_distance(vectors[j].bits()),
            })
        })
        .collect();
    let len = first.len();
    let mut counts = vec![0u64; bucket_count];
    for p in &raw {
        counts[bucket_of(p.mismatches, len, bucket_count)] += 1;
    }
    let labels = vectors
        .iter()
        .enumerate()
        .map(|(pos, v)| v.source().map_or(pos as u64, |s| s.instance as u64))
        .collect();
    let bit = first.source().map(|s| s.bit);
    let bit_index = vectors.iter().all(|v| v.source().map(|s| s.bit) == bit).then_some(bit).flatten();
    Ok(CorrelationSpectrum {
        counts,
        raw,
        vector_len: len,
        labels,
        bit_index,
        mode,
    })
}

impl CorrelationSpectrum {
    pub fn bucket_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bucket_edges(&self) -> Vec<f64> {
        let b = self.bucket_count();
        (0..=b).map(|k| -1.0 + 2.0 * k as f64 / b as f64).collect()
    }

    pub fn pairs(&self) -> &[PairCoefficient] {
        &self.raw
    }

    /// Coefficients in pair order (`i` major, then `j`).
    pub fn coefficients(&self) -> Vec<f64> {
        self.raw
            .iter()
            .map(|p| coefficient_from_distance(p.mismatches, self.vector_len))
            .collect()
    }

    pub fn population_size(&self) -> usize {
        self.labels.len()
    }

    /// Instance label of input position `pos`: its source instance when known, else the position.
    pub fn label(&self, pos: usize) -> u64 {
        self.labels[pos]
    }

    pub fn bit_index(&self) -> Option<u8> {
        self.bit_index
    }

    pub fn mode(&self) -> PairMode {
        self.mode
    }

    /// Mean coefficient, each pair weighted once.
    pub fn mean_coefficient(&self) -> f64 {
        let c = self.coefficients();
        c.iter().sum::<f64>() / c.len() as f64
    }

    pub fn median_coefficient(&self) -> f64 {
        median(&self.coefficients())
    }

    /// Merges adjacent buckets down to `bucket_count`, which must divide the current count.
    pub fn regroup(&self, bucket_count: usize) -> Result<CorrelationSpectrum> {
        let b = self.bucket_count();
        if bucket_count < 2 || !b.is_multiple_of(bucket_count) {
            return Err(Error::domain(format!(
                "cannot regroup {b} buckets into {bucket_count}"
            )));
        }
        let width = b / bucket_count;
        Ok(CorrelationSpectrum {
            counts: self.counts.chunks(width).map(|c| c.iter().sum()).collect(),
            ..self.clone()
        })
    }

    /// `bucket_lo,bucket_hi,count,probability` rows, one per bucket.
    pub fn to_csv(&self) -> String {
        let probs = spectrum_probabilities(self).unwrap_or_else(|_| vec![0.0; self.bucket_count()]);
        let mut out = String::from("bucket_lo,bucket_hi,count,probability\n");
        for (b, (&count, p)) in self.counts.iter().zip(probs).enumerate() {
            let (lo, hi) = bucket_bounds(b, self.bucket_count());
            writeln!(out, "{lo},{hi},{count},{p}").expect("write to string");
        }
        out
    }

    /// `pair_i,pair_j,coeff` rows in pair order, using instance labels.
    pub fn raw_csv(&self) -> String {
        let mut out = String::from("pair_i,pair_j,coeff\n");
        for p in &self.raw {
            let c = coefficient_from_distance(p.mismatches, self.vector_len);
            writeln!(out, "{},{},{c}", self.labels[p.i], self.labels[p.j]).expect("write to string");
        }
        out
    }
}

/// Counts normalized to sum to 1.
pub fn spectrum_probabilities(s: &CorrelationSpectrum) -> Result<Vec<f64>> {
    let total = s.total();
    if total == 0 {
        return Err(Error::domain("spectrum is empty"));
    }
    Ok(s.counts.iter().map(|&c| c as f64 / total as f64).collect())
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
