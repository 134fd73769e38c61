//! Comparison statistics for spectra and response quality.

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::boolean::ResponseBitVector;
use crate::error::{Error, Result};
use crate::spectra::{bucket_index, build_spectrum, median, CorrelationSpectrum, PairMode};

pub const DEFAULT_SEGMENTS: usize = 16;
pub const DEFAULT_T0: f64 = 4.5;
pub const DEFAULT_EPSILON: f64 = 1e-9;
/// The default KL threshold is this multiple of the null-model divergence.
pub const KL0_NULL_FACTOR: f64 = 10.0;

/// Size, mean and unbiased variance of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSummary {
    pub n: usize,
    pub mu: f64,
    pub sigma2: f64,
}

impl SampleSummary {
    pub fn new(n: usize, mu: f64, sigma2: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("sample size {n} too small for a variance")));
        }
        if !mu.is_finite() || !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::domain(format!("invalid summary mean {mu}, variance {sigma2}")));
        }
        Ok(SampleSummary { n, mu, sigma2 })
    }

    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::domain(format!("sample size {n} too small for a variance")));
        }
        let mu = xs.iter().sum::<f64>() / n as f64;
        let ss: f64 = xs.iter().map(|x| (x - mu) * (x - mu)).sum();
        SampleSummary::new(n, mu, ss / (n - 1) as f64)
    }
}

/// Outcome of Welch's t: a finite value, or a signed overflow when both variances vanish and the means differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TValue {
    Finite(f64),
    Overflow { positive: bool },
}

impl TValue {
    pub fn value(&self) -> f64 {
        match *self {
            TValue::Finite(t) => t,
            TValue::Overflow { positive: true } => f64::INFINITY,
            TValue::Overflow { positive: false } => f64::NEG_INFINITY,
        }
    }

    pub fn abs(&self) -> f64 {
        self.value().abs()
    }
}

impl Serialize for TValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_real(&self.value(), s)
    }
}

/// Finite reals as JSON numbers; infinities as the strings `"inf"` and `"-inf"`.
fn serialize_real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// `(mu_a - mu_b) / sqrt(sigma2_a / n_a + sigma2_b / n_b)`.
pub fn welch_t(a: &SampleSummary, b: &SampleSummary) -> TValue {
    let diff = a.mu - b.mu;
    let denom = (a.sigma2 / a.n as f64 + b.sigma2 / b.n as f64).sqrt();
    if denom == 0.0 {
        if diff == 0.0 {
            TValue::Finite(0.0)
        } else {
            TValue::Overflow { positive: diff > 0.0 }
        }
    } else {
        TValue::Finite(diff / denom)
    }
}

fn segment_of(c: f64, segments: usize) -> usize {
    bucket_index(c, segments)
}

fn welch_or_undefined(a: &[f64], b: &[f64]) -> Option<TValue> {
    let sa = SampleSummary::from_samples(a).ok()?;
    let sb = SampleSummary::from_samples(b).ok()?;
    Some(welch_t(&sa, &sb))
}

fn check_segment_inputs(raw_a: &[f64], raw_b: &[f64], segments: usize) -> Result<()> {
    if raw_a.is_empty() || raw_b.is_empty() {
        return Err(Error::domain("segment t-test needs two nonempty samples"));
    }
    if segments == 0 {
        return Err(Error::domain("segment count must be at least 1"));
    }
    Ok(())
}

/// Welch's t restricted to each of `segments` equal slices of `[-1, 1]`; `None` where either side has fewer than 2 values.
pub fn segment_t(raw_a: &[f64], raw_b: &[f64], segments: usize) -> Result<Vec<Option<TValue>>> {
    check_segment_inputs(raw_a, raw_b, segments)?;
    Ok((0..segments)
        .map(|k| {
            let pick = |xs: &[f64]| -> Vec<f64> { xs.iter().copied().filter(|&c| segment_of(c, segments) == k).collect() };
            welch_or_undefined(&pick(raw_a), &pick(raw_b))
        })
        .collect())
}

/// Entry `k` is Welch's t over the coefficients in segments `1..=k` of both samples.
///
/// An undefined entry (fewer than 2 values on a side) is `None` and does not affect later entries,
/// which are always computed from the raw values. The last entry covers everything and therefore
/// equals Welch's t of the full samples.
pub fn segmentwise_cumulative_t(raw_a: &[f64], raw_b: &[f64], segments: usize) -> Result<Vec<Option<TValue>>> {
    check_segment_inputs(raw_a, raw_b, segments)?;
    let seg_a: Vec<usize> = raw_a.iter().map(|&c| segment_of(c, segments)).collect();
    let seg_b: Vec<usize> = raw_b.iter().map(|&c| segment_of(c, segments)).collect();
    Ok((0..segments)
        .map(|k| {
            let upto = |xs: &[f64], segs: &[usize]| -> Vec<f64> {
                xs.iter().zip(segs).filter(|(_, &s)| s <= k).map(|(&c, _)| c).collect()
            };
            welch_or_undefined(&upto(raw_a, &seg_a), &upto(raw_b, &seg_b))
        })
        .collect())
}

/// `sum q_i ln(q_i / p_i)` after adding `epsilon` to every cell of both distributions and renormalizing.
pub fn kl_divergence_probs(q: &[f64], p: &[f64], epsilon: f64) -> Result<f64> {
    if q.len() != p.len() || q.is_empty() {
        return Err(Error::incomparable(format!(
            "distributions have {} and {} cells",
            q.len(),
            p.len()
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::domain(format!("epsilon must be positive, got {epsilon}")));
    }
    if q.iter().chain(p).any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::domain("distribution cells must be finite and non-negative"));
    }
    let smooth = |xs: &[f64]| -> Vec<f64> {
        let total: f64 = xs.iter().sum();
        let norm: Vec<f64> = xs.iter().map(|&x| if total > 0.0 { x / total } else { 0.0 } + epsilon).collect();
        let z: f64 = norm.iter().sum();
        norm.into_iter().map(|x| x / z).collect()
    };
    let (q, p) = (smooth(q), smooth(p));
    let d: f64 = q.iter().zip(&p).map(|(&qi, &pi)| qi * (qi / pi).ln()).sum();
    Ok(d.max(0.0))
}

/// KL divergence from spectrum `q` to reference spectrum `p`.
pub fn kl_divergence(q: &CorrelationSpectrum, p: &CorrelationSpectrum, epsilon: f64) -> Result<f64> {
    if q.bucket_count() != p.bucket_count() {
        return Err(Error::incomparable(format!(
            "bucket counts differ ({} vs {})",
            q.bucket_count(),
            p.bucket_count()
        )));
    }
    let as_f64 = |s: &CorrelationSpectrum| -> Vec<f64> { s.counts().iter().map(|&c| c as f64).collect() };
    if q.total() == 0 || p.total() == 0 {
        return Err(Error::domain("spectrum is empty"));
    }
    kl_divergence_probs(&as_f64(q), &as_f64(p), epsilon)
}

/// Divergence between the two halves of a reference population: `KL(second || first)`, splitting by
/// position. `None` below 4 vectors, where a half cannot form a pair spectrum worth comparing.
pub fn null_model_kl(reference: &[ResponseBitVector], buckets: usize, epsilon: f64) -> Result<Option<f64>> {
    if reference.len() < 4 {
        return Ok(None);
    }
    let half = reference.len() / 2;
    let first = build_spectrum(&reference[..half], buckets, PairMode::UnorderedDistinct)?;
    let second = build_spectrum(&reference[half..], buckets, PairMode::UnorderedDistinct)?;
    kl_divergence(&second, &first, epsilon).map(Some)
}

/// `KL0_NULL_FACTOR` times the null-model divergence, or `+inf` when there is no null model.
pub fn calibrated_kl0(reference: &[ResponseBitVector], buckets: usize, epsilon: f64) -> Result<f64> {
    Ok(null_model_kl(reference, buckets, epsilon)?.map_or(f64::INFINITY, |d| KL0_NULL_FACTOR * d))
}

/// Percentage of ones.
pub fn uniformity(v: &ResponseBitVector) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::domain("uniformity of an empty vector"));
    }
    Ok(100.0 * v.bits().count_ones() as f64 / v.len() as f64)
}

/// `100 * min / max` of two uniformity percentages.
pub fn similarity_percent(u_correct: f64, u_faulty: f64) -> Result<f64> {
    for u in [u_correct, u_faulty] {
        if !(u > 0.0 && u <= 100.0) {
            return Err(Error::domain(format!("uniformity {u} outside (0, 100]")));
        }
    }
    Ok(100.0 * u_correct.min(u_faulty) / u_correct.max(u_faulty))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Fails iff the last cumulative t exceeds `t0` in magnitude or the divergence exceeds `kl0`.
pub fn verdict(cumulative_t: &[Option<TValue>], kl: f64, t0: f64, kl0: f64) -> Verdict {
    let t_fails = cumulative_t.last().copied().flatten().is_some_and(|t| t.abs() > t0);
    if t_fails || kl > kl0 {
        Verdict::Fail
    } else {
        Verdict::Pass
    }
}

/// Thresholds and tuning for a spectrum comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub segments: usize,
    pub t0: f64,
    pub kl0: f64,
    pub epsilon: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            segments: DEFAULT_SEGMENTS,
            t0: DEFAULT_T0,
            kl0: f64::INFINITY,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if self.segments == 0 {
            return Err(Error::config("segment count must be at least 1"));
        }
        if self.t0.is_nan() || self.t0 < 0.0 {
            return Err(Error::config(format!("t0 must be >= 0, got {}", self.t0)));
        }
        if self.kl0.is_nan() || self.kl0 < 0.0 {
            return Err(Error::config(format!("kl0 must be >= 0, got {}", self.kl0)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Audit record for one response bit: test spectrum `Q` against reference spectrum `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct BitComparison {
    pub bit: Option<u8>,
    pub thresholds: Thresholds,
    pub pair_mode: PairMode,
    pub n_test: usize,
    pub n_reference: usize,
    pub mean_test: f64,
    pub mean_reference: f64,
    pub median_test: f64,
    pub median_reference: f64,
    pub segment_t: Vec<Option<TValue>>,
    pub cumulative_t: Vec<Option<TValue>>,
    pub kl_divergence: f64,
    pub verdict: Verdict,
}

impl BitComparison {
    pub fn final_t(&self) -> Option<TValue> {
        self.cumulative_t.last().copied().flatten()
    }
}

/// Per-bit comparisons; each bit carries the thresholds it was judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComparisonReport {
    pub bits: Vec<BitComparison>,
}

impl SpectrumComparisonReport {
    pub fn verdict(&self) -> Verdict {
        if self.bits.iter().any(|b| b.verdict == Verdict::Fail) {
            Verdict::Fail
        } else {
            Verdict::Pass
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Compares test spectrum `q` (e.g. a suspect population) with reference `p`.
pub fn compare_spectra(q: &CorrelationSpectrum, p: &CorrelationSpectrum, th: &Thresholds) -> Result<BitComparison> {
    th.validate()?;
    if q.mode() != p.mode() {
        return Err(Error::incomparable("spectra use different pair modes"));
    }
    let kl = kl_divergence(q, p, th.epsilon)?;
    let (a, b) = (q.coefficients(), p.coefficients());
    let cumulative_t = segmentwise_cumulative_t(&a, &b, th.segments)?;
    Ok(BitComparison {
        bit: q.bit_index().or(p.bit_index()),
        thresholds: *th,
        pair_mode: q.mode(),
        n_test: a.len(),
        n_reference: b.len(),
        mean_test: mean(&a),
        mean_reference: mean(&b),
        median_test: median(&a),
        median_reference: median(&b),
        segment_t: segment_t(&a, &b, th.segments)?,
        verdict: verdict(&cumulative_t, kl, th.t0, th.kl0),
        cumulative_t,
        kl_divergence: kl,
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl Serialize for Thresholds {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Real(f64);
        impl Serialize for Real {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                serialize_real(&self.0, s)
            }
        }
        let mut st = s.serialize_struct("Thresholds", 4)?;
        st.serialize_field("segments", &self.segments)?;
        st.serialize_field("t0", &Real(self.t0))?;
        st.serialize_field("kl0", &Real(self.kl0))?;
        st.serialize_field("epsilon", &Real(self.epsilon))?;
        st.end()
    }
}

impl Serialize for BitComparison {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("BitComparison", 14)?;
        st.serialize_field("bit", &self.bit)?;
        st.serialize_field("thresholds", &self.thresholds)?;
        st.serialize_field("pair_mode", &self.pair_mode)?;
        st.serialize_field("n_test", &self.n_test)?;
        st.serialize_field("n_reference", &self.n_reference)?;
        st.serialize_field("mean_test", &self.mean_test)?;
        st.serialize_field("mean_reference", &self.mean_reference)?;
        st.serialize_field("median_test", &self.median_test)?;
        st.serialize_field("median_reference", &self.median_reference)?;
        st.serialize_field("segment_t", &self.segment_t)?;
        st.serialize_field("cumulative_t", &self.cumulative_t)?;
        st.serialize_field("final_t", &self.final_t())?;
        st.serialize_field("kl", &self.kl_divergence)?;
        st.serialize_field("verdict", &self.verdict)?;
        st.end()
    }
}

impl Serialize for SpectrumComparisonReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SpectrumComparisonReport", 2)?;
        st.serialize_field("bits", &self.bits)?;
        st.serialize_field("verdict", &self.verdict())?;
        st.end()
    }
}
