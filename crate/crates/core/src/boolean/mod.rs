//! Boolean functions as bit vectors and their pairwise correlation.
//!
//! A PUF response bit evaluated over an ordered challenge set is treated as a
//! sample of a Boolean function. Full truth tables are the special case where
//! the challenge set is every input of an `m`-variable function in natural
//! order. The closed-form counting results for full truth tables live in
//! [`theory`].

mod bits;
pub mod theory;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use bits::PackedBits;

use crate::error::{Error, Result};

/// Largest variable count accepted for explicit truth tables.
pub const MAX_TABLE_VARS: u32 = 20;

/// Identifies the ordered challenge set a response vector was evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ChallengeSetId(pub u64);

impl ChallengeSetId {
    /// Id of the canonical ordering `0, 1, ..., 2^m - 1` used by truth tables.
    pub fn canonical(m: u32) -> Self {
        ChallengeSetId(0x7472_7574_6800_0000 | u64::from(m))
    }
}

impl fmt::Display for ChallengeSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Which PUF instance and response bit a vector came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Source {
    pub instance: usize,
    /// 1-based response bit index.
    pub bit: u8,
}

/// One response bit of one instance over an ordered challenge set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseBitVector {
    bits: PackedBits,
    challenge_set: ChallengeSetId,
    source: Option<Source>,
}

impl ResponseBitVector {
    pub fn new(bits: PackedBits, challenge_set: ChallengeSetId, source: Option<Source>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::domain("response vector must hold at least one bit"));
        }
        Ok(ResponseBitVector {
            bits,
            challenge_set,
            source,
        })
    }

    pub fn bits(&self) -> &PackedBits {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn challenge_set(&self) -> ChallengeSetId {
        self.challenge_set
    }

    pub fn source(&self) -> Option<Source> {
        self.source
    }

    pub fn complement(&self) -> Self {
        ResponseBitVector {
            bits: self.bits.complement(),
            ..self.clone()
        }
    }

    pub fn check_comparable(&self, other: &ResponseBitVector) -> Result<()> {
        if self.challenge_set != other.challenge_set {
            return Err(Error::incomparable(format!(
                "challenge sets differ ({} vs {})",
                self.challenge_set, other.challenge_set
            )));
        }
        if self.len() != other.len() {
            return Err(Error::incomparable(format!(
                "lengths differ ({} vs {})",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// Full truth table of an `m`-variable Boolean function; bit `i` is the output for input `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    m: u32,
    bits: PackedBits,
}

impl TruthTable {
    pub fn new(m: u32, bits: PackedBits) -> Result<Self> {
        check_table_vars(m)?;
        if bits.len() != 1usize << m {
            return Err(Error::domain(format!(
                "truth table for m = {m} needs {} bits, got {}",
                1usize << m,
                bits.len()
            )));
        }
        Ok(TruthTable { m, bits })
    }

    /// Table whose bits are the low `2^m` bits of `value` (m <= 6).
    pub fn from_u64(m: u32, value: u64) -> Result<Self> {
        if m > 6 {
            return Err(Error::domain(format!("m = {m} does not fit in a u64 table")));
        }
        check_table_vars(m)?;
        TruthTable::new(m, PackedBits::from_words(vec![value], 1 << m)?)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bits: PackedBits = s.parse()?;
        let len = bits.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::domain(format!(
                "truth table length {len} is not 2^m for m >= 1"
            )));
        }
        TruthTable::new(len.trailing_zeros(), bits)
    }

    pub fn vars(&self) -> u32 {
        self.m
    }

    pub fn bits(&self) -> &PackedBits {
        &self.bits
    }

    pub fn complement(&self) -> Self {
        TruthTable {
            m: self.m,
            bits: self.bits.complement(),
        }
    }

    /// Polarity form: `+1` where the output is 0, `-1` where it is 1.
    pub fn polarity(&self, x: usize) -> i64 {
        if self.bits.get(x) {
            -1
        } else {
            1
        }
    }

    pub fn to_response_vector(&self) -> ResponseBitVector {
        ResponseBitVector {
            bits: self.bits.clone(),
            challenge_set: ChallengeSetId::canonical(self.m),
            source: None,
        }
    }
}

impl TryFrom<&ResponseBitVector> for TruthTable {
    type Error = Error;

    fn try_from(v: &ResponseBitVector) -> Result<Self> {
        let len = v.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::domain(format!(
                "vector of length {len} is not a full truth table"
            )));
        }
        let m = len.trailing_zeros();
        if v.challenge_set != ChallengeSetId::canonical(m) {
            return Err(Error::domain(
                "vector was not evaluated on the canonical input ordering",
            ));
        }
        TruthTable::new(m, v.bits.clone())
    }
}

/// XOR displacement applied to the input of a truth table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftVector {
    alpha: usize,
    m: u32,
}

impl ShiftVector {
    pub fn new(alpha: usize, m: u32) -> Result<Self> {
        check_table_vars(m)?;
        if alpha >= 1usize << m {
            return Err(Error::domain(format!(
                "shift {alpha} out of range for m = {m}"
            )));
        }
        Ok(ShiftVector { alpha, m })
    }

    pub fn value(&self) -> usize {
        self.alpha
    }
}

fn check_table_vars(m: u32) -> Result<()> {
    if !(1..=MAX_TABLE_VARS).contains(&m) {
        return Err(Error::domain(format!(
            "variable count {m} outside 1..={MAX_TABLE_VARS}"
        )));
    }
    Ok(())
}

/// Hamming distance between two comparable vectors.
pub fn mismatch_count(f: &ResponseBitVector, g: &ResponseBitVector) -> Result<usize> {
    f.check_comparable(g)?;
    Ok(f.bits.hamming_distance(&g.bits))
}

/// Correlation coefficient `(L - 2d) / L` where `d` is the mismatch count.
pub fn correlation(f: &ResponseBitVector, g: &ResponseBitVector) -> Result<f64> {
    let d = mismatch_count(f, g)?;
    Ok(coefficient_from_distance(d, f.len()))
}

pub(crate) fn coefficient_from_distance(d: usize, len: usize) -> f64 {
    (len as f64 - 2.0 * d as f64) / len as f64
}

/// `sum_x F(x) F(x ^ alpha)` over the polarity form of `f`.
pub fn autocorrelation(f: &TruthTable, alpha: ShiftVector) -> Result<i64> {
    cross_correlation(f, f, alpha)
}

/// `sum_x F(x) G(x ^ alpha)` over the polarity forms of `f` and `g`.
pub fn cross_correlation(f: &TruthTable, g: &TruthTable, alpha: ShiftVector) -> Result<i64> {
    if f.m != g.m || alpha.m != f.m {
        return Err(Error::incomparable(format!(
            "variable counts differ (f: {}, g: {}, shift: {})",
            f.m, g.m, alpha.m
        )));
    }
    let a = alpha.alpha;
    Ok((0..1usize << f.m)
        .map(|x| f.polarity(x) * g.polarity(x ^ a))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tt(s: &str) -> TruthTable {
        TruthTable::parse(s).unwrap()
    }

    fn rv(s: &str) -> ResponseBitVector {
        ResponseBitVector::new(s.parse().unwrap(), ChallengeSetId(1), None).unwrap()
    }

    #[test]
    fn correlation_of_single_mismatch_pair() {
        let f = tt("10000000").to_response_vector();
        let g = tt("10000001").to_response_vector();
        assert_eq!(mismatch_count(&f, &g).unwrap(), 1);
        assert_eq!(correlation(&f, &g).unwrap(), 0.75);
    }

    #[test]
    fn correlation_extremes() {
        let f = rv("1101001");
        assert_eq!(correlation(&f, &f).unwrap(), 1.0);
        assert_eq!(correlation(&f, &f.complement()).unwrap(), -1.0);
        assert_eq!(mismatch_count(&f, &f).unwrap(), 0);
        let g = rv("10010110");
        assert_eq!(mismatch_count(&g, &g.complement()).unwrap(), 8);
    }

    #[test]
    fn half_mismatch_is_uncorrelated() {
        assert_eq!(correlation(&rv("1100"), &rv("1001")).unwrap(), 0.0);
    }

    #[test]
    fn incomparable_vectors_are_rejected() {
        let a = rv("1100");
        let b = rv("110");
        assert!(matches!(correlation(&a, &b), Err(Error::Incomparable(_))));
        let c = ResponseBitVector::new("1100".parse().unwrap(), ChallengeSetId(2), None).unwrap();
        assert!(matches!(mismatch_count(&a, &c), Err(Error::Incomparable(_))));
    }

    #[test]
    fn empty_vector_rejected() {
        assert!(ResponseBitVector::new(PackedBits::zeros(0), ChallengeSetId(0), None).is_err());
    }

    #[test]
    fn autocorrelation_cases() {
        let f = tt("10000000");
        assert_eq!(autocorrelation(&f, ShiftVector::new(0, 3).unwrap()).unwrap(), 8);
        assert_eq!(autocorrelation(&f, ShiftVector::new(1, 3).unwrap()).unwrap(), 4);
        let zero = tt("00000000");
        assert_eq!(autocorrelation(&zero, ShiftVector::new(5, 3).unwrap()).unwrap(), 8);
    }

    #[test]
    fn cross_correlation_cases() {
        let f = tt("10000000");
        let g = tt("10000001");
        let zero = ShiftVector::new(0, 3).unwrap();
        assert_eq!(cross_correlation(&f, &g, zero).unwrap(), 6);
        assert_eq!(cross_correlation(&f, &f, zero).unwrap(), 8);
        assert_eq!(cross_correlation(&f, &f.complement(), zero).unwrap(), -8);
    }

    #[test]
    fn shift_out_of_range() {
        assert!(ShiftVector::new(8, 3).is_err());
        assert!(ShiftVector::new(7, 3).is_ok());
    }

    #[test]
    fn mismatched_variable_counts() {
        let f = tt("1000");
        let g = tt("10000000");
        let s = ShiftVector::new(0, 2).unwrap();
        assert!(cross_correlation(&f, &g, s).is_err());
    }

    #[test]
    fn partial_vector_is_not_a_truth_table() {
        assert!(TruthTable::try_from(&rv("100")).is_err());
        // right length, wrong challenge ordering
        assert!(TruthTable::try_from(&rv("1000")).is_err());
        let v = tt("1000").to_response_vector();
        assert_eq!(TruthTable::try_from(&v).unwrap(), tt("1000"));
    }

    #[test]
    fn from_u64_uses_low_bits() {
        let t = TruthTable::from_u64(3, 0b1000_0001).unwrap();
        assert_eq!(t.bits().to_string(), "10000001");
        assert!(TruthTable::from_u64(7, 0).is_err());
    }
}
