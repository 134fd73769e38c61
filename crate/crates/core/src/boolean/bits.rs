use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Fixed-length bit sequence packed into 64-bit words, bit `i` at word `i / 64`, position `i % 64`.
///
/// Bits past `len` in the last word are always zero so that popcounts over whole words are exact.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PackedBits {
    words: Vec<u64>,
    len: usize,
}

impl PackedBits {
    pub fn zeros(len: usize) -> Self {
        PackedBits {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut bits = PackedBits {
            words: vec![u64::MAX; len.div_ceil(64)],
            len,
        };
        bits.clear_tail();
        bits
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0usize;
        for bit in iter {
            if len.is_multiple_of(64) {
                words.push(0);
            }
            if bit {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        PackedBits { words, len }
    }

    /// Builds from raw words; bits beyond `len` are discarded.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Result<Self> {
        let needed = len.div_ceil(64);
        if words.len() < needed {
            return Err(Error::domain(format!(
                "{} words cannot hold {len} bits",
                words.len()
            )));
        }
        words.truncate(needed);
        let mut bits = PackedBits { words, len };
        bits.clear_tail();
        Ok(bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, index: usize) -> bool {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        (self.words[index / 64] >> (index % 64)) & 1 == 1
    }

    pub fn set(&mut self, index: usize, value: bool) {
        assert!(index < self.len, "bit index {index} out of range {}", self.len);
        let mask = 1u64 << (index % 64);
        if value {
            self.words[index / 64] |= mask;
        } else {
            self.words[index / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of positions where the two sequences differ. Panics on length mismatch.
    pub fn hamming_distance(&self, other: &PackedBits) -> usize {
        assert_eq!(self.len, other.len, "hamming distance over unequal lengths");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn complement(&self) -> PackedBits {
        let mut out = PackedBits {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        out.clear_tail();
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for PackedBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PackedBits<{}>({})", self.len, self)
    }
}

/// Renders as a `0`/`1` string, index 0 first.
impl fmt::Display for PackedBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for PackedBits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::domain(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(PackedBits::from_bools)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let bits: PackedBits = "10000001".parse().unwrap();
        assert_eq!(bits.len(), 8);
        assert!(bits.get(0));
        assert!(bits.get(7));
        assert!(!bits.get(3));
        assert_eq!(bits.to_string(), "10000001");
    }

    #[test]
    fn complement_masks_tail() {
        let bits = PackedBits::zeros(70);
        let c = bits.complement();
        assert_eq!(c.count_ones(), 70);
        assert_eq!(c, PackedBits::ones(70));
    }

    #[test]
    fn hamming_crosses_word_boundary() {
        let mut a = PackedBits::zeros(130);
        let b = PackedBits::zeros(130);
        a.set(63, true);
        a.set(64, true);
        a.set(129, true);
        assert_eq!(a.hamming_distance(&b), 3);
    }

    #[test]
    fn rejects_bad_characters() {
        assert!("10x1".parse::<PackedBits>().is_err());
    }

    #[test]
    fn from_words_drops_excess_bits() {
        let bits = PackedBits::from_words(vec![u64::MAX, 7], 66).unwrap();
        assert_eq!(bits.count_ones(), 66);
        assert!(PackedBits::from_words(vec![0], 65).is_err());
    }
}
