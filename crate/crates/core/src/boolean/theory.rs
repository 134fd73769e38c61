//! Exact correlation-spectrum combinatorics for the space of all `m`-variable
//! Boolean functions.
//!
//! Two full truth tables with `i` mismatches have coefficient `1 - i / 2^(m-1)`,
//! so the achievable coefficients form a lattice of `2^m + 1` points. Counting
//! follows ordered-pair semantics (self-pairs included): the number of ordered
//! pairs `(f, g)` at mismatch count `i` is `2^(2^m) * C(2^m, i)`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest `m` accepted by the closed forms.
pub const MAX_CLOSED_FORM_VARS: u32 = 16;
/// Largest `m` the brute-force enumeration will attempt.
pub const MAX_EXHAUSTIVE_VARS: u32 = 4;

const LATTICE_TOLERANCE: f64 = 1e-9;

fn check_vars(m: u32) -> Result<()> {
    if !(1..=MAX_CLOSED_FORM_VARS).contains(&m) {
        return Err(Error::domain(format!(
            "variable count {m} outside 1..={MAX_CLOSED_FORM_VARS}"
        )));
    }
    Ok(())
}

fn table_len(m: u32) -> u64 {
    1u64 << m
}

/// Coefficient `1 - i / 2^(m-1)` for `i` mismatches between full `m`-variable tables.
pub fn coeff_from_mismatches(i: u64, m: u32) -> Result<f64> {
    check_vars(m)?;
    let n = table_len(m);
    if i > n {
        return Err(Error::domain(format!(
            "mismatch count {i} exceeds table length {n}"
        )));
    }
    let half = (n / 2) as f64;
    Ok((half - i as f64) / half)
}

/// Inverse of [`coeff_from_mismatches`]; rejects coefficients off the lattice.
pub fn mismatches_from_coeff(coeff: f64, m: u32) -> Result<u64> {
    check_vars(m)?;
    if !coeff.is_finite() {
        return Err(Error::domain(format!("coefficient {coeff} is not finite")));
    }
    let n = table_len(m);
    let exact = (n / 2) as f64 * (1.0 - coeff);
    let rounded = exact.round();
    if (exact - rounded).abs() > LATTICE_TOLERANCE || rounded < 0.0 || rounded > n as f64 {
        return Err(Error::domain(format!(
            "coefficient {coeff} is not on the m = {m} lattice"
        )));
    }
    Ok(rounded as u64)
}

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        // acc * (n - j) is divisible by (j + 1) at every step
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

/// `2^(2^m)`, the number of `m`-variable Boolean functions.
pub fn function_count(m: u32) -> Result<BigUint> {
    check_vars(m)?;
    Ok(BigUint::one() << table_len(m))
}

/// Ordered pairs of `m`-variable functions with exactly `i` mismatches.
pub fn pair_count_for_mismatches(i: u64, m: u32) -> Result<BigUint> {
    check_vars(m)?;
    let n = table_len(m);
    if i > n {
        return Err(Error::domain(format!(
            "mismatch count {i} exceeds table length {n}"
        )));
    }
    Ok(function_count(m)? * binomial(n, i))
}

/// Ordered pairs of `m`-variable functions whose correlation coefficient is `coeff`.
pub fn pair_count(coeff: f64, m: u32) -> Result<BigUint> {
    pair_count_for_mismatches(mismatches_from_coeff(coeff, m)?, m)
}

/// Probability `C(2^m, i) / 2^(2^m)` that a uniformly random ordered pair lands on mismatch count `i`.
pub fn bucket_probability_for_mismatches(i: u64, m: u32) -> Result<f64> {
    check_vars(m)?;
    let n = table_len(m);
    if i > n {
        return Err(Error::domain(format!(
            "mismatch count {i} exceeds table length {n}"
        )));
    }
    Ok(ratio_to_pow2(&binomial(n, i), n))
}

/// Probability that a uniformly random ordered pair has coefficient `coeff`.
pub fn bucket_probability(coeff: f64, m: u32) -> Result<f64> {
    bucket_probability_for_mismatches(mismatches_from_coeff(coeff, m)?, m)
}

/// `num / 2^exp` as f64 without overflowing intermediate conversions.
fn ratio_to_pow2(num: &BigUint, exp: u64) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let bits = num.bits();
    let shift = bits.saturating_sub(64);
    let mantissa = (num >> shift).to_u64().expect("shifted to at most 64 bits") as f64;
    let scale = shift as i64 - exp as i64;
    mantissa * pow2(scale)
}

fn pow2(e: i64) -> f64 {
    // powi takes i32; clamp well past the f64 range so extreme exponents saturate to 0 / inf
    2f64.powi(e.clamp(-2000, 2000) as i32)
}

/// One lattice point of the theoretical spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRow {
    pub mismatches: u64,
    pub coefficient: f64,
    pub pair_count: BigUint,
    pub probability: f64,
}

/// Every lattice point for `m` variables, from coefficient `+1` (no mismatches) down to `-1`.
pub fn lattice_table(m: u32) -> Result<Vec<LatticeRow>> {
    check_vars(m)?;
    let n = table_len(m);
    let functions = function_count(m)?;
    let mut rows = Vec::with_capacity(n as usize + 1);
    let mut binom = BigUint::one();
    for i in 0..=n {
        if i > 0 {
            binom = binom * (n - i + 1) / i;
        }
        rows.push(LatticeRow {
            mismatches: i,
            coefficient: coeff_from_mismatches(i, m)?,
            pair_count: &functions * &binom,
            probability: ratio_to_pow2(&binom, n),
        });
    }
    Ok(rows)
}

/// Ordered-pair counts per mismatch count, obtained by enumerating every pair of functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveSpectrum {
    pub m: u32,
    /// `counts[i]` is the number of ordered pairs with `i` mismatches.
    pub counts: Vec<u64>,
}

impl ExhaustiveSpectrum {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(coefficient, count)` rows from `+1` down to `-1`.
    pub fn rows(&self) -> Vec<(f64, u64)> {
        let half = (table_len(self.m) / 2) as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| ((half - i as f64) / half, c))
            .collect()
    }
}

/// Brute-force oracle: iterate all `2^(2^m) x 2^(2^m)` ordered pairs and histogram their mismatch counts.
pub fn enumerate_exhaustive_spectrum(m: u32) -> Result<ExhaustiveSpectrum> {
    if !(1..=MAX_EXHAUSTIVE_VARS).contains(&m) {
        return Err(Error::domain(format!(
            "exhaustive enumeration supports 1..={MAX_EXHAUSTIVE_VARS} variables, got {m}"
        )));
    }
    let len = table_len(m) as usize;
    let functions = 1u32 << len;
    let counts = (0..functions)
        .into_par_iter()
        .fold(
            || vec![0u64; len + 1],
            |mut hist, f| {
                let mut local = [0u32; 17];
                for g in 0..functions {
                    local[(f ^ g).count_ones() as usize] += 1;
                }
                for (h, l) in hist.iter_mut().zip(local.iter()) {
                    *h += u64::from(*l);
                }
                hist
            },
        )
        .reduce(
            || vec![0u64; len + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(ExhaustiveSpectrum { m, counts })
}
