use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::fault::{FaultSite, FaultSpec, Lane};
use super::params::{DapufParams, N_CHAINS};
use crate::error::{Error, Result};

/// Independent RNG stream domains derived from the master seed.
pub(crate) mod domain {
    pub const LAYOUT: u64 = 1;
    pub const INSTANCE: u64 = 2;
    pub const CHALLENGES: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const NOISE_FAULTY: u64 = 5;
}

/// ChaCha stream keyed directly by `(seed, domain, a, b)`; no hashing, no shared state.
pub(crate) fn stream(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, domain, a, b]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Chain pairs `(a, b)` with `a < b` in lexicographic order; one per arbiter pair.
pub const CHAIN_PAIRS: [(usize, usize); 10] = [
    (0, 1),
    (0, 2),
    (0, 3),
    (0, 4),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
    (2, 4),
    (3, 4),
];

/// Number of arbiters: a top and a bottom arbiter per chain pair.
pub const N_ARBITERS: usize = 2 * CHAIN_PAIRS.len();
/// Response width.
pub const RESPONSE_BITS: usize = 4;

/// `(chain pair, lane)` raced by arbiter `k`: the ten top-lane arbiters come first, then the ten bottom-lane ones.
pub fn arbiter(k: usize) -> ((usize, usize), Lane) {
    assert!(k < N_ARBITERS, "arbiter index {k} out of range");
    let lane = if k < CHAIN_PAIRS.len() { Lane::Top } else { Lane::Bottom };
    (CHAIN_PAIRS[k % CHAIN_PAIRS.len()], lane)
}

/// 0-based response bit fed by arbiter `k` (round robin).
pub fn arbiter_group(k: usize) -> usize {
    k % RESPONSE_BITS
}

/// Path segment through one switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    /// Top input to top output (challenge bit 0).
    TopStraight = 0,
    /// Top input to bottom output (challenge bit 1).
    TopCross = 1,
    /// Bottom input to bottom output (challenge bit 0).
    BottomStraight = 2,
    /// Bottom input to top output (challenge bit 1).
    BottomCross = 3,
}

/// An `n_stages`-bit challenge; bit `s` drives stage `s`, stage 0 at the input end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Challenge {
    bits: u64,
    n_stages: u8,
}

impl Challenge {
    pub fn new(bits: u64, n_stages: usize) -> Result<Self> {
        if !(1..=64).contains(&n_stages) {
            return Err(Error::domain(format!("challenge length {n_stages} outside 1..=64")));
        }
        if n_stages < 64 && bits >> n_stages != 0 {
            return Err(Error::domain(format!(
                "challenge {bits:#x} has bits beyond stage {n_stages}"
            )));
        }
        Ok(Challenge {
            bits,
            n_stages: n_stages as u8,
        })
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        usize::from(self.n_stages)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bit(&self, stage: usize) -> bool {
        assert!(stage < self.len());
        (self.bits >> stage) & 1 == 1
    }

    pub fn with_bit(&self, stage: usize, value: bool) -> Challenge {
        assert!(stage < self.len());
        let bits = if value {
            self.bits | 1 << stage
        } else {
            self.bits & !(1 << stage)
        };
        Challenge { bits, ..*self }
    }
}

/// A 4-bit response; response bit `b` (1-based) is bit `b - 1` of the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Response(u8);

impl Response {
    pub fn new(value: u8) -> Result<Self> {
        if value >> RESPONSE_BITS != 0 {
            return Err(Error::domain(format!("response {value:#x} wider than 4 bits")));
        }
        Ok(Response(value))
    }

    pub fn value(&self) -> u8 {
        self.0
    }

    /// Response bit `b`, 1-based.
    pub fn bit(&self, b: usize) -> bool {
        assert!((1..=RESPONSE_BITS).contains(&b), "response bit {b} out of range");
        (self.0 >> (b - 1)) & 1 == 1
    }
}

/// One simulated 5-4 DAPUF: fixed segment delays per chain and stage, plus optional fault.
#[derive(Debug, Clone, PartialEq)]
pub struct DapufInstance {
    id: u64,
    seed: u64,
    n_stages: usize,
    noise_sigma: f64,
    /// Indexed `[chain * n_stages + stage][segment]`.
    delays: Vec<[f64; 4]>,
    fault: Option<FaultSpec>,
}

/// Path-end arrival times `[top, bottom]` of every chain.
type Arrivals = [[f64; 2]; N_CHAINS];

impl DapufInstance {
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Master seed of the population the instance was drawn from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_stages(&self) -> usize {
        self.n_stages
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn fault(&self) -> Option<&FaultSpec> {
        self.fault.as_ref()
    }

    pub fn delay(&self, chain: usize, stage: usize, segment: Segment) -> f64 {
        self.delays[self.slot(chain, stage)][segment as usize]
    }

    /// Overrides one segment delay; must stay strictly positive.
    pub fn set_delay(&mut self, chain: usize, stage: usize, segment: Segment, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::domain(format!("delay must be positive, got {value}")));
        }
        let slot = self.slot(chain, stage);
        self.delays[slot][segment as usize] = value;
        Ok(())
    }

    /// Same instance with per-evaluation jitter replaced.
    pub fn with_noise_sigma(&self, noise_sigma: f64) -> Result<Self> {
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(Error::domain(format!("noise_sigma must be >= 0, got {noise_sigma}")));
        }
        Ok(DapufInstance {
            noise_sigma,
            ..self.clone()
        })
    }

    fn slot(&self, chain: usize, stage: usize) -> usize {
        assert!(chain < N_CHAINS && stage < self.n_stages, "chain/stage out of range");
        chain * self.n_stages + stage
    }

    fn check_challenge(&self, c: &Challenge) -> Result<()> {
        if c.len() != self.n_stages {
            return Err(Error::domain(format!(
                "challenge has {} bits, instance has {} stages",
                c.len(),
                self.n_stages
            )));
        }
        Ok(())
    }

    fn chain_arrivals(&self, chain: usize, c: &Challenge) -> [f64; 2] {
        let fault = self.fault.as_ref().filter(|f| f.affects(chain));
        let delays = &self.delays[chain * self.n_stages..(chain + 1) * self.n_stages];
        let (mut top, mut bot) = (0.0f64, 0.0f64);
        for (s, d) in delays.iter().enumerate() {
            let mut bit = (c.bits >> s) & 1 == 1;
            let faulty_stage = fault.filter(|f| f.stage_index == s);
            if let Some(FaultSpec { site: FaultSite::Select, stuck_value, .. }) = faulty_stage {
                bit = *stuck_value;
            }
            (top, bot) = if bit {
                (bot + d[Segment::BottomCross as usize], top + d[Segment::TopCross as usize])
            } else {
                (top + d[Segment::TopStraight as usize], bot + d[Segment::BottomStraight as usize])
            };
            if let Some(FaultSpec { site: FaultSite::Output(lane), stuck_value, .. }) = faulty_stage {
                let pinned = if *stuck_value { f64::NEG_INFINITY } else { f64::INFINITY };
                match lane {
                    Lane::Top => top = pinned,
                    Lane::Bottom => bot = pinned,
                }
            }
        }
        [top, bot]
    }

    fn arrivals(&self, c: &Challenge) -> Arrivals {
        std::array::from_fn(|chain| self.chain_arrivals(chain, c))
    }

    fn add_noise<R: Rng + ?Sized>(&self, base: &Arrivals, rng: &mut R) -> Arrivals {
        if self.noise_sigma == 0.0 {
            return *base;
        }
        let mut out = *base;
        for ends in out.iter_mut() {
            for t in ends.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *t += self.noise_sigma * z;
            }
        }
        out
    }

    /// Evaluates one noisy measurement of challenge `c`.
    pub fn evaluate_raw<R: Rng + ?Sized>(&self, c: &Challenge, rng: &mut R) -> Result<Response> {
        self.check_challenge(c)?;
        let base = self.arrivals(c);
        Ok(resolve(&self.add_noise(&base, rng)))
    }

    /// Per-bit majority over `k` noisy measurements.
    pub fn evaluate_majority<R: Rng + ?Sized>(&self, c: &Challenge, k: usize, rng: &mut R) -> Result<Response> {
        check_votes(k)?;
        self.check_challenge(c)?;
        Ok(self.majority_unchecked(c, k, rng))
    }

    pub(crate) fn majority_unchecked<R: Rng + ?Sized>(&self, c: &Challenge, k: usize, rng: &mut R) -> Response {
        let base = self.arrivals(c);
        if self.noise_sigma == 0.0 {
            return resolve(&base);
        }
        let mut ones = [0usize; RESPONSE_BITS];
        for _ in 0..k {
            let r = resolve(&self.add_noise(&base, rng));
            for (b, n) in ones.iter_mut().enumerate() {
                *n += usize::from((r.0 >> b) & 1);
            }
        }
        let value = ones
            .iter()
            .enumerate()
            .fold(0u8, |acc, (b, &n)| acc | (u8::from(2 * n > k) << b));
        Response(value)
    }

    /// Copy of the instance with `fault` applied; the original is left untouched.
    pub fn inject_fault(&self, fault: &FaultSpec) -> Result<Self> {
        fault.check_stages(self.n_stages)?;
        Ok(DapufInstance {
            fault: Some(fault.clone()),
            ..self.clone()
        })
    }
}

pub(crate) fn check_votes(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::domain(format!("measurement count k = {k} must be odd")));
    }
    Ok(())
}

/// Arbiter decisions XOR-reduced into the response. An arbiter outputs 1 iff
/// the lower-index chain arrives strictly first, so exact ties give 0.
fn resolve(arr: &Arrivals) -> Response {
    let mut value = 0u8;
    for k in 0..N_ARBITERS {
        let ((a, b), lane) = arbiter(k);
        let l = match lane {
            Lane::Top => 0,
            Lane::Bottom => 1,
        };
        if arr[a][l] < arr[b][l] {
            value ^= 1 << arbiter_group(k);
        }
    }
    Response(value)
}

/// Draws `count` instances with independent delay tables.
///
/// Every segment delay is `delay_mean + layout + variation`, where the layout
/// term is shared by the whole population and the variation is drawn per
/// instance. Non-positive draws are redrawn.
pub fn generate_population(params: &DapufParams, count: usize) -> Result<Vec<DapufInstance>> {
    params.validate()?;
    if count == 0 {
        return Err(Error::config("population size must be at least 1"));
    }
    let slots = N_CHAINS * params.n_stages;
    let mut layout_rng = stream(params.seed, domain::LAYOUT, 0, 0);
    let base: Vec<[f64; 4]> = (0..slots)
        .map(|_| std::array::from_fn(|_| positive_draw(params.delay_mean, params.layout_sigma, &mut layout_rng)))
        .collect();
    Ok((0..count as u64)
        .map(|id| {
            let mut rng = stream(params.seed, domain::INSTANCE, id, 0);
            let delays = base
                .iter()
                .map(|seg| std::array::from_fn(|i| positive_draw(seg[i], params.delay_sigma, &mut rng)))
                .collect();
            DapufInstance {
                id,
                seed: params.seed,
                n_stages: params.n_stages,
                noise_sigma: params.noise_sigma,
                delays,
                fault: None,
            }
        })
        .collect())
}

fn positive_draw<R: Rng>(mean: f64, sigma: f64, rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let v = mean + sigma * z;
        if v > 0.0 {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DapufParams {
        DapufParams::default()
    }

    #[test]
    fn arbiter_layout() {
        assert_eq!(arbiter(0), ((0, 1), Lane::Top));
        assert_eq!(arbiter(9), ((3, 4), Lane::Top));
        assert_eq!(arbiter(10), ((0, 1), Lane::Bottom));
        let mut sizes = [0; 4];
        for k in 0..N_ARBITERS {
            sizes[arbiter_group(k)] += 1;
        }
        assert_eq!(sizes, [5; 4]);
    }

    #[test]
    fn challenge_bounds() {
        assert!(Challenge::new(0b100, 2).is_err());
        assert!(Challenge::new(u64::MAX, 64).is_ok());
        let c = Challenge::new(0b101, 3).unwrap();
        assert!(c.bit(0) && !c.bit(1) && c.bit(2));
        assert_eq!(c.with_bit(1, true).bits(), 0b111);
        assert_eq!(c.with_bit(0, false).bits(), 0b100);
    }

    #[test]
    fn population_is_deterministic_and_distinct() {
        let a = generate_population(&params(), 3).unwrap();
        let b = generate_population(&params(), 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].delays, a[1].delays);
        let other = generate_population(&DapufParams { seed: 7, ..params() }, 3).unwrap();
        assert_ne!(a[0].delays, other[0].delays);
    }

    #[test]
    fn delays_are_positive() {
        let p = DapufParams { delay_sigma: 2.0, layout_sigma: 1.0, ..params() };
        for inst in generate_population(&p, 4).unwrap() {
            assert!(inst.delays.iter().flatten().all(|&d| d > 0.0));
        }
    }

    #[test]
    fn zero_variation_ties_resolve_to_zero() {
        let p = DapufParams { delay_sigma: 0.0, layout_sigma: 0.0, noise_sigma: 0.0, ..params() };
        let pop = generate_population(&p, 3).unwrap();
        let mut rng = stream(0, 0, 0, 0);
        for bits in [0, 1, 0xdead_beef, u64::MAX] {
            let c = Challenge::new(bits, 64).unwrap();
            for inst in &pop {
                assert_eq!(inst.evaluate_raw(&c, &mut rng).unwrap(), Response(0));
            }
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let inst = &generate_population(&params(), 1).unwrap()[0];
        let c = Challenge::new(1, 32).unwrap();
        let mut rng = stream(0, 0, 0, 0);
        assert!(inst.evaluate_raw(&c, &mut rng).is_err());
        assert!(inst.evaluate_majority(&Challenge::new(1, 64).unwrap(), 4, &mut rng).is_err());
    }

    #[test]
    fn noiseless_majority_equals_raw() {
        let inst = generate_population(&params(), 1).unwrap()[0].with_noise_sigma(0.0).unwrap();
        let mut rng = stream(0, 0, 0, 0);
        for bits in [3u64, 99, 1 << 63] {
            let c = Challenge::new(bits, 64).unwrap();
            assert_eq!(
                inst.evaluate_majority(&c, 7, &mut rng).unwrap(),
                inst.evaluate_raw(&c, &mut rng).unwrap()
            );
        }
    }

    #[test]
    fn single_vote_is_one_raw_evaluation() {
        let inst = &generate_population(&params(), 1).unwrap()[0];
        let c = Challenge::new(12345, 64).unwrap();
        let a = inst.evaluate_majority(&c, 1, &mut stream(1, 2, 3, 4)).unwrap();
        let b = inst.evaluate_raw(&c, &mut stream(1, 2, 3, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inject_fault_copies() {
        let inst = &generate_population(&params(), 1).unwrap()[0];
        let faulty = inst.inject_fault(&FaultSpec::reference_fault()).unwrap();
        assert!(inst.fault().is_none());
        assert_eq!(faulty.fault(), Some(&FaultSpec::reference_fault()));
        let out_of_range = FaultSpec::new(true, 64, [0], FaultSite::Select).unwrap();
        assert!(inst.inject_fault(&out_of_range).is_err());
    }

    #[test]
    fn select_fault_masks_challenge_bit() {
        let inst = &generate_population(&params(), 1).unwrap()[0];
        let inst = inst.with_noise_sigma(0.0).unwrap();
        let fault = FaultSpec::new(true, 9, 0..5, FaultSite::Select).unwrap();
        let faulty = inst.inject_fault(&fault).unwrap();
        let mut rng = stream(0, 0, 0, 0);
        for bits in [0u64, 0x1234_5678_9abc_def0, u64::MAX] {
            let c = Challenge::new(bits, 64).unwrap();
            let lo = faulty.evaluate_raw(&c.with_bit(9, false), &mut rng).unwrap();
            let hi = faulty.evaluate_raw(&c.with_bit(9, true), &mut rng).unwrap();
            assert_eq!(lo, hi);
            // applied value already equals the stuck value
            assert_eq!(hi, inst.evaluate_raw(&c.with_bit(9, true), &mut rng).unwrap());
        }
    }

    #[test]
    fn output_fault_masks_driving_segments() {
        let inst = generate_population(&params(), 1).unwrap()[0].with_noise_sigma(0.0).unwrap();
        let fault = FaultSpec::reference_fault();
        let faulty = inst.inject_fault(&fault).unwrap();
        let mut tweaked = faulty.clone();
        for chain in 0..N_CHAINS {
            tweaked.set_delay(chain, 9, Segment::TopStraight, 3.0).unwrap();
            tweaked.set_delay(chain, 9, Segment::BottomCross, 0.1).unwrap();
        }
        let mut rng = stream(0, 0, 0, 0);
        let mut differs = false;
        for bits in 0..200u64 {
            let c = Challenge::new(bits.wrapping_mul(0x9e37_79b9_7f4a_7c15), 64).unwrap();
            let r = faulty.evaluate_raw(&c, &mut rng).unwrap();
            assert_eq!(r, tweaked.evaluate_raw(&c, &mut rng).unwrap());
            differs |= r != inst.evaluate_raw(&c, &mut rng).unwrap();
        }
        assert!(differs, "fault had no effect on 200 challenges");
    }

    #[test]
    fn stuck_outputs_tie_to_zero() {
        // every chain stuck at both outputs: all arbiters tie
        let inst = generate_population(&params(), 1).unwrap()[0].with_noise_sigma(0.0).unwrap();
        let c = Challenge::new(0xabc, 64).unwrap();
        let mut rng = stream(0, 0, 0, 0);
        for v in [false, true] {
            let top = FaultSpec::new(v, 63, 0..5, FaultSite::Output(Lane::Top)).unwrap();
            let bot = FaultSpec::new(v, 63, 0..5, FaultSite::Output(Lane::Bottom)).unwrap();
            let a = inst.inject_fault(&top).unwrap();
            let b = inst.inject_fault(&bot).unwrap();
            // top arbiters all tie in `a`, so only bottom arbiters contribute
            let ra = a.evaluate_raw(&c, &mut rng).unwrap();
            let rb = b.evaluate_raw(&c, &mut rng).unwrap();
            assert_eq!(ra.value() ^ rb.value(), inst.evaluate_raw(&c, &mut rng).unwrap().value());
        }
    }

    #[test]
    fn even_votes_rejected() {
        assert!(check_votes(0).is_err());
        assert!(check_votes(2).is_err());
        assert!(check_votes(5).is_ok());
    }
}
