use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::dapuf::{check_votes, domain, stream, Challenge, DapufInstance, Response, RESPONSE_BITS};
use crate::boolean::{ChallengeSetId, PackedBits, ResponseBitVector, Source};
use crate::error::{Error, Result};

/// Ordered challenge list with an identifier derived from its content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeSet {
    n_stages: usize,
    challenges: Vec<Challenge>,
    id: ChallengeSetId,
}

impl ChallengeSet {
    pub fn new(n_stages: usize, challenges: Vec<Challenge>) -> Result<Self> {
        if challenges.is_empty() {
            return Err(Error::domain("challenge set is empty"));
        }
        if let Some(c) = challenges.iter().find(|c| c.len() != n_stages) {
            return Err(Error::domain(format!(
                "challenge of length {} in a {n_stages}-stage set",
                c.len()
            )));
        }
        let mut hasher = Sha256::new();
        hasher.update((n_stages as u64).to_le_bytes());
        for c in &challenges {
            hasher.update(c.bits().to_le_bytes());
        }
        let digest = hasher.finalize();
        let id = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        Ok(ChallengeSet {
            n_stages,
            challenges,
            id: ChallengeSetId(id),
        })
    }

    /// `count` uniformly random challenges drawn from the seed's challenge stream.
    pub fn random(n_stages: usize, count: usize, seed: u64) -> Result<Self> {
        if !(1..=64).contains(&n_stages) {
            return Err(Error::config(format!("n_stages = {n_stages} outside 1..=64")));
        }
        let mask = if n_stages == 64 { u64::MAX } else { (1u64 << n_stages) - 1 };
        let mut rng = stream(seed, domain::CHALLENGES, n_stages as u64, 0);
        let challenges = (0..count)
            .map(|_| Challenge::new(rng.random::<u64>() & mask, n_stages))
            .collect::<Result<_>>()?;
        ChallengeSet::new(n_stages, challenges)
    }

    pub fn n_stages(&self) -> usize {
        self.n_stages
    }

    pub fn id(&self) -> ChallengeSetId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.challenges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.challenges.is_empty()
    }

    pub fn challenges(&self) -> &[Challenge] {
        &self.challenges
    }
}

/// Majority-voted responses of a population over one challenge set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseTable {
    instance_ids: Vec<u64>,
    challenges: ChallengeSet,
    /// Instance-major: `responses[i * len + j]` is instance `i` on challenge `j`.
    responses: Vec<Response>,
}

impl ResponseTable {
    pub fn new(instance_ids: Vec<u64>, challenges: ChallengeSet, responses: Vec<Response>) -> Result<Self> {
        if instance_ids.is_empty() {
            return Err(Error::domain("response table has no instances"));
        }
        if responses.len() != instance_ids.len() * challenges.len() {
            return Err(Error::domain(format!(
                "{} responses for {} instances x {} challenges",
                responses.len(),
                instance_ids.len(),
                challenges.len()
            )));
        }
        Ok(ResponseTable {
            instance_ids,
            challenges,
            responses,
        })
    }

    pub fn instance_ids(&self) -> &[u64] {
        &self.instance_ids
    }

    pub fn instance_count(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn challenges(&self) -> &ChallengeSet {
        &self.challenges
    }

    pub fn response(&self, instance: usize, challenge: usize) -> Response {
        self.responses[instance * self.challenges.len() + challenge]
    }

    pub fn instance_responses(&self, instance: usize) -> &[Response] {
        let len = self.challenges.len();
        &self.responses[instance * len..(instance + 1) * len]
    }

    /// Response bit `bit` (1-based) of every instance, in instance order.
    pub fn bit_vectors(&self, bit: usize) -> Result<Vec<ResponseBitVector>> {
        if !(1..=RESPONSE_BITS).contains(&bit) {
            return Err(Error::domain(format!("response bit {bit} outside 1..=4")));
        }
        (0..self.instance_count())
            .map(|i| {
                let bits = PackedBits::from_bools(self.instance_responses(i).iter().map(|r| r.bit(bit)));
                let source = Source {
                    instance: self.instance_ids[i] as usize,
                    bit: bit as u8,
                };
                ResponseBitVector::new(bits, self.challenges.id(), Some(source))
            })
            .collect()
    }

    /// Table restricted to the listed instance positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> Result<Self> {
        if let Some(&p) = positions.iter().find(|&&p| p >= self.instance_count()) {
            return Err(Error::domain(format!("instance position {p} out of range")));
        }
        let responses = positions
            .iter()
            .flat_map(|&p| self.instance_responses(p).iter().copied())
            .collect();
        ResponseTable::new(
            positions.iter().map(|&p| self.instance_ids[p]).collect(),
            self.challenges.clone(),
            responses,
        )
    }
}

/// Evaluates every instance on every challenge with `k`-fold majority voting.
///
/// Each `(instance, challenge)` draws its noise from its own stream keyed by the
/// population seed, so the result does not depend on scheduling or thread count.
pub fn collect_responses(instances: &[DapufInstance], challenges: &ChallengeSet, k: usize) -> Result<ResponseTable> {
    check_votes(k)?;
    if instances.is_empty() {
        return Err(Error::domain("no instances to evaluate"));
    }
    if let Some(inst) = instances.iter().find(|i| i.n_stages() != challenges.n_stages()) {
        return Err(Error::domain(format!(
            "instance {} has {} stages, challenges have {}",
            inst.id(),
            inst.n_stages(),
            challenges.n_stages()
        )));
    }
    let len = challenges.len();
    let responses = (0..instances.len() * len)
        .into_par_iter()
        .map(|idx| {
            let inst = &instances[idx / len];
            let j = idx % len;
            let dom = if inst.fault().is_some() {
                domain::NOISE_FAULTY
            } else {
                domain::NOISE
            };
            let mut rng = stream(inst.seed(), dom, inst.id(), j as u64);
            inst.majority_unchecked(&challenges.challenges()[j], k, &mut rng)
        })
        .collect();
    ResponseTable::new(instances.iter().map(|i| i.id()).collect(), challenges.clone(), responses)
}
