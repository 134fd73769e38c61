//! Behavioral model of the 64-stage 5-4 Double Arbiter PUF.
//!
//! Five delay chains race two signals each. Every unordered chain pair feeds
//! two arbiters (top lane against top lane, bottom against bottom), and the 20
//! arbiter bits are XOR-reduced round robin into a 4-bit response. Delays
//! follow the additive Gaussian model and each measurement adds jitter at the
//! path ends; references are majority votes over repeated measurements.

mod collect;
mod dapuf;
mod fault;
mod params;

pub use collect::{collect_responses, ChallengeSet, ResponseTable};
pub use dapuf::{
    arbiter, arbiter_group, generate_population, Challenge, DapufInstance, Response, Segment, CHAIN_PAIRS, N_ARBITERS,
    RESPONSE_BITS,
};
pub use fault::{FaultSite, FaultSpec, Lane};
pub use params::{DapufParams, MAX_STAGES, N_CHAINS};
