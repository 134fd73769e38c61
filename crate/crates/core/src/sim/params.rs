use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Number of delay chains in a 5-4 DAPUF.
pub const N_CHAINS: usize = 5;
/// Longest chain supported; challenges are packed into a `u64`.
pub const MAX_STAGES: usize = 64;

/// Process and noise parameters shared by a simulated population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DapufParams {
    pub n_stages: usize,
    pub n_chains: usize,
    /// Nominal delay of one path segment through a stage.
    pub delay_mean: f64,
    /// Per-instance process variation of each segment delay.
    pub delay_sigma: f64,
    /// Systematic layout offset of each segment, common to every instance of the population.
    pub layout_sigma: f64,
    /// Per-evaluation jitter added at each path end.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for DapufParams {
    fn default() -> Self {
        DapufParams {
            n_stages: 64,
            n_chains: N_CHAINS,
            delay_mean: 1.0,
            delay_sigma: 0.05,
            layout_sigma: 0.03,
            noise_sigma: 0.005,
            seed: 1,
        }
    }
}

impl DapufParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_STAGES).contains(&self.n_stages) {
            return Err(Error::config(format!(
                "n_stages = {} outside 1..={MAX_STAGES}",
                self.n_stages
            )));
        }
        if self.n_chains != N_CHAINS {
            return Err(Error::config(format!(
                "n_chains must be {N_CHAINS}, got {}",
                self.n_chains
            )));
        }
        if !(self.delay_mean.is_finite() && self.delay_mean > 0.0) {
            return Err(Error::config(format!(
                "delay_mean must be positive, got {}",
                self.delay_mean
            )));
        }
        for (name, v) in [
            ("delay_sigma", self.delay_sigma),
            ("layout_sigma", self.layout_sigma),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Short stable digest of the parameters, recorded in CRP headers.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("params serialize");
        let hash = Sha256::digest(json.as_bytes());
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        DapufParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            DapufParams { n_stages: 0, ..Default::default() },
            DapufParams { n_stages: 65, ..Default::default() },
            DapufParams { n_chains: 4, ..Default::default() },
            DapufParams { delay_mean: 0.0, ..Default::default() },
            DapufParams { delay_sigma: -0.1, ..Default::default() },
            DapufParams { noise_sigma: f64::NAN, ..Default::default() },
        ];
        for p in bad {
            assert!(matches!(p.validate(), Err(Error::Config(_))), "{p:?}");
        }
    }

    #[test]
    fn digest_tracks_every_field() {
        let a = DapufParams::default();
        let b = DapufParams { seed: 2, ..a.clone() };
        assert_eq!(a.digest(), a.clone().digest());
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 16);
    }
}
