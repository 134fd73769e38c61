use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::params::N_CHAINS;
use crate::error::{Error, Result};

/// One of the two racing lanes of a delay chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lane {
    Top,
    Bottom,
}

/// Which node of the faulty switch is stuck.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultSite {
    /// The challenge (select) line of the switch. Both racing signals are
    /// routed as if the challenge bit were the stuck value.
    Select,
    /// One output node of the switch. A node stuck at 1 reads as an edge that
    /// has already arrived; a node stuck at 0 never sees the edge.
    Output(Lane),
}

impl Default for FaultSite {
    fn default() -> Self {
        FaultSite::Output(Lane::Top)
    }
}

impl FaultSite {
    fn token(&self) -> &'static str {
        match self {
            FaultSite::Select => "select",
            FaultSite::Output(Lane::Top) => "out-top",
            FaultSite::Output(Lane::Bottom) => "out-bottom",
        }
    }
}

/// Stuck-at fault at one stage of a subset of chains.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaultSpec {
    pub stuck_value: bool,
    /// 0-based stage index counted from the input end.
    pub stage_index: usize,
    /// 0-based chain indices, sorted and distinct.
    pub chains: Vec<usize>,
    #[serde(default)]
    pub site: FaultSite,
}

impl FaultSpec {
    pub fn new(stuck_value: bool, stage_index: usize, chains: impl IntoIterator<Item = usize>, site: FaultSite) -> Result<Self> {
        let mut chains: Vec<usize> = chains.into_iter().collect();
        chains.sort_unstable();
        chains.dedup();
        if chains.is_empty() {
            return Err(Error::domain("fault must name at least one chain"));
        }
        if let Some(&c) = chains.iter().find(|&&c| c >= N_CHAINS) {
            return Err(Error::domain(format!("chain index {c} out of range 0..{N_CHAINS}")));
        }
        Ok(FaultSpec {
            stuck_value,
            stage_index,
            chains,
            site,
        })
    }

    /// Stuck-at-1 at the tenth switch from the input end of every chain.
    pub fn reference_fault() -> Self {
        FaultSpec::new(true, 9, 0..N_CHAINS, FaultSite::default()).expect("valid fault")
    }

    pub fn affects(&self, chain: usize) -> bool {
        self.chains.binary_search(&chain).is_ok()
    }

    pub(crate) fn check_stages(&self, n_stages: usize) -> Result<()> {
        if self.stage_index >= n_stages {
            return Err(Error::domain(format!(
                "fault stage index {} out of range for {n_stages} stages",
                self.stage_index
            )));
        }
        Ok(())
    }
}

/// `stage:chains:value[:site]` with a 1-based stage, 1-based chains (comma
/// list or `all`) and site one of `out-top`, `out-bottom`, `select`.
impl FromStr for FaultSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::config(format!("bad fault spec {s:?}: {why}"));
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad("expected stage:chains:value[:site]"));
        }
        let stage: usize = parts[0].trim().parse().map_err(|_| bad("stage is not an integer"))?;
        if stage == 0 {
            return Err(bad("stage is 1-based"));
        }
        let chains: Vec<usize> = if parts[1].trim() == "all" {
            (0..N_CHAINS).collect()
        } else {
            parts[1]
                .split(',')
                .map(|c| match c.trim().parse::<usize>() {
                    Ok(n) if (1..=N_CHAINS).contains(&n) => Ok(n - 1),
                    _ => Err(bad("chains must be `all` or a list of 1..=5")),
                })
                .collect::<Result<_>>()?
        };
        let stuck_value = match parts[2].trim() {
            "0" => false,
            "1" => true,
            _ => return Err(bad("value must be 0 or 1")),
        };
        let site = match parts.get(3).map(|p| p.trim()) {
            None | Some("out-top") => FaultSite::Output(Lane::Top),
            Some("out-bottom") => FaultSite::Output(Lane::Bottom),
            Some("select") => FaultSite::Select,
            Some(_) => return Err(bad("site must be out-top, out-bottom or select")),
        };
        FaultSpec::new(stuck_value, stage - 1, chains, site).map_err(|e| bad(&e.to_string()))
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chains = if self.chains.len() == N_CHAINS {
            "all".to_string()
        } else {
            self.chains
                .iter()
                .map(|c| (c + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "{}:{}:{}:{}",
            self.stage_index + 1,
            chains,
            u8::from(self.stuck_value),
            self.site.token()
        )
    }
}
