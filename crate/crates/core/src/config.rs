//! Run configuration shared by every subcommand, loadable from JSON and echoed into outputs.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::boolean::theory::MAX_CLOSED_FORM_VARS;
use crate::error::{Error, Result};
use crate::sim::{DapufParams, FaultSpec};
use crate::spectra::DEFAULT_BUCKETS;
use crate::stats::{Thresholds, DEFAULT_EPSILON, DEFAULT_SEGMENTS, DEFAULT_T0};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Variable count for theoretical spectra.
    pub m: u32,
    pub instances: usize,
    pub challenges: usize,
    /// Measurements per challenge for majority voting (odd).
    pub measurements: usize,
    pub seed: u64,
    #[serde(with = "fault_text")]
    pub fault: Option<FaultSpec>,
    pub buckets: usize,
    pub segments: usize,
    #[serde(with = "real")]
    pub t0: f64,
    /// KL threshold; absent means calibrate from the reference population.
    #[serde(with = "opt_real")]
    pub kl0: Option<f64>,
    #[serde(with = "real")]
    pub epsilon: f64,
    pub n_stages: usize,
    pub delay_mean: f64,
    pub delay_sigma: f64,
    pub layout_sigma: f64,
    pub noise_sigma: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = DapufParams::default();
        RunConfig {
            m: 3,
            instances: 50,
            challenges: 10_000,
            measurements: 5,
            seed: p.seed,
            fault: None,
            buckets: DEFAULT_BUCKETS,
            segments: DEFAULT_SEGMENTS,
            t0: DEFAULT_T0,
            kl0: None,
            epsilon: DEFAULT_EPSILON,
            n_stages: p.n_stages,
            delay_mean: p.delay_mean,
            delay_sigma: p.delay_sigma,
            layout_sigma: p.layout_sigma,
            noise_sigma: p.noise_sigma,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn params(&self) -> DapufParams {
        DapufParams {
            n_stages: self.n_stages,
            delay_mean: self.delay_mean,
            delay_sigma: self.delay_sigma,
            layout_sigma: self.layout_sigma,
            noise_sigma: self.noise_sigma,
            seed: self.seed,
            ..DapufParams::default()
        }
    }

    /// Thresholds with `kl0` resolved to the given value when not configured.
    pub fn thresholds(&self, calibrated_kl0: f64) -> Thresholds {
        Thresholds {
            segments: self.segments,
            t0: self.t0,
            kl0: self.kl0.unwrap_or(calibrated_kl0),
            epsilon: self.epsilon,
        }
    }

    pub fn validate_theory(&self) -> Result<()> {
        if !(1..=MAX_CLOSED_FORM_VARS).contains(&self.m) {
            return Err(Error::config(format!("m = {} outside 1..={MAX_CLOSED_FORM_VARS}", self.m)));
        }
        Ok(())
    }

    pub fn validate_simulation(&self) -> Result<()> {
        self.params().validate()?;
        if self.instances == 0 {
            return Err(Error::config("instances must be at least 1"));
        }
        if self.challenges == 0 {
            return Err(Error::config("challenges must be at least 1"));
        }
        if self.measurements.is_multiple_of(2) {
            return Err(Error::config(format!("measurements = {} must be odd", self.measurements)));
        }
        if let Some(f) = &self.fault {
            if f.stage_index >= self.n_stages {
                return Err(Error::config(format!(
                    "fault stage {} beyond {} stages",
                    f.stage_index + 1,
                    self.n_stages
                )));
            }
        }
        Ok(())
    }

    pub fn validate_spectra(&self) -> Result<()> {
        if self.buckets < 2 {
            return Err(Error::config(format!("buckets = {} must be at least 2", self.buckets)));
        }
        Ok(())
    }

    pub fn validate_compare(&self) -> Result<()> {
        self.validate_spectra()?;
        self.thresholds(f64::INFINITY).validate()
    }

    /// Single-line JSON form used as the provenance echo.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// `f64` that may be infinite, as a JSON number or `"inf"` / `"-inf"`.
mod real {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Num(f64),
        Text(String),
    }

    pub(super) fn from_repr<E: serde::de::Error>(r: Repr) -> std::result::Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => other.parse().map_err(|_| E::custom(format!("not a number: {other:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

mod opt_real {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(v) => real::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
        Option::<real::Repr>::deserialize(d)?.map(real::from_repr).transpose()
    }
}

mod fault_text {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<FaultSpec>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(f) => s.serialize_str(&f.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<FaultSpec>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_with_infinities() {
        let cfg = RunConfig {
            fault: Some("10:all:1".parse().unwrap()),
            t0: f64::INFINITY,
            kl0: Some(f64::INFINITY),
            ..RunConfig::default()
        };
        let json = cfg.echo();
        assert!(json.contains(r#""fault":"10:all:1:out-top""#));
        assert!(json.contains(r#""kl0":"inf""#));
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"instances": 4, "kl0": 0.5}"#).unwrap();
        assert_eq!(cfg.instances, 4);
        assert_eq!(cfg.kl0, Some(0.5));
        assert_eq!(cfg.buckets, 256);
        assert!(serde_json::from_str::<RunConfig>(r#"{"instancez": 4}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"fault": "0:all:1"}"#).is_err());
    }

    #[test]
    fn validation() {
        let ok = RunConfig::default();
        ok.validate_theory().unwrap();
        ok.validate_simulation().unwrap();
        ok.validate_compare().unwrap();
        assert!(RunConfig { m: 17, ..ok.clone() }.validate_theory().is_err());
        assert!(RunConfig { measurements: 4, ..ok.clone() }.validate_simulation().is_err());
        assert!(RunConfig { n_stages: 8, fault: Some("9:all:1".parse().unwrap()), ..ok.clone() }
            .validate_simulation()
            .is_err());
        assert!(RunConfig { buckets: 1, ..ok.clone() }.validate_spectra().is_err());
        assert!(RunConfig { epsilon: 0.0, ..ok }.validate_compare().is_err());
    }
}
