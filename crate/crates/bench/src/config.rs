// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use intentd_core::IntentType;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Northbound access path under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Interface {
    Cli,
    Rest,
}

impl Interface {
    pub const ALL: [Interface; 2] = [Interface::Cli, Interface::Rest];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cli => "CLI",
            Self::Rest => "REST",
        }
    }
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Interface {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cli" => Ok(Self::Cli),
            "rest" => Ok(Self::Rest),
            _ => Err(format!("unknown interface `{s}` (expected CLI or REST)")),
        }
    }
}

impl Serialize for Interface {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Interface {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Intent types the harness can benchmark. Host-to-host intents are
/// excluded: they expand into other intents and would skew per-intent cost.
pub const BENCH_TYPES: [IntentType; 3] = [
    IntentType::PointToPoint,
    IntentType::SingleToMultiPoint,
    IntentType::MultiToSinglePoint,
];

/// Accepts full type names and the short forms P2P, S2M and M2S.
pub fn parse_bench_type(s: &str) -> Result<IntentType, String> {
    let t = match s.to_ascii_uppercase().as_str() {
        "P2P" => IntentType::PointToPoint,
        "S2M" => IntentType::SingleToMultiPoint,
        "M2S" => IntentType::MultiToSinglePoint,
        _ => s.parse()?,
    };
    if !BENCH_TYPES.contains(&t) {
        return Err(format!("{t} cannot be benchmarked"));
    }
    Ok(t)
}

fn de_types<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<IntentType>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| parse_bench_type(s))
        .collect::<Result<_, _>>()
        .map_err(serde::de::Error::custom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResetMode {
    /// Withdraw everything and clear the store between iterations.
    #[default]
    Purge,
    /// Replace the controller (and embedded server) between iterations.
    Restart,
}

impl FromStr for ResetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "purge" => Ok(Self::Purge),
            "restart" => Ok(Self::Restart),
            _ => Err(format!("unknown reset mode `{s}` (expected purge or restart)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Paper,
    Desk,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Self::Paper),
            "desk" => Ok(Self::Desk),
            _ => Err(format!("unknown profile `{s}` (expected paper or desk)")),
        }
    }
}

pub const PAPER_WORKLOADS: [usize; 8] = [1000, 2000, 3000, 4000, 5000, 10000, 15000, 20000];
pub const DESK_WORKLOADS: [usize; 6] = [100, 250, 500, 1000, 1500, 2000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    #[serde(alias = "types", deserialize_with = "de_types")]
    pub intent_types: Vec<IntentType>,
    pub interfaces: Vec<Interface>,
    pub workloads: Vec<usize>,
    pub iterations: usize,
    /// Discarded runs at the start of every cell.
    pub warmup_iterations: usize,
    /// Saturation runs per intent type; 0 skips the saturation benchmark.
    #[serde(alias = "saturation")]
    pub saturation_iterations: usize,
    /// Live-intent capacity of the store under test.
    pub capacity: usize,
    /// External server; an embedded one is started when absent.
    pub rest_endpoint: Option<String>,
    /// Topology file; the bundled chain when absent.
    pub topology: Option<PathBuf>,
    pub seed: u64,
    #[serde(alias = "out")]
    pub output_dir: PathBuf,
    pub reset_mode: ResetMode,
    /// Multiplier for the optional `ci_plot_scale` summary column.
    pub plot_scale: Option<f64>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self::profile(Profile::Desk)
    }
}

impl BenchmarkConfig {
    pub fn profile(profile: Profile) -> Self {
        let (workloads, iterations, capacity): (&[usize], _, _) = match profile {
            Profile::Paper => (&PAPER_WORKLOADS, 50, 500_000),
            Profile::Desk => (&DESK_WORKLOADS, 10, 10_000),
        };
        Self {
            intent_types: BENCH_TYPES.to_vec(),
            interfaces: Interface::ALL.to_vec(),
            workloads: workloads.to_vec(),
            iterations,
            warmup_iterations: 1,
            saturation_iterations: 10,
            capacity,
            rest_endpoint: None,
            topology: None,
            seed: 1,
            output_dir: PathBuf::from("bench-out"),
            reset_mode: ResetMode::Purge,
            plot_scale: None,
        }
    }

    /// Parse a JSON config. A `profile` key replaces `base` with that
    /// profile; other keys left out keep the values of the base.
    pub fn from_json(json: &str, base: &Self) -> Result<Self, ConfigError> {
        let overrides: serde_json::Value = serde_json::from_str(json).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let serde_json::Value::Object(mut overrides) = overrides else {
            return Err(ConfigError::Parse("config must be a JSON object".into()));
        };
        let base = match overrides.remove("profile") {
            Some(p) => {
                let profile: Profile = serde_json::from_value(p).map_err(|e| ConfigError::Parse(e.to_string()))?;
                Self::profile(profile)
            }
            None => base.clone(),
        };
        let mut merged = serde_json::to_value(&base).expect("config serializes");
        let target = merged.as_object_mut().expect("config is an object");
        for (key, value) in overrides {
            target.insert(key, value);
        }
        serde_json::from_value(serde_json::Value::Object(dedup_aliases(target.clone())))
            .map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path, base: &Self) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, base)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: &str| Err(ConfigError::Invalid(msg.into()));
        if self.intent_types.is_empty() {
            return invalid("intent_types must not be empty");
        }
        if self.interfaces.is_empty() {
            return invalid("interfaces must not be empty");
        }
        if self.workloads.is_empty() || self.workloads.contains(&0) {
            return invalid("workloads must be positive and non-empty");
        }
        if self.workloads.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("workloads must be strictly increasing");
        }
        if self.iterations < 2 {
            return invalid("iterations must be at least 2");
        }
        if let Some(&max) = self.workloads.last() {
            if max > self.capacity {
                return Err(ConfigError::Invalid(format!(
                    "largest workload {max} exceeds store capacity {}",
                    self.capacity
                )));
            }
        }
        if self.reset_mode == ResetMode::Restart && self.rest_endpoint.is_some() && self.interfaces.contains(&Interface::Rest) {
            return invalid("reset_mode restart needs the embedded REST server");
        }
        if self.plot_scale.is_some_and(|s| !(s.is_finite() && s > 0.0)) {
            return invalid("plot_scale must be a positive number");
        }
        Ok(())
    }
}

/// Map short keys onto their long names; an explicit short key wins over
/// the inherited long one.
fn dedup_aliases(mut map: serde_json::Map<String, serde_json::Value>) -> serde_json::Map<String, serde_json::Value> {
    for (short, long) in [("types", "intent_types"), ("saturation", "saturation_iterations"), ("out", "output_dir")] {
        if let Some(v) = map.remove(short) {
            map.insert(long.into(), v);
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        let paper = BenchmarkConfig::profile(Profile::Paper);
        assert_eq!(paper.workloads, PAPER_WORKLOADS);
        assert_eq!((paper.iterations, paper.saturation_iterations, paper.capacity), (50, 10, 500_000));
        paper.validate().unwrap();
        let desk = BenchmarkConfig::default();
        assert_eq!(desk.workloads, DESK_WORKLOADS);
        assert_eq!(desk.iterations, 10);
        desk.validate().unwrap();
    }

    #[test]
    fn json_overrides_base() {
        let cfg = BenchmarkConfig::from_json(
            r#"{"types":["P2P","MultiToSinglePoint"],"interfaces":["cli"],"workloads":[10,20,30],"iterations":3,"saturation":0,"seed":9,"out":"x"}"#,
            &BenchmarkConfig::default(),
        )
        .unwrap();
        assert_eq!(cfg.intent_types, [IntentType::PointToPoint, IntentType::MultiToSinglePoint]);
        assert_eq!(cfg.interfaces, [Interface::Cli]);
        assert_eq!(cfg.workloads, [10, 20, 30]);
        assert_eq!((cfg.iterations, cfg.saturation_iterations, cfg.seed), (3, 0, 9));
        assert_eq!(cfg.output_dir, PathBuf::from("x"));
        assert_eq!(cfg.capacity, 10_000);

        let paper = BenchmarkConfig::from_json(r#"{"profile":"paper","iterations":5}"#, &BenchmarkConfig::default()).unwrap();
        assert_eq!(paper.workloads, PAPER_WORKLOADS);
        assert_eq!(paper.iterations, 5);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = BenchmarkConfig::default();
        assert!(BenchmarkConfig::from_json(r#"{"bogus":1}"#, &base).is_err());
        assert!(BenchmarkConfig::from_json(r#"{"types":["HostToHost"]}"#, &base).is_err());
        for json in [
            r#"{"workloads":[100,100]}"#,
            r#"{"workloads":[200,100]}"#,
            r#"{"workloads":[]}"#,
            r#"{"iterations":1}"#,
            r#"{"types":[]}"#,
            r#"{"capacity":50}"#,
        ] {
            let cfg = BenchmarkConfig::from_json(json, &base).unwrap();
            assert!(cfg.validate().is_err(), "{json}");
        }
    }

    #[test]
    fn short_type_names() {
        assert_eq!(parse_bench_type("s2m").unwrap(), IntentType::SingleToMultiPoint);
        assert_eq!(parse_bench_type("PointToPoint").unwrap(), IntentType::PointToPoint);
        assert!(parse_bench_type("H2H").is_err());
    }
}
