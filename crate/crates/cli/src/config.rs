use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use optpuf::{ChallengeDistribution, NoiseModel};

/// Bad configuration: unreadable file, unknown key, wrong type, invalid value.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        ConfigError(msg.into())
    }
}

/// Merge a flat JSON config file with command-line overrides (flags win).
pub fn resolve<C, O>(file: Option<&Path>, overrides: &O) -> Result<C, ConfigError>
where
    C: DeserializeOwned,
    O: Serialize,
{
    let mut merged = match file {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| ConfigError::new(format!("cannot read config {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(map)) => map,
                Ok(_) => return Err(ConfigError::new("config file must hold a JSON object")),
                Err(e) => return Err(ConfigError::new(format!("config {}: {e}", path.display()))),
            }
        }
        None => Map::new(),
    };
    match serde_json::to_value(overrides).map_err(|e| ConfigError::new(e.to_string()))? {
        Value::Object(flags) => {
            for (k, v) in flags {
                if !v.is_null() {
                    merged.insert(k, v);
                }
            }
        }
        _ => unreachable!("flag structs serialize to objects"),
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| ConfigError::new(format!("config: {e}")))
}

/// Canonical JSON of a resolved config and its sha256.
pub fn digest<C: Serialize>(config: &C) -> (String, String) {
    let json = serde_json::to_string(config).expect("config serializes");
    let hash = hex::encode(Sha256::digest(json.as_bytes()));
    (json, hash)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum DistributionKind {
    Uniform,
    Binary,
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    BoundedUniform,
    TruncatedGaussian,
}

pub fn distribution(kind: DistributionKind, q: f64) -> Result<ChallengeDistribution, ConfigError> {
    let d = match kind {
        DistributionKind::Uniform => ChallengeDistribution::Uniform,
        DistributionKind::Binary => ChallengeDistribution::Binary,
        DistributionKind::Bernoulli => ChallengeDistribution::Bernoulli { q },
    };
    d.validate().map_err(|e| ConfigError::new(e.to_string()))?;
    Ok(d)
}

/// `a` is the half-width of bounded uniform noise; `alpha` the truncation point of the Gaussian.
pub fn noise(kind: NoiseKind, a: f64, sigma: f64, alpha: f64) -> Result<NoiseModel, ConfigError> {
    let n = match kind {
        NoiseKind::None => NoiseModel::None,
        NoiseKind::BoundedUniform => NoiseModel::BoundedUniform { a },
        NoiseKind::TruncatedGaussian => NoiseModel::TruncatedGaussian { sigma, alpha },
    };
    n.validate().map_err(|e| ConfigError::new(e.to_string()))?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    #[serde(deny_unknown_fields)]
    struct Demo {
        a: u32,
        #[serde(default)]
        b: f64,
    }

    #[derive(Serialize)]
    struct Flags {
        a: Option<u32>,
        b: Option<f64>,
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("optpuf-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(&path, r#"{"a": 1, "b": 2.5}"#).unwrap();
        let d: Demo = resolve(Some(&path), &Flags { a: Some(7), b: None }).unwrap();
        assert_eq!(d, Demo { a: 7, b: 2.5 });
        std::fs::write(&path, r#"{"a": 1, "zzz": 0}"#).unwrap();
        assert!(resolve::<Demo, _>(Some(&path), &Flags { a: None, b: None }).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn missing_required_key_is_an_error() {
        assert!(resolve::<Demo, _>(None, &Flags { a: None, b: None }).is_err());
    }

    #[test]
    fn digest_is_stable() {
        let (j1, h1) = digest(&Demo { a: 1, b: 0.5 });
        let (j2, h2) = digest(&Demo { a: 1, b: 0.5 });
        assert_eq!((j1, h1.clone()), (j2, h2));
        assert_eq!(h1.len(), 64);
        assert_ne!(h1, digest(&Demo { a: 2, b: 0.5 }).1);
    }
}
