//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! seed = 7
//! dataset.name = moons
//! train.variants = no,sure
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every key a configuration file may contain.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "outdir",
    "dataset.name",
    "dataset.n",
    "dataset.noise",
    "dataset.features",
    "dataset.classes",
    "dataset.factor",
    "train.variants",
    "train.iterations",
    "train.checkpoint_every",
    "train.optimizer",
    "train.lr",
    "train.loss",
    "train.activation",
    "train.init_scale",
    "train.hessian_store_cap",
    "train.dense_hessian_cap",
    "train.jobs",
    "analyze.prefix",
    "diagnose.near_zero_fraction",
    "diagnose.low_expressivity_max_eigen",
    "diagnose.saddle_symmetry",
    "diagnose.saddle_gradient_norm",
    "diagnose.ill_conditioned",
    "diagnose.low_rank_ratio",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    /// Value and 1-based line number per key.
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let bad = |m: String| Error::InvalidArgument(format!("config line {line}: {m}"));
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(bad(format!("unknown key `{key}`")));
            }
            if entries.insert(key.to_string(), (value.to_string(), line)).is_some() {
                return Err(bad(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Typed value of `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key), "unregistered config key {key}");
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|e| {
                Error::InvalidArgument(format!("config line {line}: bad value `{v}` for `{key}`: {e}"))
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_types() {
        let c = ConfigFile::parse("# top\nseed = 7\n\ndataset.name=moons  # inline\ntrain.lr = 0.01\n").unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(c.raw("dataset.name"), Some("moons"));
        assert_eq!(c.get::<f64>("train.lr").unwrap(), Some(0.01));
        assert_eq!(c.get::<usize>("dataset.n").unwrap(), None);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfigFile::parse("colour = red").is_err());
        assert!(ConfigFile::parse("seed 7").is_err());
        assert!(ConfigFile::parse("seed = 1\nseed = 2").is_err());
        let c = ConfigFile::parse("seed = x").unwrap();
        assert!(c.get::<u64>("seed").is_err());
    }
}
