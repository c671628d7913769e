//! Optional TOML config file. Keys are the long flag names; a flag given on
//! the command line always wins over the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "bit-depth",
    "block-size",
    "coeff",
    "delta",
    "feature-dim",
    "features",
    "method",
    "n",
    "payload-bits",
    "resize",
    "seed",
    "step",
    "subband",
    "tau",
    "text",
    "threads",
    "threshold",
    "train",
];

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse()?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            let key = key.replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!("unknown key {key:?}");
            }
            let text = match value {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                other => bail!("key {key:?}: expected a scalar, got {}", other.type_str()),
            };
            values.insert(key, text);
        }
        Ok(Self { values })
    }

    pub fn get<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        debug_assert!(KNOWN_KEYS.contains(&key), "{key}");
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key:?}: {e}")),
        }
    }

    /// Flag value if given, else the file value, else `default`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    pub fn pick_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars_and_precedence() {
        let cfg = FileConfig::parse("step = 0.05\nblock_size = 8\ntau = \"auto\"\ndelta = 0.3\n")
            .unwrap();
        assert_eq!(cfg.get::<f64>("step").unwrap(), Some(0.05));
        assert_eq!(cfg.pick(None, "block-size", 4usize).unwrap(), 8);
        assert_eq!(cfg.pick(Some(2usize), "block-size", 4).unwrap(), 2);
        assert_eq!(cfg.pick(None, "seed", 42u64).unwrap(), 42);
        assert_eq!(cfg.get::<String>("tau").unwrap().as_deref(), Some("auto"));
        assert_eq!(cfg.get::<String>("delta").unwrap().as_deref(), Some("0.3"));
    }

    #[test]
    fn rejects_unknown_and_bad_values() {
        assert!(FileConfig::parse("stepp = 1").is_err());
        assert!(FileConfig::parse("step = [1, 2]").is_err());
        let cfg = FileConfig::parse("step = \"wide\"").unwrap();
        assert!(cfg.get::<f64>("step").is_err());
    }
}
