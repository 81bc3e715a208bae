//! Line-oriented `key = value` configuration with `#` comments.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::degradation::{DegradeParams, NoiseParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", i + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::at_path(path, e))?;
        Self::parse(&text)
    }

    /// Fails on any key outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("`{key}`: cannot parse {v:?}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }
}

/// Keys read by [`degrade_params`].
pub const DEGRADE_KEYS: [&str; 7] = [
    "sigma",
    "t_s_us",
    "shot_rate",
    "leak_rate",
    "hot_fraction",
    "hot_rate",
    "seed",
];

/// Degradation parameters from a config; absent keys are zero.
pub fn degrade_params(cfg: &Config) -> Result<DegradeParams> {
    let t_s_us: i64 = cfg.get_or("t_s_us", 0)?;
    if t_s_us < 0 {
        return Err(Error::Config("`t_s_us` must be >= 0".into()));
    }
    let params = DegradeParams {
        sigma: cfg.get_or("sigma", 0.0)?,
        sampling_period: t_s_us as f64 / 1e6,
        noise: NoiseParams {
            shot_rate: cfg.get_or("shot_rate", 0.0)?,
            leak_rate: cfg.get_or("leak_rate", 0.0)?,
            hot_pixel_fraction: cfg.get_or("hot_fraction", 0.0)?,
            hot_pixel_rate: cfg.get_or("hot_rate", 0.0)?,
            seed: cfg.get_or("seed", 0)?,
        },
    };
    if !(params.sigma.is_finite() && params.sigma >= 0.0) {
        return Err(Error::Config("`sigma` must be finite and >= 0".into()));
    }
    params
        .noise
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_values() {
        let cfg = Config::parse("# header\nsigma = 0.01  # bias\n\nseed=42\n").unwrap();
        assert_eq!(cfg.get::<f64>("sigma").unwrap(), Some(0.01));
        assert_eq!(cfg.require::<u64>("seed").unwrap(), 42);
        assert!(cfg.require::<u64>("missing").is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(Config::parse("sigma 0.1").is_err());
        assert!(Config::parse("a = 1\na = 2").is_err());
        let cfg = Config::parse("sigma = abc").unwrap();
        assert!(degrade_params(&cfg).is_err());
        let cfg = Config::parse("hot_fraction = 2").unwrap();
        assert!(degrade_params(&cfg).is_err());
        let cfg = Config::parse("bogus = 1").unwrap();
        assert!(cfg.check_keys(&DEGRADE_KEYS).is_err());
    }

    #[test]
    fn degrade_params_defaults_to_zero() {
        let p = degrade_params(&Config::default()).unwrap();
        assert_eq!(p, DegradeParams::default());
        let cfg = Config::parse("t_s_us = 2500\nshot_rate = 1.5").unwrap();
        let p = degrade_params(&cfg).unwrap();
        assert_eq!(p.sampling_period, 0.0025);
        assert_eq!(p.noise.shot_rate, 1.5);
    }
}
