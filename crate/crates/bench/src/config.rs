//! Plain-text `key = value` configuration files. CLI flags override file
//! values, which override built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;

use almton::solver::{AlmtonConfig, Strategy};

use crate::{BenchError, Result};

pub type ConfigMap = BTreeMap<String, String>;

/// Parse `key = value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_kv(text: &str) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(BenchError::Config(format!(
                "line {}: expected `key = value`, got `{raw}`",
                no + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn load(path: &Path) -> Result<ConfigMap> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_kv(&text)
}

/// Typed lookup with a parse-failure diagnostic.
pub fn get_parsed<T: std::str::FromStr>(map: &ConfigMap, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
            BenchError::Config(format!("config key `{key}`: cannot parse `{raw}`"))
        }),
    }
}

/// Solver hyperparameters from config keys `c`, `l`, `eta`, `gamma`,
/// `sigma_cap`, `inner_cap`, `strategy`.
pub fn almton_from_config(map: &ConfigMap) -> Result<AlmtonConfig> {
    let mut cfg = AlmtonConfig::default();
    if let Some(c) = get_parsed::<f64>(map, "c")? {
        cfg.c = c;
        cfg.l = c / 10.0;
    }
    if let Some(l) = get_parsed::<f64>(map, "l")? {
        cfg.l = l;
    }
    if let Some(eta) = get_parsed::<f64>(map, "eta")? {
        cfg.eta = eta;
    }
    if let Some(gamma) = get_parsed::<f64>(map, "gamma")? {
        cfg.gamma = gamma;
    }
    if let Some(cap) = get_parsed::<f64>(map, "sigma_cap")? {
        cfg.sigma_cap = cap;
    }
    if let Some(cap) = get_parsed::<usize>(map, "inner_cap")? {
        cfg.inner_cap = cap;
    }
    if let Some(strategy) = map.get("strategy") {
        cfg.strategy = strategy
            .parse::<Strategy>()
            .map_err(|e| BenchError::Config(e.to_string()))?;
    }
    cfg.validate().map_err(BenchError::Core)?;
    Ok(cfg)
}
