//! Plain-text `key = value` run configuration. Keys mirror the long flag
//! names; values given on the command line override the file.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use doe2vec::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct Config {
    entries: HashMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        let mut entries = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Configuration {
                    message: format!("config line {}: expected `key = value`", lineno + 1),
                });
            };
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Config { entries })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(text) => text.parse::<T>().map(Some).map_err(|_| Error::Configuration {
                message: format!("config key {key}: cannot parse {text:?}"),
            }),
        }
    }
}

/// Flag value, then config file, then default.
pub fn setting<T: FromStr>(flag: Option<T>, cfg: &Config, key: &str, default: T) -> Result<T> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(cfg.get(key)?.unwrap_or(default)),
    }
}

/// Flag value or config file; error when neither is present.
pub fn required<T: FromStr>(flag: Option<T>, cfg: &Config, key: &str) -> Result<T> {
    match flag {
        Some(v) => Ok(v),
        None => cfg.get(key)?.ok_or(Error::Configuration {
            message: format!("missing required setting --{key}"),
        }),
    }
}

/// Optional setting with no default.
pub fn optional<T: FromStr>(flag: Option<T>, cfg: &Config, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

/// Comma-separated list parser for flags like `--latent-sizes 4,8,16`.
pub fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|t| {
            t.trim().parse::<T>().map_err(|_| Error::Configuration {
                message: format!("cannot parse {what} entry {t:?}"),
            })
        })
        .collect()
}

/// Inclusive `a..b` range parser for `--instances`.
pub fn parse_range(text: &str) -> Result<(usize, usize)> {
    let err = || Error::Configuration {
        message: format!("cannot parse range {text:?}; expected like `1..100`"),
    };
    let (a, b) = text.split_once("..").ok_or_else(err)?;
    let lo: usize = a.trim().parse().map_err(|_| err())?;
    let hi: usize = b.trim().parse().map_err(|_| err())?;
    if lo == 0 || hi < lo {
        return Err(err());
    }
    Ok((lo, hi))
}
