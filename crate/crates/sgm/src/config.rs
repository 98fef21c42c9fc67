//! Flat `key = value` run configuration. `#` starts a comment; keys use the
//! long flag names (`n-knn-train` and `n_knn_train` are the same key).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    path: Option<std::path::PathBuf>,
    values: BTreeMap<String, (usize, String)>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Config {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected key = value, got '{line}'"),
            })?;
            values.insert(normalize(key), (i + 1, value.trim().to_string()));
        }
        Ok(Self { path: Some(path.to_path_buf()), values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    /// Typed lookup; a present but malformed value is an error.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let Some((line, v)) = self.values.get(key) else {
            return Ok(None);
        };
        v.parse().map(Some).map_err(|e: T::Err| Error::Config {
            path: self.path.clone().unwrap_or_default(),
            line: *line,
            message: format!("{key}: {e}"),
        })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Flag value, then config value, then default.
pub fn resolve<T: FromStr>(flag: Option<T>, config: &Config, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(config.get(key)?.unwrap_or(default)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_precedence() {
        let c = Config::parse("# run\nk = 7\nn_knn_train=300 # trailing\n\n", Path::new("c")).unwrap();
        assert_eq!(c.get::<usize>("k").unwrap(), Some(7));
        assert_eq!(c.get::<usize>("n-knn-train").unwrap(), Some(300));
        assert_eq!(resolve(Some(3usize), &c, "k", 1).unwrap(), 3);
        assert_eq!(resolve(None, &c, "k", 1).unwrap(), 7);
        assert_eq!(resolve(None, &c, "seed", 42u64).unwrap(), 42);
        assert!(Config::parse("k 7", Path::new("c")).is_err());
        let bad = Config::parse("k = seven", Path::new("c")).unwrap();
        assert!(bad.get::<usize>("k").is_err());
    }
}
