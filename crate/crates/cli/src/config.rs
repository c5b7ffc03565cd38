//! Flat `key = value` defaults. Flags beat the file, the file beats
//! built-ins. Keys are flag names without the dashes.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

const KEYS: &[&str] = &[
    "seed",
    "samples",
    "workers",
    "format",
    "out",
    "allow-heuristic",
    "bootstrap",
    "body",
    "p",
    "dims",
    "families",
    "lambdas",
    "dim",
    "rotation-seed",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value, got `{raw}`", i + 1))?;
            let key = k.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("config line {}: unknown key `{}`", i + 1, k.trim()));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        self.raw(key)
            .map(|v| v.parse().map_err(|_| format!("config key `{key}`: cannot parse `{v}`")))
            .transpose()
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, String> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|x| x.trim().parse().map_err(|_| format!("config key `{key}`: cannot parse `{x}`")))
                    .collect()
            })
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, String> {
        match self.raw(key) {
            None => Ok(false),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" | "on" => Ok(true),
                "0" | "false" | "no" | "off" => Ok(false),
                _ => Err(format!("config key `{key}`: `{v}` is not a boolean")),
            },
        }
    }
}
