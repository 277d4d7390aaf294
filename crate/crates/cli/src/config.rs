//! Layered parameter resolution: command-line flag, then config file, then
//! built-in default.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::CliError;

pub const GLOBAL_KEYS: &[&str] = &[
    "format",
    "output",
    "seed",
    "digits",
    "threads",
    "in_units_of_pi",
];

pub const SECTION_KEYS: &[(&str, &[&str])] = &[
    (
        "prepare",
        &[
            "n",
            "delta",
            "method",
            "samples",
            "convention",
            "cap",
            "matrix",
            "normalization",
        ],
    ),
    ("curve", &["delta", "n_min", "n_max"]),
    ("bootstrap", &["delta0", "sqrt_delta0", "steps", "method"]),
    ("estimate", &["n", "delta", "phi", "shots", "trials"]),
    (
        "fisher",
        &[
            "n",
            "delta",
            "phi_min",
            "phi_max",
            "phi_points",
            "source",
            "policy",
            "step",
            "cap",
        ],
    ),
];

#[derive(Debug, Default)]
pub struct Layer {
    table: toml::Table,
    section: &'static str,
}

impl Layer {
    pub fn load(path: Option<&Path>, section: &'static str) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self {
                table: toml::Table::new(),
                section,
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        validate_keys(&table)?;
        Ok(Self { table, section })
    }

    fn lookup(&self, key: &str) -> Option<&toml::Value> {
        if GLOBAL_KEYS.contains(&key) {
            self.table.get(key)
        } else {
            self.table
                .get(self.section)
                .and_then(|s| s.as_table())
                .and_then(|s| s.get(key))
        }
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.lookup(key) {
            None => Ok(None),
            Some(v) => v
                .clone()
                .try_into()
                .map(Some)
                .map_err(|e| CliError::Config(format!("config key `{key}`: {e}"))),
        }
    }

    /// Flag, then config file, then `default`.
    pub fn pick<T: DeserializeOwned>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: DeserializeOwned>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> Result<Option<T>, CliError> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        self.pick_opt(flag, key)?.ok_or_else(|| {
            CliError::Usage(format!(
                "missing required parameter `--{}` (flag or config key `{key}`)",
                key.replace('_', "-")
            ))
        })
    }

    /// On if either the flag or the config file turns it on.
    pub fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.get(key)?.unwrap_or(false))
    }
}

fn validate_keys(table: &toml::Table) -> Result<(), CliError> {
    for (key, value) in table {
        if GLOBAL_KEYS.contains(&key.as_str()) {
            continue;
        }
        let Some((_, allowed)) = SECTION_KEYS.iter().find(|(s, _)| s == key) else {
            return Err(CliError::Config(format!("unknown config key `{key}`")));
        };
        let Some(section) = value.as_table() else {
            return Err(CliError::Config(format!("`{key}` must be a table")));
        };
        for k in section.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(CliError::Config(format!("unknown config key `{key}.{k}`")));
            }
        }
    }
    Ok(())
}
