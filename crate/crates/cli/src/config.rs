//! Plain `key = value` settings files, merged with command-line flags.
//!
//! Flags use the same names as file keys with `-` for `_`; a flag beats the
//! file. Blank lines and lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

/// Parses a settings file body. Keys are case-sensitive; a repeated key keeps
/// the last value.
pub fn parse_settings(text: &str, origin: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{origin}:{}: expected `key = value`, got `{line}`", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if key.is_empty() {
            return Err(usage(format!("{origin}:{}: empty key", i + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

/// Resolved settings for one command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Merges the optional settings file with the flags. `flags` lists every
    /// key the command accepts; file keys outside that list are rejected.
    pub fn resolve(
        flags: &[(&'static str, Option<String>)],
        file: Option<&Path>,
    ) -> Result<Self, UsageError> {
        let mut values = BTreeMap::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let parsed = parse_settings(&text, &path.display().to_string())?;
            for (key, value) in parsed {
                if !flags.iter().any(|(k, _)| *k == key) {
                    let known: Vec<&str> = flags.iter().map(|(k, _)| *k).collect();
                    return Err(usage(format!(
                        "unknown key `{key}` in {} (this command accepts: {})",
                        path.display(),
                        known.join(", ")
                    )));
                }
                values.insert(key, value);
            }
        }
        for (key, value) in flags {
            if let Some(v) = value {
                values.insert(key.to_string(), v.clone());
            }
        }
        Ok(Settings { values })
    }

    #[cfg(test)]
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Settings {
            values: pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, UsageError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| usage(format!("bad value `{v}` for `{key}`: {e}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, UsageError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

/// Parses `a:b:step` (inclusive) or a comma-separated list of integers.
pub fn parse_int_list(text: &str) -> Result<Vec<u32>, UsageError> {
    let bad = || usage(format!("cannot parse `{text}` as a list or a:b:step range"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let nums: Vec<u32> = parts.iter().map(|p| p.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let (a, b, step) = (nums[0], nums[1], nums[2]);
        if step == 0 || a > b {
            return Err(bad());
        }
        return Ok((a..=b).step_by(step as usize).collect());
    }
    text.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}

/// Parses `a:b:step` (inclusive, up to rounding) or a comma-separated list of reals.
pub fn parse_real_list(text: &str) -> Result<Vec<f64>, UsageError> {
    let bad = || usage(format!("cannot parse `{text}` as a list or a:b:step range"));
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts.iter().map(|p| p.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let (a, b, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || a > b {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=count).map(|k| a + k as f64 * step).collect());
    }
    text.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect()
}
