//! `key=value` config files with `#` comments.

use std::collections::BTreeMap;
use std::str::FromStr;

use curvinit_core::{ActivationKind, BaseScheme, InitScheme};

use crate::error::{CliError, CliResult};
use crate::netfmt::parse_activation;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed key/value pairs. Every key is checked against an allow-list at parse
/// time; values are converted on demand.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
}

impl Config {
    pub fn parse(text: &str, allowed: &[&str]) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| CliError::ConfigLine { line, msg: format!("expected key=value, got `{content}`") })?;
            let (k, v) = (k.trim(), v.trim());
            if !allowed.contains(&k) {
                return Err(CliError::ConfigLine { line, msg: format!("unknown key `{k}`") });
            }
            if v.is_empty() {
                return Err(CliError::ConfigLine { line, msg: format!("empty value for `{k}`") });
            }
            if entries.insert(k.to_string(), Entry { value: v.to_string(), line }).is_some() {
                return Err(CliError::ConfigLine { line, msg: format!("duplicate key `{k}`") });
            }
        }
        Ok(Self { entries })
    }

    /// Sets a value from outside the file (command-line overrides).
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), Entry { value: value.into(), line: 0 });
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn err(&self, key: &str, msg: String) -> CliError {
        match self.entries.get(key) {
            Some(e) if e.line > 0 => CliError::ConfigLine { line: e.line, msg },
            _ => CliError::Config(msg),
        }
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    /// Converts with `conv`, reporting failures against the key's line.
    pub fn get_with<T>(&self, key: &str, conv: impl FnOnce(&str) -> Result<T, String>) -> CliResult<Option<T>> {
        match self.str(key) {
            None => Ok(None),
            Some(v) => conv(v).map(Some).map_err(|m| self.err(key, format!("`{key}`: {m}"))),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.get_with(key, |v| v.parse::<T>().map_err(|_| format!("cannot parse `{v}`")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        self.get_with(key, parse_list)
    }

    pub fn positive(&self, key: &str, default: f64) -> CliResult<f64> {
        let v = self.get_or(key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(self.err(key, format!("`{key}` must be positive, got {v}")));
        }
        Ok(v)
    }

    pub fn count(&self, key: &str, default: usize, min: usize) -> CliResult<usize> {
        let v = self.get_or(key, default)?;
        if v < min {
            return Err(self.err(key, format!("`{key}` must be at least {min}, got {v}")));
        }
        Ok(v)
    }

    pub fn activation(&self, key: &str, default: ActivationKind) -> CliResult<ActivationKind> {
        Ok(self.get_with(key, parse_activation)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str) -> CliResult<bool> {
        Ok(self
            .get_with(key, |v| match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(format!("expected true or false, got `{v}`")),
            })?
            .unwrap_or(false))
    }

    /// `scheme` plus the `relu_correct` / `dropout_correct` flags.
    pub fn scheme(&self, default: BaseScheme) -> CliResult<InitScheme> {
        let base = self.get_with("scheme", parse_scheme)?.unwrap_or(default);
        InitScheme::new(base, self.flag("relu_correct")?, self.flag("dropout_correct")?)
            .map_err(|e| self.err("scheme", e.to_string()))
    }
}

pub fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, String> {
    v.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| format!("bad list element `{}`", p.trim())))
        .collect()
}

/// `glorot`, `forward`, `backward` or `fixed:<std>`.
pub fn parse_scheme(s: &str) -> Result<BaseScheme, String> {
    match s {
        "glorot" => Ok(BaseScheme::Glorot),
        "forward" => Ok(BaseScheme::ForwardStable),
        "backward" => Ok(BaseScheme::BackwardStable),
        _ => {
            let std = s
                .strip_prefix("fixed:")
                .ok_or_else(|| format!("unknown scheme `{s}`"))?
                .parse::<f64>()
                .map_err(|_| format!("bad std in `{s}`"))?;
            if !(std > 0.0 && std.is_finite()) {
                return Err(format!("fixed std must be positive, got {std}"));
            }
            Ok(BaseScheme::Fixed(std))
        }
    }
}
