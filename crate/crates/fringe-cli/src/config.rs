//! Minimal sectioned key=value config files.
//!
//! ```text
//! # comment
//! [sampling]
//! shots = 500
//! reps = 30
//! ```
//!
//! Kept hand-rolled: the format is a dozen lines to parse, and studies
//! need a canonical serialization to hash so that output files record
//! exactly which settings produced them, independent of file formatting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    bail!("line {}: unterminated section header", lineno + 1);
                };
                section = name.trim().to_string();
                if section.is_empty() {
                    bail!("line {}: empty section name", lineno + 1);
                }
                cfg.sections.entry(section.clone()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("line {}: expected `key = value`, got {line:?}", lineno + 1);
            };
            let key = key.trim();
            if key.is_empty() {
                bail!("line {}: empty key", lineno + 1);
            }
            if section.is_empty() {
                bail!("line {}: `{key}` appears before any [section]", lineno + 1);
            }
            cfg.sections
                .get_mut(&section)
                .expect("section exists")
                .insert(key.to_string(), value.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .with_context(|| format!("[{section}] {key} = {v:?} is not a number")),
        }
    }

    pub fn u64(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .with_context(|| format!("[{section}] {key} = {v:?} is not a count")),
        }
    }

    pub fn usize(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        Ok(self.u64(section, key, default as u64)? as usize)
    }

    pub fn bool(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.get(section, key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => bail!("[{section}] {key} = {v:?} is not a boolean"),
        }
    }

    /// Comma-separated list value.
    pub fn list(&self, section: &str, key: &str) -> Option<Vec<String>> {
        self.get(section, key).map(|v| {
            v.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
    }

    pub fn f64_list(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.list(section, key) {
            None => Ok(default.to_vec()),
            Some(items) => items
                .iter()
                .map(|s| {
                    s.parse()
                        .with_context(|| format!("[{section}] {key}: {s:?} is not a number"))
                })
                .collect(),
        }
    }

    /// Canonical text form: sections and keys sorted, one entry per
    /// line. Two files that differ only in formatting hash the same.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (section, entries) in &self.sections {
            for (key, value) in entries {
                let _ = writeln!(out, "{section}.{key}={value}");
            }
        }
        out
    }

    /// Short fingerprint of the effective settings, stamped into every
    /// output file. Runtime-only flags (seed, output path, threads) are
    /// deliberately not part of it.
    pub fn hash16(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut s = String::with_capacity(16);
        for b in &digest[..8] {
            let _ = write!(s, "{b:02x}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let cfg = Config::parse(
            "# demo\n[sampling]\nshots = 250\nreps=4\n\n[grid]\npoints = 60\nlist = a, b,c\n",
        )
        .unwrap();
        assert_eq!(cfg.u64("sampling", "shots", 0).unwrap(), 250);
        assert_eq!(cfg.usize("grid", "points", 0).unwrap(), 60);
        assert_eq!(cfg.u64("sampling", "missing", 7).unwrap(), 7);
        assert_eq!(
            cfg.list("grid", "list").unwrap(),
            vec!["a".to_string(), "b".to_string(), "c".to_string()]
        );
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("shots = 5\n").is_err()); // before any section
        assert!(Config::parse("[s]\njust words\n").is_err());
        assert!(Config::parse("[unterminated\n").is_err());
        let cfg = Config::parse("[s]\nx = abc\n").unwrap();
        assert!(cfg.f64("s", "x", 0.0).is_err());
    }

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let a = Config::parse("[s]\nx = 1\ny = 2\n").unwrap();
        let b = Config::parse("[s]\n  y =   2\n# note\nx=1\n").unwrap();
        let c = Config::parse("[s]\nx = 1\ny = 3\n").unwrap();
        assert_eq!(a.hash16(), b.hash16());
        assert_ne!(a.hash16(), c.hash16());
        assert_eq!(a.hash16().len(), 16);
    }
}
