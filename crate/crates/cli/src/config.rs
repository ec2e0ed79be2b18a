//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::CliError;

/// Every key any experiment reads. Anything else is rejected.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha", "d", "decay", "distance", "eps", "family", "field", "j_max", "j_min", "k_max", "k_min", "l",
    "ladder", "lambda", "m", "masks", "max_cubes", "max_nodes", "n", "nu", "p", "period", "q", "samples", "subord_m",
    "subord_n", "t", "t_nodes", "x_nodes",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub kind: String,
    pub seed: u64,
    values: BTreeMap<String, String>,
}

impl Config {
    /// Parses the file text, then applies `key=value` overrides in order.
    pub fn parse(kind: &str, seed: u64, text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (format!("line {}", i + 1), l.to_string()))
            .chain(overrides.iter().map(|o| (format!("--set {o}"), o.clone())));
        for (origin, line) in lines {
            let line = line.split('#').next().unwrap_or("").trim().to_string();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("{origin}: expected key=value")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KNOWN_KEYS.contains(&k) {
                return Err(CliError::Validation(format!("{origin}: unknown key '{k}'")));
            }
            values.insert(k.to_string(), v.to_string());
        }
        Ok(Config {
            kind: kind.to_string(),
            seed,
            values,
        })
    }

    /// SHA-256 over the kind, the seed and the sorted settings.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("kind={}\nseed={}\n", self.kind, self.seed));
        for (k, v) in &self.values {
            h.update(format!("{k}={v}\n"));
        }
        let mut s = String::new();
        for b in h.finalize() {
            let _ = write!(s, "{b:02x}");
        }
        s
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> {
        self.values.iter()
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.values.get(key).map(String::as_str).unwrap_or(default)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Validation(format!("{key}: cannot parse '{v}'"))),
        }
    }

    /// A float in `[lo, hi]`.
    pub fn f64_in(&self, key: &str, default: f64, lo: f64, hi: f64) -> Result<f64, CliError> {
        let v = self.parsed::<f64>(key)?.unwrap_or(default);
        if !(v >= lo && v <= hi) {
            return Err(CliError::Validation(format!("{key} = {v} outside [{lo}, {hi}]")));
        }
        Ok(v)
    }

    pub fn usize_in(&self, key: &str, default: usize, lo: usize, hi: usize) -> Result<usize, CliError> {
        let v = self.parsed::<usize>(key)?.unwrap_or(default);
        if v < lo || v > hi {
            return Err(CliError::Validation(format!("{key} = {v} outside [{lo}, {hi}]")));
        }
        Ok(v)
    }

    /// `dyadic:a:b` for `2^a, ..., 2^b`, or a comma list.
    pub fn ladder(&self, default: &str) -> Result<Vec<f64>, CliError> {
        let spec = self.str_or("ladder", default);
        let bad = || CliError::Validation(format!("ladder: cannot parse '{spec}'"));
        let out: Vec<f64> = if let Some(rest) = spec.strip_prefix("dyadic:") {
            let (a, b) = rest.split_once(':').ok_or_else(bad)?;
            let a: i32 = a.trim().parse().map_err(|_| bad())?;
            let b: i32 = b.trim().parse().map_err(|_| bad())?;
            if b < a || b - a > 200 {
                return Err(bad());
            }
            (a..=b).map(|k| 2f64.powi(k)).collect()
        } else {
            spec.split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<_, _>>()?
        };
        if out.is_empty() || out.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || out.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Validation(format!("ladder '{spec}' must be positive and strictly increasing")));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn later_settings_win() {
        let c = Config::parse("riesz-eval", 1, "d = 1\n# note\nlambda=2 # trailing\n", &["lambda=1".into()]).unwrap();
        assert_eq!(c.str_or("lambda", ""), "1");
        assert_eq!(c.str_or("d", ""), "1");
        let same = Config::parse("riesz-eval", 1, "lambda=1\nd=1", &[]).unwrap();
        assert_eq!(c.hash(), same.hash());
        let other = Config::parse("riesz-eval", 2, "lambda=1\nd=1", &[]).unwrap();
        assert_ne!(c.hash(), other.hash());
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(Config::parse("k", 0, "bogus=1", &[]).is_err());
        assert!(Config::parse("k", 0, "d", &[]).is_err());
        let c = Config::parse("k", 0, "d=x\nladder=dyadic:3:1", &[]).unwrap();
        assert!(c.usize_in("d", 1, 1, 3).is_err());
        assert!(c.ladder("").is_err());
        let c = Config::parse("k", 0, "ladder=1,2,4", &[]).unwrap();
        assert_eq!(c.ladder("").unwrap(), vec![1.0, 2.0, 4.0]);
    }
}
