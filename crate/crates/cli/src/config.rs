//! Flat key-value configuration: a TOML file whose (possibly nested) keys are
//! read back as dotted paths such as `grid.n` or `holder.sweep.delta`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use toml::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentId {
    FreeScaling,
    Holder,
    AgmonWeighted,
    Endpoint,
    Jean,
    SquareFunction,
    Localized,
    Bilinear,
    LocalExtension,
    JumpConstant,
    ImagPairing,
    PerturbedScaling,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 12] = [
        ExperimentId::FreeScaling,
        ExperimentId::Holder,
        ExperimentId::AgmonWeighted,
        ExperimentId::Endpoint,
        ExperimentId::Jean,
        ExperimentId::SquareFunction,
        ExperimentId::Localized,
        ExperimentId::Bilinear,
        ExperimentId::LocalExtension,
        ExperimentId::JumpConstant,
        ExperimentId::ImagPairing,
        ExperimentId::PerturbedScaling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::FreeScaling => "free-scaling",
            ExperimentId::Holder => "holder",
            ExperimentId::AgmonWeighted => "agmon-weighted",
            ExperimentId::Endpoint => "endpoint",
            ExperimentId::Jean => "jean",
            ExperimentId::SquareFunction => "square-function",
            ExperimentId::Localized => "localized",
            ExperimentId::Bilinear => "bilinear",
            ExperimentId::LocalExtension => "local-extension",
            ExperimentId::JumpConstant => "jump-constant",
            ExperimentId::ImagPairing => "imag-pairing",
            ExperimentId::PerturbedScaling => "perturbed-scaling",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentId::ALL.iter().map(|i| i.as_str()).collect();
                CliError::Config(format!(
                    "unknown experiment '{s}' (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// Parsed config file as a sorted map from dotted key to value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

impl ConfigFile {
    pub fn empty() -> Self {
        ConfigFile::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let mut entries = BTreeMap::new();
        flatten("", &table, &mut entries);
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::MissingConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Keys under `prefix.` with the prefix removed.
    pub fn scoped(&self, prefix: &str) -> Params {
        let dotted = format!("{prefix}.");
        let entries = self
            .entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(&dotted).map(|s| (s.to_string(), v.clone())))
            .collect();
        Params::new(prefix, entries)
    }

    /// Every key not listed in `exclude`.
    pub fn without(&self, exclude: &[&str]) -> Params {
        let entries = self
            .entries
            .iter()
            .filter(|(k, _)| !exclude.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Params::new("", entries)
    }
}

/// Experiment parameters with typed, defaulted lookups. Every key must be
/// consumed before [`Params::finish`], so misspelled keys are rejected.
#[derive(Debug)]
pub struct Params {
    scope: String,
    entries: BTreeMap<String, Value>,
    used: RefCell<BTreeSet<String>>,
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Params {
    pub fn new(scope: &str, entries: BTreeMap<String, Value>) -> Self {
        Params {
            scope: scope.to_string(),
            entries,
            used: RefCell::new(BTreeSet::new()),
        }
    }

    fn full(&self, key: &str) -> String {
        if self.scope.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.scope)
        }
    }

    fn take(&self, key: &str) -> Option<&Value> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key)
    }

    fn bad(&self, key: &str, want: &str) -> CliError {
        CliError::Config(format!("{} must be {want}", self.full(key)))
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => as_f64(v)
                .filter(|x| x.is_finite())
                .ok_or_else(|| self.bad(key, "a finite number")),
        }
    }

    pub fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let x = self.f64(key, default)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.bad(key, "positive"))
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(self.bad(key, "a nonnegative integer")),
        }
    }

    pub fn count(&self, key: &str, default: usize) -> Result<usize> {
        let c = self.usize(key, default)?;
        if c == 0 {
            return Err(self.bad(key, "at least 1"));
        }
        Ok(c)
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64> {
        self.usize(key, default as usize).map(|v| v as u64)
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String> {
        match self.take(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(self.bad(key, "a string")),
        }
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(self.bad(key, "true or false")),
        }
    }

    /// Nonempty list of finite numbers.
    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let out = match self.take(key) {
            None => default.to_vec(),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| as_f64(v).filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| self.bad(key, "a list of numbers"))?,
            Some(_) => return Err(self.bad(key, "a list of numbers")),
        };
        if out.is_empty() {
            return Err(CliError::Config(format!(
                "sweep list {} is empty",
                self.full(key)
            )));
        }
        Ok(out)
    }

    /// `[lo, hi]` with `lo <= hi`.
    pub fn window(&self, key: &str, default: (f64, f64)) -> Result<(f64, f64)> {
        let v = self.list(key, &[default.0, default.1])?;
        match v.as_slice() {
            [lo, hi] if lo <= hi => Ok((*lo, *hi)),
            _ => Err(self.bad(key, "a two-element list [lo, hi] with lo <= hi")),
        }
    }

    /// Rejects keys that no lookup asked for.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<String> = self
            .entries
            .keys()
            .filter(|k| !used.contains(*k))
            .map(|k| self.full(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "unknown keys: {}",
                unknown.join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_and_dotted_keys_flatten_alike() {
        let a = ConfigFile::parse("grid.n = 32\ngrid.l = 16.0\n").unwrap();
        let b = ConfigFile::parse("[grid]\nn = 32\nl = 16.0\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.get("grid.n"), Some(&Value::Integer(32)));
    }

    #[test]
    fn lookups_and_unknown_keys() {
        let c =
            ConfigFile::parse("holder.sweep.p = [1, 1.2]\nholder.grid.n = 32\nholder.typo = 1\n")
                .unwrap();
        let p = c.scoped("holder");
        assert_eq!(p.list("sweep.p", &[2.0]).unwrap(), vec![1.0, 1.2]);
        assert_eq!(p.usize("grid.n", 8).unwrap(), 32);
        assert_eq!(p.f64("grid.l", 7.0).unwrap(), 7.0);
        let err = p.finish().unwrap_err().to_string();
        assert!(err.contains("holder.typo"), "{err}");
    }

    #[test]
    fn empty_sweep_is_a_config_error() {
        let c = ConfigFile::parse("sweep.lambda = []\n").unwrap();
        let p = c.without(&[]);
        let e = p.list("sweep.lambda", &[1.0]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn windows_are_ordered() {
        let c = ConfigFile::parse("w = [0.5, -0.5]\n").unwrap();
        assert!(c.without(&[]).window("w", (0.0, 1.0)).is_err());
    }

    #[test]
    fn ids_round_trip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.as_str().parse::<ExperimentId>().unwrap(), id);
        }
        assert!("nope".parse::<ExperimentId>().is_err());
    }
}
