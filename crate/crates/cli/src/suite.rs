//! The verification suite: every acceptance criterion, run through the
//! experiments that produce its verdicts.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::{ConfigFile, ExperimentId};
use crate::error::{CliError, Result};
use crate::experiments::{criteria_of, run_experiment, RunContext};
use crate::report::Verdict;

pub const CRITERIA: [(&str, &str); 10] = [
    ("C1", "multiplier vs direct kernel sum"),
    ("C2", "free resolvent scaling"),
    ("C3", "Holder restriction slopes"),
    ("C4", "weighted bound and divergent control"),
    ("C5", "endpoint constant"),
    ("C6", "discrete extension"),
    ("C7", "square function"),
    ("C8", "localized resolvent"),
    ("C9", "bilinear localization and local extension"),
    ("C10", "perturbed resolvent"),
];

pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub criterion: String,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Verdict>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub allow_wraparound: bool,
    pub experiments: Vec<String>,
    pub criteria: Vec<CriterionResult>,
    #[serde(skip)]
    pub seconds: Vec<(String, f64)>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.criteria {
            out.push_str(&format!(
                "{:<4} {}  {}\n",
                c.criterion,
                if c.passed { "PASS" } else { "FAIL" },
                c.title
            ));
            for v in &c.checks {
                out.push_str(&format!(
                    "       {} {}: {:.6e} ({})\n",
                    if v.passed { "ok  " } else { "FAIL" },
                    v.check,
                    v.measured,
                    v.bound_text()
                ));
            }
            for e in &c.errors {
                out.push_str(&format!("       error: {e}\n"));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub filter: Option<String>,
    pub allow_wraparound: bool,
    /// Overrides the config's `output` key.
    pub output: Option<PathBuf>,
}

/// Parses `--filter` into a criterion id.
pub fn parse_filter(raw: &str) -> Result<String> {
    let up = raw.trim().to_ascii_uppercase();
    let id = if up.starts_with('C') {
        up
    } else {
        format!("C{up}")
    };
    if CRITERIA.iter().any(|(c, _)| *c == id) {
        Ok(id)
    } else {
        Err(CliError::Config(format!(
            "unknown criterion '{raw}'; expected C1 .. C10"
        )))
    }
}

fn check_root_keys(cfg: &ConfigFile) -> Result<()> {
    let bad: Vec<&str> = cfg
        .keys()
        .filter(|k| {
            let head = k.split('.').next().unwrap_or(k);
            !(*k == "output"
                || *k == "seed"
                || (k.contains('.') && head.parse::<ExperimentId>().is_ok()))
        })
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "unknown keys: {}; verify accepts output, seed and <experiment>.<key>",
            bad.join(", ")
        )))
    }
}

fn root_string(cfg: &ConfigFile, key: &str) -> Result<Option<String>> {
    match cfg.get(key) {
        None => Ok(None),
        Some(toml::Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(CliError::Config(format!("{key} must be a string"))),
    }
}

pub fn root_seed(cfg: &ConfigFile) -> Result<u64> {
    match cfg.get("seed") {
        None => Ok(DEFAULT_SEED),
        Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
        Some(_) => Err(CliError::Config(
            "seed must be a nonnegative integer".into(),
        )),
    }
}

/// Runs the experiments behind the selected criteria. Config and wraparound
/// problems abort with an error; anything else fails the criteria involved.
pub fn run_suite(
    cfg: &ConfigFile,
    opts: &SuiteOptions,
    mut progress: impl FnMut(&str),
) -> Result<(Summary, PathBuf)> {
    check_root_keys(cfg)?;
    let seed = root_seed(cfg)?;
    let output = match &opts.output {
        Some(p) => p.clone(),
        None => {
            PathBuf::from(root_string(cfg, "output")?.unwrap_or_else(|| "verify-output".into()))
        }
    };
    let selected: BTreeSet<String> = match &opts.filter {
        Some(f) => [parse_filter(f)?].into(),
        None => CRITERIA.iter().map(|(c, _)| c.to_string()).collect(),
    };
    let ids: Vec<ExperimentId> = ExperimentId::ALL
        .into_iter()
        .filter(|id| criteria_of(*id).iter().any(|c| selected.contains(*c)))
        .collect();
    let ctx = RunContext {
        seed,
        allow_wraparound: opts.allow_wraparound,
        criteria: Some(selected.clone()),
    };

    let mut verdicts: Vec<Verdict> = Vec::new();
    let mut errors: Vec<(String, String)> = Vec::new();
    let mut seconds = Vec::new();
    for id in &ids {
        progress(&format!("running {id}"));
        let params = cfg.scoped(id.as_str());
        let t = Instant::now();
        match run_experiment(*id, &params, &ctx) {
            Ok(report) => {
                report.write(&output.join(id.as_str()))?;
                verdicts.extend(report.verdicts.iter().cloned());
            }
            Err(e) if e.exit_code() == 2 => return Err(e),
            Err(e) => {
                for c in criteria_of(*id) {
                    errors.push((c.to_string(), format!("{id}: {e}")));
                }
            }
        }
        let s = t.elapsed().as_secs_f64();
        progress(&format!("finished {id} in {s:.1} s"));
        seconds.push((id.as_str().to_string(), s));
    }

    let criteria = CRITERIA
        .iter()
        .filter(|(c, _)| selected.contains(*c))
        .map(|(c, title)| {
            let checks: Vec<Verdict> = verdicts
                .iter()
                .filter(|v| v.criterion == *c)
                .cloned()
                .collect();
            let errs: Vec<String> = errors
                .iter()
                .filter(|e| e.0 == *c)
                .map(|e| e.1.clone())
                .collect();
            CriterionResult {
                criterion: c.to_string(),
                title: title.to_string(),
                passed: !checks.is_empty() && errs.is_empty() && checks.iter().all(|v| v.passed),
                checks,
                errors: errs,
            }
        })
        .collect();
    let summary = Summary {
        seed,
        allow_wraparound: opts.allow_wraparound,
        experiments: ids.iter().map(|i| i.as_str().to_string()).collect(),
        criteria,
        seconds,
    };
    write_summary(&summary, &output)?;
    Ok((summary, output))
}

fn write_summary(summary: &Summary, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("summary.json");
    let body = serde_json::to_string_pretty(summary)? + "\n";
    std::fs::write(&path, body).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_accepts_bare_numbers() {
        assert_eq!(parse_filter("c5").unwrap(), "C5");
        assert_eq!(parse_filter("10").unwrap(), "C10");
        assert!(parse_filter("C11").is_err());
    }

    #[test]
    fn every_criterion_has_an_experiment() {
        for (c, _) in CRITERIA {
            assert!(
                ExperimentId::ALL
                    .iter()
                    .any(|id| criteria_of(*id).contains(&c)),
                "{c}"
            );
        }
    }

    #[test]
    fn root_keys_are_checked() {
        let ok = ConfigFile::parse("seed = 3\n[jean]\ntrials = 5\n").unwrap();
        assert!(check_root_keys(&ok).is_ok());
        let bad = ConfigFile::parse("sed = 3\n").unwrap();
        assert!(check_root_keys(&bad).is_err());
        let bad = ConfigFile::parse("[jeans]\ntrials = 5\n").unwrap();
        assert!(check_root_keys(&bad).is_err());
    }
}
