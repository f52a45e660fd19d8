//! JSON reports with a stable key order and no timestamps.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{Result, WspError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            relation: "<=",
            passed: value <= limit,
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            limit,
            relation: ">=",
            passed: value >= limit,
        }
    }

    /// A boolean verdict recorded as 1 (held) or 0.
    pub fn holds(name: &str, ok: bool) -> Self {
        Check::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub values: BTreeMap<String, Value>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config: config.clone(),
            checks: Vec::new(),
            values: BTreeMap::new(),
            passed: true,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.passed &= c.passed;
        self.checks.push(c);
    }

    pub fn value(&mut self, key: &str, v: impl Serialize) {
        self.values
            .insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn merge(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.name = format!("{prefix}.{}", c.name);
            self.check(c);
        }
        for (k, v) in other.values {
            self.values.insert(format!("{prefix}.{k}"), v);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| WspError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_check_fails_the_report() {
        let mut r = Report::new("test", &RunConfig::default());
        r.check(Check::at_most("a", 1.0, 2.0));
        assert!(r.passed);
        r.check(Check::at_least("b", 1.0, 2.0));
        assert!(!r.passed);
        assert_eq!(r.failed_checks(), vec!["b"]);
    }

    #[test]
    fn serialization_is_stable() {
        let mut r = Report::new("test", &RunConfig::default());
        r.value("z", 1.5);
        r.value("a", vec![1.0, 2.0]);
        let s = r.to_json().unwrap();
        assert_eq!(s, r.clone().to_json().unwrap());
        assert!(s.find("\"a\"").unwrap() < s.find("\"z\"").unwrap());
        assert!(s.contains("\"schema_version\": 1"));
    }
}
