//! Run configuration: a flat `key = value` file with flag overrides.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use wsp_core::fields::Grid;
use wsp_core::kernels::CutoffSpec;

use crate::error::{Result, WspError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PressureMode {
    /// `p_φ` with the corrected far field.
    Phi,
    /// `p₀` with the plain far field.
    P0,
}

impl std::str::FromStr for PressureMode {
    type Err = WspError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(PressureMode::Phi),
            "p0" => Ok(PressureMode::P0),
            _ => Err(WspError::Config(format!("mode must be 'phi' or 'p0', got '{s}'"))),
        }
    }
}

/// Tolerances that can be overridden with `tol.<name> = value`.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("trace", 1e-12),
    ("phi_gradient", 1e-3),
    ("phi_constant_std", 1e-6),
    ("phi_constant_mean", 1e-8),
    ("poisson", 5e-2),
    ("heat_slope", 0.15),
    ("bound_band", 0.05),
    ("leray", 1e-3),
    ("oracle", 2e-2),
    ("drift", 1e-4),
    ("wd_drift", 1e-6),
    ("embedding_slack", 0.05),
    ("split_spread", 0.2),
    ("curl", 1e-2),
    ("dispersion", 1e-2),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub r0: f64,
    pub r1: f64,
    pub mode: PressureMode,
    pub seed: u64,
    pub workers: usize,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dim: 2,
            n: 128,
            half_width: 8.0,
            r0: 1.0,
            r1: 2.0,
            mode: PressureMode::Phi,
            seed: 0,
            workers: 1,
            tolerances: TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| WspError::Config(format!("cannot parse '{value}' for key '{key}'")))
}

impl RunConfig {
    /// Applies one `key = value` setting; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (key, value) = (key.trim(), value.trim());
        match key {
            "dim" => self.dim = parse_num(key, value)?,
            "N" | "n" => self.n = parse_num(key, value)?,
            "L" | "half_width" => self.half_width = parse_num(key, value)?,
            "r0" => self.r0 = parse_num(key, value)?,
            "r1" => self.r1 = parse_num(key, value)?,
            "mode" => self.mode = value.parse()?,
            "seed" => self.seed = parse_num(key, value)?,
            "workers" => self.workers = parse_num(key, value)?,
            _ => match key.strip_prefix("tol.") {
                Some(name) if self.tolerances.contains_key(name) => {
                    let v: f64 = parse_num(key, value)?;
                    if !(v >= 0.0 && v.is_finite()) {
                        return Err(WspError::Config(format!("tolerance '{name}' must be non-negative")));
                    }
                    self.tolerances.insert(name.to_string(), v);
                }
                _ => return Err(WspError::Config(format!("unknown key '{key}'"))),
            },
        }
        Ok(())
    }

    /// Applies `key=value` pairs.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| WspError::Config(format!("expected key=value, got '{pair}'")))?;
        self.set(k, v)
    }

    /// Reads a configuration file: one `key = value` per line, `#` starts a
    /// comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line)
                .map_err(|e| WspError::Config(format!("line {}: {e}", k + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| WspError::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn spec(&self) -> Result<CutoffSpec> {
        Ok(CutoffSpec::new(self.r0, self.r1)?)
    }

    pub fn grid(&self) -> Result<Grid> {
        Ok(Grid::new(self.dim, self.n, self.half_width)?)
    }

    /// Checks the configuration against the module preconditions.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let spec = self.spec()?;
        if grid.spacing() > spec.r0 / 4.0 * (1.0 + 1e-12) {
            return Err(WspError::Config(format!(
                "spacing {} does not resolve r0 = {} (need 2L/N <= r0/4)",
                grid.spacing(),
                spec.r0
            )));
        }
        if spec.r1 >= self.half_width {
            return Err(WspError::Config("r1 must be smaller than the half-width L".into()));
        }
        if self.workers == 0 {
            return Err(WspError::Config("workers must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn text_and_overrides() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\ndim = 3\nN=64 # trailing\nL = 4\n\ntol.leray = 2e-3\nmode=p0\n")
            .unwrap();
        assert_eq!((c.dim, c.n, c.half_width, c.mode), (3, 64, 4.0, PressureMode::P0));
        assert_eq!(c.tol("leray"), 2e-3);
        c.set_pair("N=32").unwrap();
        assert_eq!(c.n, 32);
        assert!(c.validate().is_ok());
        c.set_pair("N=16").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut c = RunConfig::default();
        assert!(c.apply_text("colour = blue").is_err());
        assert!(c.set_pair("tol.nonsense=1").is_err());
        assert!(c.set_pair("dim").is_err());
        assert!(c.set_pair("N=abc").is_err());
        assert!(c.set_pair("mode=p1").is_err());
        assert!(c.set_pair("tol.leray=-1").is_err());
    }
}
