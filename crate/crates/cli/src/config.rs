use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::Deserialize;

pub const DEFAULT_SEED: u64 = 20240611;

/// Known tolerance keys and their defaults.
pub const TOLERANCES: &[(&str, f64, &str)] = &[
    ("density", 1e-10, "relative tolerance of each Plancherel density quadrature"),
    ("constant", 1e-6, "allowed deviation of the torsion constant from its reference value"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            tolerances: TOLERANCES.iter().map(|(k, v, _)| (k.to_string(), *v)).collect(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML or JSON file; keys missing from `tolerances` keep their
    /// defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let is_json = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => true,
            Some("toml") => false,
            _ => text.trim_start().starts_with('{'),
        };
        let mut cfg: RunConfig = if is_json {
            serde_json::from_str(&text).with_context(|| format!("invalid JSON config {}", path.display()))?
        } else {
            toml::from_str(&text).with_context(|| format!("invalid TOML config {}", path.display()))?
        };
        for (k, v, _) in TOLERANCES {
            cfg.tolerances.entry(k.to_string()).or_insert(*v);
        }
        cfg.validate().with_context(|| format!("in config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.tolerances {
            if !TOLERANCES.iter().any(|(name, _, _)| name == k) {
                let known: Vec<&str> = TOLERANCES.iter().map(|t| t.0).collect();
                bail!("unknown tolerance '{k}'; known tolerances: {}", known.join(", "));
            }
            if !(v.is_finite() && *v > 0.0) {
                bail!("tolerance '{k}' must be strictly positive, got {v}");
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances[key]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(ext: &str, body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.tolerance("density"), 1e-10);
    }

    #[test]
    fn toml_and_json_agree() {
        let t = write(".toml", "seed = 7\n[tolerances]\ndensity = 1e-9\n[output]\nformat = \"text\"\n");
        let j = write(".json", r#"{"seed": 7, "tolerances": {"density": 1e-9}, "output": {"format": "text"}}"#);
        for f in [t, j] {
            let c = RunConfig::load(f.path()).unwrap();
            assert_eq!(c.seed, 7);
            assert_eq!(c.tolerance("density"), 1e-9);
            assert_eq!(c.tolerance("constant"), 1e-6);
            assert_eq!(c.output.format, Some(Format::Text));
        }
    }

    #[test]
    fn rejects_nonpositive_and_unknown_tolerances() {
        for body in ["[tolerances]\ndensity = 0.0\n", "[tolerances]\ndensity = -1e-3\n", "[tolerances]\nfoo = 1.0\n", "colour = 1\n"] {
            let f = write(".toml", body);
            assert!(RunConfig::load(f.path()).is_err(), "{body}");
        }
    }
}
