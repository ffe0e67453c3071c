//! Run specifications, config-file loading and the output manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use srvar_core::harness::{ExperimentConfig, SweepGrid};
use srvar_core::{BoundMethod, FpFormat};

use crate::error::{CliError, Result};
use crate::table::OutputFormat;

/// Everything needed to reproduce an `experiment` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub experiment: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
}

/// Grid for a bound table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsGrid {
    pub n: Vec<u64>,
    pub u: f64,
    pub lambdas: Vec<f64>,
    pub kappa: f64,
    pub k1: f64,
    pub k2: f64,
    pub methods: Vec<BoundMethod>,
}

/// Command-line values that replace config-file entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub precision: Option<u32>,
    pub lambdas: Option<Vec<f64>>,
    pub threads: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, spec: &mut RunSpec) -> Result<()> {
        let cfg = &mut spec.experiment;
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(r) = self.reps {
            cfg.repetitions = r;
        }
        if let Some(p) = self.precision {
            cfg.precision = FpFormat::new(p)?;
        }
        if let Some(l) = &self.lambdas {
            cfg.lambdas = l.clone();
            if let Some(SweepGrid::Lambda(grid)) = &mut spec.sweep {
                *grid = l.clone();
            }
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        cfg.validate()?;
        Ok(())
    }

    pub fn apply_bounds(&self, grid: &mut BoundsGrid) -> Result<()> {
        if let Some(p) = self.precision {
            grid.u = FpFormat::new(p)?.unit_roundoff();
        }
        if let Some(l) = &self.lambdas {
            grid.lambdas = l.clone();
        }
        Ok(())
    }
}

/// Loads a run spec from TOML, or from JSON (either a bare spec or a
/// manifest written by a previous run).
pub fn load_run_spec(path: &Path) -> Result<RunSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let bad = |e: &dyn std::fmt::Display| CliError::Config(format!("{}: {e}", path.display()));
    let spec: RunSpec = if path.extension().is_some_and(|e| e == "json") {
        let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
        let v = match v.get_mut("run") {
            Some(run) => run.take(),
            None => v,
        };
        serde_json::from_value(v).map_err(|e| bad(&e))?
    } else {
        toml::from_str(&text).map_err(|e| bad(&e))?
    };
    spec.experiment.validate()?;
    Ok(spec)
}

/// Echo of a fully resolved invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsGrid>,
    pub format: OutputFormat,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, format: OutputFormat) -> Self {
        Self {
            tool: "srvar".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            figure: None,
            run: None,
            bounds: None,
            format,
            files: Vec::new(),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<std::path::PathBuf> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// Parses a size such as `1000`, `1e6` or `2^20`.
pub fn parse_size(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let bad = || format!("invalid size '{s}'");
    if let Some((b, e)) = s.split_once('^') {
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        let e: u32 = e.trim().parse().map_err(|_| bad())?;
        return b.checked_pow(e).ok_or_else(bad);
    }
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| bad())?;
    if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(64) {
        Ok(x as u64)
    } else {
        Err(bad())
    }
}

/// Numbers separated by commas, whitespace or newlines; `#` starts a
/// comment.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Config(format!("invalid number '{t}'")))
        })
        .collect()
}
