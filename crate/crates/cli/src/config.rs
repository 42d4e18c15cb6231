//! Run configuration files and the flags layered on top of them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use synthdim::scenarios::{Overrides, RunSpec};

use crate::CliError;

pub const SCHEMA: &str = "synthdim-config/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Records,
    Svg,
}

/// On-disk config. Exactly one of `scenario` and `run` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSpec>,
    #[serde(default, skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: SCHEMA.to_string(),
            tool_version: None,
            scenario: None,
            run: None,
            overrides: Overrides::new(),
            out: None,
            formats: vec![],
        }
    }
}

/// What a command will execute after config and flags are merged.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Scenario(String),
    Explicit(RunSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub target: Target,
    pub overrides: Overrides,
    pub out: PathBuf,
    pub formats: Vec<Format>,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
    if cfg.schema != SCHEMA {
        return Err(CliError::Usage(format!("config schema `{}` is not supported; expected `{SCHEMA}`", cfg.schema)));
    }
    if let Some(v) = &cfg.tool_version {
        if v != TOOL_VERSION {
            eprintln!("note: config written by version {v}, running {TOOL_VERSION}");
        }
    }
    cfg.overrides.validate()?;
    Ok(cfg)
}

/// Flags win over the config file; `--set` pairs are added to the config's overrides.
pub fn resolve(
    config: Option<&Path>,
    scenario: Option<String>,
    sets: &[String],
    out: Option<PathBuf>,
    formats: &[Format],
) -> Result<Resolved, CliError> {
    let mut cfg = match config {
        Some(p) => load(p)?,
        None => RunConfig::default(),
    };
    if let Some(id) = scenario {
        if cfg.run.is_some() {
            return Err(CliError::Usage("a scenario id cannot be combined with an explicit run spec".into()));
        }
        cfg.scenario = Some(id);
    }
    for pair in sets {
        cfg.overrides.set_pair(pair)?;
    }
    let target = match (cfg.scenario, cfg.run) {
        (Some(id), None) => Target::Scenario(id),
        (None, Some(spec)) => {
            if !cfg.overrides.is_empty() {
                return Err(CliError::Usage("overrides apply to scenarios, not to explicit run specs".into()));
            }
            Target::Explicit(spec)
        }
        (None, None) => return Err(CliError::Usage("nothing to run: give a scenario id or a config with `scenario` or `run`".into())),
        (Some(_), Some(_)) => return Err(CliError::Usage("config sets both `scenario` and `run`".into())),
    };
    let mut formats = if formats.is_empty() { cfg.formats } else { formats.to_vec() };
    if formats.is_empty() {
        formats.push(Format::Csv);
    }
    formats.sort();
    formats.dedup();
    Ok(Resolved { target, overrides: cfg.overrides, out: out.or(cfg.out).unwrap_or_else(|| PathBuf::from("out")), formats })
}

/// Config that repeats one finished run.
pub fn replay_record(spec: &RunSpec, formats: &[Format]) -> RunConfig {
    RunConfig {
        tool_version: Some(TOOL_VERSION.to_string()),
        run: Some(spec.clone()),
        formats: formats.to_vec(),
        ..RunConfig::default()
    }
}
