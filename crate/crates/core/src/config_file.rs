//! Flat `key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Physical keys fill a [`SystemConfig`] (unspecified keys keep their
//! defaults). Run keys (`sweep`, `scheme`, ...) are optional and are
//! overridden by command-line flags.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Scheme, SystemConfig};
use crate::sim::Mode;
use crate::sweep::{parse_engines, parse_schemes, Engine, SeedPolicy, SweepAxis};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub sweep: Option<SweepAxis>,
    pub schemes: Option<Vec<Scheme>>,
    pub engines: Option<Vec<Engine>>,
    pub slots: Option<u64>,
    pub warmup: Option<u64>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub seed_policy: Option<SeedPolicy>,
    pub with_exposure: Option<bool>,
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut rc = RunConfig::default();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| Error::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(err(format!("expected `key = value`, got `{content}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(err(format!("expected `key = value`, got `{content}`")));
        }
        if !seen.insert(key.to_string()) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        assign(&mut rc, key, value).map_err(|e| match e {
            Error::Config(m) | Error::Domain(m) => err(m),
            other => err(other.to_string()),
        })?;
    }
    rc.system.validate()?;
    Ok(rc)
}

fn number(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| Error::config(format!("`{key}` expects a number, got `{value}`")))?;
    if !v.is_finite() {
        return Err(Error::config(format!("`{key}` must be finite, got `{value}`")));
    }
    Ok(v)
}

fn integer(key: &str, value: &str) -> Result<u64> {
    // Accept `1e7`-style counts as long as they are whole numbers.
    if let Ok(n) = value.parse::<u64>() {
        return Ok(n);
    }
    match value.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(63) => Ok(v as u64),
        _ => Err(Error::config(format!("`{key}` expects a non-negative integer, got `{value}`"))),
    }
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!("`{key}` expects true or false, got `{value}`"))),
    }
}

fn assign(rc: &mut RunConfig, key: &str, value: &str) -> Result<()> {
    let s = &mut rc.system;
    match key {
        "p_p_dbm" => s.p_p_dbm = number(key, value)?,
        "p_s_dbm" => s.p_s_dbm = number(key, value)?,
        "n0_dbm" => s.n0_dbm = number(key, value)?,
        "ic_over_n0" => s.ic_over_n0 = number(key, value)?,
        "r_p" => s.r_p = number(key, value)?,
        "r_s" => s.r_s = number(key, value)?,
        "d_pp" => s.d_pp = number(key, value)?,
        "d_ss" => s.d_ss = number(key, value)?,
        "d_sp" => s.d_sp = number(key, value)?,
        "d_ps" => s.d_ps = number(key, value)?,
        "omega" => s.omega = number(key, value)?,
        "p" => s.p = number(key, value)?,
        "q" => s.q = number(key, value)?,
        "sweep" => rc.sweep = Some(value.parse()?),
        "scheme" => rc.schemes = Some(parse_schemes(value)?),
        "engine" => rc.engines = Some(parse_engines(value)?),
        "slots" => rc.slots = Some(integer(key, value)?),
        "warmup" => rc.warmup = Some(integer(key, value)?),
        "seed" => rc.seed = Some(integer(key, value)?),
        "mode" => rc.mode = Some(value.parse()?),
        "seed_policy" => rc.seed_policy = Some(value.parse()?),
        "with_exposure" => rc.with_exposure = Some(boolean(key, value)?),
        _ => return Err(Error::config(format!("unknown key `{key}`"))),
    }
    Ok(())
}
