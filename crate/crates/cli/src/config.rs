//! `--config` merging and seed resolution.
//!
//! A config file is a JSON object whose keys are long flag names (with `_`
//! or `-`) of the chosen subcommand. Its entries are spliced into argv right
//! after the subcommand unless the same flag is given explicitly, so
//! explicit flags always win.

use std::collections::hash_map::RandomState;
use std::hash::BuildHasher;
use std::path::Path;

use serde_json::Value;

use crate::CliError;

pub const SUBCOMMANDS: [&str; 8] = ["simulate", "fit", "forecast", "curve", "asym", "tune", "mc", "fukuchi"];

/// Value of `--config` in raw argv, if any.
fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn short_alias(flag: &str) -> Option<&'static str> {
    match flag {
        "input" => Some("-i"),
        "output" => Some("-o"),
        _ => None,
    }
}

fn flag_given(argv: &[String], flag: &str) -> bool {
    let long = format!("--{flag}");
    let with_eq = format!("{long}=");
    argv.iter()
        .any(|a| *a == long || a.starts_with(&with_eq) || short_alias(flag).is_some_and(|s| a == s))
}

fn render(value: &Value, key: &str) -> Result<Option<String>, CliError> {
    Ok(match value {
        Value::Null | Value::Bool(false) => None,
        Value::Bool(true) => Some(String::new()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let parts = items
                .iter()
                .map(|v| match v {
                    Value::Number(n) => Ok(n.to_string()),
                    Value::String(s) => Ok(s.clone()),
                    _ => Err(CliError::Usage(format!("config key `{key}`: list items must be numbers or strings"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(parts.join(","))
        }
        Value::Object(_) => {
            return Err(CliError::Usage(format!("config key `{key}`: nested objects are not supported")));
        }
    })
}

/// Returns argv with config-file defaults inserted.
pub fn merge(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let json: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {path} is not valid JSON: {e}")))?;
    let Value::Object(map) = json else {
        return Err(CliError::Usage(format!("config {path} must be a JSON object")));
    };

    let position = argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str()));
    let configured = match map.get("subcommand") {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => return Err(CliError::Usage("config key `subcommand` must be a string".into())),
        None => None,
    };
    let mut argv = argv;
    let insert_at = match (position, &configured) {
        (Some(i), Some(c)) if argv[i] != *c => {
            return Err(CliError::Usage(format!(
                "config is for `{c}` but the command line runs `{}`",
                argv[i]
            )));
        }
        (Some(i), _) => i + 1,
        (None, Some(c)) => {
            argv.push(c.clone());
            argv.len()
        }
        (None, None) => return Ok(argv),
    };

    let mut extra = Vec::new();
    for (key, value) in &map {
        if key == "subcommand" || key == "config" {
            continue;
        }
        let flag = key.replace('_', "-");
        if flag_given(&argv, &flag) {
            continue;
        }
        if let Some(v) = render(value, key)? {
            extra.push(format!("--{flag}"));
            if !v.is_empty() || !matches!(value, Value::Bool(true)) {
                extra.push(v);
            }
        }
    }
    argv.splice(insert_at..insert_at, extra);
    Ok(argv)
}

/// Resolves `--seed` (or PAEBACK_SEED). `auto` draws a fresh seed and
/// reports it on stderr so the run can be repeated.
pub fn resolve_seed(arg: Option<&str>) -> Result<u64, CliError> {
    let env = std::env::var("PAEBACK_SEED").ok();
    let raw = match (arg, env.as_deref()) {
        (Some(a), _) => a.to_string(),
        (None, Some(e)) if !e.trim().is_empty() => e.trim().to_string(),
        _ => {
            return Err(CliError::Usage(
                "a seed is required: pass --seed <u64>, --seed auto, or set PAEBACK_SEED".into(),
            ));
        }
    };
    if raw.eq_ignore_ascii_case("auto") {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or_default();
        let seed = RandomState::new().hash_one((nanos, std::process::id()));
        eprintln!("seed: {seed}");
        return Ok(seed);
    }
    raw.parse::<u64>()
        .map_err(|_| CliError::Usage(format!("seed must be an unsigned integer or `auto`, got `{raw}`")))
}
