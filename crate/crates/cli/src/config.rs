//! `--config FILE`: a JSON object whose keys are flag names.
//!
//! Keys may be written `d-m`, `d_m` or `--d-m`. Arrays become
//! comma-separated values, `true` a bare switch, and `false` or `null`
//! drop the key. The flags are spliced in right after the subcommand so
//! anything given on the command line overrides them.

use std::fs;

use anyhow::{bail, Context, Result};
use serde_json::Value;

const SUBCOMMANDS: &[&str] = &[
    "calibrate",
    "sample",
    "tradeoff",
    "experiment",
    "decision",
    "gowalla",
    "verify",
    "prior",
    "build",
];

/// Globals that take a value, so their value is not mistaken for a subcommand.
const VALUED_GLOBALS: &[&str] = &["--threads", "--config"];

pub fn expand(mut argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(argv);
    };
    let path = if let Some(v) = argv[pos].strip_prefix("--config=") {
        let v = v.to_string();
        argv.remove(pos);
        v
    } else {
        if pos + 1 >= argv.len() {
            bail!("--config needs a file");
        }
        argv.remove(pos);
        argv.remove(pos)
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {path}"))?;
    let Value::Object(map) = value else {
        bail!("config {path} must hold a JSON object");
    };

    let mut flags = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.trim_start_matches('-').replace('_', "-"));
        let text = match v {
            Value::Null | Value::Bool(false) => continue,
            Value::Bool(true) => {
                flags.push(flag);
                continue;
            }
            Value::String(s) => s,
            Value::Number(n) => n.to_string(),
            Value::Array(items) => items.iter().map(scalar).collect::<Result<Vec<_>>>()?.join(","),
            Value::Object(_) => bail!("config key '{key}' holds an object"),
        };
        flags.push(format!("{flag}={text}"));
    }

    let mut insert_at = 1;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].as_str();
        if SUBCOMMANDS.contains(&a) {
            insert_at = i + 1;
        } else if VALUED_GLOBALS.contains(&a) {
            i += 1;
        } else if !a.starts_with('-') {
            break;
        }
        i += 1;
    }
    argv.splice(insert_at..insert_at, flags);
    Ok(argv)
}

fn scalar(v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        _ => bail!("config arrays may hold only strings, numbers and booleans"),
    })
}
