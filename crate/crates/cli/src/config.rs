//! `--config` files: a TOML table whose keys are long flag names. Values
//! fill in flags that are absent from the command line.

use std::path::Path;

use clap::Command;
use toml::Value;

#[derive(Debug)]
pub enum ConfigError {
    Read(String),
    Parse(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Read(m) | ConfigError::Parse(m) => f.write_str(m),
        }
    }
}

/// Value of `--config` in raw arguments, in either `--config x` or `--config=x` form.
pub fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

fn flag_given(args: &[String], long: &str) -> bool {
    let bare = format!("--{long}");
    let eq = format!("--{long}=");
    args.iter().any(|a| *a == bare || a.starts_with(&eq))
}

/// Subcommands named in `args`, outermost first, with their commands.
fn subcommand_path(cmd: &Command, args: &[String]) -> Vec<(String, Command)> {
    let mut path = Vec::new();
    let mut current = cmd.clone();
    for a in args.iter().skip(1).filter(|a| !a.starts_with('-')) {
        if let Some(sub) = current.find_subcommand(a) {
            current = sub.clone();
            path.push((a.clone(), current.clone()));
        }
    }
    path
}

/// Long flags accepted along the subcommand path, with whether each is a switch.
fn accepted_flags(cmd: &Command, path: &[(String, Command)]) -> Vec<(String, bool)> {
    std::iter::once(cmd)
        .chain(path.iter().map(|(_, c)| c))
        .flat_map(|c| c.get_arguments())
        .filter_map(|a| a.get_long().map(|l| (l.to_string(), !a.get_action().takes_values())))
        .collect()
}

fn render(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Boolean(b) => Some(b.to_string()),
        Value::Array(items) => items.iter().map(render).collect::<Option<Vec<_>>>().map(|v| v.join(",")),
        _ => None,
    }
}

/// Appends `--key value` for every config key that names a flag of the
/// selected subcommand and is not already on the command line. Keys may sit
/// at the top level or in tables named after the subcommand path
/// (`[fit.roughness]`); the more specific table wins.
pub fn merge(cmd: &Command, args: Vec<String>) -> Result<Vec<String>, ConfigError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text =
        std::fs::read_to_string(Path::new(&path)).map_err(|e| ConfigError::Read(format!("{path}: {e}")))?;
    let table: toml::Table = text.parse().map_err(|e| ConfigError::Parse(format!("{path}: {e}")))?;
    let path_cmds = subcommand_path(cmd, &args);
    let accepted = accepted_flags(cmd, &path_cmds);

    let mut layers = vec![&table];
    let mut node = &table;
    for (w, _) in &path_cmds {
        match node.get(w) {
            Some(Value::Table(t)) => {
                layers.push(t);
                node = t;
            }
            _ => break,
        }
    }
    let mut merged = args;
    let mut seen = std::collections::BTreeSet::new();
    for layer in layers.iter().rev() {
        for (key, value) in layer.iter() {
            if value.is_table() || seen.contains(key) || key == "config" {
                continue;
            }
            let Some((_, is_switch)) = accepted.iter().find(|(l, _)| l == key) else {
                continue;
            };
            seen.insert(key.clone());
            if flag_given(&merged, key) {
                continue;
            }
            if *is_switch {
                if value.as_bool() == Some(true) {
                    merged.push(format!("--{key}"));
                }
            } else {
                let rendered = render(value)
                    .ok_or_else(|| ConfigError::Parse(format!("{path}: unsupported value for `{key}`")))?;
                merged.push(format!("--{key}"));
                merged.push(rendered);
            }
        }
    }
    Ok(merged)
}

/// Command line recorded in output files: program name normalized, and the
/// flags that only affect where and how fast results are produced removed.
pub fn normalized_command(args: &[String]) -> String {
    let mut out = vec!["cbpost".to_string()];
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if matches!(a.as_str(), "--threads" | "--out" | "--config") {
            it.next();
            continue;
        }
        if a.starts_with("--threads=") || a.starts_with("--out=") || a.starts_with("--config=") {
            continue;
        }
        out.push(a.clone());
    }
    out.join(" ")
}
