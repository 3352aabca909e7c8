//! `key = value` config files, merged in front of the command-line flags.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::Command;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Blank lines and `#` comments are skipped. Keys may use `_` or `-`.
pub fn parse(text: &str) -> Result<Vec<Entry>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", n + 1));
        }
        let value = v.trim().trim_matches('"').to_string();
        out.push(Entry { key, value, line: n + 1 });
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<Vec<Entry>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Where `--config` points, if anywhere on the command line.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn long_names(cmd: &Command) -> Vec<String> {
    cmd.get_arguments()
        .filter_map(|a| a.get_long())
        .filter(|l| *l != "config" && *l != "help" && *l != "version")
        .map(str::to_string)
        .collect()
}

/// Inserts config entries as flags right after the subcommand name, so any
/// flag given on the command line comes later and overrides them. Keys that
/// belong to another subcommand are skipped; keys no subcommand knows are
/// an error.
pub fn splice(root: &Command, args: Vec<OsString>, entries: &[Entry]) -> Result<Vec<OsString>, String> {
    let all: Vec<String> = root.get_subcommands().flat_map(long_names).collect();
    if let Some(bad) = entries.iter().find(|e| !all.contains(&e.key)) {
        return Err(format!("config line {}: unknown key {:?}", bad.line, bad.key));
    }
    let Some(pos) = args.iter().enumerate().skip(1).position(|(i, a)| {
        let prev = args[i - 1].to_string_lossy();
        prev != "--config" && root.find_subcommand(&*a.to_string_lossy()).is_some()
    }) else {
        return Ok(args);
    };
    let pos = pos + 1;
    let sub = root
        .find_subcommand(&*args[pos].to_string_lossy())
        .expect("found above");
    let known = long_names(sub);
    let mut out: Vec<OsString> = args[..=pos].to_vec();
    for e in entries.iter().filter(|e| known.contains(&e.key)) {
        out.push(format!("--{}", e.key).into());
        out.push(e.value.clone().into());
    }
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}
