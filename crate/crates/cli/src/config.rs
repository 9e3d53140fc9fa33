//! `key = value` config files merged under the command line.

use std::collections::BTreeMap;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

pub fn parse(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected `key = value`", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(format!("config line {}: duplicate key {key:?}", i + 1));
        }
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse(&text)
}

/// Appends `--key value` for every config entry the command line left unset.
pub fn merge(
    root: &Command,
    matches: &ArgMatches,
    entries: &BTreeMap<String, String>,
    argv: &mut Vec<String>,
) -> Result<(), String> {
    let (name, sub) = matches.subcommand().ok_or("no subcommand given")?;
    let sub_cmd = root.find_subcommand(name).ok_or("unknown subcommand")?;
    for (key, value) in entries {
        if key == "config" {
            return Err("config files cannot nest".into());
        }
        let global = root.get_arguments().find(|a| a.get_long() == Some(key.as_str()));
        let local = sub_cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str()));
        let (arg, m) = match (local, global) {
            (Some(a), _) => (a, sub),
            (None, Some(a)) => (a, matches),
            (None, None) => return Err(format!("unknown config key {key:?} for `{name}`")),
        };
        if m.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        argv.push(format!("--{key}={value}"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines() {
        let m = parse("# comment\n poly = 0,1 \n\nN=10\n").unwrap();
        assert_eq!(m["poly"], "0,1");
        assert_eq!(m["N"], "10");
        assert!(parse("novalue").is_err());
        assert!(parse("a=1\na=2").is_err());
        assert!(parse(" = 3").is_err());
    }
}
