//! Flat `key = value` configuration files. A key names a long flag of the
//! invoked subcommand; flags given on the command line win over the file,
//! and the file wins over built-in defaults.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};
use transart::{Error, Result};

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            message: format!("expected key = value, got {line:?}"),
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(Error::Parse {
                line: idx + 1,
                message: "empty key".into(),
            });
        }
        entries.push((key, value.trim().to_owned()));
    }
    Ok(entries)
}

fn knows_long(cmd: &Command, key: &str) -> bool {
    cmd.get_arguments().any(|a| a.get_long() == Some(key)) || cmd.get_subcommands().any(|s| knows_long(s, key))
}

/// The `--config` path, if any, found by scanning raw arguments, so that a
/// config file may also supply flags the grammar marks as required.
pub fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut iter = argv.iter().skip(1);
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--" {
            break;
        }
        if text == "--config" {
            return iter.next().cloned();
        }
        if let Some(value) = text.strip_prefix("--config=") {
            return Some(value.into());
        }
    }
    None
}

/// The subcommand named by the leading positional tokens of `argv`.
fn leaf_command<'a>(root: &'a Command, argv: &[OsString]) -> &'a Command {
    let mut cmd = root;
    let mut iter = argv.iter().skip(1);
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--config" || text == "--workers" {
            iter.next();
            continue;
        }
        if text.starts_with('-') {
            continue;
        }
        match cmd.find_subcommand(text.as_ref()) {
            Some(sub) => cmd = sub,
            None => break,
        }
        if cmd.get_subcommands().next().is_none() {
            break;
        }
    }
    cmd
}

fn given_on_command_line(argv: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    argv.iter().skip(1).any(|a| {
        let a = a.to_string_lossy();
        a == flag || a.starts_with(&prefix)
    })
}

/// Appends `--key=value` for every config entry that applies to the
/// invoked subcommand and was not given on the command line.
pub fn merge(argv: Vec<OsString>, root: &Command, entries: &[(String, String)], path: &Path) -> Result<Vec<OsString>> {
    let leaf = leaf_command(root, &argv);
    let mut extra: Vec<OsString> = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err(Error::arg(format!("{}: config files cannot nest", path.display())));
        }
        let arg = leaf
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()));
        let Some(arg) = arg else {
            if knows_long(root, key) {
                continue;
            }
            return Err(Error::arg(format!("{}: unknown key {key:?}", path.display())));
        };
        let repeatable = matches!(arg.get_action(), ArgAction::Append);
        if !repeatable && seen.contains(&key.as_str()) {
            return Err(Error::arg(format!("{}: key {key:?} given twice", path.display())));
        }
        seen.push(key);
        if given_on_command_line(&argv, key) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" => extra.push(format!("--{key}").into()),
                "false" => {}
                _ => return Err(Error::arg(format!("{}: {key} must be true or false", path.display()))),
            },
            _ => extra.push(format!("--{key}={value}").into()),
        }
    }
    let mut argv = argv;
    argv.extend(extra);
    Ok(argv)
}
