//! `key = value` config files spliced into the argument list.
//!
//! Config entries are inserted right after the subcommand name, so any flag
//! repeated on the command line overrides them.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

/// Flags read from a config file, as `--key=value` arguments.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Validation(format!(
                "{}:{}: expected key = value",
                origin.display(),
                lineno + 1
            )));
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(CliError::Validation(format!(
                "{}:{}: invalid key '{key}'",
                origin.display(),
                lineno + 1
            )));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => out.push(format!("--{key}={value}").into()),
        }
    }
    Ok(out)
}

/// Value of `--config` in the raw arguments, if any.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter().skip(1);
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Inserts `extra` after the subcommand name.
pub fn splice(args: Vec<OsString>, extra: Vec<OsString>) -> Vec<OsString> {
    if extra.is_empty() {
        return args;
    }
    let mut position = None;
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if s == "--config" || s == "--jobs" {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            position = Some(i + 1);
            break;
        }
        i += 1;
    }
    let Some(at) = position else {
        // no subcommand: leave clap to report it
        return args;
    };
    let mut merged = args[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[at..]);
    merged
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_pairs_comments_and_booleans() {
        let text = "# run\nn_max = 23\n\nstrategy=stationary\nno-parity-filter = true\nx = false\n";
        let flags = parse_config(text, Path::new("c")).unwrap();
        assert_eq!(
            flags,
            os(&["--n-max=23", "--strategy=stationary", "--no-parity-filter"])
        );
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(parse_config("n_max 23", Path::new("c")).is_err());
    }

    #[test]
    fn splices_after_subcommand() {
        let args = os(&["vpt", "--jobs", "2", "converge", "--n-max", "5"]);
        let merged = splice(args, os(&["--n-max=9"]));
        assert_eq!(
            merged,
            os(&["vpt", "--jobs", "2", "converge", "--n-max=9", "--n-max", "5"])
        );
        assert_eq!(
            config_path(&os(&["vpt", "converge", "--config=a.cfg"])),
            Some("a.cfg".into())
        );
    }
}
