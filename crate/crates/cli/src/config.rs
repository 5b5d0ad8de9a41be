//! `key=value` config files, merged into the argument list ahead of the
//! command-line flags so that explicit flags override them.

use std::ffi::OsString;
use std::path::Path;

use clap::Command;

/// A config file problem; reported as a flag error.
#[derive(Debug, thiserror::Error)]
#[error("config: {0}")]
pub struct ConfigError(pub String);

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key=value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError(format!("line {}: empty key", i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn arg_value(args: &[OsString], i: usize) -> Option<(usize, OsString)> {
    let tok = args[i].to_str()?;
    if tok == "--config" {
        return args.get(i + 1).map(|v| (2, v.clone()));
    }
    tok.strip_prefix("--config=")
        .map(|v| (1, OsString::from(v)))
}

fn takes_value(cmd: &Command, long: &str) -> Option<bool> {
    cmd.get_arguments()
        .find(|a| a.get_long() == Some(long))
        .map(|a| a.get_action().takes_values())
}

fn as_flags(key: &str, value: &str, takes: bool) -> Result<Vec<OsString>, ConfigError> {
    if takes {
        return Ok(vec![format!("--{key}={value}").into()]);
    }
    match value {
        "true" | "1" | "yes" => Ok(vec![format!("--{key}").into()]),
        "false" | "0" | "no" => Ok(Vec::new()),
        _ => Err(ConfigError(format!("{key} is a switch, got {value:?}"))),
    }
}

/// Inserts config entries into `args`: top-level keys after the program name,
/// subcommand keys right after the subcommand name.
pub fn merge(cmd: &Command, args: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let mut path = None;
    let mut i = 1;
    while i < args.len() {
        match arg_value(&args, i) {
            Some((n, v)) => {
                path = Some(v);
                i += n;
            }
            None => i += 1,
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| ConfigError(format!("{}: {e}", Path::new(&path).display())))?;
    let entries = parse(&text)?;

    // locate the subcommand, skipping values of top-level options
    let mut sub_at = None;
    let mut i = 1;
    while i < args.len() {
        let tok = args[i].to_string_lossy();
        if cmd.find_subcommand(tok.as_ref()).is_some() {
            sub_at = Some(i);
            break;
        }
        let long = tok.strip_prefix("--").filter(|t| !t.contains('='));
        i += match long.and_then(|l| takes_value(cmd, l)) {
            Some(true) => 2,
            _ => 1,
        };
    }
    let sub = sub_at.and_then(|i| cmd.find_subcommand(args[i].to_string_lossy().as_ref()));

    let mut top = Vec::new();
    let mut local = Vec::new();
    for (key, value) in &entries {
        if key == "config" {
            return Err(ConfigError(
                "config files cannot include other config files".into(),
            ));
        }
        if let Some(t) = takes_value(cmd, key) {
            top.extend(as_flags(key, value, t)?);
        } else if let Some(t) = sub.and_then(|s| takes_value(s, key)) {
            local.extend(as_flags(key, value, t)?);
        } else {
            return Err(ConfigError(format!("unknown key {key:?}")));
        }
    }

    let mut out = Vec::with_capacity(args.len() + top.len() + local.len());
    out.push(args[0].clone());
    out.extend(top);
    match sub_at {
        Some(at) => {
            out.extend(args[1..=at].iter().cloned());
            out.extend(local);
            out.extend(args[at + 1..].iter().cloned());
        }
        None => out.extend(args[1..].iter().cloned()),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let e = parse("# header\nn_max = 10\n\nq=0.5 # trailing\n").unwrap();
        assert_eq!(
            e,
            vec![("n-max".into(), "10".into()), ("q".into(), "0.5".into())]
        );
        assert!(parse("novalue\n").is_err());
    }
}
