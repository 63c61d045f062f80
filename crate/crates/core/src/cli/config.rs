//! `--config` files: one `key=value` per line, `#` comments. Entries are
//! spliced in right after the subcommand; keys also given as flags on the
//! command line are dropped so the flags win.

use std::ffi::OsString;
use std::fs;

use clap::{ArgAction, CommandFactory};

use super::{Cli, CliResult, Failure};

fn config_path(argv: &[OsString]) -> CliResult<Option<OsString>> {
    let mut found = None;
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            match it.next() {
                Some(p) => found = Some(p.clone()),
                None => return Err(Failure::data("--config needs a path")),
            }
        } else if let Some(p) = s.strip_prefix("--config=") {
            found = Some(OsString::from(p));
        }
    }
    Ok(found)
}

pub(super) fn inject(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&argv)? else {
        return Ok(argv);
    };
    let Some(sub_name) = argv.get(1).map(|s| s.to_string_lossy().into_owned()) else {
        return Ok(argv);
    };
    let cmd = Cli::command();
    let Some(sub) = cmd.find_subcommand(&sub_name) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| {
        Failure::data(format!(
            "cannot read config {}: {e}",
            path.to_string_lossy()
        ))
    })?;

    let explicit: Vec<String> = argv[2..]
        .iter()
        .filter_map(|a| {
            let s = a.to_string_lossy();
            s.strip_prefix("--")
                .map(|rest| rest.split('=').next().unwrap_or_default().to_string())
        })
        .collect();
    let mut injected = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::data(format!(
                "config line {}: expected key=value",
                n + 1
            )));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(Failure::data(format!(
                "config line {}: nested config",
                n + 1
            )));
        }
        let Some(arg) = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
        else {
            return Err(Failure::data(format!(
                "config line {}: unknown key `{key}`",
                n + 1
            )));
        };
        if explicit.contains(&key) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value {
                "true" | "1" | "yes" => injected.push(OsString::from(format!("--{key}"))),
                "false" | "0" | "no" => {}
                _ => {
                    return Err(Failure::data(format!(
                        "config line {}: `{key}` takes true or false",
                        n + 1
                    )))
                }
            }
        } else {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let mut out = argv[..2].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[2..]);
    Ok(out)
}
