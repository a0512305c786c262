//! `key=value` config files mirroring the long flags of a subcommand.
//! Config entries are inserted right after the subcommand token so that
//! explicit command-line flags win.

use std::path::Path;

pub fn expand_args(argv: Vec<String>) -> Result<Vec<String>, String> {
    let mut config_path: Option<String> = None;
    let mut i = 0;
    while i < argv.len() {
        if argv[i] == "--config" {
            config_path = argv.get(i + 1).cloned();
            if config_path.is_none() {
                return Err("--config requires a path".into());
            }
            i += 1;
        } else if let Some(rest) = argv[i].strip_prefix("--config=") {
            config_path = Some(rest.to_string());
        }
        i += 1;
    }
    let Some(path) = config_path else {
        return Ok(argv);
    };
    let extra = parse_config(Path::new(&path))?;
    // insert after the subcommand (first non-flag token past the binary)
    let mut out = Vec::with_capacity(argv.len() + extra.len());
    let mut inserted = false;
    for (idx, arg) in argv.iter().enumerate() {
        out.push(arg.clone());
        if !inserted && idx >= 1 && !arg.starts_with('-') {
            out.extend(extra.iter().cloned());
            inserted = true;
        }
    }
    if !inserted {
        out.extend(extra);
    }
    Ok(out)
}

fn parse_config(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut args = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            ));
        };
        let key = key.trim();
        let value = value.trim();
        if key == "config" {
            return Err("config files cannot nest".into());
        }
        args.push(format!("--{key}"));
        args.push(value.to_string());
    }
    Ok(args)
}
