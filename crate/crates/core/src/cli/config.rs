//! Flat `key = value` config files and run manifests.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Turns `key = value` lines into `--key value` arguments. Blank lines and
/// lines starting with `#` are skipped; `true`/`false` toggle bare flags.
pub fn config_to_args(text: &str) -> Result<Vec<OsString>> {
    let mut args = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("config line {}: expected key = value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(Error::invalid(format!("config line {}: bad key", n + 1)));
        }
        match value {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

/// Splices the contents of any `--config FILE` found after the subcommand
/// into the argument list, ahead of the explicit flags so those win.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let pos = argv.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="));
    let Some(pos) = pos else {
        return Ok(argv);
    };
    let (path, consumed) = match argv[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => {
            let p = argv
                .get(pos + 1)
                .ok_or_else(|| Error::invalid("--config needs a path"))?;
            (p.to_string_lossy().into_owned(), 2)
        }
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::invalid(format!("cannot read config {path}: {e}")))?;
    let from_file = config_to_args(&text)?;
    if pos < 2 {
        return Err(Error::invalid("--config goes after the subcommand"));
    }
    let mut out: Vec<OsString> = argv[..2].to_vec();
    out.extend(from_file);
    out.extend(argv[2..pos].iter().cloned());
    out.extend(argv[pos + consumed..].iter().cloned());
    Ok(out)
}

/// Resolved settings of one run, written next to its outputs in the same
/// `key = value` format the config reader accepts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub subcommand: String,
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(subcommand: &str) -> Self {
        Manifest {
            subcommand: subcommand.into(),
            entries: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self, threads: usize) -> String {
        let mut s = format!(
            "# bntk {} {}\n# threads = {threads}\n",
            env!("CARGO_PKG_VERSION"),
            self.subcommand
        );
        for (k, v) in &self.entries {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn write(&self, dir: &Path, threads: usize) -> Result<()> {
        fs::write(dir.join("manifest.txt"), self.render(threads))?;
        Ok(())
    }
}
