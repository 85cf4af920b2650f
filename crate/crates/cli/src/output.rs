use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// JSON summary of one run. Holds nothing that depends on the worker count
/// or the clock, so repeated runs are byte-identical.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: Value,
    pub results: Value,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl Summary {
    pub fn new(command: &'static str, seed: Option<u64>, config: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            seed,
            config,
            results: Value::Null,
            assertions: Vec::new(),
            passed: true,
        }
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.assertions.push(Assertion { name: name.into(), passed, detail: detail.into() });
    }
}

/// CSV text built row by row; floats use the shortest round-trip form.
#[derive(Debug, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")) }
    }

    pub fn from_text(text: String) -> Self {
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text += &cells.join(",");
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

#[macro_export]
macro_rules! cells {
    ($($x:expr),* $(,)?) => { [$($x.to_string()),*] };
}

pub struct Sink {
    prefix: Option<PathBuf>,
    force: bool,
}

impl Sink {
    pub fn new(prefix: Option<PathBuf>, force: bool) -> Self {
        Self { prefix, force }
    }

    fn target(&self, ext: &str) -> Option<PathBuf> {
        self.prefix.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(format!(".{ext}"));
            PathBuf::from(s)
        })
    }

    /// Fails before any work is done if an output would be clobbered.
    pub fn preflight(&self, with_csv: bool) -> Result<()> {
        if self.force {
            return Ok(());
        }
        let exts: &[&str] = if with_csv { &["csv", "json"] } else { &["json"] };
        for ext in exts {
            if let Some(t) = self.target(ext) {
                if t.exists() {
                    bail!("{} exists; pass --force to overwrite", t.display());
                }
            }
        }
        Ok(())
    }

    pub fn emit(&self, summary: &Summary, csv: Option<&Csv>) -> Result<()> {
        let json = serde_json::to_string_pretty(summary)? + "\n";
        match &self.prefix {
            None => print!("{json}"),
            Some(_) => {
                if let (Some(csv), Some(t)) = (csv, self.target("csv")) {
                    write_once(&t, csv.as_str(), self.force)?;
                }
                let t = self.target("json").expect("prefix set");
                write_once(&t, &json, self.force)?;
                let verdict = if summary.passed { "ok" } else { "ASSERTION FAILED" };
                println!("{}: {verdict} ({})", summary.command, t.display());
            }
        }
        Ok(())
    }
}

fn write_once(path: &Path, text: &str, force: bool) -> Result<()> {
    let mut opts = OpenOptions::new();
    opts.write(true);
    if force {
        opts.create(true).truncate(true);
    } else {
        opts.create_new(true);
    }
    let mut f =
        opts.open(path).with_context(|| format!("cannot create {} (use --force to overwrite)", path.display()))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
