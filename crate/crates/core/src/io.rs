//! Path CSV files and the flat `key = value` domain description.
//!
//! Path CSV: header `t,x1,..,xd`, one row per grid point, `2^N + 1` rows.
//! Values are written with Rust's shortest round-trip formatting, so a
//! written path reads back bit for bit.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::domains::{DomainKind, DomainSpec};
use crate::error::{Error, Result};
use crate::path::{grid_time, DiscretePath};
use crate::variation::VarParams;

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_path_csv<W: Write>(path: &DiscretePath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.dim()).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for k in 0..path.num_points() {
        let mut row = vec![path.time(k).to_string()];
        row.extend(path.point(k).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_csv<R: Read>(input: R) -> Result<DiscretePath> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() < 2 || &header[0] != "t" {
        return Err(Error::Parse("path CSV header must be t,x1,..,xd".into()));
    }
    let dim = header.len() - 1;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse =
            |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: `{s}` is not a number", line + 1)));
        times.push(parse(&rec[0])?);
        for i in 1..=dim {
            values.push(parse(&rec[i])?);
        }
    }
    let n = times.len();
    if n < 2 || !(n - 1).is_power_of_two() {
        return Err(Error::Parse(format!("expected 2^N + 1 rows, found {n}")));
    }
    let level = (n - 1).trailing_zeros();
    for (k, &t) in times.iter().enumerate() {
        if (t - grid_time(level, k)).abs() > 1e-9 {
            return Err(Error::Parse(format!("row {}: time {t} is off the dyadic grid", k + 1)));
        }
    }
    DiscretePath::new(dim, level, values)
}

pub fn read_path_file(path: &Path) -> Result<DiscretePath> {
    read_path_csv(std::fs::File::open(path)?)
}

/// Textual domain description. File references are resolved against a base
/// directory by [`DomainBlock::resolve`].
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBlock {
    pub kind: String,
    pub a: f64,
    pub b: Option<f64>,
    pub p: f64,
    pub kappa: f64,
    pub level: Option<u32>,
    /// Sample dimension (`U` only).
    pub dim: Option<usize>,
    /// `zero` or a path CSV file.
    pub reference: String,
    /// Dimension of a `zero` reference.
    pub reference_dim: Option<usize>,
    /// Section prefix CSV file, if any.
    pub prefix: Option<String>,
}

const KEYS: [&str; 10] = ["kind", "a", "b", "p", "kappa", "level", "dim", "reference", "reference_dim", "prefix"];

impl DomainBlock {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Parse(format!("line {}: unknown key `{k}`", n + 1)));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key `{k}`", n + 1)));
            }
        }
        fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, k: &str) -> Result<Option<T>> {
            map.get(k)
                .map(|v| v.parse::<T>().map_err(|_| Error::Parse(format!("`{k}`: cannot parse `{v}`"))))
                .transpose()
        }
        let defaults = VarParams::default();
        Ok(Self {
            kind: map.get("kind").cloned().ok_or_else(|| Error::Parse("missing `kind`".into()))?,
            a: num(&map, "a")?.ok_or_else(|| Error::Parse("missing `a`".into()))?,
            b: num(&map, "b")?,
            p: num(&map, "p")?.unwrap_or(defaults.p()),
            kappa: num(&map, "kappa")?.unwrap_or(defaults.kappa()),
            level: num(&map, "level")?,
            dim: num(&map, "dim")?,
            reference: map.get("reference").cloned().unwrap_or_else(|| "zero".into()),
            reference_dim: num(&map, "reference_dim")?,
            prefix: map.get("prefix").filter(|v| v.as_str() != "none").cloned(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("kind = {}\na = {}\n", self.kind, self.a);
        if let Some(b) = self.b {
            s += &format!("b = {b}\n");
        }
        s += &format!("p = {}\nkappa = {}\n", self.p, self.kappa);
        if let Some(l) = self.level {
            s += &format!("level = {l}\n");
        }
        if let Some(d) = self.dim {
            s += &format!("dim = {d}\n");
        }
        s += &format!("reference = {}\n", self.reference);
        if let Some(d) = self.reference_dim {
            s += &format!("reference_dim = {d}\n");
        }
        if let Some(p) = &self.prefix {
            s += &format!("prefix = {p}\n");
        }
        s
    }

    fn load(&self, file: &str, base: &Path, level: Option<u32>) -> Result<DiscretePath> {
        let path = read_path_file(&base.join(file))?;
        if let Some(l) = level {
            if l != path.level() {
                return Err(Error::LevelMismatch { left: l, right: path.level() });
            }
        }
        Ok(path)
    }

    /// Builds the spec, loading referenced CSV files relative to `base`.
    pub fn resolve(&self, base: &Path) -> Result<DomainSpec> {
        let params = VarParams::new(self.p, self.kappa)?;
        let zero_ref = self.reference == "zero";
        let reference = |default_dim: usize| -> Result<DiscretePath> {
            if zero_ref {
                let level = self.level.ok_or_else(|| Error::Parse("a zero reference needs `level`".into()))?;
                Ok(DiscretePath::zeros(self.reference_dim.unwrap_or(default_dim), level))
            } else {
                self.load(&self.reference, base, self.level)
            }
        };
        let kind = match self.kind.as_str() {
            "U" => {
                let dim = self.dim.ok_or_else(|| Error::Parse("kind U needs `dim`".into()))?;
                DomainKind::U { z: reference(1)?, dim }
            }
            "B" | "O" => {
                let h = reference(self.dim.unwrap_or(1))?;
                if self.kind == "B" {
                    DomainKind::B { h }
                } else {
                    DomainKind::O { h }
                }
            }
            "Uab" => DomainKind::Uab {
                b: self.b.ok_or_else(|| Error::Parse("kind Uab needs `b`".into()))?,
                level: self.level.ok_or_else(|| Error::Parse("kind Uab needs `level`".into()))?,
            },
            "Section" => {
                let z = reference(1)?;
                let prefix = self.prefix.as_deref().map(|f| self.load(f, base, Some(z.level()))).transpose()?;
                DomainKind::Section { prefix, z }
            }
            other => return Err(Error::Parse(format!("unknown kind `{other}` (U, B, O, Uab, Section)"))),
        };
        DomainSpec::new(kind, self.a, params)
    }
}
