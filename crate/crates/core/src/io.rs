//! Plain-text data formats. Every file may start with `#` comment lines
//! carrying provenance; readers skip them.
//!
//! - lattice fields: headerless CSV, `n` rows of `n` comma-separated values;
//! - transects: one height (mm) per line, one file per transect, listed in a
//!   manifest of `spacing <mm>` and `file <relative path>` lines;
//! - posterior grids and marginals: CSV with a header row.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::PosteriorGrid;
use crate::simulate::{LatticeField, SurfaceSample};

/// Identifies the program run that produced a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub version: String,
    pub command: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            seed,
        }
    }

    pub fn preamble(&self) -> String {
        format!(
            "# cbpost {}\n# command: {}\n# seed: {}\n",
            self.version,
            self.command.replace('\n', " "),
            self.seed
        )
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_number(path: &Path, line: usize, token: &str) -> Result<f64> {
    match token.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("expected a finite number, found {token:?}"),
        }),
    }
}

pub fn write_field_csv(path: &Path, field: &LatticeField, prov: &Provenance) -> Result<()> {
    let mut out = prov.preamble();
    let _ = writeln!(out, "# spacing: {}", field.spacing());
    let n = field.n();
    for r in 0..n {
        let row: Vec<String> = (0..n).map(|c| field.get(r, c).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Reads a square CSV field; `spacing` is the lattice step to attach.
pub fn read_field_csv(path: &Path, spacing: f64) -> Result<LatticeField> {
    let text = read_text(path)?;
    let mut values = Vec::new();
    let mut rows = 0;
    let mut width = None;
    for (line, content) in content_lines(&text) {
        let row = content
            .split(',')
            .map(|tok| parse_number(path, line, tok))
            .collect::<Result<Vec<_>>>()?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("row has {} values, expected {}", row.len(), width.unwrap_or(0)),
            });
        }
        values.extend(row);
        rows += 1;
    }
    if rows == 0 || width != Some(rows) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("field must be square, found {rows} rows of {} values", width.unwrap_or(0)),
        });
    }
    LatticeField::new(rows, values, spacing)
}

/// One height per line.
pub fn read_heights(path: &Path) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    content_lines(&text)
        .map(|(line, content)| {
            let mut tokens = content.split_whitespace();
            let value = parse_number(path, line, tokens.next().unwrap_or(""))?;
            if tokens.next().is_some() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: "expected a single height per line".into(),
                });
            }
            Ok(value)
        })
        .collect()
}

pub fn write_heights(path: &Path, heights: &[f64], prov: &Provenance) -> Result<()> {
    let mut out = prov.preamble();
    for h in heights {
        let _ = writeln!(out, "{h}");
    }
    atomic_write(path, out.as_bytes())
}

/// Transects listed by a manifest, in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransectSet {
    pub spacing: f64,
    pub files: Vec<PathBuf>,
    pub heights: Vec<Vec<f64>>,
}

pub fn read_manifest(path: &Path) -> Result<TransectSet> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut spacing = None;
    let mut files = Vec::new();
    for (line, content) in content_lines(&text) {
        let (key, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
        match key {
            "spacing" => spacing = Some(parse_number(path, line, rest)?),
            "file" if !rest.trim().is_empty() => files.push(base.join(rest.trim())),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("expected `spacing <mm>` or `file <path>`, found {content:?}"),
                })
            }
        }
    }
    let spacing = spacing.filter(|s| *s > 0.0).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: "manifest needs a positive `spacing` line".into(),
    })?;
    if files.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "manifest lists no transect files".into(),
        });
    }
    let heights = files.iter().map(|f| read_heights(f)).collect::<Result<_>>()?;
    Ok(TransectSet {
        spacing,
        files,
        heights,
    })
}

/// Writes `<stem>_NN.txt` files plus `<stem>.manifest` into `dir`; returns
/// the manifest path.
pub fn write_transect_sample(dir: &Path, stem: &str, sample: &SurfaceSample, prov: &Provenance) -> Result<PathBuf> {
    let mut manifest = prov.preamble();
    let _ = writeln!(manifest, "spacing {}", sample.spacing());
    for (k, t) in sample.transects().iter().enumerate() {
        let name = format!("{stem}_{:02}.txt", k + 1);
        write_heights(&dir.join(&name), t, prov)?;
        let _ = writeln!(manifest, "file {name}");
    }
    let path = dir.join(format!("{stem}.manifest"));
    atomic_write(&path, manifest.as_bytes())?;
    Ok(path)
}

/// Grid nodes (last axis fastest) with normalized densities.
pub fn write_posterior_csv(path: &Path, grid: &PosteriorGrid, names: &[&str], prov: &Provenance) -> Result<()> {
    let mut out = prov.preamble();
    let _ = writeln!(out, "{},density", names.join(","));
    for (flat, d) in grid.densities().iter().enumerate() {
        let node: Vec<String> = grid.node(flat).iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{},{d:e}", node.join(","));
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_marginal_csv(path: &Path, grid: &PosteriorGrid, axis: usize, name: &str, prov: &Provenance) -> Result<()> {
    let mut out = prov.preamble();
    let _ = writeln!(out, "{name},density");
    for (x, d) in grid.axes()[axis].iter().zip(grid.marginal(axis)) {
        let _ = writeln!(out, "{x},{d:e}");
    }
    atomic_write(path, out.as_bytes())
}
