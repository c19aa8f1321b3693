//! Model description files.
//!
//! A model file is line-oriented structured text with three sections:
//!
//! ```text
//! [model]
//! name = gdse2band
//! dim = 2
//!
//! [params]
//! mu0 = 1.35
//!
//! [hamiltonian]
//! H11 = "mu0 + cos(kx)"
//! ...
//! ```
//!
//! Comments start with `#`. Entry keys are `H<r><c>` with `1 <= r,c <= dim`,
//! and every entry must be present.

pub mod expr;

use std::collections::BTreeMap;

pub use expr::{Axis, Expr, Func};

use crate::error::{Error, Result};
use crate::fourier::FourierSeries;

/// Parsed and validated model description.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    /// Internal degrees of freedom per unit cell (q).
    pub dim: usize,
    pub params: BTreeMap<String, f64>,
    /// Row-major `dim x dim` entry expressions.
    pub entries: Vec<String>,
}

impl ModelSpec {
    /// Assemble a spec directly (used by the built-in registry).
    pub fn new(
        name: &str,
        dim: usize,
        params: &[(&str, f64)],
        entries: &[&str],
    ) -> Result<Self> {
        let spec = ModelSpec {
            name: name.to_string(),
            dim,
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            entries: entries.iter().map(|s| s.to_string()).collect(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn entry(&self, row: usize, col: usize) -> &str {
        &self.entries[row * self.dim + col]
    }

    /// Check shape and that every referenced parameter exists.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument("dim must be >= 1".into()));
        }
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::ShapeMismatch {
                dim: self.dim,
                expected: self.dim * self.dim,
                found: self.entries.len(),
            });
        }
        for text in &self.entries {
            let expr = Expr::parse(text)?;
            let mut refs = Vec::new();
            expr.referenced_params(&mut refs);
            for name in refs {
                if !self.params.contains_key(&name) {
                    return Err(Error::UnknownParam(name));
                }
            }
        }
        Ok(())
    }

    /// Lower every entry with the stored parameter values.
    pub fn lower_entries(&self) -> Result<Vec<FourierSeries>> {
        self.entries
            .iter()
            .map(|text| Expr::parse(text)?.lower(&self.params))
            .collect()
    }
}

/// Parse and lower one Hamiltonian-entry expression in a single step.
pub fn lower_expression(text: &str, params: &BTreeMap<String, f64>) -> Result<FourierSeries> {
    Expr::parse(text)?.lower(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Model,
    Params,
    Hamiltonian,
}

/// Parse a model file.
pub fn parse_model_file(text: &str) -> Result<ModelSpec> {
    let mut section = Section::None;
    let mut name: Option<String> = None;
    let mut dim: Option<usize> = None;
    let mut params: BTreeMap<String, f64> = BTreeMap::new();
    let mut entries: BTreeMap<(usize, usize), (String, usize)> = BTreeMap::new();

    let err = |line: usize, msg: String| Error::Parse { line, col: 1, msg };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }

        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "unterminated section header".into()))?
                .trim();
            section = match header {
                "model" => Section::Model,
                "params" => Section::Params,
                "hamiltonian" => Section::Hamiltonian,
                other => return Err(err(line_no, format!("unknown section `[{other}]`"))),
            };
            continue;
        }

        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected `key = value`, found `{line}`")))?;
        let key = key.trim();
        let value = value.trim();

        match section {
            Section::None => {
                return Err(err(line_no, "key/value line before any section header".into()))
            }
            Section::Model => match key {
                "name" => {
                    if !is_identifier(value) {
                        return Err(err(line_no, format!("`{value}` is not an identifier")));
                    }
                    name = Some(value.to_string());
                }
                "dim" => {
                    let v: usize = value
                        .parse()
                        .map_err(|_| err(line_no, format!("bad integer `{value}` for dim")))?;
                    if v == 0 {
                        return Err(err(line_no, "dim must be >= 1".into()));
                    }
                    dim = Some(v);
                }
                other => {
                    return Err(Error::UnknownKey {
                        section: "model".into(),
                        key: other.to_string(),
                    })
                }
            },
            Section::Params => {
                if !is_identifier(key) {
                    return Err(err(line_no, format!("`{key}` is not an identifier")));
                }
                let v: f64 = value
                    .parse()
                    .map_err(|_| err(line_no, format!("bad float `{value}` for `{key}`")))?;
                if params.insert(key.to_string(), v).is_some() {
                    return Err(Error::DuplicateParam(key.to_string()));
                }
            }
            Section::Hamiltonian => {
                let (row, col) = parse_entry_key(key).ok_or_else(|| {
                    Error::UnknownKey { section: "hamiltonian".into(), key: key.to_string() }
                })?;
                let expr_text = value
                    .strip_prefix('"')
                    .and_then(|v| v.strip_suffix('"'))
                    .ok_or_else(|| err(line_no, format!("entry `{key}` must be a quoted string")))?;
                if entries.insert((row, col), (expr_text.to_string(), line_no)).is_some() {
                    return Err(err(line_no, format!("duplicate entry `{key}`")));
                }
            }
        }
    }

    let name = name.ok_or_else(|| err(text.lines().count(), "missing `name` in [model]".into()))?;
    let dim = dim.ok_or_else(|| err(text.lines().count(), "missing `dim` in [model]".into()))?;

    // Shape check: exactly the dim x dim keys, nothing else.
    for &(row, col) in entries.keys() {
        if row == 0 || col == 0 || row > dim || col > dim {
            return Err(Error::ShapeMismatch {
                dim,
                expected: dim * dim,
                found: entries.len(),
            });
        }
    }
    if entries.len() != dim * dim {
        return Err(Error::ShapeMismatch { dim, expected: dim * dim, found: entries.len() });
    }

    let mut ordered = Vec::with_capacity(dim * dim);
    for row in 1..=dim {
        for col in 1..=dim {
            let (text, line_no) = entries.remove(&(row, col)).unwrap();
            // Re-anchor expression parse errors to the file line.
            if let Err(e) = Expr::parse(&text) {
                return Err(match e {
                    Error::Parse { col, msg, .. } => Error::Parse { line: line_no, col, msg },
                    other => other,
                });
            }
            ordered.push(text);
        }
    }

    let spec = ModelSpec { name, dim, params, entries: ordered };
    spec.validate()?;
    Ok(spec)
}

fn parse_entry_key(key: &str) -> Option<(usize, usize)> {
    let digits = key.strip_prefix('H')?;
    // Single-digit row/column indices cover dim <= 9, far beyond q <= 4.
    if digits.len() != 2 {
        return None;
    }
    let mut chars = digits.chars();
    let row = chars.next()?.to_digit(10)? as usize;
    let col = chars.next()?.to_digit(10)? as usize;
    Some((row, col))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}
