//! The `.smvi` problem file: a flat INI-style list of sections.
//!
//! ```text
//! # Example: C = Q = [0, 1], A = id
//! [space]
//! n = 1
//! m = 1
//! params = 0
//!
//! [set.C]
//! kind = box
//! lower = 0
//! upper = 1
//!
//! [set.Q]
//! kind = ball
//! center = 0.5
//! radius = 0.5
//!
//! [operator.A]
//! rows = 1
//!
//! [fn.f]
//! expr = x1^4
//!
//! [fn.g]
//! expr = y1^2
//!
//! [map.B1]
//! selection = x1
//! selection = 0
//!
//! [map.B2]
//! selection = y1
//! selection = 0
//! ```
//!
//! Matrices are written row by row, rows separated by `;`. A selection lists
//! one expression per coordinate, separated by `,`. `[space]` may carry
//! `reduction = sfp | svip | smvip | smp`; the SFP form may then omit the
//! `fn.*` and `map.*` sections, SMP the `map.*` sections and SVIP the `fn.*`
//! sections (they default to zero functions and the zero selection).
//!
//! This module only handles the section/key layer; [`crate::model::build_problem`]
//! interprets the values.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{ConstraintSet, Reduction, SplitProblem};
use crate::scalar::Scalar;

pub const SECTIONS: [&str; 8] = [
    "space",
    "set.C",
    "set.Q",
    "operator.A",
    "fn.f",
    "fn.g",
    "map.B1",
    "map.B2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    /// Column where the value starts.
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpecFile {
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct SpecSyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<SpecFile, SpecSyntaxError> {
        let mut spec = SpecFile::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            };
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| SpecSyntaxError {
                    line,
                    col: indent + trimmed.len(),
                    message: "section header must end with ']'".into(),
                })?;
                let name = name.trim().to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(SpecSyntaxError {
                        line,
                        col: indent + 2,
                        message: format!("unknown section [{name}]"),
                    });
                }
                if spec.section(&name).is_some() {
                    return Err(SpecSyntaxError {
                        line,
                        col: indent + 2,
                        message: format!("duplicate section [{name}]"),
                    });
                }
                spec.sections.push(Section {
                    name,
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let eq = trimmed.find('=').ok_or_else(|| SpecSyntaxError {
                line,
                col: indent + 1,
                message: "expected 'key = value' or '[section]'".into(),
            })?;
            let key = trimmed[..eq].trim().to_string();
            let value_raw = &trimmed[eq + 1..];
            let value = value_raw.trim().to_string();
            let col = indent + eq + 2 + (value_raw.len() - value_raw.trim_start().len());
            if key.is_empty() {
                return Err(SpecSyntaxError {
                    line,
                    col: indent + 1,
                    message: "missing key before '='".into(),
                });
            }
            let section = spec.sections.last_mut().ok_or_else(|| SpecSyntaxError {
                line,
                col: indent + 1,
                message: format!("key '{key}' outside of any section"),
            })?;
            section.entries.push(Entry {
                key,
                value,
                line,
                col,
            });
        }
        Ok(spec)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

fn join<T: Scalar>(v: &[T]) -> String {
    v.iter()
        .map(|x| fmt_num(*x))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Shortest round-trip decimal text.
pub fn fmt_num<T: Scalar>(v: T) -> String {
    format!("{}", v.as_f64())
}

/// Serializes a problem back to the file format. Parsing the output with
/// [`SpecFile::parse`] and [`crate::model::build_problem`] yields an equivalent problem.
/// With a `reduction` tag the sections that reduction implies are left out.
pub fn render<T: Scalar>(p: &SplitProblem<T>, header: &str, reduction: Option<Reduction>) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "[space]");
    let _ = writeln!(out, "n = {}", p.n);
    let _ = writeln!(out, "m = {}", p.m);
    let _ = writeln!(out, "params = {}", p.k);
    if let Some(r) = reduction {
        let _ = writeln!(out, "reduction = {r}");
    }
    let omit_fns = matches!(reduction, Some(Reduction::Sfp | Reduction::Svip));
    let omit_maps = matches!(reduction, Some(Reduction::Sfp | Reduction::Smp));
    for (name, set) in [("C", &p.c), ("Q", &p.q)] {
        let _ = writeln!(out, "\n[set.{name}]");
        match set {
            ConstraintSet::Box { lower, upper } => {
                let _ = writeln!(out, "kind = box");
                let _ = writeln!(out, "lower = {}", join(lower));
                let _ = writeln!(out, "upper = {}", join(upper));
            }
            ConstraintSet::Ball { center, radius } => {
                let _ = writeln!(out, "kind = ball");
                let _ = writeln!(out, "center = {}", join(center));
                let _ = writeln!(out, "radius = {}", fmt_num(*radius));
            }
        }
    }
    let rows: Vec<String> = (0..p.a.rows()).map(|r| join(p.a.row(r))).collect();
    let _ = writeln!(out, "\n[operator.A]\nrows = {}", rows.join("; "));
    if !omit_fns {
        let _ = writeln!(out, "\n[fn.f]\nexpr = {}", p.f);
        let _ = writeln!(out, "\n[fn.g]\nexpr = {}", p.g);
    }
    if omit_maps {
        return out;
    }
    for (name, map) in [("B1", &p.b1), ("B2", &p.b2)] {
        let _ = writeln!(out, "\n[map.{name}]");
        for sel in map.selections() {
            let parts: Vec<String> = sel.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(out, "selection = {}", parts.join(", "));
        }
    }
    out
}
