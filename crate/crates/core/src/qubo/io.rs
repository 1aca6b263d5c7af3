//! Coordinate text format:
//!
//! ```text
//! <n> <offset>
//! <i> <j> <coeff>      one line per stored entry, i <= j, ascending
//! ```
//!
//! Exact values are written as integers or `p/q`; floats use their shortest
//! round-tripping decimal form. The variable map and variant live in a JSON
//! sidecar next to the text file (`<file>.varmap.json`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Qubo, VariableMap, VariantSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuboSidecar {
    pub varmap: Option<VariableMap>,
    pub variant: Option<VariantSpec>,
}

pub fn write_qubo_text<S: Scalar>(q: &Qubo<S>) -> String {
    let mut out = format!("{} {}\n", q.n, q.offset.render());
    for (&(i, j), v) in &q.coeffs {
        out.push_str(&format!("{i} {j} {}\n", v.render()));
    }
    out
}

pub fn read_qubo_text<S: Scalar>(text: &str) -> Result<Qubo<S>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or_else(|| Error::input("empty QUBO file"))?;
    let mut head = header.split_whitespace();
    let (Some(n), Some(offset), None) = (head.next(), head.next(), head.next()) else {
        return Err(Error::input(format!("bad QUBO header {header:?}")));
    };
    let n: usize = n
        .parse()
        .map_err(|_| Error::input(format!("bad variable count {n:?}")))?;
    let offset = S::parse_text(offset)?;
    let mut terms = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [i, j, v] = fields[..] else {
            return Err(Error::input(format!("line {}: expected `i j coeff`", lineno + 1)));
        };
        let parse_idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::input(format!("line {}: bad index {s:?}", lineno + 1)))
        };
        let (i, j) = (parse_idx(i)?, parse_idx(j)?);
        if i > j {
            return Err(Error::input(format!("line {}: expected i <= j", lineno + 1)));
        }
        terms.push(((i, j), S::parse_text(v)?));
    }
    Qubo::from_terms(n, terms, offset)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".varmap.json");
    PathBuf::from(name)
}

/// Writes the text file and its JSON sidecar.
pub fn write_qubo<S: Scalar>(q: &Qubo<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_qubo_text(q))?;
    let sidecar = QuboSidecar {
        varmap: q.varmap.clone(),
        variant: q.variant.clone(),
    };
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Reads the text file and, when present, its sidecar.
pub fn read_qubo<S: Scalar>(path: impl AsRef<Path>) -> Result<Qubo<S>> {
    let path = path.as_ref();
    let mut q: Qubo<S> = read_qubo_text(&std::fs::read_to_string(path)?)?;
    let side = sidecar_path(path);
    if side.exists() {
        let sidecar: QuboSidecar = serde_json::from_str(&std::fs::read_to_string(side)?)?;
        if let Some(map) = &sidecar.varmap {
            map.check()?;
            if map.n != q.n {
                return Err(Error::input(format!(
                    "sidecar describes {} variables, QUBO has {}",
                    map.n, q.n
                )));
            }
        }
        q.varmap = sidecar.varmap;
        q.variant = sidecar.variant;
    }
    Ok(q)
}
