//! Text formats: the complex file and the CSV/JSON experiment tables.
//!
//! Complex file, line based, `#` starts a comment:
//!
//! ```text
//! # boundary of a tetrahedron
//! n 4
//! d 2
//! simplices
//! 0 1 2
//! 0 1 3
//! 0 2 3
//! 1 2 3
//! ```
//!
//! Vertices within a simplex are separated by spaces or commas. The writer
//! emits simplices in lexicographic order.

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::complex::{Complex, Simplex, Violation};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {violation}")]
    Invalid { line: usize, violation: Violation },
    #[error("missing `{0}` header")]
    MissingHeader(&'static str),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

pub fn parse_complex(text: &str) -> Result<Complex, ParseError> {
    let mut n: Option<u32> = None;
    let mut d: Option<usize> = None;
    let mut d_line = 0;
    let mut in_body = false;
    let mut simplices = Vec::new();
    let mut lines = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if in_body {
            let verts: Result<Vec<u32>, _> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<u32>())
                .collect();
            let verts = verts.map_err(|e| syntax(line_no, format!("bad vertex: {e}")))?;
            simplices.push(Simplex::new(verts));
            lines.push(line_no);
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or("");
        let value = parts.next();
        if parts.next().is_some() {
            return Err(syntax(line_no, format!("trailing input after `{key}`")));
        }
        match (key, value) {
            ("n", Some(v)) => n = Some(v.parse().map_err(|e| syntax(line_no, format!("bad n: {e}")))?),
            ("d", Some(v)) => {
                d_line = line_no;
                d = Some(v.parse().map_err(|e| syntax(line_no, format!("bad d: {e}")))?);
            }
            ("simplices", None) => in_body = true,
            _ => return Err(syntax(line_no, format!("unexpected `{line}`"))),
        }
    }
    let n = n.ok_or(ParseError::MissingHeader("n"))?;
    let d = d.ok_or(ParseError::MissingHeader("d"))?;
    if !in_body {
        return Err(ParseError::MissingHeader("simplices"));
    }
    Complex::new(n, d, simplices.clone()).map_err(|violation| {
        let line = match &violation {
            Violation::ZeroDimension => d_line,
            Violation::Duplicate { simplex } => simplices
                .iter()
                .zip(&lines)
                .filter(|(s, _)| *s == simplex)
                .nth(1)
                .map_or(0, |(_, &l)| l),
            v => v.index().map_or(0, |i| lines[i]),
        };
        ParseError::Invalid { line, violation }
    })
}

pub fn write_complex(w: &mut impl Write, y: &Complex, comment: Option<&str>) -> io::Result<()> {
    if let Some(c) = comment {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "n {}", y.n())?;
    writeln!(w, "d {}", y.d())?;
    writeln!(w, "simplices")?;
    for s in y.iter() {
        let verts: Vec<String> = s.vertices().iter().map(u32::to_string).collect();
        writeln!(w, "{}", verts.join(" "))?;
    }
    Ok(())
}

pub fn complex_to_string(y: &Complex) -> String {
    let mut buf = Vec::new();
    write_complex(&mut buf, y, None).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Writes `# <comment>` then the rows as CSV with a header line.
pub fn write_csv<T: Serialize>(w: &mut impl Write, comment: &str, rows: &[T]) -> io::Result<()> {
    writeln!(w, "# {comment}")?;
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row).map_err(io::Error::other)?;
    }
    out.flush()
}

/// Writes a JSON document `{"comment": ..., "rows": [...]}`.
pub fn write_json(w: &mut impl Write, comment: &str, rows: Vec<serde_json::Value>) -> io::Result<()> {
    let doc = serde_json::json!({ "comment": comment, "rows": rows });
    serde_json::to_writer_pretty(&mut *w, &doc).map_err(io::Error::other)?;
    writeln!(w)
}
