//! The `.scx` text format: one maximal simplex per line as whitespace-separated
//! non-negative integers; `#` starts a comment.

use std::fmt::Write as _;
use std::sync::Arc;

use itertools::Itertools;
use thiserror::Error;

use super::{ComplexError, Simplex, SimplicialComplex, Subcomplex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScxError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no simplices in input")]
    Empty,
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(body, _)| body).trim()
}

pub fn parse_simplices(text: &str) -> Result<Vec<Simplex>, ScxError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip_comment(raw);
        if body.is_empty() {
            continue;
        }
        let verts = body
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| ScxError::Parse {
                    line,
                    message: format!("not a vertex id: `{tok}`"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let s = Simplex::new(verts).map_err(|e| ScxError::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push(s);
    }
    Ok(out)
}

pub fn parse_complex(text: &str) -> Result<SimplicialComplex, ScxError> {
    let simplices = parse_simplices(text)?;
    if simplices.is_empty() {
        return Err(ScxError::Empty);
    }
    Ok(SimplicialComplex::from_simplices(simplices))
}

/// Parses a subcomplex and validates it against `parent`.
pub fn parse_subcomplex(
    text: &str,
    parent: Arc<SimplicialComplex>,
) -> Result<Subcomplex, ScxError> {
    let simplices = parse_simplices(text)?;
    if simplices.is_empty() {
        return Err(ScxError::Empty);
    }
    Ok(Subcomplex::new(parent, simplices)?)
}

pub fn write_complex(c: &SimplicialComplex, header: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        for l in h.lines() {
            let _ = writeln!(out, "# {l}");
        }
    }
    for f in c.facets() {
        let _ = writeln!(out, "{}", f.vertices().iter().join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::builtin_suite;
    use proptest::prelude::*;

    #[test]
    fn parses_with_comments() {
        let c = parse_complex("# a triangle boundary\n0 1\n1 2 # edge\n\n2 0\n").unwrap();
        assert_eq!(c.f_vector(), vec![3, 3]);
    }

    #[test]
    fn reports_line_numbers() {
        assert_eq!(
            parse_complex("0 1\n1 x\n"),
            Err(ScxError::Parse {
                line: 2,
                message: "not a vertex id: `x`".into()
            })
        );
        assert!(matches!(
            parse_complex("0 1\n\n3 3\n"),
            Err(ScxError::Parse { line: 3, .. })
        ));
        assert_eq!(parse_complex("# nothing\n"), Err(ScxError::Empty));
    }

    #[test]
    fn builtins_round_trip() {
        for (name, c) in builtin_suite() {
            let text = write_complex(&c, Some(name));
            assert_eq!(parse_complex(&text).unwrap(), c);
        }
    }

    proptest! {
        #[test]
        fn arbitrary_complexes_round_trip(lists in prop::collection::vec(prop::collection::btree_set(0usize..12, 1..5), 1..10)) {
            let c = SimplicialComplex::from_maximal_simplices(lists.into_iter().map(|s| s.into_iter().collect::<Vec<_>>())).unwrap();
            prop_assert_eq!(parse_complex(&write_complex(&c, Some("x"))).unwrap(), c);
        }
    }
}
