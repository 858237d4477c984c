//! Vertex-valued piecewise-linear maps with symbolic tie-breaking, and the
//! `.plf` text format.
//!
//! A `.plf` file lists `vertex_id value` pairs, one per line, where `value` is
//! a rational `p/q` or a decimal literal. Lines appear in tie-break order:
//! among vertices with equal values, earlier lines are lower. Comment lines
//! start with `#`; a `# domain: <path>` comment names the domain complex.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::complex::{SimplicialComplex, Vertex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlMapError {
    #[error("vertex {0} has no value")]
    MissingVertex(Vertex),
    #[error("vertex {0} is not in the domain")]
    UnknownVertex(Vertex),
    #[error("vertex {0} listed twice")]
    DuplicateVertex(Vertex),
    #[error("value {value} at vertex {vertex} lies outside [0, 1]")]
    OutOfRange { vertex: Vertex, value: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A map from the vertices of a complex to `[0, 1]`, extended affinely over simplices.
///
/// The effective order on vertices is by value, then by tie-break rank; it is a
/// strict total order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlMap {
    domain: Arc<SimplicialComplex>,
    values: BTreeMap<Vertex, BigRational>,
    rank: BTreeMap<Vertex, usize>,
}

impl PlMap {
    /// `order` lists every vertex exactly once; position in it is the tie-break rank.
    pub fn new(
        domain: Arc<SimplicialComplex>,
        values: BTreeMap<Vertex, BigRational>,
        order: &[Vertex],
    ) -> Result<Self, PlMapError> {
        for (&v, x) in &values {
            if !domain.has_vertex(v) {
                return Err(PlMapError::UnknownVertex(v));
            }
            if x < &BigRational::zero() || x > &BigRational::one() {
                return Err(PlMapError::OutOfRange {
                    vertex: v,
                    value: x.to_string(),
                });
            }
        }
        if let Some(&v) = domain.vertices().iter().find(|v| !values.contains_key(v)) {
            return Err(PlMapError::MissingVertex(v));
        }
        let mut rank = BTreeMap::new();
        for (i, &v) in order.iter().enumerate() {
            if !domain.has_vertex(v) {
                return Err(PlMapError::UnknownVertex(v));
            }
            if rank.insert(v, i).is_some() {
                return Err(PlMapError::DuplicateVertex(v));
            }
        }
        if let Some(&v) = domain.vertices().iter().find(|v| !rank.contains_key(v)) {
            return Err(PlMapError::MissingVertex(v));
        }
        let mut f = PlMap {
            domain,
            values,
            rank,
        };
        f.normalize_rank();
        Ok(f)
    }

    /// Tie-break by vertex id.
    pub fn from_values(
        domain: Arc<SimplicialComplex>,
        values: BTreeMap<Vertex, BigRational>,
    ) -> Result<Self, PlMapError> {
        let order = domain.vertices().to_vec();
        Self::new(domain, values, &order)
    }

    /// Values given in tie-break order, as in a `.plf` file.
    pub fn from_entries(
        domain: Arc<SimplicialComplex>,
        entries: &[(Vertex, BigRational)],
    ) -> Result<Self, PlMapError> {
        let mut values = BTreeMap::new();
        for (v, x) in entries {
            if values.insert(*v, x.clone()).is_some() {
                return Err(PlMapError::DuplicateVertex(*v));
            }
        }
        let order: Vec<Vertex> = entries.iter().map(|(v, _)| *v).collect();
        Self::new(domain, values, &order)
    }

    /// Ranks become positions in the effective order.
    fn normalize_rank(&mut self) {
        let mut vs: Vec<Vertex> = self.values.keys().copied().collect();
        vs.sort_by(|a, b| {
            self.values[a]
                .cmp(&self.values[b])
                .then(self.rank[a].cmp(&self.rank[b]))
        });
        self.rank = vs.into_iter().enumerate().map(|(i, v)| (v, i)).collect();
    }

    pub fn domain(&self) -> &Arc<SimplicialComplex> {
        &self.domain
    }

    pub fn value(&self, v: Vertex) -> Option<&BigRational> {
        self.values.get(&v)
    }

    pub fn values(&self) -> &BTreeMap<Vertex, BigRational> {
        &self.values
    }

    /// Position of `v` in the effective order.
    pub fn rank(&self, v: Vertex) -> Option<usize> {
        self.rank.get(&v).copied()
    }

    /// Compares two vertices in the effective order.
    pub fn compare(&self, a: Vertex, b: Vertex) -> Ordering {
        self.rank[&a].cmp(&self.rank[&b])
    }

    /// Vertices sorted by the effective order.
    pub fn ordered_vertices(&self) -> Vec<Vertex> {
        let mut vs: Vec<Vertex> = self.rank.keys().copied().collect();
        vs.sort_by_key(|v| self.rank[v]);
        vs
    }

    /// `(vertex, value)` pairs in effective order.
    pub fn entries(&self) -> Vec<(Vertex, BigRational)> {
        self.ordered_vertices()
            .into_iter()
            .map(|v| (v, self.values[&v].clone()))
            .collect()
    }

    pub fn level_set(&self, value: &BigRational) -> HashSet<Vertex> {
        self.values
            .iter()
            .filter(|(_, x)| *x == value)
            .map(|(&v, _)| v)
            .collect()
    }

    /// Restriction to a subcomplex of the domain, keeping the relative order.
    pub fn restrict(&self, sub: &SimplicialComplex) -> Result<PlMap, PlMapError> {
        let mut values = BTreeMap::new();
        for &v in sub.vertices() {
            let x = self.values.get(&v).ok_or(PlMapError::UnknownVertex(v))?;
            values.insert(v, x.clone());
        }
        let order: Vec<Vertex> = self
            .ordered_vertices()
            .into_iter()
            .filter(|v| values.contains_key(v))
            .collect();
        PlMap::new(Arc::new(sub.clone()), values, &order)
    }

    /// Replaces every value, keeping the tie-break ranks.
    pub(crate) fn with_values(
        &self,
        values: BTreeMap<Vertex, BigRational>,
    ) -> Result<PlMap, PlMapError> {
        let order = self.ordered_vertices();
        PlMap::new(self.domain.clone(), values, &order)
    }

    pub fn to_plf(&self, domain_name: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(name) = domain_name {
            let _ = writeln!(out, "# domain: {name}");
        }
        for (v, x) in self.entries() {
            let _ = writeln!(out, "{v} {x}");
        }
        out
    }
}

/// Exact rational from `p/q`, an integer, or a decimal literal with optional exponent.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.contains('/') {
        return BigRational::from_str(s).ok().filter(|_| !s.ends_with("/0"));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty()
        || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let num = BigInt::from_str(&format!("{int}{frac}")).ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlfFile {
    pub domain: Option<String>,
    pub entries: Vec<(Vertex, BigRational)>,
}

pub fn parse_plf(text: &str) -> Result<PlfFile, PlMapError> {
    let mut domain = None;
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(name) = comment.trim().strip_prefix("domain:") {
                domain = Some(name.trim().to_string());
            }
            continue;
        }
        let body = trimmed.split_once('#').map_or(trimmed, |(b, _)| b).trim();
        if body.is_empty() {
            continue;
        }
        let parts: Vec<&str> = body.split_whitespace().collect();
        let [v, x] = parts[..] else {
            return Err(PlMapError::Parse {
                line,
                message: "expected `vertex value`".into(),
            });
        };
        let v = v.parse::<Vertex>().map_err(|_| PlMapError::Parse {
            line,
            message: format!("not a vertex id: `{v}`"),
        })?;
        let x = parse_rational(x).ok_or_else(|| PlMapError::Parse {
            line,
            message: format!("not a rational value: `{x}`"),
        })?;
        entries.push((v, x));
    }
    Ok(PlfFile { domain, entries })
}
