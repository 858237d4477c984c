//! Semialgebraic Reeb functions `f = Σ_i f_i` with `f_i = e^{1/g_i}` where
//! `g_i < 0` and `0` elsewhere, evaluated and sample-verified on a manifold.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::plmap::parse_rational;

/// Values of `e^{1/g}` below this are flushed to exact zero.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;
pub const DEFAULT_GRADIENT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemialgError {
    #[error("point has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tangent data is rank-deficient at sample {0}")]
    DegenerateSampler(usize),
    #[error("delta = {delta} must lie in (0, {limit})")]
    InvalidDelta { delta: f64, limit: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Polynomial with rational coefficients in `n` variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Polynomial {
    /// Merges repeated exponents and drops zero coefficients.
    pub fn new(
        n: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, BigRational)>,
    ) -> Result<Self, SemialgError> {
        let mut map: BTreeMap<Vec<u32>, BigRational> = BTreeMap::new();
        for (e, c) in terms {
            if e.len() != n {
                return Err(SemialgError::DimensionMismatch {
                    expected: n,
                    got: e.len(),
                });
            }
            *map.entry(e).or_insert_with(BigRational::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Polynomial { n, terms: map })
    }

    /// The coordinate `x_i` (0-based).
    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Polynomial {
            n,
            terms: BTreeMap::from([(e, BigRational::from_integer(1.into()))]),
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, BigRational> {
        &self.terms
    }

    pub fn neg(&self) -> Self {
        Polynomial {
            n: self.n,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c.to_f64().unwrap_or(f64::NAN)
                    * e.iter()
                        .zip(x)
                        .map(|(&k, &xi)| xi.powi(k as i32))
                        .product::<f64>()
            })
            .sum()
    }

    pub fn partial(&self, i: usize) -> Self {
        let terms = self.terms.iter().filter(|(e, _)| e[i] > 0).map(|(e, c)| {
            let mut d = e.clone();
            d[i] -= 1;
            (d, c * BigRational::from_integer(e[i].into()))
        });
        Polynomial {
            n: self.n,
            terms: terms.collect(),
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: Vec<String> = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| {
                        if k == 1 {
                            format!("x{}", i + 1)
                        } else {
                            format!("x{}^{k}", i + 1)
                        }
                    })
                    .collect();
                if mono.is_empty() {
                    c.to_string()
                } else {
                    format!("{c}*{}", mono.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Point map and Jacobian (`n × d`, one row per ambient coordinate) of a parameterization.
pub type ParamFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// A user-supplied parameterization sampled on a cell-centred grid of its box domain.
#[derive(Clone)]
pub struct Parameterization {
    pub name: String,
    pub domain: Vec<(f64, f64)>,
    pub map: ParamFn,
    pub jacobian: JacobianFn,
    /// Which parameters are periodic (wrap around in the neighbour structure).
    pub periodic: Vec<bool>,
}

impl fmt::Debug for Parameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Parameterization")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Manifold {
    /// Unit sphere `S² ⊂ ℝ³`, latitude–longitude grid.
    Sphere,
    /// Clifford torus `S¹(1/√2) × S¹(1/√2) ⊂ ℝ⁴`.
    Torus,
    /// `{h = 0}`, sampled by Newton projection of a cube grid of side `2·radius`.
    Implicit {
        h: Polynomial,
        radius: f64,
    },
    Parametric(Parameterization),
}

impl Manifold {
    pub fn name(&self) -> String {
        match self {
            Manifold::Sphere => "sphere".into(),
            Manifold::Torus => "torus".into(),
            Manifold::Implicit { .. } => "implicit".into(),
            Manifold::Parametric(p) => p.name.clone(),
        }
    }

    fn ambient(&self) -> Option<usize> {
        match self {
            Manifold::Sphere => Some(3),
            Manifold::Torus => Some(4),
            Manifold::Implicit { h, .. } => Some(h.dimension()),
            Manifold::Parametric(_) => None,
        }
    }
}

/// Inequalities `g_i ≥ 0` cutting `X` out of a sampled manifold.
#[derive(Debug, Clone)]
pub struct SemialgSpec {
    pub n: usize,
    pub g: Vec<Polynomial>,
    pub manifold: Manifold,
    /// Grid resolution per parameter direction.
    pub resolution: usize,
}

impl SemialgSpec {
    pub fn new(
        g: Vec<Polynomial>,
        manifold: Manifold,
        resolution: usize,
    ) -> Result<Self, SemialgError> {
        let n = g
            .first()
            .map(Polynomial::dimension)
            .or(manifold.ambient())
            .unwrap_or(0);
        if let Some(bad) = g.iter().find(|p| p.dimension() != n) {
            return Err(SemialgError::DimensionMismatch {
                expected: n,
                got: bad.dimension(),
            });
        }
        if let Some(m) = manifold.ambient().filter(|&m| m != n) {
            return Err(SemialgError::DimensionMismatch {
                expected: m,
                got: n,
            });
        }
        Ok(SemialgSpec {
            n,
            g,
            manifold,
            resolution,
        })
    }

    fn check(&self, x: &[f64]) -> Result<(), SemialgError> {
        if x.len() == self.n {
            Ok(())
        } else {
            Err(SemialgError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            })
        }
    }

    /// Whether `x` satisfies every `g_i ≥ 0`.
    pub fn in_x(&self, x: &[f64]) -> bool {
        self.g.iter().all(|g| g.eval(x) >= 0.0)
    }
}

/// `e^{1/g}` for `g < 0` with underflow flushed; the flag reports a flush.
fn flat_exp(g: f64) -> (f64, bool) {
    if g >= 0.0 {
        return (0.0, false);
    }
    let v = (1.0 / g).exp();
    if v < UNDERFLOW_THRESHOLD {
        (0.0, true)
    } else {
        (v, false)
    }
}

/// `f(x)` and whether any term was flushed to zero.
pub fn eval_flagged(spec: &SemialgSpec, x: &[f64]) -> Result<(f64, bool), SemialgError> {
    spec.check(x)?;
    let mut total = 0.0;
    let mut flushed = false;
    for g in &spec.g {
        let (v, fl) = flat_exp(g.eval(x));
        total += v;
        flushed |= fl;
    }
    Ok((total, flushed))
}

pub fn eval(spec: &SemialgSpec, x: &[f64]) -> Result<f64, SemialgError> {
    eval_flagged(spec, x).map(|(v, _)| v)
}

/// `∇f = Σ_{g_i<0} −e^{1/g_i} ∇g_i / g_i²`.
pub fn gradient(spec: &SemialgSpec, x: &[f64]) -> Result<Vec<f64>, SemialgError> {
    spec.check(x)?;
    let mut out = vec![0.0; spec.n];
    for g in &spec.g {
        let gv = g.eval(x);
        let (v, _) = flat_exp(gv);
        if v == 0.0 {
            continue;
        }
        let w = -v / (gv * gv);
        for (i, o) in out.iter_mut().enumerate() {
            *o += w * g.partial(i).eval(x);
        }
    }
    Ok(out)
}

/// A point of the manifold with its tangent data.
#[derive(Debug, Clone)]
pub struct Sample {
    pub point: Vec<f64>,
    tangent: Tangent,
    neighbors: Vec<usize>,
}

#[derive(Debug, Clone)]
enum Tangent {
    /// Columns spanning the tangent space.
    Span(Vec<Vec<f64>>),
    /// Normal to a hypersurface.
    Normal(Vec<f64>),
}

fn grid_neighbors(shape: &[usize], periodic: &[bool], index: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for axis in 0..shape.len() {
        for step in [-1isize, 1] {
            let k = index[axis] as isize + step;
            let n = shape[axis] as isize;
            let k = if periodic[axis] {
                k.rem_euclid(n)
            } else if (0..n).contains(&k) {
                k
            } else {
                continue;
            };
            let mut j = index.to_vec();
            j[axis] = k as usize;
            out.push(j);
        }
    }
    out
}

fn flatten(shape: &[usize], index: &[usize]) -> usize {
    index.iter().zip(shape).fold(0, |acc, (&i, &s)| acc * s + i)
}

fn unflatten(shape: &[usize], mut k: usize) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = k % shape[a];
        k /= shape[a];
    }
    idx
}

fn parametric_samples(
    domain: &[(f64, f64)],
    periodic: &[bool],
    resolution: usize,
    map: &ParamFn,
    jac: &JacobianFn,
) -> Vec<Sample> {
    let shape = vec![resolution; domain.len()];
    let total = resolution.pow(domain.len() as u32);
    (0..total)
        .map(|k| {
            let idx = unflatten(&shape, k);
            let u: Vec<f64> = idx
                .iter()
                .zip(domain)
                .map(|(&i, &(lo, hi))| lo + (hi - lo) * (i as f64 + 0.5) / resolution as f64)
                .collect();
            let rows = jac(&u);
            let d = domain.len();
            let columns: Vec<Vec<f64>> = (0..d)
                .map(|c| rows.iter().map(|r| r[c]).collect())
                .collect();
            let neighbors = grid_neighbors(&shape, periodic, &idx)
                .iter()
                .map(|j| flatten(&shape, j))
                .collect();
            Sample {
                point: map(&u),
                tangent: Tangent::Span(columns),
                neighbors,
            }
        })
        .collect()
}

fn sphere_param() -> (Vec<(f64, f64)>, ParamFn, JacobianFn) {
    use std::f64::consts::PI;
    let map: ParamFn = Arc::new(|u: &[f64]| {
        let (t, p) = (u[0], u[1]);
        vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
    });
    let jac: JacobianFn = Arc::new(|u: &[f64]| {
        let (t, p) = (u[0], u[1]);
        vec![
            vec![t.cos() * p.cos(), -t.sin() * p.sin()],
            vec![t.cos() * p.sin(), t.sin() * p.cos()],
            vec![-t.sin(), 0.0],
        ]
    });
    (vec![(0.0, PI), (0.0, 2.0 * PI)], map, jac)
}

fn torus_param() -> (Vec<(f64, f64)>, ParamFn, JacobianFn) {
    use std::f64::consts::{FRAC_1_SQRT_2, PI};
    let map: ParamFn = Arc::new(|u: &[f64]| {
        let (a, b) = (u[0], u[1]);
        vec![a.cos(), a.sin(), b.cos(), b.sin()]
            .into_iter()
            .map(|x| x * FRAC_1_SQRT_2)
            .collect()
    });
    let jac: JacobianFn = Arc::new(|u: &[f64]| {
        let (a, b) = (u[0], u[1]);
        let s = FRAC_1_SQRT_2;
        vec![
            vec![-a.sin() * s, 0.0],
            vec![a.cos() * s, 0.0],
            vec![0.0, -b.sin() * s],
            vec![0.0, b.cos() * s],
        ]
    });
    (vec![(0.0, 2.0 * PI), (0.0, 2.0 * PI)], map, jac)
}

/// Newton projection onto `{h = 0}` along `∇h`.
fn project_to_hypersurface(
    h: &Polynomial,
    grad: &[Polynomial],
    mut x: Vec<f64>,
) -> Option<Vec<f64>> {
    for _ in 0..60 {
        let hv = h.eval(&x);
        let g: Vec<f64> = grad.iter().map(|p| p.eval(&x)).collect();
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2 < 1e-24 {
            return None;
        }
        if hv.abs() < 1e-13 {
            return Some(x);
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= hv * gi / g2;
        }
    }
    (h.eval(&x).abs() < 1e-10).then_some(x)
}

/// Samples of the manifold with tangent data and a neighbour structure.
pub fn manifold_samples(spec: &SemialgSpec) -> Vec<Sample> {
    let r = spec.resolution.max(1);
    match &spec.manifold {
        Manifold::Sphere => {
            let (domain, map, jac) = sphere_param();
            let mut samples = parametric_samples(&domain, &[false, true], r, &map, &jac);
            // All cells of the first and last latitude rows touch a pole.
            for row in [0, r - 1] {
                for j in 0..r {
                    let k = row * r + j;
                    samples[k]
                        .neighbors
                        .extend((0..r).map(|l| row * r + l).filter(|&l| l != k));
                }
            }
            samples
        }
        Manifold::Torus => {
            let (domain, map, jac) = torus_param();
            parametric_samples(&domain, &[true, true], r, &map, &jac)
        }
        Manifold::Parametric(p) => {
            parametric_samples(&p.domain, &p.periodic, r, &p.map, &p.jacobian)
        }
        Manifold::Implicit { h, radius } => {
            let n = h.dimension();
            let grad: Vec<Polynomial> = (0..n).map(|i| h.partial(i)).collect();
            let shape = vec![r; n];
            let projected: Vec<Option<Vec<f64>>> = (0..r.pow(n as u32))
                .into_par_iter()
                .map(|k| {
                    let idx = unflatten(&shape, k);
                    let seed: Vec<f64> = idx
                        .iter()
                        .map(|&i| -radius + 2.0 * radius * (i as f64 + 0.5) / r as f64)
                        .collect();
                    project_to_hypersurface(h, &grad, seed)
                })
                .collect();
            let mut position = vec![usize::MAX; projected.len()];
            let mut samples = Vec::new();
            for (k, p) in projected.iter().enumerate() {
                if let Some(x) = p {
                    position[k] = samples.len();
                    let normal = grad.iter().map(|g| g.eval(x)).collect();
                    samples.push(Sample {
                        point: x.clone(),
                        tangent: Tangent::Normal(normal),
                        neighbors: Vec::new(),
                    });
                }
            }
            for (k, &pos) in position.iter().enumerate() {
                if pos == usize::MAX {
                    continue;
                }
                let idx = unflatten(&shape, k);
                samples[pos].neighbors = grid_neighbors(&shape, &vec![false; n], &idx)
                    .iter()
                    .map(|j| position[flatten(&shape, j)])
                    .filter(|&p| p != usize::MAX)
                    .collect();
            }
            samples
        }
    }
}

fn projected_norm(v: &[f64], tangent: &Tangent) -> Option<f64> {
    match tangent {
        Tangent::Normal(nrm) => {
            let n2: f64 = nrm.iter().map(|x| x * x).sum();
            if n2 < 1e-24 {
                return None;
            }
            let c = v.iter().zip(nrm).map(|(a, b)| a * b).sum::<f64>() / n2;
            Some(
                v.iter()
                    .zip(nrm)
                    .map(|(a, b)| (a - c * b).powi(2))
                    .sum::<f64>()
                    .sqrt(),
            )
        }
        Tangent::Span(cols) => {
            let n = v.len();
            let d = cols.len();
            let j = DMatrix::from_fn(n, d, |r, c| cols[c][r]);
            let gram = j.transpose() * &j;
            let chol = gram.clone().cholesky()?;
            let scale = gram.diagonal().max();
            if chol.l().diagonal().iter().any(|&l| l * l <= 1e-14 * scale) {
                return None;
            }
            let rhs = j.transpose() * DVector::from_column_slice(v);
            let coeffs = chol.solve(&rhs);
            Some((j * coeffs).norm())
        }
    }
}

/// Per-sample values used by the verifier and the CSV dump.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRow {
    pub point: Vec<f64>,
    pub f: f64,
    pub projected_gradient_norm: f64,
    pub in_x: bool,
    pub flushed: bool,
}

pub fn evaluate_samples(spec: &SemialgSpec) -> Result<(Vec<Sample>, Vec<SampleRow>), SemialgError> {
    let samples = manifold_samples(spec);
    let rows: Result<Vec<SampleRow>, SemialgError> = samples
        .par_iter()
        .enumerate()
        .map(|(k, s)| {
            let (f, flushed) = eval_flagged(spec, &s.point)?;
            let grad = gradient(spec, &s.point)?;
            let norm =
                projected_norm(&grad, &s.tangent).ok_or(SemialgError::DegenerateSampler(k))?;
            Ok(SampleRow {
                point: s.point.clone(),
                f,
                projected_gradient_norm: norm,
                in_x: spec.in_x(&s.point),
                flushed,
            })
        })
        .collect();
    Ok((samples, rows?))
}

#[derive(Debug, Clone, Serialize)]
pub struct NumericReebReport {
    pub manifold: String,
    pub samples: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub delta: f64,
    /// Open band `(f_min + δ, f_max − δ)` where no critical point may occur.
    pub band: (f64, f64),
    pub band_samples: usize,
    pub min_projected_gradient_norm: Option<f64>,
    pub argmin: Option<Vec<f64>>,
    pub threshold: f64,
    pub zero_set_consistent: bool,
    pub zero_samples: usize,
    /// Samples outside `X` whose value underflowed below 1e-300 and was flushed to 0.
    pub flushed_samples: usize,
    /// Connected regions (in the sampling grid) of `{f ≥ f_max − δ}`.
    pub max_clusters: usize,
    pub pass: bool,
    pub reasons: Vec<String>,
}

fn count_clusters(samples: &[Sample], members: &[bool]) -> usize {
    let mut parent: Vec<usize> = (0..samples.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, s) in samples.iter().enumerate() {
        if !members[i] {
            continue;
        }
        for &j in &s.neighbors {
            if members[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..samples.len())
        .filter(|&i| members[i] && find(&mut parent, i) == i)
        .count()
}

/// Sampled surrogate for "only two critical values": no small projected
/// gradient where `f` lies strictly inside the band, `f = 0` exactly on `X`,
/// and a single top region.
pub fn verify_reeb_numeric(
    spec: &SemialgSpec,
    delta: f64,
    threshold: f64,
) -> Result<NumericReebReport, SemialgError> {
    let (samples, rows) = evaluate_samples(spec)?;
    let f_min = rows.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
    let f_max = rows.iter().map(|r| r.f).fold(f64::NEG_INFINITY, f64::max);
    let zero_samples = rows.iter().filter(|r| r.in_x).count();
    let flushed_samples = rows.iter().filter(|r| !r.in_x && r.f == 0.0).count();
    let zero_set_consistent = rows.iter().all(|r| {
        if r.in_x {
            r.f == 0.0
        } else {
            r.f > 0.0 || r.flushed
        }
    });
    let mut report = NumericReebReport {
        manifold: spec.manifold.name(),
        samples: rows.len(),
        f_min,
        f_max,
        delta,
        band: (f_min + delta, f_max - delta),
        band_samples: 0,
        min_projected_gradient_norm: None,
        argmin: None,
        threshold,
        zero_set_consistent,
        zero_samples,
        flushed_samples,
        max_clusters: 0,
        pass: false,
        reasons: Vec::new(),
    };
    if zero_samples == rows.len() {
        report.reasons.push("X = M violates X ⊊ M".into());
        return Ok(report);
    }
    let limit = (f_max - f_min) / 2.0;
    if !(delta > 0.0 && delta < limit) {
        return Err(SemialgError::InvalidDelta { delta, limit });
    }
    let (lo, hi) = report.band;
    let mut best: Option<(f64, usize)> = None;
    for (k, r) in rows.iter().enumerate() {
        if r.f > lo && r.f < hi {
            report.band_samples += 1;
            if best.is_none_or(|(b, _)| r.projected_gradient_norm < b) {
                best = Some((r.projected_gradient_norm, k));
            }
        }
    }
    report.min_projected_gradient_norm = best.map(|(b, _)| b);
    report.argmin = best.map(|(_, k)| rows[k].point.clone());
    let top: Vec<bool> = rows.iter().map(|r| r.f >= f_max - delta).collect();
    report.max_clusters = count_clusters(&samples, &top);

    if !zero_set_consistent {
        report
            .reasons
            .push("f vanishes off X or is non-zero on X".into());
    }
    match best {
        None => report.reasons.push("no samples in the open band".into()),
        Some((b, _)) if b <= threshold => report.reasons.push(format!(
            "projected gradient {b:e} at or below threshold {threshold:e}"
        )),
        _ => {}
    }
    if report.max_clusters > 1 {
        report.reasons.push(format!(
            "two-sided minimum, no interior max band: the top level splits into {} regions",
            report.max_clusters
        ));
    }
    report.pass = report.reasons.is_empty();
    Ok(report)
}

/// Parses a semialgebraic spec file:
///
/// ```text
/// dim 3
/// sampler sphere 100          # or: torus N | implicit N RADIUS
/// poly                        # one block per g_i
/// 1 0 0 1                     # coeff e1 … en
/// end
/// h                           # implicit samplers only
/// 1 2 0 0
/// ...
/// end
/// ```
pub fn parse_spec(text: &str) -> Result<SemialgSpec, SemialgError> {
    let err = |line: usize, message: String| SemialgError::Parse { line, message };
    let mut n: Option<usize> = None;
    let mut sampler: Option<(usize, String, usize, Option<f64>)> = None;
    let mut polys: Vec<Polynomial> = Vec::new();
    let mut h: Option<Polynomial> = None;
    // (start line, is the `h` block, terms)
    type Block = (usize, bool, Vec<(Vec<u32>, BigRational)>);
    let mut block: Option<Block> = None;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        if let Some((start, is_h, terms)) = block.as_mut() {
            if words == ["end"] {
                let dim = n.ok_or_else(|| err(*start, "`dim` must precede polynomials".into()))?;
                let p = Polynomial::new(dim, std::mem::take(terms))
                    .map_err(|e| err(*start, e.to_string()))?;
                if *is_h {
                    h = Some(p);
                } else {
                    polys.push(p);
                }
                block = None;
                continue;
            }
            let dim = n.ok_or_else(|| err(lineno, "`dim` must precede polynomials".into()))?;
            if words.len() != dim + 1 {
                return Err(err(
                    lineno,
                    format!("expected a coefficient and {dim} exponents"),
                ));
            }
            let c = parse_rational(words[0])
                .ok_or_else(|| err(lineno, format!("bad coefficient `{}`", words[0])))?;
            let e = words[1..]
                .iter()
                .map(|w| {
                    w.parse::<u32>()
                        .map_err(|_| err(lineno, format!("bad exponent `{w}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            terms.push((e, c));
            continue;
        }
        match words.as_slice() {
            ["dim", d] => {
                n = Some(
                    d.parse()
                        .map_err(|_| err(lineno, format!("bad dimension `{d}`")))?,
                )
            }
            ["sampler", kind, res, rest @ ..] => {
                let res: usize = res
                    .parse()
                    .map_err(|_| err(lineno, format!("bad resolution `{res}`")))?;
                let radius = match rest {
                    [] => None,
                    [r] => Some(
                        r.parse()
                            .map_err(|_| err(lineno, format!("bad radius `{r}`")))?,
                    ),
                    _ => return Err(err(lineno, "too many sampler arguments".into())),
                };
                sampler = Some((lineno, kind.to_string(), res, radius));
            }
            ["poly"] => block = Some((lineno, false, Vec::new())),
            ["h"] => block = Some((lineno, true, Vec::new())),
            _ => return Err(err(lineno, format!("unrecognised line `{line}`"))),
        }
    }
    if let Some((start, _, _)) = block {
        return Err(err(start, "polynomial block is not closed by `end`".into()));
    }
    let (sline, kind, resolution, radius) =
        sampler.ok_or_else(|| err(0, "missing `sampler` line".into()))?;
    let manifold = match kind.as_str() {
        "sphere" => Manifold::Sphere,
        "torus" => Manifold::Torus,
        "implicit" => Manifold::Implicit {
            h: h.ok_or_else(|| err(sline, "implicit sampler needs an `h` block".into()))?,
            radius: radius.unwrap_or(1.5),
        },
        other => return Err(err(sline, format!("unknown sampler `{other}`"))),
    };
    let spec =
        SemialgSpec::new(polys, manifold, resolution).map_err(|e| err(sline, e.to_string()))?;
    if n.is_some_and(|d| d != spec.n) {
        return Err(err(
            sline,
            format!(
                "sampler lives in dimension {}, spec declares {}",
                spec.n,
                n.unwrap_or(0)
            ),
        ));
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hemisphere(resolution: usize) -> SemialgSpec {
        SemialgSpec::new(
            vec![Polynomial::coordinate(3, 2)],
            Manifold::Sphere,
            resolution,
        )
        .unwrap()
    }

    #[test]
    fn polynomial_basics() {
        let p = Polynomial::new(
            2,
            [(vec![2, 0], 3), (vec![0, 1], -1), (vec![2, 0], -3)]
                .map(|(e, c): (Vec<u32>, i32)| (e, BigRational::from_integer(c.into()))),
        )
        .unwrap();
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.eval(&[5.0, 2.0]), -2.0);
        let q = Polynomial::new(2, [(vec![2, 1], BigRational::from_integer(2.into()))]).unwrap();
        assert_eq!(q.partial(0).eval(&[3.0, 2.0]), 24.0);
        assert_eq!(q.to_string(), "2*x1^2*x2");
    }

    #[test]
    fn hemisphere_values() {
        let s = hemisphere(10);
        assert_eq!(eval(&s, &[0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!((eval(&s, &[0.0, 0.0, -1.0]).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        let near = eval(&s, &[0.0, 0.0, -0.005]).unwrap();
        assert!(near > 0.0 && near < 1e-12);
        assert_eq!(eval_flagged(&s, &[0.0, 0.0, -0.001]).unwrap(), (0.0, true));
        let g = gradient(&s, &[0.0, 0.0, -1.0]).unwrap();
        assert_eq!(g[..2], [0.0, 0.0]);
        assert!((g[2] + (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(gradient(&s, &[0.1, 0.2, 0.5]).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            eval(&s, &[1.0, 0.0]),
            Err(SemialgError::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn hemisphere_passes() {
        let r = verify_reeb_numeric(&hemisphere(100), 0.01, DEFAULT_GRADIENT_THRESHOLD).unwrap();
        assert_eq!(r.samples, 10_000);
        assert!(r.pass, "{r:?}");
        assert_eq!(r.max_clusters, 1);
        assert!(r.min_projected_gradient_norm.unwrap() > 1e-8);
    }

    #[test]
    fn equator_is_flagged() {
        let g = vec![
            Polynomial::coordinate(3, 2),
            Polynomial::coordinate(3, 2).neg(),
        ];
        let s = SemialgSpec::new(g, Manifold::Sphere, 60).unwrap();
        let r = verify_reeb_numeric(&s, 0.01, DEFAULT_GRADIENT_THRESHOLD).unwrap();
        assert!(!r.pass);
        assert_eq!(r.max_clusters, 2);
        assert!(r.reasons.iter().any(|m| m.starts_with("two-sided minimum")));
    }

    #[test]
    fn whole_manifold_is_rejected() {
        // x1² + x2² + x3² ≥ 0 holds everywhere.
        let g = Polynomial::new(
            3,
            (0..3).map(|i| {
                let mut e = vec![0; 3];
                e[i] = 2;
                (e, BigRational::from_integer(1.into()))
            }),
        )
        .unwrap();
        let s = SemialgSpec::new(vec![g], Manifold::Sphere, 20).unwrap();
        let r = verify_reeb_numeric(&s, 0.01, DEFAULT_GRADIENT_THRESHOLD).unwrap();
        assert!(!r.pass);
        assert_eq!(r.reasons, vec!["X = M violates X ⊊ M".to_string()]);
    }

    #[test]
    fn implicit_sphere_matches_parametric() {
        let text = "dim 3\nsampler implicit 12 1.5\npoly\n1 0 0 1\nend\nh\n1 2 0 0\n1 0 2 0\n1 0 0 2\n-1 0 0 0\nend\n";
        let s = parse_spec(text).unwrap();
        let r = verify_reeb_numeric(&s, 0.01, DEFAULT_GRADIENT_THRESHOLD).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.samples > 100);
    }

    #[test]
    fn torus_sampler() {
        // X = {x1 ≥ 0} on the Clifford torus: an annulus.
        let s = SemialgSpec::new(vec![Polynomial::coordinate(4, 0)], Manifold::Torus, 40).unwrap();
        let (samples, rows) = evaluate_samples(&s).unwrap();
        assert_eq!(samples.len(), 1600);
        assert!(rows
            .iter()
            .all(|r| (r.point.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn parsing_errors_carry_lines() {
        assert!(matches!(
            parse_spec("dim 3\nsampler sphere 10\npoly\n1 0 1\nend\n"),
            Err(SemialgError::Parse { line: 4, .. })
        ));
        assert!(matches!(
            parse_spec("dim 3\nsampler cube 10\n"),
            Err(SemialgError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_spec("dim 3\nsampler sphere 10\npoly\n1 0 0 1\n"),
            Err(SemialgError::Parse { line: 3, .. })
        ));
        let s = parse_spec("dim 3 # ambient\nsampler sphere 8\npoly\n1 0 0 1\nend\n").unwrap();
        assert_eq!(s.g.len(), 1);
        assert_eq!(s.resolution, 8);
    }
}
