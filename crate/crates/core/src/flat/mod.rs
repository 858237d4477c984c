//! Arbitrarily flat functions.
//!
//! Given a decreasing bound sequence `c_0 > c_1 > …` with `c_0 < 1`, builds a
//! smooth `γ : [0, 1] → ℝ` with `γ(0) = 0`, `γ′ > 0` on `(0, 1]` and
//! `Σ_{j≤k} |γ^{(j)}(t)| ≤ c_k` for `t ≤ 1/k`, for every `k ≤ K`.
//!
//! `γ″ = f`, where on `[1/(k+1), 1/k]`
//!
//! ```text
//! f(t) = a_k φ(k(k+1)t − k) + Σ_{j>k} a_j
//! ```
//!
//! and below `1/(K+1)` a tail piece `a_{K+1} φ((K+1)t)` brings `f` down to 0
//! flatly. The weights `a_k` are dyadic and satisfy the sequence conditions in
//! exact rational arithmetic; evaluation is in `f64`.

mod jet;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::plmap::{PlMap, PlMapError};
use jet::Jet;

pub const DEFAULT_MAX_ORDER: usize = 12;
pub const DEFAULT_QUAD_TOL: f64 = 1e-12;

/// Rational upper bound for `σ² = Σ_j j⁻⁴ = π⁴/90 ≈ 1.0823232`.
fn sigma_squared_upper() -> BigRational {
    BigRational::new(BigInt::from(10824), BigInt::from(10000))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlatError {
    #[error("derivative order {order} exceeds the configured maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("infeasible bound sequence: {0}")]
    InfeasibleSequence(String),
    #[error("k = {k} is outside 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("t = {0} is outside [0, 1]")]
    OutOfDomain(f64),
    #[error("composition merges the values of vertices {0} and {1} in floating point")]
    OrderCollapsed(usize, usize),
    #[error("cannot parse bound sequence `{0}`")]
    Parse(String),
    #[error(transparent)]
    Map(#[from] PlMapError),
}

/// The prescribed bounds `c_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundSequence {
    /// `c_k = 2^{−k}` for `k ≥ 1`, with `c_0 = 1/2`.
    PowerOfTwo,
    /// `c_k = 2^{−k}/k` for `k ≥ 1`, with `c_0 = 1/2`.
    PowerOfTwoOverK,
    /// `c_0, c_1, …` given explicitly.
    Explicit(Vec<BigRational>),
}

impl BoundSequence {
    /// `c_0, …, c_K`.
    pub fn terms(&self, k_max: usize) -> Result<Vec<BigRational>, FlatError> {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let pow = |k: usize| BigRational::new(BigInt::one(), BigInt::one() << k);
        match self {
            BoundSequence::PowerOfTwo => {
                Ok(std::iter::once(half).chain((1..=k_max).map(pow)).collect())
            }
            BoundSequence::PowerOfTwoOverK => Ok(std::iter::once(half)
                .chain((1..=k_max).map(|k| pow(k) / BigRational::from_integer(BigInt::from(k))))
                .collect()),
            BoundSequence::Explicit(c) if c.len() > k_max => Ok(c[..=k_max].to_vec()),
            BoundSequence::Explicit(c) => Err(FlatError::InfeasibleSequence(format!(
                "{} terms given, {} needed",
                c.len(),
                k_max + 1
            ))),
        }
    }
}

impl FromStr for BoundSequence {
    type Err = FlatError;

    /// `2^-k`, `2^-k/k`, or a comma-separated list `c_0,c_1,…` of rationals.
    fn from_str(s: &str) -> Result<Self, FlatError> {
        match s.trim() {
            "2^-k" => Ok(BoundSequence::PowerOfTwo),
            "2^-k/k" => Ok(BoundSequence::PowerOfTwoOverK),
            list => list
                .split(',')
                .map(|x| {
                    crate::plmap::parse_rational(x.trim())
                        .ok_or_else(|| FlatError::Parse(s.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(BoundSequence::Explicit),
        }
    }
}

impl fmt::Display for BoundSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundSequence::PowerOfTwo => write!(f, "2^-k"),
            BoundSequence::PowerOfTwoOverK => write!(f, "2^-k/k"),
            BoundSequence::Explicit(c) => {
                let parts: Vec<String> = c.iter().map(ToString::to_string).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatConfig {
    /// Largest derivative order of `φ` that may be requested.
    pub max_order: usize,
    /// Quadrature tolerance relative to the size of each normalised piece integral.
    pub quad_tol: f64,
    /// Chebyshev nodes used to estimate the supremum in the choice of `a_k`.
    pub grid_points: usize,
    /// Multiplier applied to the sampled supremum.
    pub safety: f64,
    /// Dyadic search range: `a_k ∈ {2^{−1}, …, 2^{−max_exponent}}`.
    pub max_exponent: u32,
}

impl Default for FlatConfig {
    fn default() -> Self {
        FlatConfig {
            max_order: DEFAULT_MAX_ORDER,
            quad_tol: DEFAULT_QUAD_TOL,
            grid_points: 64,
            safety: 2.0,
            max_exponent: 1000,
        }
    }
}

/// `φ(x) = e^{−1/x} / (e^{−1/x} + e^{−1/(1−x)})`.
pub fn phi(x: f64) -> f64 {
    phi_jet_raw(x, 0)[0]
}

/// `(φ(x), φ′(x), …, φ^{(k)}(x))` by Taylor arithmetic, `k ≤ 12`.
pub fn phi_jet(x: f64, k: usize) -> Result<Vec<f64>, FlatError> {
    if k > DEFAULT_MAX_ORDER {
        return Err(FlatError::OrderTooLarge {
            order: k,
            max: DEFAULT_MAX_ORDER,
        });
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(FlatError::OutOfDomain(x));
    }
    Ok(phi_jet_raw(x, k))
}

/// Beyond `|u| = 700` the exponential is flushed: the jet is that of the constant 0 or 1.
const EXP_FLUSH: f64 = 700.0;

fn phi_jet_raw(x: f64, k: usize) -> Vec<f64> {
    let flat = |v: f64| {
        let mut out = vec![0.0; k + 1];
        out[0] = v;
        out
    };
    if x <= 0.0 {
        return flat(0.0);
    }
    if x >= 1.0 {
        return flat(1.0);
    }
    let u0 = 1.0 / x - 1.0 / (1.0 - x);
    if u0 > EXP_FLUSH {
        return flat(0.0);
    }
    if u0 < -EXP_FLUSH {
        return flat(1.0);
    }
    let t = Jet::variable(x, k);
    let one = Jet::constant(1.0, k);
    // φ = 1 / (1 + e^u), u = 1/x − 1/(1−x)
    let u = t.recip().sub(&one.sub(&t).recip());
    let phi = if u0 >= 0.0 {
        let w = u.neg().exp();
        w.mul(&one.add(&w).recip())
    } else {
        one.add(&u.exp()).recip()
    };
    phi.derivatives()
}

fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos()))
        .collect()
}

/// One smooth piece `f(t) = a φ(t/len − shift) + offset` on `[shift·len, (shift+1)·len]`.
#[derive(Debug, Clone)]
struct Piece {
    a: f64,
    offset: f64,
    len: f64,
    shift: f64,
    /// `∫ f` over the piece.
    mass: f64,
    /// `∫ t f(t) dt` over the piece.
    moment: f64,
}

fn ser_rationals<S: Serializer>(xs: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .serialize(s)
}

fn ser_rational<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// Exact re-check of the conditions on the stored weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SequenceConditions {
    /// `a_1 > a_2 > … > a_K > a_{K+1}` and `Σ a < 1`.
    pub decreasing_sum_below_one: bool,
    /// `Σ_{j≥k+1} a_j ≤ c_k / 3` for `1 ≤ k ≤ K`.
    pub tail_sums: bool,
    /// `(Σ_{j≥k} a_j²)^{1/2} ≤ c_k / (3σ)` for `1 ≤ k ≤ K`, with `σ²` bounded above by 1.0824.
    pub square_tails: bool,
}

impl SequenceConditions {
    pub fn all(&self) -> bool {
        self.decreasing_sum_below_one && self.tail_sums && self.square_tails
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatFunction {
    /// Truncation order `K`.
    #[serde(rename = "K")]
    pub k_max: usize,
    #[serde(serialize_with = "ser_rationals")]
    pub c: Vec<BigRational>,
    /// `a_1, …, a_K`.
    #[serde(serialize_with = "ser_rationals")]
    pub a: Vec<BigRational>,
    /// Weight of the tail piece on `[0, 1/(K+1)]`.
    #[serde(serialize_with = "ser_rationals")]
    #[serde(rename = "a_tail")]
    tail: Vec<BigRational>,
    /// `b_k = 1 − a_1 − … − a_k`.
    #[serde(serialize_with = "ser_rationals")]
    pub b: Vec<BigRational>,
    /// `A = Σ_{k≤K} a_k`.
    #[serde(rename = "A", serialize_with = "ser_rational")]
    pub a_sum: BigRational,
    pub sigma: f64,
    #[serde(skip)]
    config: FlatConfig,
    /// `pieces[k-1]` is piece `k`; the last entry is the tail.
    #[serde(skip)]
    pieces: Vec<Piece>,
    /// Mass and moment of all pieces to the left of piece `i`.
    #[serde(skip)]
    below: Vec<(f64, f64)>,
    /// `∫_0^1 x φ(x) dx`.
    #[serde(skip)]
    phi_moment: f64,
}

fn rat_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(0.0)
}

pub fn make_flat(c: &BoundSequence, k_max: usize) -> Result<FlatFunction, FlatError> {
    make_flat_with(c, k_max, &FlatConfig::default())
}

pub fn make_flat_with(
    c: &BoundSequence,
    k_max: usize,
    config: &FlatConfig,
) -> Result<FlatFunction, FlatError> {
    if k_max == 0 {
        return Err(FlatError::KOutOfRange {
            k: 0,
            max: usize::MAX,
        });
    }
    let needed = k_max.saturating_sub(2);
    if needed > config.max_order {
        return Err(FlatError::OrderTooLarge {
            order: needed,
            max: config.max_order,
        });
    }
    let c_terms = c.terms(k_max)?;
    if c_terms.iter().any(|x| !x.is_positive()) {
        return Err(FlatError::InfeasibleSequence(
            "bounds must be positive".into(),
        ));
    }
    if c_terms.windows(2).any(|w| w[1] > w[0]) {
        return Err(FlatError::InfeasibleSequence(
            "bounds must be decreasing".into(),
        ));
    }
    if c_terms[0] >= BigRational::one() {
        return Err(FlatError::InfeasibleSequence(format!(
            "c_0 = {} is not below 1",
            c_terms[0]
        )));
    }

    let nodes = chebyshev_nodes(config.grid_points);
    let sigma2 = sigma_squared_upper();
    let three = BigRational::from_integer(BigInt::from(3));
    let twelve = BigRational::from_integer(BigInt::from(12));
    let mut weights: Vec<BigRational> = Vec::with_capacity(k_max + 1);
    for p in 1..=k_max + 1 {
        let tail = p == k_max + 1;
        let c_p = &c_terms[p.min(k_max)];
        let (scale, orders) = if tail {
            ((k_max + 1) as f64, k_max.saturating_sub(2))
        } else {
            ((p * (p + 1)) as f64, p.saturating_sub(2))
        };
        let sup = nodes
            .iter()
            .map(|&x| {
                phi_jet_raw(x, orders)
                    .iter()
                    .enumerate()
                    .map(|(m, d)| scale.powi(m as i32) * d.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        // Offset Σ_{j>p} a_j < a_p because each weight at most halves the previous one.
        let sup_factor = BigRational::from_float(config.safety * sup + 1.0).ok_or_else(|| {
            FlatError::InfeasibleSequence(format!("derivative supremum on piece {p} is not finite"))
        })?;
        let fits = |a: &BigRational| {
            a * &sup_factor * &three <= *c_p
                && weights
                    .last()
                    .is_none_or(|prev| a * BigRational::from_integer(BigInt::from(2)) <= *prev)
                && &twelve * &sigma2 * a * a <= c_p * c_p
        };
        let found = (1..=config.max_exponent)
            .map(|m| BigRational::new(BigInt::one(), BigInt::one() << m))
            .find(|a| fits(a));
        match found {
            Some(a) => weights.push(a),
            None => {
                return Err(FlatError::InfeasibleSequence(format!(
                    "no weight 2^-m with m <= {} fits piece {p}",
                    config.max_exponent
                )))
            }
        }
    }

    let tail = weights.pop().expect("tail weight");
    let a = weights;
    let a_sum: BigRational = a.iter().sum();
    let mut b = Vec::with_capacity(k_max);
    let mut running = BigRational::one();
    for ak in &a {
        running -= ak;
        b.push(running.clone());
    }

    let phi_moment =
        quadrature::double_exponential::integrate(|x| x * phi(x), 0.0, 1.0, 1e-16).integral;
    // Offsets: Σ_{j>p} a_j including the tail.
    let mut pieces = Vec::with_capacity(k_max + 1);
    let mut offset = tail.clone();
    let mut offsets = vec![BigRational::zero(); k_max];
    for p in (1..=k_max).rev() {
        offsets[p - 1] = offset.clone();
        offset += &a[p - 1];
    }
    let piece = |a: f64, offset: f64, len: f64, shift: f64| {
        let mass = len * (0.5 * a + offset);
        let moment = len * len * (a * (phi_moment + 0.5 * shift) + offset * (0.5 + shift));
        Piece {
            a,
            offset,
            len,
            shift,
            mass,
            moment,
        }
    };
    for p in 1..=k_max {
        pieces.push(piece(
            rat_to_f64(&a[p - 1]),
            rat_to_f64(&offsets[p - 1]),
            1.0 / (p * (p + 1)) as f64,
            p as f64,
        ));
    }
    pieces.push(piece(rat_to_f64(&tail), 0.0, 1.0 / (k_max + 1) as f64, 0.0));
    let mut below = vec![(0.0, 0.0); k_max + 1];
    let mut acc = (0.0, 0.0);
    for i in (0..=k_max).rev() {
        below[i] = acc;
        acc.0 += pieces[i].mass;
        acc.1 += pieces[i].moment;
    }

    let ff = FlatFunction {
        k_max,
        c: c_terms,
        a,
        tail: vec![tail],
        b,
        a_sum,
        sigma: (std::f64::consts::PI.powi(4) / 90.0).sqrt(),
        config: config.clone(),
        pieces,
        below,
        phi_moment,
    };
    let conditions = ff.sequence_conditions();
    if !conditions.all() {
        return Err(FlatError::InfeasibleSequence(format!(
            "sequence conditions fail: {conditions:?}"
        )));
    }
    Ok(ff)
}

impl FlatFunction {
    pub fn config(&self) -> &FlatConfig {
        &self.config
    }

    /// Weight of the tail piece, playing the role of `a_{K+1}`.
    pub fn a_tail(&self) -> &BigRational {
        &self.tail[0]
    }

    /// Evaluates conditions (1)–(3) exactly, with the tail weight counted as `a_{K+1}`.
    pub fn sequence_conditions(&self) -> SequenceConditions {
        let all: Vec<&BigRational> = self.a.iter().chain(&self.tail).collect();
        let total: BigRational = all.iter().copied().sum();
        let decreasing = all.windows(2).all(|w| w[1] < w[0]) && all.iter().all(|x| x.is_positive());
        let three = BigRational::from_integer(BigInt::from(3));
        let nine = BigRational::from_integer(BigInt::from(9));
        let sigma2 = sigma_squared_upper();
        let mut tail_sums = true;
        let mut square_tails = true;
        for k in 1..=self.k_max {
            let rest: BigRational = all[k..].iter().copied().sum();
            tail_sums &= &rest * &three <= self.c[k];
            let squares: BigRational = all[k - 1..].iter().map(|x| *x * *x).sum();
            square_tails &= &nine * &sigma2 * squares <= &self.c[k] * &self.c[k];
        }
        SequenceConditions {
            decreasing_sum_below_one: decreasing && total < BigRational::one(),
            tail_sums,
            square_tails,
        }
    }

    /// Interior breakpoints `1/2, 1/3, …, 1/(K+1)`.
    pub fn breakpoints(&self) -> Vec<f64> {
        (2..=self.k_max + 1).map(|k| 1.0 / k as f64).collect()
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let k = self.k_max;
        let index = if t * (k + 1) as f64 <= 1.0 {
            k
        } else {
            ((1.0 / t).floor() as usize).clamp(1, k) - 1
        };
        let piece = &self.pieces[index];
        (index, (t / piece.len - piece.shift).clamp(0.0, 1.0))
    }

    fn target(&self, magnitude: f64) -> f64 {
        self.config.quad_tol * magnitude
    }

    /// `∫_0^x φ`.
    fn phi_integral(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            0.5
        } else {
            let tol = self.target(0.5 * x * phi(0.5 * x));
            quadrature::double_exponential::integrate(phi, 0.0, x, tol).integral
        }
    }

    /// `∫_0^x (x − y) φ(y) dy`.
    fn phi_second_integral(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            0.5 - self.phi_moment
        } else {
            let tol = self.target(0.125 * x * x * phi(0.5 * x));
            quadrature::double_exponential::integrate(|y| (x - y) * phi(y), 0.0, x, tol).integral
        }
    }

    fn check_t(t: f64) -> Result<(), FlatError> {
        if (0.0..=1.0).contains(&t) {
            Ok(())
        } else {
            Err(FlatError::OutOfDomain(t))
        }
    }

    /// `γ(t) = ∫_0^t (t − x) f(x) dx`.
    pub fn eval_gamma(&self, t: f64) -> Result<f64, FlatError> {
        Self::check_t(t)?;
        Ok(self.gamma_and_slope(t).0)
    }

    fn gamma_and_slope(&self, t: f64) -> (f64, f64) {
        if t == 0.0 {
            return (0.0, 0.0);
        }
        let (i, x) = self.locate(t);
        let p = &self.pieces[i];
        let (mass, moment) = self.below[i];
        let slope = mass + p.len * (p.a * self.phi_integral(x) + p.offset * x);
        let local = p.len * p.len * (p.a * self.phi_second_integral(x) + p.offset * 0.5 * x * x);
        (t * mass - moment + local, slope)
    }

    /// `f^{(m)}(t)` for `m = 0..=order`.
    fn f_jet(&self, t: f64, order: usize) -> Vec<f64> {
        if t == 0.0 {
            return vec![0.0; order + 1];
        }
        let (i, x) = self.locate(t);
        let p = &self.pieces[i];
        let scale = 1.0 / p.len;
        let mut out: Vec<f64> = phi_jet_raw(x, order)
            .iter()
            .enumerate()
            .map(|(m, d)| p.a * scale.powi(m as i32) * d)
            .collect();
        out[0] += p.offset;
        out
    }

    /// `f = γ″`.
    pub fn f(&self, t: f64) -> Result<f64, FlatError> {
        Self::check_t(t)?;
        Ok(self.f_jet(t, 0)[0])
    }

    /// `(γ(t), γ′(t), …, γ^{(k)}(t))`, with `γ^{(j)} = f^{(j−2)}` for `j ≥ 2`.
    pub fn gamma_jet(&self, t: f64, k: usize) -> Result<Vec<f64>, FlatError> {
        Self::check_t(t)?;
        if k > self.config.max_order + 2 {
            return Err(FlatError::OrderTooLarge {
                order: k,
                max: self.config.max_order + 2,
            });
        }
        let (g, slope) = self.gamma_and_slope(t);
        let mut out = vec![g, slope];
        if k >= 2 {
            out.extend(self.f_jet(t, k - 2));
        }
        out.truncate(k + 1);
        Ok(out)
    }

    /// Rows `(t, γ(t), …, γ^{(k)}(t))` at `t = i / samples`, `i = 0..=samples`.
    pub fn jet_table(&self, k: usize, samples: usize) -> Result<Vec<Vec<f64>>, FlatError> {
        let samples = samples.max(1);
        (0..=samples)
            .map(|i| {
                let t = i as f64 / samples as f64;
                let mut row = vec![t];
                row.extend(self.gamma_jet(t, k)?);
                Ok(row)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatBoundsReport {
    pub k: usize,
    pub c_k: f64,
    pub samples: usize,
    pub pass: bool,
    /// `min_t (c_k − Σ_{j≤k} |γ^{(j)}(t)|)`.
    pub worst_margin: f64,
    pub worst_t: f64,
}

/// Samples `t_i = i / (samples · k)`, `i = 1..=samples`, covering `(0, 1/k]`.
pub fn verify_flat_bounds(
    ff: &FlatFunction,
    k: usize,
    samples: usize,
) -> Result<FlatBoundsReport, FlatError> {
    if k == 0 || k > ff.k_max {
        return Err(FlatError::KOutOfRange { k, max: ff.k_max });
    }
    let c_k = rat_to_f64(&ff.c[k]);
    let samples = samples.max(1);
    let mut worst = (f64::INFINITY, 0.0);
    for i in 1..=samples {
        let t = i as f64 / (samples * k) as f64;
        let total: f64 = ff.gamma_jet(t, k)?.iter().map(|x| x.abs()).sum();
        let margin = c_k - total;
        if margin < worst.0 {
            worst = (margin, t);
        }
    }
    Ok(FlatBoundsReport {
        k,
        c_k,
        samples,
        pass: worst.0 >= 0.0,
        worst_margin: worst.0,
        worst_t: worst.1,
    })
}

/// Replaces every value `v` of `f` by `γ(v)/γ(1)`, keeping the tie-break order.
pub fn compose_with_plmap(ff: &FlatFunction, f: &PlMap) -> Result<PlMap, FlatError> {
    let g1 = ff.gamma_and_slope(1.0).0;
    let mut values = std::collections::BTreeMap::new();
    for (&v, x) in f.values() {
        let y = if x.is_zero() {
            BigRational::zero()
        } else if x.is_one() {
            BigRational::one()
        } else {
            let t = rat_to_f64(x);
            let r = (ff.gamma_and_slope(t).0 / g1).clamp(0.0, 1.0);
            BigRational::from_float(r).expect("finite")
        };
        values.insert(v, y);
    }
    let order = f.ordered_vertices();
    for w in order.windows(2) {
        let (u, v) = (w[0], w[1]);
        let strict_before = f.value(u) < f.value(v);
        if strict_before && values[&u] >= values[&v] {
            return Err(FlatError::OrderCollapsed(u, v));
        }
    }
    Ok(f.with_values(values)?)
}
