//! Correlated sources under both hypotheses.
//!
//! Gaussian source: `x ~ N(0, I_d)`, `y = rho . x + sqrt(1 - |rho|^2) z` with
//! `z ~ N(0, 1)` independent of `x`. Rademacher source: `x` uniform on
//! `{-1, +1}^d` and `y = +1` with probability `(1 + rho . x) / 2`.
//!
//! Every pair consumes the stream in a fixed order: `d` coordinates of `x`,
//! then one draw for `y` (a normal for the Gaussian source, a uniform for the
//! Rademacher one), even when that draw is multiplied by zero.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::CounterRng;

/// Correlation vector with `|rho|_2 <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CorrelationVector(Vec<f64>);

impl CorrelationVector {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.is_empty() {
            return Err(invalid("correlation vector must have d >= 1"));
        }
        if let Some(bad) = rho.iter().find(|r| !r.is_finite() || r.abs() > 1.0) {
            return Err(invalid(format!("correlation entry {bad} outside [-1, 1]")));
        }
        let sq: f64 = rho.iter().map(|r| r * r).sum();
        if sq > 1.0 + 1e-12 {
            return Err(invalid(format!("|rho|_2 = {} exceeds 1", sq.sqrt())));
        }
        Ok(CorrelationVector(rho))
    }

    /// The null hypothesis `rho = 0` in dimension `d`.
    pub fn zero(d: usize) -> Result<Self> {
        Self::new(vec![0.0; d])
    }

    /// `rho(i) = tau / sqrt(d)` for every coordinate.
    pub fn equal_split(tau: f64, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d must be >= 1"));
        }
        Self::new(vec![tau / (d as f64).sqrt(); d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|r| r * r).sum()
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|r| r.abs()).sum()
    }

    pub fn negated(&self) -> Self {
        CorrelationVector(self.0.iter().map(|r| -r).collect())
    }
}

impl TryFrom<Vec<f64>> for CorrelationVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CorrelationVector> for Vec<f64> {
    fn from(c: CorrelationVector) -> Vec<f64> {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub x: Vec<f64>,
    pub y: f64,
}

/// `n` i.i.d. pairs; `xs` is row-major `n x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    xs: Vec<f64>,
    ys: Vec<f64>,
    n: usize,
    d: usize,
}

impl SampleBlock {
    pub fn from_parts(xs: Vec<f64>, ys: Vec<f64>, d: usize) -> Result<Self> {
        let n = ys.len();
        if n == 0 || d == 0 {
            return Err(invalid("sample block needs n >= 1 and d >= 1"));
        }
        if xs.len() != n * d {
            return Err(Error::Shape(format!("xs has {} entries, expected {n} x {d}", xs.len())));
        }
        Ok(SampleBlock { xs, ys, n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.xs[t * self.d..(t + 1) * self.d]
    }

    /// First coordinate of every row; the observation of a `d = 1` party.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.n).map(|t| self.xs[t * self.d + i]).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sample_pair_gaussian<R: Rng + ?Sized>(rho: &CorrelationVector, rng: &mut R) -> Result<SamplePair> {
    let norm_sq = rho.norm_sq();
    if norm_sq > 1.0 + 1e-12 {
        return Err(invalid("|rho|_2 > 1"));
    }
    let x: Vec<f64> = (0..rho.dim()).map(|_| StandardNormal.sample(rng)).collect();
    let z: f64 = StandardNormal.sample(rng);
    let noise = (1.0 - norm_sq).max(0.0).sqrt();
    let y = dot(rho.as_slice(), &x) + noise * z;
    Ok(SamplePair { x, y })
}

pub fn sample_pair_rademacher<R: Rng + ?Sized>(
    rho: &CorrelationVector,
    rng: &mut R,
) -> Result<SamplePair> {
    if rho.norm_l1() > 1.0 + 1e-12 {
        return Err(invalid(format!(
            "Rademacher source needs |rho|_1 <= 1, got {}",
            rho.norm_l1()
        )));
    }
    let x: Vec<f64> = (0..rho.dim())
        .map(|_| if rng.next_u64() >> 63 == 1 { -1.0 } else { 1.0 })
        .collect();
    let p_plus = 0.5 * (1.0 + dot(rho.as_slice(), &x));
    let u: f64 = rng.random();
    let y = if u < p_plus { 1.0 } else { -1.0 };
    Ok(SamplePair { x, y })
}

pub fn sample_pair<R: Rng + ?Sized>(
    rho: &CorrelationVector,
    kind: SourceKind,
    rng: &mut R,
) -> Result<SamplePair> {
    match kind {
        SourceKind::Gaussian => sample_pair_gaussian(rho, rng),
        SourceKind::Rademacher => sample_pair_rademacher(rho, rng),
    }
}

/// Draw `n` pairs from the stream keyed by `seed`.
pub fn sample_block(rho: &CorrelationVector, n: usize, kind: SourceKind, seed: u64) -> Result<SampleBlock> {
    if n == 0 {
        return Err(invalid("sample block needs n >= 1"));
    }
    let mut rng = CounterRng::new(seed);
    let d = rho.dim();
    let mut xs = Vec::with_capacity(n * d);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let pair = sample_pair(rho, kind, &mut rng)?;
        xs.extend_from_slice(&pair.x);
        ys.push(pair.y);
    }
    SampleBlock::from_parts(xs, ys, d)
}
