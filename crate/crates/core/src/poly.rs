//! Real multivariate polynomials with exact coefficient calculus, and
//! univariate polynomials used for bounds along segments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{JetError, Result};
use crate::multiindex::MultiIndex;

/// `sum_I c_I x^I` in `n` variables. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

#[derive(Serialize, Deserialize)]
struct Term {
    index: MultiIndex,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    n: usize,
    terms: Vec<Term>,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialRepr {
            n: self.n,
            terms: self.terms.iter().map(|(i, &c)| Term { index: i.clone(), coeff: c }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PolynomialRepr::deserialize(d)?;
        Polynomial::from_terms(repr.n, repr.terms.into_iter().map(|t| (t.index, t.coeff)))
            .map_err(serde::de::Error::custom)
    }
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(n);
        p.add_term(MultiIndex::zero(n), c);
        p
    }

    /// `c x^I`.
    pub fn monomial(index: MultiIndex, c: f64) -> Self {
        let mut p = Polynomial::zero(index.n());
        p.add_term(index, c);
        p
    }

    /// The coordinate function `x_axis`.
    pub fn variable(n: usize, axis: usize) -> Result<Self> {
        Ok(Polynomial::monomial(MultiIndex::unit(n, axis)?, 1.0))
    }

    /// Sums repeated indices; rejects wrong arity and non-finite coefficients.
    pub fn from_terms<T>(n: usize, terms: T) -> Result<Self>
    where
        T: IntoIterator<Item = (MultiIndex, f64)>,
    {
        if n == 0 {
            return Err(JetError::InvalidArgument("polynomial needs n >= 1".into()));
        }
        let mut p = Polynomial::zero(n);
        for (idx, c) in terms {
            if idx.n() != n {
                return Err(JetError::DimensionMismatch { expected: n, got: idx.n() });
            }
            if !c.is_finite() {
                return Err(JetError::NonFinite(format!("coefficient of {idx:?}")));
            }
            p.add_term(idx, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, idx: MultiIndex, c: f64) {
        if c == 0.0 {
            return;
        }
        let slot = self.terms.entry(idx.clone()).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.remove(&idx);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(i, &c)| (i, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "polynomial eval: dimension mismatch");
        self.terms.iter().map(|(i, c)| c * i.monomial(x)).sum()
    }

    /// `d_I p`, exact on coefficients.
    pub fn partial(&self, by: &MultiIndex) -> Polynomial {
        assert_eq!(by.n(), self.n, "polynomial partial: dimension mismatch");
        let mut out = Polynomial::zero(self.n);
        for (idx, &c) in &self.terms {
            if let Some(rest) = idx.minus(by) {
                let factor: f64 = idx.entries().iter().zip(by.entries()).map(|(&e, &d)| falling(e, d)).product();
                out.add_term(rest, c * factor);
            }
        }
        out
    }

    /// `d_I p(x)` without building the derivative polynomial.
    pub fn partial_eval(&self, by: &MultiIndex, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "polynomial partial_eval: dimension mismatch");
        let mut acc = 0.0;
        for (idx, c) in &self.terms {
            if let Some(rest) = idx.minus(by) {
                let factor: f64 = idx.entries().iter().zip(by.entries()).map(|(&e, &d)| falling(e, d)).product();
                acc += c * factor * rest.monomial(x);
            }
        }
        acc
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (idx, &c) in &other.terms {
            out.add_term(idx.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.n);
        for (idx, &c) in &self.terms {
            out.add_term(idx.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.n, other.n);
        let mut out = Polynomial::zero(self.n);
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                out.add_term(a.plus(b), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.n, 1.0);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Substitutes a univariate polynomial for the whole argument of `self`,
    /// where `self` has `n = 1`.
    pub fn compose_univariate(&self, inner: &Polynomial) -> Polynomial {
        assert_eq!(self.n, 1, "compose_univariate needs a univariate outer polynomial");
        let mut out = Polynomial::zero(inner.n);
        for (idx, &c) in &self.terms {
            out = out.add(&inner.pow(idx.entries()[0]).scale(c));
        }
        out
    }

    /// `sum_I c_I prod_m 1/(i_m + 1)`, the exact integral over `[0,1]^n`.
    pub fn integrate_unit_cube(&self) -> f64 {
        self.terms.iter().map(|(i, c)| c / i.entries().iter().map(|&e| f64::from(e) + 1.0).product::<f64>()).sum()
    }

    /// `sum_I |c_I|`, a bound on `|p|` over `[0,1]^n` and over `[-1,1]^n`.
    pub fn abs_coeff_sum(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// `t -> p(a + t (b - a))` as a univariate polynomial.
    pub fn restrict_to_segment(&self, a: &[f64], b: &[f64]) -> Univariate {
        assert_eq!(a.len(), self.n);
        assert_eq!(b.len(), self.n);
        let lines: Vec<Univariate> = a.iter().zip(b).map(|(&s, &e)| Univariate::new(vec![s, e - s])).collect();
        let mut out = Univariate::zero();
        for (idx, &c) in &self.terms {
            let mut term = Univariate::new(vec![c]);
            for (line, &e) in lines.iter().zip(idx.entries()) {
                for _ in 0..e {
                    term = term.mul(line);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// `prod_m (x_m - c_m)^{i_m}` expanded.
    pub fn shifted_monomial(index: &MultiIndex, center: &[f64]) -> Polynomial {
        let n = index.n();
        let mut out = Polynomial::constant(n, 1.0);
        for (axis, &e) in index.entries().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let mut lin = Polynomial::zero(n);
            lin.add_term(MultiIndex::unit(n, axis).expect("axis in range"), 1.0);
            lin.add_term(MultiIndex::zero(n), -center[axis]);
            out = out.mul(&lin.pow(e));
        }
        out
    }
}

/// `e (e-1) ... (e-d+1)`.
fn falling(e: u32, d: u32) -> f64 {
    (0..d).map(|s| f64::from(e - s)).product()
}

/// `sum_m c_m t^m`, ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Univariate {
    coeffs: Vec<f64>,
}

impl Univariate {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Univariate { coeffs }
    }

    pub fn zero() -> Self {
        Univariate { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Univariate {
        Univariate::new(self.coeffs.iter().enumerate().skip(1).map(|(m, c)| c * m as f64).collect())
    }

    pub fn add(&self, other: &Univariate) -> Univariate {
        let len = self.coeffs.len().max(other.coeffs.len());
        Univariate::new(
            (0..len)
                .map(|m| self.coeffs.get(m).copied().unwrap_or(0.0) + other.coeffs.get(m).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Univariate) -> Univariate {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Univariate::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (a, ca) in self.coeffs.iter().enumerate() {
            for (b, cb) in other.coeffs.iter().enumerate() {
                out[a + b] += ca * cb;
            }
        }
        Univariate::new(out)
    }

    /// `int_0^1`.
    pub fn integrate_unit(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(m, c)| c / (m as f64 + 1.0)).sum()
    }

    /// Bound on `|q|` over `[0,1]`.
    pub fn abs_coeff_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Certified upper bound on `max_{[0,1]} q`: the max over a uniform grid of
    /// `samples` points plus `h^2/8` times a bound on `|q''|`, the largest gap
    /// between `q` and its chordal interpolant on a cell of width `h`.
    pub fn sup_upper_bound(&self, samples: usize) -> f64 {
        let samples = samples.max(2);
        let h = 1.0 / (samples - 1) as f64;
        let grid_max = (0..samples).map(|s| self.eval(s as f64 * h)).fold(f64::NEG_INFINITY, f64::max);
        grid_max + 0.125 * h * h * self.derivative().derivative().abs_coeff_sum()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for i in 0..m {
        // Newton from the Chebyshev-like initial guess on [-1, 1]
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let step = p / d;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes.push(0.5 * (1.0 - z));
        weights.push(0.5 * w);
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
