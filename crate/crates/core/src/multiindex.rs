//! Multi-indices `I = (i_1, ..., i_n)` and the combinatorics of jet coordinates.
//!
//! Within a fixed degree, indices are ordered graded reverse-lexicographically,
//! largest first: `I > J` when the last nonzero entry of `I - J` is negative.
//! For `n = 2, j = 2` this gives `(2,0), (1,1), (0,2)`. Every serialized `u^j`
//! block uses this order.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{JetError, Result};

/// A tuple of nonnegative integers indexing a mixed partial derivative.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex {
    degree: u32,
    entries: Vec<u32>,
}

impl From<Vec<u32>> for MultiIndex {
    fn from(entries: Vec<u32>) -> Self {
        MultiIndex::new(entries)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Self {
        m.entries
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (pos, e) in self.entries.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        let degree = entries.iter().sum();
        MultiIndex { degree, entries }
    }

    /// The zero index in `n` variables.
    pub fn zero(n: usize) -> Self {
        MultiIndex::new(vec![0; n])
    }

    /// The unit index `e_axis` (axes are 0-based).
    pub fn unit(n: usize, axis: usize) -> Result<Self> {
        MultiIndex::zero(n).add_unit(axis)
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    /// `|I| = i_1 + ... + i_n`.
    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    /// `I! = i_1! ... i_n!`, overflow-checked.
    pub fn factorial(&self) -> Result<u64> {
        let mut acc: u64 = 1;
        for &e in &self.entries {
            for f in 2..=u64::from(e) {
                acc = acc.checked_mul(f).ok_or(JetError::Overflow { top: u64::from(e), bottom: 0 })?;
            }
        }
        Ok(acc)
    }

    /// `x^I` with the convention `0^0 = 1`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.entries.len(), "monomial: dimension mismatch");
        self.entries.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product()
    }

    /// `I + e_axis`.
    pub fn add_unit(&self, axis: usize) -> Result<Self> {
        if axis >= self.entries.len() {
            return Err(JetError::AxisOutOfRange { axis, n: self.entries.len() });
        }
        let mut entries = self.entries.clone();
        entries[axis] += 1;
        Ok(MultiIndex { degree: self.degree + 1, entries })
    }

    /// `I - e_axis`, or `None` when the entry is already zero.
    pub fn sub_unit(&self, axis: usize) -> Option<Self> {
        let e = *self.entries.get(axis)?;
        if e == 0 {
            return None;
        }
        let mut entries = self.entries.clone();
        entries[axis] -= 1;
        Some(MultiIndex { degree: self.degree - 1, entries })
    }

    /// Componentwise `I + J`.
    pub fn plus(&self, other: &MultiIndex) -> Self {
        assert_eq!(self.n(), other.n());
        MultiIndex::new(self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect())
    }

    /// `J <= I` componentwise.
    pub fn divides(&self, other: &MultiIndex) -> bool {
        self.n() == other.n() && self.entries.iter().zip(&other.entries).all(|(a, b)| a <= b)
    }

    /// Componentwise `I - J`, `None` unless `J <= I`.
    pub fn minus(&self, other: &MultiIndex) -> Option<Self> {
        if !other.divides(self) {
            return None;
        }
        Some(MultiIndex::new(self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect()))
    }
}

/// Graded reverse-lexicographic comparison (`Greater` means earlier in
/// enumeration order).
pub fn grevlex_cmp(a: &MultiIndex, b: &MultiIndex) -> Ordering {
    match a.degree.cmp(&b.degree) {
        Ordering::Equal => {}
        other => return other,
    }
    for (x, y) in a.entries.iter().zip(&b.entries).rev() {
        match x.cmp(y) {
            Ordering::Equal => continue,
            // smaller trailing exponent ranks higher
            Ordering::Less => return Ordering::Greater,
            Ordering::Greater => return Ordering::Less,
        }
    }
    Ordering::Equal
}

/// All `I` with `|I| = j` in `n` variables, in enumeration order.
pub fn enumerate_indices(n: usize, j: usize) -> Vec<MultiIndex> {
    assert!(n >= 1, "enumerate_indices: n must be positive");
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    compositions(j as u32, 0, &mut current, &mut out);
    out.sort_by(|a, b| grevlex_cmp(b, a));
    out
}

fn compositions(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex::new(current.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        compositions(remaining - e, pos + 1, current, out);
    }
}

/// `d_j^n = C(n + j - 1, j)`, the number of `j`-indices in `n` variables.
pub fn layer_dim(n: usize, j: usize) -> Result<u64> {
    if n == 0 {
        return Err(JetError::InvalidArgument("layer_dim: n must be positive".into()));
    }
    binomial((n + j - 1) as u64, j as u64)
}

fn binomial(top: u64, bottom: u64) -> Result<u64> {
    let bottom_small = bottom.min(top - bottom);
    let mut acc: u128 = 1;
    for i in 0..bottom_small {
        acc = acc.checked_mul(u128::from(top - i)).ok_or(JetError::Overflow { top, bottom })? / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return Err(JetError::Overflow { top, bottom });
        }
    }
    Ok(acc as u64)
}
