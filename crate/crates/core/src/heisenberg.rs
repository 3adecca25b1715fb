//! The group law of `J^1(R^n)`, the Heisenberg group in coordinates
//! `(x, y, z)` with `y_i = u^1_{e_i}` and `z = u^0`.

use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{JetError, Result};
use crate::jet::{JetPoint, JetShape};

/// A Heisenberg element over any ring-like scalar, so the group identities
/// can be checked in exact arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergElement<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub z: T,
}

impl<T> HeisenbergElement<T>
where
    T: Clone + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Neg<Output = T>,
{
    pub fn identity(n: usize) -> Self {
        HeisenbergElement { x: vec![T::zero(); n], y: vec![T::zero(); n], z: T::zero() }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// `(x, y, z)(x', y', z') = (x + x', y + y', z + z' + <y, x'>)`.
    pub fn product(&self, other: &Self) -> Result<Self> {
        if self.n() != other.n() {
            return Err(JetError::DimensionMismatch { expected: self.n(), got: other.n() });
        }
        let cross = dot(&self.y, &other.x);
        Ok(HeisenbergElement {
            x: zip_add(&self.x, &other.x),
            y: zip_add(&self.y, &other.y),
            z: self.z.clone() + other.z.clone() + cross,
        })
    }

    /// `(-x, -y, -z + <y, x>)`.
    pub fn inverse(&self) -> Self {
        HeisenbergElement {
            x: self.x.iter().cloned().map(Neg::neg).collect(),
            y: self.y.iter().cloned().map(Neg::neg).collect(),
            z: -self.z.clone() + dot(&self.y, &self.x),
        }
    }

    pub fn dilate(&self, scale: T) -> Self {
        let s2 = scale.clone() * scale.clone();
        HeisenbergElement {
            x: self.x.iter().map(|v| v.clone() * scale.clone()).collect(),
            y: self.y.iter().map(|v| v.clone() * scale.clone()).collect(),
            z: self.z.clone() * s2,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.y).all(Zero::is_zero) && self.z.is_zero()
    }
}

fn dot<T: Clone + Zero + Mul<Output = T>>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (p, q)| acc + p.clone() * q.clone())
}

fn zip_add<T: Clone + Add<Output = T>>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(p, q)| p.clone() + q.clone()).collect()
}

impl HeisenbergElement<f64> {
    /// Reads a point of `J^1(R^n)`. The degree-one block is ordered `e_1, ..., e_n`.
    pub fn from_jet(p: &JetPoint) -> Result<Self> {
        if p.k() != 1 {
            return Err(JetError::NotHeisenberg(p.k()));
        }
        Ok(HeisenbergElement { x: p.x().to_vec(), y: p.block(1).to_vec(), z: p.u0() })
    }

    pub fn to_jet(&self) -> Result<JetPoint> {
        let shape = JetShape::new(self.n(), 1)?;
        JetPoint::from_blocks(shape, &self.x, &[self.y.clone(), vec![self.z]])
    }
}

/// The group product of two points of `J^1(R^n)`.
pub fn heisenberg_product(p: &JetPoint, q: &JetPoint) -> Result<JetPoint> {
    p.same_shape(q)?;
    let a = HeisenbergElement::from_jet(p)?;
    let b = HeisenbergElement::from_jet(q)?;
    a.product(&b)?.to_jet()
}

pub fn heisenberg_inverse(p: &JetPoint) -> Result<JetPoint> {
    HeisenbergElement::from_jet(p)?.inverse().to_jet()
}
