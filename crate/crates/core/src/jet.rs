//! Global coordinates on `J^k(R^n)`, the horizontal frame and the metric `g_0`.
//!
//! A point is stored as one flat vector laid out as `(x, u^k, u^{k-1}, ..., u^0)`,
//! each `u^j` block indexed by [`enumerate_indices`]. Tangent vectors use the
//! same layout but hold coefficients in the `g_0`-orthonormal frame
//! `(X_1, ..., X_n, d/du^j_I)`, so the `x` slots carry the `X_i` coefficients.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{JetError, Result};
use crate::multiindex::{enumerate_indices, layer_dim, MultiIndex};

/// `X_i` carries `u^{j+1}_{I+e_i}` as its coefficient on `d/du^j_I`.
///
/// Each entry records one such term by flat coordinate positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coupling {
    /// Position of `u^j_I`.
    pub target: usize,
    /// Position of `u^{j+1}_{I+e_i}`.
    pub source: usize,
    pub axis: usize,
}

/// Dimensions and index tables of `J^k(R^n)`.
pub struct JetShape {
    n: usize,
    k: usize,
    layer_dims: Vec<usize>,
    level_offsets: Vec<usize>,
    total_dim: usize,
    indices: Vec<Vec<MultiIndex>>,
    lookup: Vec<HashMap<MultiIndex, usize>>,
    couplings: Vec<Coupling>,
}

impl fmt::Debug for JetShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J^{}(R^{})", self.k, self.n)
    }
}

impl PartialEq for JetShape {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k
    }
}

/// Largest coordinate dimension accepted.
pub const MAX_TOTAL_DIM: usize = 1 << 20;

impl JetShape {
    pub fn new(n: usize, k: usize) -> Result<Arc<JetShape>> {
        if n == 0 || k == 0 {
            return Err(JetError::InvalidArgument(format!("jet space needs n >= 1 and k >= 1, got n = {n}, k = {k}")));
        }
        let mut dims_by_level = Vec::with_capacity(k + 1);
        let mut total: u64 = n as u64;
        for j in 0..=k {
            let d = layer_dim(n, j)?;
            total = total.checked_add(d).ok_or(JetError::Overflow { top: (n + j - 1) as u64, bottom: j as u64 })?;
            dims_by_level.push(d as usize);
        }
        if total > MAX_TOTAL_DIM as u64 {
            return Err(JetError::InvalidArgument(format!(
                "J^{k}(R^{n}) has {total} coordinates, above the supported {MAX_TOTAL_DIM}"
            )));
        }
        let total_dim = total as usize;

        let mut level_offsets = vec![0; k + 1];
        let mut off = n;
        for j in (0..=k).rev() {
            level_offsets[j] = off;
            off += dims_by_level[j];
        }
        let layer_dims = (0..=k).rev().map(|j| dims_by_level[j]).collect();

        let indices: Vec<Vec<MultiIndex>> = (0..=k).map(|j| enumerate_indices(n, j)).collect();
        let lookup = indices
            .iter()
            .map(|list| list.iter().cloned().enumerate().map(|(p, i)| (i, p)).collect())
            .collect::<Vec<HashMap<_, _>>>();

        let mut couplings = Vec::new();
        for j in 0..k {
            for (pos, idx) in indices[j].iter().enumerate() {
                for axis in 0..n {
                    let up = idx.add_unit(axis)?;
                    let src = lookup[j + 1][&up];
                    couplings.push(Coupling {
                        target: level_offsets[j] + pos,
                        source: level_offsets[j + 1] + src,
                        axis,
                    });
                }
            }
        }

        Ok(Arc::new(JetShape { n, k, layer_dims, level_offsets, total_dim, indices, lookup, couplings }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `[d_k^n, ..., d_0^n]`, in storage order.
    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Number of `j`-indices.
    pub fn level_dim(&self, j: usize) -> usize {
        self.indices[j].len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// First flat position of the `u^j` block.
    pub fn level_offset(&self, j: usize) -> usize {
        self.level_offsets[j]
    }

    pub fn level_range(&self, j: usize) -> std::ops::Range<usize> {
        let o = self.level_offsets[j];
        o..o + self.indices[j].len()
    }

    /// Width of a horizontal control: `n + d_k^n`. The horizontal frame
    /// directions occupy exactly the leading positions of the layout.
    pub fn horizontal_dim(&self) -> usize {
        self.n + self.indices[self.k].len()
    }

    pub fn indices(&self, j: usize) -> &[MultiIndex] {
        &self.indices[j]
    }

    /// Flat position of `u^j_I`.
    pub fn position(&self, j: usize, idx: &MultiIndex) -> Option<usize> {
        if j > self.k {
            return None;
        }
        self.lookup[j].get(idx).map(|p| self.level_offsets[j] + p)
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// Jet level of a flat position, `None` for the `x` slots.
    pub fn level_of(&self, pos: usize) -> Option<usize> {
        if pos < self.n {
            return None;
        }
        (0..=self.k).find(|&j| self.level_range(j).contains(&pos))
    }

    /// Homogeneous weight under dilations: 1 for `x`, `k + 1 - j` for `u^j`.
    pub fn weight(&self, pos: usize) -> usize {
        match self.level_of(pos) {
            None => 1,
            Some(j) => self.k + 1 - j,
        }
    }

    fn check_same(&self, other: &JetShape) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(JetError::ShapeMismatch { n1: self.n, k1: self.k, n2: other.n, k2: other.k })
        }
    }
}

/// A point of `J^k(R^n)` in global coordinates.
#[derive(Clone)]
pub struct JetPoint {
    shape: Arc<JetShape>,
    coords: Vec<f64>,
}

impl fmt::Debug for JetPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JetPoint{:?}{:?}", self.shape, self.coords)
    }
}

impl PartialEq for JetPoint {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.coords == other.coords
    }
}

impl JetPoint {
    pub fn new(shape: Arc<JetShape>, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != shape.total_dim {
            return Err(JetError::DimensionMismatch { expected: shape.total_dim, got: coords.len() });
        }
        Ok(JetPoint { shape, coords })
    }

    pub fn origin(shape: Arc<JetShape>) -> Self {
        let coords = vec![0.0; shape.total_dim];
        JetPoint { shape, coords }
    }

    /// Builds a point from `x` and the blocks `[u^k, ..., u^0]`.
    pub fn from_blocks(shape: Arc<JetShape>, x: &[f64], blocks: &[Vec<f64>]) -> Result<Self> {
        if x.len() != shape.n {
            return Err(JetError::DimensionMismatch { expected: shape.n, got: x.len() });
        }
        if blocks.len() != shape.k + 1 {
            return Err(JetError::DimensionMismatch { expected: shape.k + 1, got: blocks.len() });
        }
        let mut coords = x.to_vec();
        for (b, &want) in blocks.iter().zip(&shape.layer_dims) {
            if b.len() != want {
                return Err(JetError::DimensionMismatch { expected: want, got: b.len() });
            }
            coords.extend_from_slice(b);
        }
        Ok(JetPoint { shape, coords })
    }

    pub fn shape(&self) -> &Arc<JetShape> {
        &self.shape
    }

    pub fn n(&self) -> usize {
        self.shape.n
    }

    pub fn k(&self) -> usize {
        self.shape.k
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn x(&self) -> &[f64] {
        &self.coords[..self.shape.n]
    }

    /// The `u^j` block.
    pub fn block(&self, j: usize) -> &[f64] {
        &self.coords[self.shape.level_range(j)]
    }

    /// `u^j_I`, or `None` when `I` is not a `j`-index.
    pub fn u(&self, j: usize, idx: &MultiIndex) -> Option<f64> {
        self.shape.position(j, idx).map(|p| self.coords[p])
    }

    pub fn u0(&self) -> f64 {
        self.coords[self.shape.total_dim - 1]
    }

    /// Blocks in storage order `[u^k, ..., u^0]`.
    pub fn blocks(&self) -> Vec<Vec<f64>> {
        (0..=self.shape.k).rev().map(|j| self.block(j).to_vec()).collect()
    }

    pub fn same_shape(&self, other: &JetPoint) -> Result<()> {
        self.shape.check_same(&other.shape)
    }

    pub fn max_abs_diff(&self, other: &JetPoint) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct JetPointRepr {
    n: usize,
    k: usize,
    x: Vec<f64>,
    u: Vec<Vec<f64>>,
}

impl Serialize for JetPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        JetPointRepr { n: self.n(), k: self.k(), x: self.x().to_vec(), u: self.blocks() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for JetPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = JetPointRepr::deserialize(d)?;
        let shape = JetShape::new(repr.n, repr.k).map_err(serde::de::Error::custom)?;
        JetPoint::from_blocks(shape, &repr.x, &repr.u).map_err(serde::de::Error::custom)
    }
}

/// A tangent vector at `base`, stored by its `g_0`-frame coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    base: JetPoint,
    frame: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: JetPoint, frame: Vec<f64>) -> Result<Self> {
        if frame.len() != base.shape.total_dim {
            return Err(JetError::DimensionMismatch { expected: base.shape.total_dim, got: frame.len() });
        }
        Ok(TangentVector { base, frame })
    }

    pub fn zero(base: JetPoint) -> Self {
        let frame = vec![0.0; base.shape.total_dim];
        TangentVector { base, frame }
    }

    /// The frame vector `X_axis` at `base`.
    pub fn x_direction(base: JetPoint, axis: usize) -> Result<Self> {
        if axis >= base.n() {
            return Err(JetError::AxisOutOfRange { axis, n: base.n() });
        }
        let mut v = TangentVector::zero(base);
        v.frame[axis] = 1.0;
        Ok(v)
    }

    pub fn base(&self) -> &JetPoint {
        &self.base
    }

    pub fn frame(&self) -> &[f64] {
        &self.frame
    }

    /// Coefficients `a_i` of `X_i`.
    pub fn a(&self) -> &[f64] {
        &self.frame[..self.base.n()]
    }

    /// Coefficients `b^j_I` of `d/du^j_I`.
    pub fn b(&self, j: usize) -> &[f64] {
        &self.frame[self.base.shape.level_range(j)]
    }

    pub fn g0_norm(&self) -> f64 {
        self.frame.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn g0_inner(&self, other: &TangentVector) -> Result<f64> {
        self.base.same_shape(&other.base)?;
        Ok(self.frame.iter().zip(&other.frame).map(|(a, b)| a * b).sum())
    }

    /// True when every `b^j` with `j < k` vanishes.
    pub fn is_horizontal(&self) -> bool {
        let h = self.base.shape.horizontal_dim();
        self.frame[h..].iter().all(|&c| c == 0.0)
    }

    pub fn scaled(&self, s: f64) -> TangentVector {
        TangentVector { base: self.base.clone(), frame: self.frame.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &TangentVector) -> Result<TangentVector> {
        self.base.same_shape(&other.base)?;
        Ok(TangentVector {
            base: self.base.clone(),
            frame: self.frame.iter().zip(&other.frame).map(|(a, b)| a + b).collect(),
        })
    }
}

/// `delta_L`: `x -> Lx`, `u^j -> L^{k+1-j} u^j`.
pub fn dilate(scale: f64, p: &JetPoint) -> Result<JetPoint> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(JetError::InvalidArgument(format!("dilation factor must be positive and finite, got {scale}")));
    }
    Ok(dilate_nonneg(scale, p))
}

/// Dilation that also accepts `L = 0`, which collapses everything to the origin.
pub(crate) fn dilate_nonneg(scale: f64, p: &JetPoint) -> JetPoint {
    let shape = &p.shape;
    let mut coords = p.coords.clone();
    for c in &mut coords[..shape.n] {
        *c *= scale;
    }
    for j in 0..=shape.k {
        let factor = scale.powi((shape.k + 1 - j) as i32);
        for c in &mut coords[shape.level_range(j)] {
            *c *= factor;
        }
    }
    JetPoint { shape: shape.clone(), coords }
}

/// Coordinate-basis components of `X_axis(p)`.
pub fn frame_field(p: &JetPoint, axis: usize) -> Result<Vec<f64>> {
    if axis >= p.n() {
        return Err(JetError::AxisOutOfRange { axis, n: p.n() });
    }
    let mut v = vec![0.0; p.shape.total_dim];
    v[axis] = 1.0;
    for c in p.shape.couplings.iter().filter(|c| c.axis == axis) {
        v[c.target] = p.coords[c.source];
    }
    Ok(v)
}

/// Converts a coordinate velocity at `p` into frame coefficients.
pub fn coords_to_frame(p: &JetPoint, v: &[f64]) -> Result<TangentVector> {
    let mut frame = vec![0.0; p.shape.total_dim];
    coords_to_frame_into(&p.shape, &p.coords, v, &mut frame)?;
    Ok(TangentVector { base: p.clone(), frame })
}

pub(crate) fn coords_to_frame_into(shape: &JetShape, point: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
    if v.len() != shape.total_dim {
        return Err(JetError::DimensionMismatch { expected: shape.total_dim, got: v.len() });
    }
    out.copy_from_slice(v);
    for c in &shape.couplings {
        out[c.target] -= v[c.axis] * point[c.source];
    }
    Ok(())
}

/// Converts frame coefficients back into a coordinate velocity.
pub fn frame_to_coords(v: &TangentVector) -> Vec<f64> {
    let mut out = vec![0.0; v.frame.len()];
    frame_to_coords_into(&v.base.shape, &v.base.coords, &v.frame, &mut out);
    out
}

/// The jet-space vector field equation: coordinate velocity of the frame
/// combination `w` at the state `point`.
#[inline]
pub(crate) fn frame_to_coords_into(shape: &JetShape, point: &[f64], w: &[f64], out: &mut [f64]) {
    out.copy_from_slice(w);
    for c in &shape.couplings {
        out[c.target] += w[c.axis] * point[c.source];
    }
}

/// A frame direction: `X_i` or `d/du^j_I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameDirection {
    X(usize),
    U { level: usize, index: MultiIndex },
}

/// Coordinate components of a frame direction at `p`.
pub fn frame_direction_field(p: &JetPoint, dir: &FrameDirection) -> Result<Vec<f64>> {
    match dir {
        FrameDirection::X(axis) => frame_field(p, *axis),
        FrameDirection::U { level, index } => {
            let pos = p
                .shape
                .position(*level, index)
                .ok_or_else(|| JetError::InvalidIndex(format!("{index:?} is not a {level}-index")))?;
            let mut v = vec![0.0; p.shape.total_dim];
            v[pos] = 1.0;
            Ok(v)
        }
    }
}

/// `[F, G](p) = DG(p) F(p) - DF(p) G(p)` by central differences.
///
/// The frame fields have affine coefficients, for which the difference
/// quotients are exact up to rounding.
pub fn lie_bracket<F, G>(p: &JetPoint, f: F, g: G) -> Result<Vec<f64>>
where
    F: Fn(&JetPoint) -> Result<Vec<f64>>,
    G: Fn(&JetPoint) -> Result<Vec<f64>>,
{
    const H: f64 = 0.5;
    let fp = f(p)?;
    let gp = g(p)?;
    let shift = |dir: &[f64], s: f64| -> Result<JetPoint> {
        let c = p.coords.iter().zip(dir).map(|(a, d)| a + s * d).collect();
        JetPoint::new(p.shape.clone(), c)
    };
    let g_plus = g(&shift(&fp, H)?)?;
    let g_minus = g(&shift(&fp, -H)?)?;
    let f_plus = f(&shift(&gp, H)?)?;
    let f_minus = f(&shift(&gp, -H)?)?;
    Ok((0..fp.len()).map(|c| (g_plus[c] - g_minus[c]) / (2.0 * H) - (f_plus[c] - f_minus[c]) / (2.0 * H)).collect())
}

/// A fixed, non-degenerate test point for commutator evaluation.
fn probe_point(shape: &Arc<JetShape>) -> JetPoint {
    let coords = (0..shape.total_dim).map(|i| ((i as f64 + 1.0) * 0.754_877_666).fract() * 4.0 - 2.0).collect();
    JetPoint { shape: shape.clone(), coords }
}

/// Deviation of `[d/du^{j+1}_{I+e_i}, X_i]` from `d/du^j_I`, as a max-abs residual.
pub fn bracket_check(shape: &Arc<JetShape>, level: usize, index: &MultiIndex, axis: usize) -> Result<f64> {
    if level >= shape.k {
        return Err(JetError::InvalidIndex(format!("stratum {level} must be below k = {}", shape.k)));
    }
    if index.n() != shape.n || index.degree() != level {
        return Err(JetError::InvalidIndex(format!("{index:?} is not a {level}-index")));
    }
    if axis >= shape.n {
        return Err(JetError::AxisOutOfRange { axis, n: shape.n });
    }
    let p = probe_point(shape);
    let upper = FrameDirection::U { level: level + 1, index: index.add_unit(axis)? };
    let lower = FrameDirection::U { level, index: index.clone() };
    let got =
        lie_bracket(&p, |q| frame_direction_field(q, &upper), |q| frame_direction_field(q, &FrameDirection::X(axis)))?;
    let want = frame_direction_field(&p, &lower)?;
    Ok(got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Every frame direction of a shape.
pub fn all_frame_directions(shape: &JetShape) -> Vec<FrameDirection> {
    let mut dirs: Vec<FrameDirection> = (0..shape.n).map(FrameDirection::X).collect();
    for j in (0..=shape.k).rev() {
        for idx in shape.indices(j) {
            dirs.push(FrameDirection::U { level: j, index: idx.clone() });
        }
    }
    dirs
}

/// Expected bracket of two frame directions from the commutator table: the only
/// nonzero brackets are `[d/du^{j+1}_{I+e_i}, X_i] = d/du^j_I` and their negatives.
pub fn expected_bracket(shape: &JetShape, a: &FrameDirection, b: &FrameDirection) -> Vec<f64> {
    let mut out = vec![0.0; shape.total_dim];
    let mut apply = |u: &FrameDirection, x: &FrameDirection, sign: f64| {
        if let (FrameDirection::U { level, index }, FrameDirection::X(axis)) = (u, x) {
            if *level >= 1 {
                if let Some(lower) = index.sub_unit(*axis) {
                    if let Some(pos) = shape.position(level - 1, &lower) {
                        out[pos] += sign;
                    }
                }
            }
        }
    };
    apply(a, b, 1.0);
    apply(b, a, -1.0);
    out
}

/// Largest residual between computed and expected brackets over all ordered
/// pairs of frame directions, evaluated at a fixed probe point.
pub fn commutator_table_residual(shape: &Arc<JetShape>) -> Result<f64> {
    let p = probe_point(shape);
    let dirs = all_frame_directions(shape);
    let mut worst: f64 = 0.0;
    for a in &dirs {
        for b in &dirs {
            let got = lie_bracket(&p, |q| frame_direction_field(q, a), |q| frame_direction_field(q, b))?;
            let want = expected_bracket(shape, a, b);
            for (g, w) in got.iter().zip(&want) {
                worst = worst.max((g - w).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(n: usize, k: usize, c: &[f64]) -> JetPoint {
        JetPoint::new(JetShape::new(n, k).unwrap(), c.to_vec()).unwrap()
    }

    #[test]
    fn shape_layout() {
        let s = JetShape::new(2, 2).unwrap();
        assert_eq!(s.layer_dims(), &[3, 2, 1]);
        assert_eq!(s.total_dim(), 8);
        assert_eq!(s.level_offset(2), 2);
        assert_eq!(s.level_offset(0), 7);
        assert_eq!(s.horizontal_dim(), 5);
        assert_eq!(s.weight(0), 1);
        assert_eq!(s.weight(2), 1);
        assert_eq!(s.weight(5), 2);
        assert_eq!(s.weight(7), 3);
        assert!(JetShape::new(0, 1).is_err());
    }

    #[test]
    fn dilation_examples() {
        let p = pt(1, 1, &[1.0, 1.0, 1.0]);
        assert_eq!(dilate(2.0, &p).unwrap().coords(), &[2.0, 2.0, 4.0]);
        assert_eq!(dilate(1.0, &p).unwrap(), p);
        let q = pt(1, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(dilate(3.0, &q).unwrap().coords(), &[3.0, 3.0, 9.0, 27.0]);
        assert!(dilate(0.0, &p).is_err());
        assert!(dilate(-1.0, &p).is_err());
    }

    #[test]
    fn frame_field_examples() {
        // n = k = 1: X = d/dx + y d/dz
        let p = pt(1, 1, &[0.3, 5.0, -1.0]);
        assert_eq!(frame_field(&p, 0).unwrap(), vec![1.0, 0.0, 5.0]);
        // n = 1, k = 2: X = d/dx + a d/du^1 + b d/du^0
        let q = pt(1, 2, &[0.0, 7.0, 11.0, 13.0]);
        assert_eq!(frame_field(&q, 0).unwrap(), vec![1.0, 0.0, 7.0, 11.0]);
        let z = JetPoint::origin(JetShape::new(2, 2).unwrap());
        let f = frame_field(&z, 1).unwrap();
        assert_eq!(f, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(frame_field(&z, 2).is_err());
    }

    #[test]
    fn horizontal_velocity_example() {
        let y = 2.5;
        let p = pt(1, 1, &[0.0, y, 0.0]);
        let v = coords_to_frame(&p, &[1.0, 0.0, y]).unwrap();
        assert_eq!(v.frame(), &[1.0, 0.0, 0.0]);
        assert!(v.is_horizontal());
        assert!(coords_to_frame(&p, &[1.0]).is_err());
    }

    #[test]
    fn g0_norm_examples() {
        let p = pt(1, 1, &[0.0, 3.0, 1.0]);
        let x = TangentVector::x_direction(p.clone(), 0).unwrap();
        assert_eq!(x.g0_norm(), 1.0);
        let mut frame = x.frame().to_vec();
        frame[2] = 1.0;
        let v = TangentVector::new(p.clone(), frame).unwrap();
        assert!((v.g0_norm() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(TangentVector::zero(p).g0_norm(), 0.0);
    }

    #[test]
    fn bracket_examples() {
        let s = JetShape::new(1, 1).unwrap();
        let r = bracket_check(&s, 0, &MultiIndex::zero(1), 0).unwrap();
        assert!(r < 1e-12);
        let s = JetShape::new(2, 2).unwrap();
        assert!(bracket_check(&s, 0, &MultiIndex::zero(2), 0).unwrap() < 1e-12);
        assert!(bracket_check(&s, 2, &MultiIndex::zero(2), 0).is_err());
        assert!(bracket_check(&s, 1, &MultiIndex::zero(2), 0).is_err());
    }

    #[test]
    fn mixed_axes_commute() {
        let s = JetShape::new(2, 1).unwrap();
        let p = probe_point(&s);
        // d/du^1_{e_2} against X_1
        let u = FrameDirection::U { level: 1, index: MultiIndex::new(vec![0, 1]) };
        let got =
            lie_bracket(&p, |q| frame_direction_field(q, &u), |q| frame_direction_field(q, &FrameDirection::X(0)))
                .unwrap();
        assert!(got.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn commutator_table_small_shapes() {
        for n in 1..=2 {
            for k in 1..=2 {
                let s = JetShape::new(n, k).unwrap();
                assert!(commutator_table_residual(&s).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn json_layout() {
        let p = pt(1, 1, &[1.0, 2.0, 1.0]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":1,"k":1,"x":[1.0],"u":[[2.0],[1.0]]}"#);
        let back: JetPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<JetPoint>(r#"{"n":1,"k":1,"x":[1.0],"u":[[2.0]]}"#).is_err());
    }
}
