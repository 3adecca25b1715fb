//! Scalar fields, Taylor polynomials, prolongation `x -> j^k_x(f)` and the
//! segment bound on `d_c` between prolonged points.

use std::fmt;
use std::sync::Arc;

use crate::error::{JetError, Result};
use crate::jet::{JetPoint, JetShape, TangentVector};
use crate::multiindex::{enumerate_indices, MultiIndex};
use crate::poly::{gauss_legendre_unit, Polynomial, Univariate};

type DerivativeFn = dyn Fn(&MultiIndex, &[f64]) -> f64 + Send + Sync;
type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
enum FieldRepr {
    Polynomial(Polynomial),
    /// Caller supplies every mixed partial up to `max_order`.
    Derivatives {
        max_order: usize,
        f: Arc<DerivativeFn>,
    },
    /// Values only; partials by Richardson-extrapolated central differences.
    Values {
        max_order: usize,
        f: Arc<ValueFn>,
    },
}

/// A function `R^n -> R` whose mixed partials can be queried.
#[derive(Clone)]
pub struct ScalarField {
    n: usize,
    repr: FieldRepr,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            FieldRepr::Polynomial(p) => write!(f, "ScalarField::Polynomial({p:?})"),
            FieldRepr::Derivatives { max_order, .. } => {
                write!(f, "ScalarField::Derivatives(n = {}, order <= {max_order})", self.n)
            }
            FieldRepr::Values { max_order, .. } => {
                write!(f, "ScalarField::Values(n = {}, order <= {max_order})", self.n)
            }
        }
    }
}

impl From<Polynomial> for ScalarField {
    fn from(p: Polynomial) -> Self {
        ScalarField { n: p.n(), repr: FieldRepr::Polynomial(p) }
    }
}

impl ScalarField {
    pub fn zero(n: usize) -> Self {
        Polynomial::zero(n).into()
    }

    /// A field given by an oracle for `(I, x) -> d_I f(x)`, trusted up to `max_order`.
    pub fn from_derivatives<F>(n: usize, max_order: usize, f: F) -> Self
    where
        F: Fn(&MultiIndex, &[f64]) -> f64 + Send + Sync + 'static,
    {
        ScalarField { n, repr: FieldRepr::Derivatives { max_order, f: Arc::new(f) } }
    }

    /// A field known only by its values. Partials come from finite differences,
    /// accurate to roughly `1e-8` at order 1 and degrading with each order.
    pub fn from_values<F>(n: usize, max_order: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ScalarField { n, repr: FieldRepr::Values { max_order, f: Arc::new(f) } }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Highest derivative order that may be queried.
    pub fn max_order(&self) -> usize {
        match &self.repr {
            FieldRepr::Polynomial(_) => usize::MAX,
            FieldRepr::Derivatives { max_order, .. } | FieldRepr::Values { max_order, .. } => *max_order,
        }
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match &self.repr {
            FieldRepr::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    pub fn require_order(&self, order: usize) -> Result<()> {
        if order > self.max_order() {
            Err(JetError::OrderUnavailable { requested: order, available: self.max_order() })
        } else {
            Ok(())
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.partial(&MultiIndex::zero(self.n), x)
    }

    /// `d_I f(x)`; exact for polynomials.
    pub fn partial(&self, index: &MultiIndex, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(JetError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        if index.n() != self.n {
            return Err(JetError::DimensionMismatch { expected: self.n, got: index.n() });
        }
        self.require_order(index.degree())?;
        let v = match &self.repr {
            FieldRepr::Polynomial(p) => p.partial_eval(index, x),
            FieldRepr::Derivatives { f, .. } => f(index, x),
            FieldRepr::Values { f, .. } => richardson_partial(f.as_ref(), index, x),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(JetError::NonFinite(format!("partial {index:?} at {x:?}")))
        }
    }

    /// `(1 - s) self + s other`, kept polynomial when both sides are.
    pub fn blend(&self, other: &ScalarField, s: f64) -> Result<ScalarField> {
        if self.n != other.n {
            return Err(JetError::DimensionMismatch { expected: self.n, got: other.n });
        }
        if let (Some(a), Some(b)) = (self.as_polynomial(), other.as_polynomial()) {
            return Ok(a.scale(1.0 - s).add(&b.scale(s)).into());
        }
        let (a, b) = (self.clone(), other.clone());
        let order = self.max_order().min(other.max_order());
        Ok(ScalarField::from_derivatives(self.n, order, move |i, x| {
            (1.0 - s) * a.partial(i, x).unwrap_or(f64::NAN) + s * b.partial(i, x).unwrap_or(f64::NAN)
        }))
    }
}

fn binomial_f64(d: u32, s: u32) -> f64 {
    (0..s).fold(1.0, |acc, m| acc * f64::from(d - m) / f64::from(m + 1))
}

/// Tensor product of per-axis central difference stencils of order `i_m`.
fn central_partial(f: &ValueFn, index: &MultiIndex, x: &[f64], h: f64) -> f64 {
    let orders = index.entries();
    let n = x.len();
    let mut counters = vec![0u32; n];
    let mut acc = 0.0;
    let mut point = x.to_vec();
    loop {
        let mut weight = 1.0;
        for m in 0..n {
            let d = orders[m];
            let s = counters[m];
            point[m] = x[m] + (f64::from(d) / 2.0 - f64::from(s)) * h;
            let sign = if s.is_multiple_of(2) { 1.0 } else { -1.0 };
            weight *= sign * binomial_f64(d, s);
        }
        acc += weight * f(&point);
        let mut m = 0;
        loop {
            if m == n {
                return acc / h.powi(index.degree() as i32);
            }
            counters[m] += 1;
            if counters[m] <= orders[m] {
                break;
            }
            counters[m] = 0;
            m += 1;
        }
    }
}

fn richardson_partial(f: &ValueFn, index: &MultiIndex, x: &[f64]) -> f64 {
    if index.degree() == 0 {
        return f(x);
    }
    let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let h = scale * f64::EPSILON.powf(1.0 / (index.degree() as f64 + 4.0));
    let coarse = central_partial(f, index, x, h);
    let fine = central_partial(f, index, x, h / 2.0);
    (4.0 * fine - coarse) / 3.0
}

/// `T^k_{x0} f`.
pub fn taylor(f: &ScalarField, x0: &[f64], k: usize) -> Result<ScalarField> {
    f.require_order(k)?;
    let n = f.n();
    let mut out = Polynomial::zero(n);
    for j in 0..=k {
        for idx in enumerate_indices(n, j) {
            let c = f.partial(&idx, x0)? / idx.factorial()? as f64;
            if c != 0.0 {
                out = out.add(&Polynomial::shifted_monomial(&idx, x0).scale(c));
            }
        }
    }
    Ok(out.into())
}

/// `j^k_x(f)`.
pub fn prolong(f: &ScalarField, k: usize, x: &[f64]) -> Result<JetPoint> {
    let shape = JetShape::new(f.n(), k)?;
    prolong_in(&shape, f, x)
}

/// Prolongation into an existing shape, avoiding the index-table rebuild.
pub fn prolong_in(shape: &Arc<JetShape>, f: &ScalarField, x: &[f64]) -> Result<JetPoint> {
    if shape.n() != f.n() {
        return Err(JetError::DimensionMismatch { expected: shape.n(), got: f.n() });
    }
    f.require_order(shape.k())?;
    let mut coords = Vec::with_capacity(shape.total_dim());
    coords.extend_from_slice(x);
    for j in (0..=shape.k()).rev() {
        for idx in shape.indices(j) {
            coords.push(f.partial(idx, x)?);
        }
    }
    JetPoint::new(shape.clone(), coords)
}

/// Frame decomposition of `d/dt j^k(f)(x + t (y - x))`.
pub fn segment_curve_derivative(f: &ScalarField, k: usize, x: &[f64], y: &[f64], t: f64) -> Result<TangentVector> {
    f.require_order(k + 1)?;
    if y.len() != f.n() {
        return Err(JetError::DimensionMismatch { expected: f.n(), got: y.len() });
    }
    let shape = JetShape::new(f.n(), k)?;
    let g: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + t * (b - a)).collect();
    let base = prolong_in(&shape, f, &g)?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).collect();
    let mut frame = vec![0.0; shape.total_dim()];
    frame[..f.n()].copy_from_slice(&d);
    let off = shape.level_offset(k);
    for (pos, idx) in shape.indices(k).iter().enumerate() {
        let mut acc = 0.0;
        for (axis, di) in d.iter().enumerate() {
            acc += di * f.partial(&idx.add_unit(axis)?, &g)?;
        }
        frame[off + pos] = acc;
    }
    TangentVector::new(base, frame)
}

/// `q(t) = 1 + sum_{I in I(k), i} (d_{I+e_i} f(x + t (y - x)))^2` restricted to the segment.
fn speed_factor_on_segment(p: &Polynomial, k: usize, x: &[f64], y: &[f64]) -> Result<Univariate> {
    let n = p.n();
    let mut q = Univariate::new(vec![1.0]);
    for idx in enumerate_indices(n, k) {
        for axis in 0..n {
            let g = p.partial(&idx.add_unit(axis)?).restrict_to_segment(x, y);
            q = q.add(&g.mul(&g));
        }
    }
    Ok(q)
}

/// Upper bound on `d_c(j^k(f)(x), j^k(f)(y))`:
/// `sup_t sqrt(1 + sum (d_{I+e_i} f)^2) * |y - x|` along the segment.
///
/// For polynomial fields the sup is certified (grid maximum plus a derivative
/// bound). Other fields use the sampled maximum over `samples` points.
pub fn jet_lip_bound(f: &ScalarField, k: usize, x: &[f64], y: &[f64], samples: usize) -> Result<f64> {
    if samples < 2 {
        return Err(JetError::InvalidArgument("jet_lip_bound needs at least 2 samples".into()));
    }
    f.require_order(k + 1)?;
    let n = f.n();
    if x.len() != n || y.len() != n {
        return Err(JetError::DimensionMismatch { expected: n, got: x.len().min(y.len()) });
    }
    let dist = euclid(x, y);
    if dist == 0.0 {
        return Ok(0.0);
    }
    let sup = match f.as_polynomial() {
        Some(p) => speed_factor_on_segment(p, k, x, y)?.sup_upper_bound(samples),
        None => {
            let tops: Vec<MultiIndex> = enumerate_indices(n, k)
                .iter()
                .flat_map(|i| (0..n).map(move |a| i.add_unit(a)))
                .collect::<Result<_>>()?;
            let mut best = f64::NEG_INFINITY;
            for s in 0..samples {
                let t = s as f64 / (samples - 1) as f64;
                let g: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + t * (b - a)).collect();
                let mut q = 1.0;
                for idx in &tops {
                    let v = f.partial(idx, &g)?;
                    q += v * v;
                }
                best = best.max(q);
            }
            best
        }
    };
    Ok(sup.sqrt() * dist)
}

/// Upper bound on `sup_{Q^n} sqrt(1 + sum_{I in I(k), i} (d_{I+e_i} f)^2)`.
///
/// Polynomial fields get a certified bound from a grid of `per_axis` points per
/// axis plus a gradient bound times the covering radius; other fields return
/// the grid maximum.
pub fn lip_factor_on_cube(f: &ScalarField, k: usize, per_axis: usize) -> Result<f64> {
    f.require_order(k + 1)?;
    let n = f.n();
    let per_axis = per_axis.max(2);
    let tops: Vec<MultiIndex> =
        enumerate_indices(n, k).iter().flat_map(|i| (0..n).map(move |a| i.add_unit(a))).collect::<Result<_>>()?;
    let grid = cube_grid(n, per_axis);
    match f.as_polynomial() {
        Some(p) => {
            let mut q = Polynomial::constant(n, 1.0);
            for idx in &tops {
                let d = p.partial(idx);
                q = q.add(&d.mul(&d));
            }
            let units: Vec<MultiIndex> = (0..n).map(|a| MultiIndex::unit(n, a)).collect::<Result<_>>()?;
            let grads: Vec<Polynomial> = units.iter().map(|u| q.partial(u)).collect();
            // Frobenius norm of coefficient bounds dominates the Hessian norm on the cube
            let mut hess_sq = 0.0;
            for g in &grads {
                for u in &units {
                    hess_sq += g.partial(u).abs_coeff_sum().powi(2);
                }
            }
            let hess = hess_sq.sqrt();
            let h = 1.0 / (per_axis - 1) as f64;
            let r = 0.5 * h * (n as f64).sqrt();
            let mut best = f64::NEG_INFINITY;
            for x in &grid {
                let grad = grads.iter().map(|g| g.eval(x).powi(2)).sum::<f64>().sqrt();
                best = best.max(q.eval(x) + grad * r + 0.5 * hess * r * r);
            }
            Ok(best.sqrt())
        }
        None => {
            let mut best = f64::NEG_INFINITY;
            for x in &grid {
                let mut q = 1.0;
                for idx in &tops {
                    let v = f.partial(idx, x)?;
                    q += v * v;
                }
                best = best.max(q);
            }
            Ok(best.sqrt())
        }
    }
}

/// All points of the uniform grid with `per_axis` points per axis on `[0,1]^n`.
pub fn cube_grid(n: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let h = 1.0 / (per_axis.max(2) - 1) as f64;
    let total = per_axis.pow(n as u32);
    (0..total)
        .map(|mut flat| {
            (0..n)
                .map(|_| {
                    let c = flat % per_axis;
                    flat /= per_axis;
                    c as f64 * h
                })
                .collect()
        })
        .collect()
}

/// Grid points on the faces of `[0,1]^n`, `per_axis` points along each free axis.
pub fn cube_boundary_grid(n: usize, per_axis: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    if n == 1 {
        return vec![vec![0.0], vec![1.0]];
    }
    let face = cube_grid(n - 1, per_axis);
    for axis in 0..n {
        for side in [0.0, 1.0] {
            for p in &face {
                let mut x = Vec::with_capacity(n);
                x.extend_from_slice(&p[..axis]);
                x.push(side);
                x.extend_from_slice(&p[axis..]);
                out.push(x);
            }
        }
    }
    out
}

/// `max |d_I (f0 - f1)|` over `|I| <= k` and a boundary grid of `Q^n`.
pub fn boundary_max_deviation(f0: &ScalarField, f1: &ScalarField, k: usize, per_axis: usize) -> Result<f64> {
    if f0.n() != f1.n() {
        return Err(JetError::DimensionMismatch { expected: f0.n(), got: f1.n() });
    }
    f0.require_order(k)?;
    f1.require_order(k)?;
    let n = f0.n();
    let indices: Vec<MultiIndex> = (0..=k).flat_map(|j| enumerate_indices(n, j)).collect();
    let mut worst: f64 = 0.0;
    for x in cube_boundary_grid(n, per_axis) {
        for idx in &indices {
            worst = worst.max((f0.partial(idx, &x)? - f1.partial(idx, &x)?).abs());
        }
    }
    Ok(worst)
}

/// Whether all partials of order `<= k` agree on a sampled boundary of `Q^n`.
pub fn boundary_compatible(f0: &ScalarField, f1: &ScalarField, k: usize, tol: f64) -> Result<bool> {
    Ok(boundary_max_deviation(f0, f1, k, default_boundary_resolution(f0.n()))? <= tol)
}

pub(crate) fn default_boundary_resolution(n: usize) -> usize {
    match n {
        1 => 2,
        2 => 65,
        3 => 17,
        _ => 5,
    }
}

/// `int_{Q^n} f` with an error estimate. Exact for polynomials; otherwise
/// composite Gauss-Legendre at two resolutions, the difference serving as
/// the estimate.
pub fn integrate_cube(f: &ScalarField) -> Result<(f64, f64)> {
    if let Some(p) = f.as_polynomial() {
        return Ok((p.integrate_unit_cube(), 0.0));
    }
    let coarse = composite_gauss(f, 2)?;
    let fine = composite_gauss(f, 4)?;
    Ok((fine, (fine - coarse).abs()))
}

fn composite_gauss(f: &ScalarField, cells: usize) -> Result<f64> {
    let n = f.n();
    let (nodes, weights) = gauss_legendre_unit(6);
    let h = 1.0 / cells as f64;
    let pts: Vec<(f64, f64)> =
        (0..cells).flat_map(|c| nodes.iter().zip(&weights).map(move |(x, w)| ((c as f64 + x) * h, w * h))).collect();
    let m = pts.len();
    let mut acc = 0.0;
    let mut x = vec![0.0; n];
    for flat in 0..m.pow(n as u32) {
        let mut rest = flat;
        let mut w = 1.0;
        for xi in x.iter_mut() {
            let (p, pw) = pts[rest % m];
            rest /= m;
            *xi = p;
            w *= pw;
        }
        acc += w * f.value(&x)?;
    }
    Ok(acc)
}

/// The reference pair `f0 = 0`, `f1 = prod_i (x_i (1 - x_i))^{k+1}`.
pub fn canonical_pair(n: usize, k: usize) -> Result<(ScalarField, ScalarField)> {
    if n == 0 {
        return Err(JetError::InvalidArgument("canonical pair needs n >= 1".into()));
    }
    let mut f1 = Polynomial::constant(n, 1.0);
    for axis in 0..n {
        let x = Polynomial::variable(n, axis)?;
        let bump = x.sub(&x.mul(&x));
        f1 = f1.mul(&bump.pow((k + 1) as u32));
    }
    Ok((ScalarField::zero(n), f1.into()))
}

/// `int_{Q^n} f1` for the reference pair: `(((k+1)!)^2 / (2k+3)!)^n`.
pub fn canonical_integral(n: usize, k: usize) -> f64 {
    // B(k+2, k+2) as a running product to stay within f64 range
    let mut beta = 1.0;
    for m in 1..=(k + 1) {
        beta *= m as f64 / (k + 1 + m) as f64;
    }
    beta /= (2 * k + 3) as f64;
    beta.powi(n as i32)
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn mono(idx: &[u32]) -> ScalarField {
        Polynomial::monomial(mi(idx), 1.0).into()
    }

    fn sin_field() -> ScalarField {
        ScalarField::from_derivatives(1, 8, |i, x| match i.degree() % 4 {
            0 => x[0].sin(),
            1 => x[0].cos(),
            2 => -x[0].sin(),
            _ => -x[0].cos(),
        })
    }

    #[test]
    fn partial_examples() {
        assert_eq!(mono(&[2]).partial(&mi(&[1]), &[3.0]).unwrap(), 6.0);
        assert_eq!(mono(&[1, 2]).partial(&mi(&[1, 2]), &[0.4, 0.9]).unwrap(), 2.0);
        let (_, f1) = canonical_pair(1, 1).unwrap();
        assert_eq!(f1.partial(&mi(&[1]), &[0.0]).unwrap(), 0.0);
        assert_eq!(f1.partial(&mi(&[1]), &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn order_limits_are_enforced() {
        let f = sin_field();
        assert!(matches!(f.partial(&mi(&[9]), &[0.0]), Err(JetError::OrderUnavailable { requested: 9, available: 8 })));
    }

    #[test]
    fn taylor_examples() {
        let t = taylor(&mono(&[3]), &[0.0], 2).unwrap();
        assert!(t.as_polynomial().unwrap().is_zero());
        let t = taylor(&mono(&[2]), &[1.0], 2).unwrap();
        for x in [-1.0, 0.5, 3.0] {
            let want: f64 = 1.0 + 2.0 * (x - 1.0) + (x - 1.0) * (x - 1.0);
            assert!((t.value(&[x]).unwrap() - want).abs() < 1e-12);
        }
        let t = taylor(&sin_field(), &[0.0], 3).unwrap();
        let p = t.as_polynomial().unwrap();
        let coeff = |e: u32| p.terms().find(|(i, _)| i.entries()[0] == e).map(|(_, c)| c).unwrap_or(0.0);
        assert!((coeff(1) - 1.0).abs() < 1e-9);
        assert!((coeff(3) + 1.0 / 6.0).abs() < 1e-9);
        assert!(coeff(0).abs() < 1e-9 && coeff(2).abs() < 1e-9);
    }

    #[test]
    fn prolong_examples() {
        let p = prolong(&mono(&[2]), 1, &[1.0]).unwrap();
        assert_eq!(p.coords(), &[1.0, 2.0, 1.0]);
        let p = prolong(&mono(&[3]), 2, &[1.0]).unwrap();
        assert_eq!(p.coords(), &[1.0, 6.0, 3.0, 1.0]);
        let z = prolong(&ScalarField::zero(2), 2, &[0.3, 0.4]).unwrap();
        assert!(z.coords()[2..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn curve_derivative_example() {
        let v = segment_curve_derivative(&mono(&[2]), 1, &[0.0], &[1.0], 0.37).unwrap();
        assert_eq!(v.a(), &[1.0]);
        assert_eq!(v.b(1), &[2.0]);
        assert_eq!(v.b(0), &[0.0]);
        assert!((v.g0_norm() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn lip_bound_examples() {
        let z = jet_lip_bound(&ScalarField::zero(2), 1, &[0.0, 0.0], &[3.0, 4.0], 8).unwrap();
        assert!((z - 5.0).abs() < 1e-15);
        let b = jet_lip_bound(&mono(&[2]), 1, &[-0.5], &[1.5], 4).unwrap();
        assert!((b - 2.0 * 5f64.sqrt()).abs() < 1e-12);
        assert!(jet_lip_bound(&mono(&[2]), 1, &[0.0], &[1.0], 1).is_err());
    }

    #[test]
    fn compatibility_examples() {
        let (f0, f1) = canonical_pair(1, 1).unwrap();
        assert!(boundary_compatible(&f0, &f1, 1, 1e-12).unwrap());
        assert!(boundary_compatible(&f1, &f1, 1, 0.0).unwrap());
        let x = Polynomial::variable(1, 0).unwrap();
        let bad: ScalarField = x.sub(&x.mul(&x)).into();
        assert!(!boundary_compatible(&f0, &bad, 1, 1e-12).unwrap());
        let (g0, g1) = canonical_pair(2, 2).unwrap();
        assert!(boundary_compatible(&g0, &g1, 2, 1e-12).unwrap());
    }

    #[test]
    fn canonical_integrals() {
        assert!((canonical_integral(1, 1) - 1.0 / 30.0).abs() < 1e-16);
        for n in 1..=3 {
            for k in 1..=3 {
                let (_, f1) = canonical_pair(n, k).unwrap();
                let exact = f1.as_polynomial().unwrap().integrate_unit_cube();
                // expanded coefficients cancel heavily, so compare absolutely
                assert!((exact - canonical_integral(n, k)).abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn finite_difference_field() {
        let f = ScalarField::from_values(2, 3, |x| x[0].sin() * x[1].exp());
        let x = [0.3, -0.2];
        let d = f.partial(&mi(&[1, 1]), &x).unwrap();
        assert!((d - 0.3f64.cos() * (-0.2f64).exp()).abs() < 1e-6);
        let d = f.partial(&mi(&[2, 1]), &x).unwrap();
        assert!((d + 0.3f64.sin() * (-0.2f64).exp()).abs() < 1e-4);
        let (v, err) = integrate_cube(&f).unwrap();
        let want = (1.0 - 1f64.cos()) * (1f64.exp() - 1.0);
        assert!((v - want).abs() < 1e-12 && err < 1e-10);
    }

    #[test]
    fn cube_factor_is_an_upper_bound() {
        let (_, f1) = canonical_pair(1, 1).unwrap();
        let lam = lip_factor_on_cube(&f1, 1, 4097).unwrap();
        assert!(lam >= 5f64.sqrt());
        assert!(lam < 5f64.sqrt() + 5e-3);
    }
}
