//! Upper bounds on `d_c` and `d_0`, and the coordinate lower bound.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{JetError, Result};
use crate::jet::{coords_to_frame, JetPoint, JetShape};
use crate::multiindex::{enumerate_indices, MultiIndex};
use crate::poly::Polynomial;

use super::optimizer::{homogeneous_size, perturbed_starts, solve, OptimizerOpts, Problem};

/// `|(x, u^k)(p) - (x, u^k)(q)|`. The projection sends the `g_0` frame onto an
/// orthonormal set, so this never exceeds `d_0(p, q)`.
pub fn coordinate_lower_bound(p: &JetPoint, q: &JetPoint) -> Result<f64> {
    p.same_shape(q)?;
    let h = p.shape().horizontal_dim();
    Ok(p.coords()[..h].iter().zip(&q.coords()[..h]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// An upper bound together with how it was obtained.
#[derive(Clone, Debug, Serialize)]
pub struct DistanceEstimate {
    /// The certified upper bound: optimized length plus correction.
    pub value: f64,
    /// Length of the best transcribed curve.
    pub optimized_length: f64,
    /// Bound on the connecting piece from that curve's endpoint to the target.
    pub correction: f64,
    /// Scaled endpoint mismatch of the best curve before correction.
    pub mismatch: f64,
    /// Frame controls of the best curve, `steps` rows.
    #[serde(skip)]
    pub controls: Vec<f64>,
}

impl DistanceEstimate {
    fn zero() -> Self {
        DistanceEstimate { value: 0.0, optimized_length: 0.0, correction: 0.0, mismatch: 0.0, controls: Vec::new() }
    }

    fn direct(value: f64) -> Self {
        DistanceEstimate { value, optimized_length: 0.0, correction: value, mismatch: 0.0, controls: Vec::new() }
    }
}

fn control_length(controls: &[f64], width: usize, steps: usize) -> f64 {
    let dt = 1.0 / steps as f64;
    controls.chunks(width).map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt() * dt).sum()
}

/// Upper bound on `d_c(p, q)` from a horizontal curve, see [`cc_upper_bound_detailed`].
pub fn cc_upper_bound(p: &JetPoint, q: &JetPoint, opts: &OptimizerOpts) -> Result<f64> {
    Ok(cc_upper_bound_detailed(p, q, opts)?.value)
}

/// Minimizes the length of horizontal curves from `p` to `q` over
/// piecewise-constant controls, then closes the remaining endpoint gap with a
/// prolongation-based connecting curve whose length is bounded in closed form.
/// The returned value is the length of an actual horizontal curve from `p` to `q`.
pub fn cc_upper_bound_detailed(p: &JetPoint, q: &JetPoint, opts: &OptimizerOpts) -> Result<DistanceEstimate> {
    opts.validate()?;
    p.same_shape(q)?;
    let shape = p.shape().clone();
    let s = homogeneous_size(&shape, p.coords(), q.coords());
    if s == 0.0 {
        return Ok(DistanceEstimate::zero());
    }
    let width = shape.horizontal_dim();
    let steps = opts.steps;
    let problem = Problem::new(shape.clone(), width, steps, p.coords(), q.coords(), s);

    let straight: Vec<f64> = (0..width).map(|i| q.coords()[i] - p.coords()[i]).collect();
    let straight = straight.repeat(steps);
    let mut starts = vec![straight.clone()];
    if starts.len() < opts.starts {
        if let Some(b) = blend_controls(p, q, steps)? {
            starts.push(b);
        }
    }
    let extra = opts.starts.saturating_sub(starts.len());
    starts.extend(perturbed_starts(&straight, width, steps, s, extra, opts.seed));

    let mut best: Option<DistanceEstimate> = None;
    let mut best_mismatch = f64::INFINITY;
    for x0 in starts {
        let solved = solve(&problem, x0, opts.max_iters);
        best_mismatch = best_mismatch.min(solved.mismatch);
        if !(solved.mismatch <= opts.endpoint_tol) {
            continue;
        }
        let end = JetPoint::new(shape.clone(), problem.endpoint(&solved.controls))?;
        let correction = blend_upper_bound(&end, q)?;
        let length = control_length(&solved.controls, width, steps);
        let value = length + correction;
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(DistanceEstimate {
                value,
                optimized_length: length,
                correction,
                mismatch: solved.mismatch,
                controls: solved.controls,
            });
        }
    }
    let mut best = best.ok_or(JetError::InfeasibleAtBudget { best_mismatch })?;
    let direct = blend_upper_bound(p, q)?;
    if direct < best.value {
        best = DistanceEstimate::direct(direct);
    }
    Ok(best)
}

/// Upper bound on `d_0(p, q)`, see [`r0_upper_bound_detailed`].
pub fn r0_upper_bound(p: &JetPoint, q: &JetPoint, opts: &OptimizerOpts) -> Result<f64> {
    Ok(r0_upper_bound_detailed(p, q, opts)?.value)
}

/// Like [`cc_upper_bound_detailed`] but over curves in every frame direction.
/// Horizontal curves are admissible, so the best horizontal curve seeds the
/// search; the straight coordinate segment is always a candidate.
pub fn r0_upper_bound_detailed(p: &JetPoint, q: &JetPoint, opts: &OptimizerOpts) -> Result<DistanceEstimate> {
    opts.validate()?;
    p.same_shape(q)?;
    let horizontal = cc_upper_bound_detailed(p, q, opts).ok();
    r0_from_horizontal(p, q, opts, horizontal.as_ref())
}

/// Both upper bounds at once; the `d_0` search reuses the horizontal solution,
/// so `r0 <= cc` holds by construction.
pub fn metric_bounds(p: &JetPoint, q: &JetPoint, opts: &OptimizerOpts) -> Result<(DistanceEstimate, DistanceEstimate)> {
    let cc = cc_upper_bound_detailed(p, q, opts)?;
    let r0 = r0_from_horizontal(p, q, opts, Some(&cc))?;
    Ok((cc, r0))
}

fn r0_from_horizontal(
    p: &JetPoint,
    q: &JetPoint,
    opts: &OptimizerOpts,
    horizontal: Option<&DistanceEstimate>,
) -> Result<DistanceEstimate> {
    let shape = p.shape().clone();
    let s = homogeneous_size(&shape, p.coords(), q.coords());
    if s == 0.0 {
        return Ok(DistanceEstimate::zero());
    }
    let d = shape.total_dim();
    let hw = shape.horizontal_dim();
    let steps = opts.steps;
    let mut best = DistanceEstimate::direct(straight_r0_bound(p, q)?);
    let mut starts = Vec::new();

    if let Some(h) = horizontal {
        if h.value < best.value {
            best = h.clone();
            best.controls = Vec::new();
        }
        if !h.controls.is_empty() {
            let problem = Problem::new(shape.clone(), hw, steps, p.coords(), q.coords(), s);
            let end = JetPoint::new(shape.clone(), problem.endpoint(&h.controls))?;
            let correction = straight_r0_bound(&end, q)?;
            let value = h.optimized_length + correction;
            let mut padded = vec![0.0; steps * d];
            for m in 0..steps {
                padded[m * d..m * d + hw].copy_from_slice(&h.controls[m * hw..(m + 1) * hw]);
            }
            if value < best.value {
                best = DistanceEstimate {
                    value,
                    optimized_length: h.optimized_length,
                    correction,
                    mismatch: h.mismatch,
                    controls: padded.clone(),
                };
            }
            starts.push(padded);
        }
    }
    let delta: Vec<f64> = q.coords().iter().zip(p.coords()).map(|(a, b)| a - b).collect();
    let mut line = Vec::with_capacity(steps * d);
    for m in 0..steps {
        let t = (m as f64 + 0.5) / steps as f64;
        let c: Vec<f64> = p.coords().iter().zip(&delta).map(|(a, dl)| a + t * dl).collect();
        let at = JetPoint::new(shape.clone(), c)?;
        line.extend_from_slice(coords_to_frame(&at, &delta)?.frame());
    }
    starts.push(line);

    let problem = Problem::new(shape.clone(), d, steps, p.coords(), q.coords(), s);
    for x0 in starts {
        let solved = solve(&problem, x0, opts.max_iters);
        if !(solved.mismatch <= opts.endpoint_tol) {
            continue;
        }
        let end = JetPoint::new(shape.clone(), problem.endpoint(&solved.controls))?;
        let correction = straight_r0_bound(&end, q)?;
        let length = control_length(&solved.controls, d, steps);
        if length + correction < best.value {
            best = DistanceEstimate {
                value: length + correction,
                optimized_length: length,
                correction,
                mismatch: solved.mismatch,
                controls: solved.controls,
            };
        }
    }
    Ok(best)
}

/// Length bound for the straight coordinate segment from `a` to `b`. Its frame
/// coefficients are affine along the segment, so the convex `g_0` norm peaks at
/// an endpoint.
pub fn straight_r0_bound(a: &JetPoint, b: &JetPoint) -> Result<f64> {
    a.same_shape(b)?;
    let delta: Vec<f64> = b.coords().iter().zip(a.coords()).map(|(p, q)| p - q).collect();
    let na = coords_to_frame(a, &delta)?.g0_norm();
    let nb = coords_to_frame(b, &delta)?.g0_norm();
    Ok(na.max(nb))
}

/// Taylor coefficients at `x_A` of `T_B - T_A`, where `T_A`, `T_B` are the
/// degree-`k` polynomials whose jets are `a` and `b`.
fn jet_difference(a: &JetPoint, b: &JetPoint) -> Result<Vec<(MultiIndex, f64)>> {
    let shape = a.shape();
    let n = shape.n();
    let k = shape.k();
    let shift: Vec<f64> = a.x().iter().zip(b.x()).map(|(p, q)| p - q).collect();
    let mut out = Vec::new();
    for j in 0..=k {
        for jdx in shape.indices(j) {
            let mut acc = 0.0;
            for i in j..=k {
                for idx in shape.indices(i) {
                    if let Some(rest) = idx.minus(jdx) {
                        let u = b.u(i, idx).expect("index from shape");
                        acc += u * rest.monomial(&shift) / rest.factorial()? as f64;
                    }
                }
            }
            let diff = acc - a.u(j, jdx).expect("index from shape");
            out.push((jdx.clone(), diff));
        }
    }
    debug_assert_eq!(out.len(), shape.total_dim() - n);
    Ok(out)
}

/// `beta(s) = s^{k+1} sum_{j<=k} C(k+j, j) (1-s)^j`: `beta(0) = 0`, `beta(1) = 1`,
/// derivatives of orders `1..=k` vanish at both ends.
fn smoothstep(k: usize) -> Polynomial {
    let s = Polynomial::variable(1, 0).expect("univariate");
    let one = Polynomial::constant(1, 1.0);
    let mut sum = Polynomial::zero(1);
    let mut binom = 1.0;
    for j in 0..=k {
        if j > 0 {
            binom = binom * (k + j) as f64 / j as f64;
        }
        sum = sum.add(&one.sub(&s).pow(j as u32).scale(binom));
    }
    s.pow((k + 1) as u32).mul(&sum)
}

/// Bound on the length of `t -> j^k(phi)(x_A + t eps v)` with
/// `phi = T_A + beta(<y - x_A, v> / eps) (T_B - T_A)`, computed in the scaled
/// variable `z = (y - x_A) / eps`. `phi` matches `T_A` to order `k` at `x_A` and
/// `T_B` to order `k` where `<z, v> = 1`, and the curve is horizontal with squared
/// speed `eps^2 + sum_I (eps^{-k} d_z^I D_v phi)^2`. Cauchy-Schwarz turns the
/// exact integral of that polynomial into a length bound.
fn blend_leg_bound(shape: &JetShape, diff: &[(MultiIndex, f64)], eps: f64, v: &[f64]) -> Result<f64> {
    let n = shape.n();
    let k = shape.k();
    let mut p = Polynomial::zero(n);
    for (idx, c) in diff {
        if *c != 0.0 {
            let coeff = c * eps.powi(idx.degree() as i32) / idx.factorial()? as f64;
            p = p.add(&Polynomial::monomial(idx.clone(), coeff));
        }
    }
    let mut sigma = Polynomial::zero(n);
    for (axis, &vi) in v.iter().enumerate() {
        sigma = sigma.add(&Polynomial::variable(n, axis)?.scale(vi));
    }
    let phi = smoothstep(k).compose_univariate(&sigma).mul(&p);
    let mut dir = Polynomial::zero(n);
    for (axis, &vi) in v.iter().enumerate() {
        if vi != 0.0 {
            dir = dir.add(&phi.partial(&MultiIndex::unit(n, axis)?).scale(vi));
        }
    }
    let origin = vec![0.0; n];
    let scale = eps.powi(-(k as i32));
    let mut integral = eps * eps;
    for idx in enumerate_indices(n, k) {
        let g = dir.partial(&idx).restrict_to_segment(&origin, v);
        integral += scale * scale * g.mul(&g).integrate_unit();
    }
    Ok(integral.max(0.0).sqrt())
}

/// Length of an explicit horizontal curve from `a` to `b`: a prolongation
/// blend from `x_A` to `x_A + eps v`, then the prolongation of `T_B` (degree
/// `k`, so unit speed factor) on to `x_B`. Minimized over a ladder of `eps`
/// and two directions; the one-leg case `eps v = x_B - x_A` is included.
pub fn blend_upper_bound(a: &JetPoint, b: &JetPoint) -> Result<f64> {
    a.same_shape(b)?;
    let shape = a.shape();
    let n = shape.n();
    let k = shape.k();
    let diff = jet_difference(a, b)?;
    let d: Vec<f64> = b.x().iter().zip(a.x()).map(|(p, q)| p - q).collect();
    let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    let size = diff.iter().map(|(idx, c)| c.abs().powf(1.0 / (k + 1 - idx.degree()) as f64)).fold(0.0, f64::max);
    if size == 0.0 {
        return Ok(dn);
    }
    let mut best = f64::INFINITY;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    if dn > 0.0 {
        let unit: Vec<f64> = d.iter().map(|v| v / dn).collect();
        best = best.min(blend_leg_bound(shape, &diff, dn, &unit)?);
        dirs.push(unit);
    }
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    dirs.push(e1);
    for v in &dirs {
        for i in -16..=12 {
            let eps = size * 2f64.powf(i as f64 / 2.0);
            let leg1 = blend_leg_bound(shape, &diff, eps, v)?;
            let rest: f64 = d.iter().zip(v).map(|(di, vi)| (di - eps * vi).powi(2)).sum::<f64>().sqrt();
            let total = leg1 + rest;
            if total.is_finite() {
                best = best.min(total);
            }
        }
    }
    Ok(best)
}

/// Piecewise-constant controls sampled from the one-leg blend curve `p -> q`.
fn blend_controls(p: &JetPoint, q: &JetPoint, steps: usize) -> Result<Option<Vec<f64>>> {
    let shape: &Arc<JetShape> = p.shape();
    let n = shape.n();
    let k = shape.k();
    let d: Vec<f64> = q.x().iter().zip(p.x()).map(|(a, b)| a - b).collect();
    let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dn == 0.0 {
        return Ok(None);
    }
    let v: Vec<f64> = d.iter().map(|x| x / dn).collect();
    let diff = jet_difference(p, q)?;
    let mut poly = Polynomial::zero(n);
    for (idx, c) in &diff {
        if *c != 0.0 {
            let coeff = c * dn.powi(idx.degree() as i32) / idx.factorial()? as f64;
            poly = poly.add(&Polynomial::monomial(idx.clone(), coeff));
        }
    }
    let mut sigma = Polynomial::zero(n);
    for (axis, &vi) in v.iter().enumerate() {
        sigma = sigma.add(&Polynomial::variable(n, axis)?.scale(vi));
    }
    let phi = smoothstep(k).compose_univariate(&sigma).mul(&poly);
    let mut dir = Polynomial::zero(n);
    for (axis, &vi) in v.iter().enumerate() {
        dir = dir.add(&phi.partial(&MultiIndex::unit(n, axis)?).scale(vi));
    }
    let scale = dn.powi(-(k as i32));
    let tops: Vec<Polynomial> = shape.indices(k).iter().map(|i| dir.partial(i).scale(scale)).collect();
    let mut out = Vec::with_capacity(steps * shape.horizontal_dim());
    for m in 0..steps {
        let t = (m as f64 + 0.5) / steps as f64;
        let z: Vec<f64> = v.iter().map(|vi| vi * t).collect();
        out.extend_from_slice(&d);
        out.extend(tops.iter().map(|g| g.eval(&z)));
    }
    if out.iter().all(|v| v.is_finite()) {
        Ok(Some(out))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heisenberg::HeisenbergElement;
    use crate::jet::{dilate, JetShape};
    use crate::jetmaps::{jet_lip_bound, prolong};
    use crate::paths::integrate::endpoint;
    use crate::paths::signals::ControlSignal;

    fn h(x: f64, y: f64, z: f64) -> JetPoint {
        HeisenbergElement { x: vec![x], y: vec![y], z }.to_jet().unwrap()
    }

    #[test]
    fn smoothstep_is_flat() {
        for k in 1..=4 {
            let b = smoothstep(k);
            let mut d = b.clone();
            assert!((b.eval(&[1.0]) - 1.0).abs() < 1e-14);
            assert!(b.eval(&[0.0]).abs() < 1e-14);
            for _ in 1..=k {
                d = d.partial(&MultiIndex::new(vec![1]));
                assert!(d.eval(&[0.0]).abs() < 1e-12 && d.eval(&[1.0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn blend_bound_is_a_real_curve_bound() {
        // the one-leg bound dominates the coordinate lower bound and vanishes on equal jets
        let p = h(0.0, 0.0, 0.0);
        let q = h(1.0, 0.5, 0.2);
        let b = blend_upper_bound(&p, &q).unwrap();
        assert!(b >= coordinate_lower_bound(&p, &q).unwrap());
        assert_eq!(blend_upper_bound(&q, &q).unwrap(), 0.0);
        // prolonged endpoints of a polynomial of degree k: exact |dx|
        let f: crate::jetmaps::ScalarField = Polynomial::monomial(MultiIndex::new(vec![1]), 3.0).into();
        let a = prolong(&f, 1, &[0.0]).unwrap();
        let c = prolong(&f, 1, &[2.0]).unwrap();
        assert!((blend_upper_bound(&a, &c).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pure_vertical_gap_scales_like_a_square_root() {
        let p = h(0.0, 0.0, 0.0);
        let b1 = blend_upper_bound(&p, &h(0.0, 0.0, 1e-8)).unwrap();
        let b2 = blend_upper_bound(&p, &h(0.0, 0.0, 4e-8)).unwrap();
        assert!(b1 < 1e-3);
        assert!((b2 / b1 - 2.0).abs() < 0.1);
    }

    #[test]
    fn straight_horizontal_pairs() {
        let opts = OptimizerOpts::default();
        let p = h(0.2, 0.0, 0.0);
        let q = h(1.7, 0.0, 0.0);
        let cc = cc_upper_bound(&p, &q, &opts).unwrap();
        assert!((cc - 1.5).abs() < 0.015);
        assert_eq!(cc_upper_bound(&p, &p, &opts).unwrap(), 0.0);
        assert_eq!(r0_upper_bound(&p, &p, &opts).unwrap(), 0.0);
    }

    #[test]
    fn sandwich_and_homogeneity_on_a_heisenberg_pair() {
        let opts = OptimizerOpts::default();
        let p = h(0.3, -0.4, 0.1);
        let q = h(-0.2, 0.5, 0.8);
        let lower = coordinate_lower_bound(&p, &q).unwrap();
        let r0 = r0_upper_bound(&p, &q, &opts).unwrap();
        let cc = cc_upper_bound(&p, &q, &opts).unwrap();
        assert!(lower <= r0 + 1e-12);
        assert!(r0 <= cc + 1e-6);
        let cc2 = cc_upper_bound(&dilate(2.0, &p).unwrap(), &dilate(2.0, &q).unwrap(), &opts).unwrap();
        assert!((cc2 / cc - 2.0).abs() < 0.1);
    }

    #[test]
    fn higher_order_gap_is_reached() {
        let opts = OptimizerOpts::default();
        let shape = JetShape::new(1, 2).unwrap();
        let p = JetPoint::origin(shape.clone());
        let q = JetPoint::new(shape, vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let cc = cc_upper_bound(&p, &q, &opts).unwrap();
        assert!(cc.is_finite() && cc > 0.0);
        assert!(r0_upper_bound(&p, &q, &opts).unwrap() <= cc + 1e-6);
    }

    #[test]
    fn prolonged_segment_obeys_jet_bound() {
        let opts = OptimizerOpts::default();
        let f: crate::jetmaps::ScalarField = Polynomial::monomial(MultiIndex::new(vec![2]), 1.0).into();
        let a = prolong(&f, 1, &[0.0]).unwrap();
        let b = prolong(&f, 1, &[1.0]).unwrap();
        let bound = jet_lip_bound(&f, 1, &[0.0], &[1.0], 8).unwrap();
        let cc = cc_upper_bound(&a, &b, &opts).unwrap();
        assert!(cc <= bound + 1e-6);
        let sig = ControlSignal::constant(a.shape().clone(), 64, &[1.0], &[2.0]).unwrap();
        assert!(endpoint(&a, &sig).unwrap().max_abs_diff(&b) < 1e-12);
    }
}
