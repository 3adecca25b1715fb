//! Fixed-step RK4 for `y' = sum_c w_c V_c(y)` with the frame fields `V_c`,
//! plus the reverse-mode sweep used by the optimizer.
//!
//! With constant controls the system is linear with a nilpotent matrix of
//! index `k + 2`, so one RK4 step is exact whenever `k <= 3`.

use crate::error::{JetError, Result};
use crate::jet::{frame_to_coords_into, JetPoint, JetShape};

use super::signals::Signal;

/// RK4 substeps per control step.
pub(crate) fn substeps(k: usize) -> usize {
    if k <= 3 {
        1
    } else {
        k
    }
}

#[inline]
fn axpy(out: &mut [f64], y: &[f64], a: f64, x: &[f64]) {
    for ((o, yi), xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + a * xi;
    }
}

pub(crate) struct Stages {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    y2: Vec<f64>,
    y3: Vec<f64>,
    y4: Vec<f64>,
}

impl Stages {
    pub(crate) fn new(d: usize) -> Self {
        Stages {
            k1: vec![0.0; d],
            k2: vec![0.0; d],
            k3: vec![0.0; d],
            k4: vec![0.0; d],
            y2: vec![0.0; d],
            y3: vec![0.0; d],
            y4: vec![0.0; d],
        }
    }

    fn fill(&mut self, shape: &JetShape, y: &[f64], w: &[f64], h: f64) {
        frame_to_coords_into(shape, y, w, &mut self.k1);
        axpy(&mut self.y2, y, 0.5 * h, &self.k1);
        frame_to_coords_into(shape, &self.y2, w, &mut self.k2);
        axpy(&mut self.y3, y, 0.5 * h, &self.k2);
        frame_to_coords_into(shape, &self.y3, w, &mut self.k3);
        axpy(&mut self.y4, y, h, &self.k3);
        frame_to_coords_into(shape, &self.y4, w, &mut self.k4);
    }
}

/// One RK4 step in place; `w` is a full-width frame vector.
pub(crate) fn rk4_step(shape: &JetShape, y: &mut [f64], w: &[f64], h: f64, st: &mut Stages) {
    st.fill(shape, y, w, h);
    for (i, yi) in y.iter_mut().enumerate() {
        *yi += h / 6.0 * (st.k1[i] + 2.0 * st.k2[i] + 2.0 * st.k3[i] + st.k4[i]);
    }
}

/// Cotangent pull-back through `f(y, w) = frame_to_coords(y, w)`.
#[inline]
fn vjp(shape: &JetShape, y: &[f64], w: &[f64], mu: &[f64], gy: &mut [f64], gw: &mut [f64]) {
    for (g, m) in gw.iter_mut().zip(mu) {
        *g += m;
    }
    for c in shape.couplings() {
        let m = mu[c.target];
        gy[c.source] += m * w[c.axis];
        gw[c.axis] += m * y[c.source];
    }
}

/// Reverse of [`rk4_step`] started at `y`: maps the cotangent `lam` of the
/// step output to that of its input and accumulates the control gradient.
#[allow(clippy::too_many_arguments)]
pub(crate) fn rk4_step_reverse(
    shape: &JetShape,
    y: &[f64],
    w: &[f64],
    h: f64,
    lam: &mut [f64],
    gw: &mut [f64],
    st: &mut Stages,
    scratch: &mut [Vec<f64>; 5],
) {
    st.fill(shape, y, w, h);
    let d = y.len();
    let [k1b, k2b, k3b, k4b, yb] = scratch;
    for i in 0..d {
        k1b[i] = h / 6.0 * lam[i];
        k2b[i] = h / 3.0 * lam[i];
        k3b[i] = h / 3.0 * lam[i];
        k4b[i] = h / 6.0 * lam[i];
    }
    // lam accumulates the input cotangent
    yb.iter_mut().for_each(|v| *v = 0.0);
    vjp(shape, &st.y4, w, k4b, yb, gw);
    for i in 0..d {
        lam[i] += yb[i];
        k3b[i] += h * yb[i];
    }
    yb.iter_mut().for_each(|v| *v = 0.0);
    vjp(shape, &st.y3, w, k3b, yb, gw);
    for i in 0..d {
        lam[i] += yb[i];
        k2b[i] += 0.5 * h * yb[i];
    }
    yb.iter_mut().for_each(|v| *v = 0.0);
    vjp(shape, &st.y2, w, k2b, yb, gw);
    for i in 0..d {
        lam[i] += yb[i];
        k1b[i] += 0.5 * h * yb[i];
    }
    vjp(shape, y, w, k1b, lam, gw);
}

/// The discrete trajectory driven by `signal` from `p0`: one point per control
/// step boundary, endpoint last.
pub fn integrate<S: Signal + ?Sized>(p0: &JetPoint, signal: &S) -> Result<Vec<JetPoint>> {
    let shape = signal.shape();
    if **shape != **p0.shape() {
        return Err(JetError::ShapeMismatch { n1: p0.n(), k1: p0.k(), n2: shape.n(), k2: shape.k() });
    }
    let d = shape.total_dim();
    let sub = substeps(shape.k());
    let h = signal.dt() / sub as f64;
    let mut y = p0.coords().to_vec();
    let mut w = vec![0.0; d];
    let mut st = Stages::new(d);
    let mut out = Vec::with_capacity(signal.steps() + 1);
    out.push(p0.clone());
    for m in 0..signal.steps() {
        w[..signal.width()].copy_from_slice(signal.step(m));
        for _ in 0..sub {
            rk4_step(shape, &mut y, &w, h, &mut st);
        }
        out.push(JetPoint::new(shape.clone(), y.clone())?);
    }
    Ok(out)
}

/// Endpoint of [`integrate`].
pub fn endpoint<S: Signal + ?Sized>(p0: &JetPoint, signal: &S) -> Result<JetPoint> {
    Ok(integrate(p0, signal)?.pop().expect("trajectory is never empty"))
}
