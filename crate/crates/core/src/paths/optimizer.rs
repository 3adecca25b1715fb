//! Direct transcription of the shortest-path problem: piecewise-constant
//! frame controls, energy objective, augmented-Lagrangian endpoint constraint,
//! L-BFGS inner solves and a minimum-norm Newton polish.
//!
//! Constraint components are divided by `s^{w_i}` (`s` the homogeneous size of
//! the gap, `w_i` the dilation weight) and the energy by `s^2`, so the whole
//! iteration commutes with dilations.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{JetError, Result};
use crate::jet::JetShape;

use super::integrate::{rk4_step, rk4_step_reverse, substeps, Stages};

/// Optimizer settings shared by the distance upper bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOpts {
    /// Control steps `M`.
    pub steps: usize,
    /// Multi-start count.
    pub starts: usize,
    pub seed: u64,
    /// Feasibility threshold on the scaled endpoint mismatch.
    pub endpoint_tol: f64,
    /// L-BFGS iteration budget per start.
    pub max_iters: usize,
}

impl Default for OptimizerOpts {
    fn default() -> Self {
        OptimizerOpts { steps: 64, starts: 8, seed: 0, endpoint_tol: 1e-9, max_iters: 4000 }
    }
}

impl OptimizerOpts {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.starts == 0 || self.max_iters == 0 {
            return Err(JetError::InvalidArgument("optimizer steps, starts and max_iters must be positive".into()));
        }
        if !(self.endpoint_tol > 0.0) {
            return Err(JetError::InvalidArgument("endpoint_tol must be positive".into()));
        }
        Ok(())
    }
}

/// `max_i |delta_i|^{1/w_i}` over the coordinate difference.
pub(crate) fn homogeneous_size(shape: &JetShape, a: &[f64], b: &[f64]) -> f64 {
    (0..shape.total_dim()).map(|i| (a[i] - b[i]).abs().powf(1.0 / shape.weight(i) as f64)).fold(0.0, f64::max)
}

/// One transcribed boundary-value problem.
pub(crate) struct Problem {
    pub shape: Arc<JetShape>,
    pub width: usize,
    pub steps: usize,
    sub: usize,
    dt: f64,
    pub start: Vec<f64>,
    pub target: Vec<f64>,
    inv_scale: Vec<f64>,
    energy_scale: f64,
}

struct Workspace {
    states: Vec<f64>,
    w: Vec<f64>,
    gw: Vec<f64>,
    lam: Vec<f64>,
    stages: Stages,
    scratch: [Vec<f64>; 5],
}

impl Problem {
    pub fn new(shape: Arc<JetShape>, width: usize, steps: usize, start: &[f64], target: &[f64], s: f64) -> Self {
        let inv_scale = (0..shape.total_dim()).map(|i| s.powi(-(shape.weight(i) as i32))).collect();
        Problem {
            sub: substeps(shape.k()),
            dt: 1.0 / steps as f64,
            width,
            steps,
            start: start.to_vec(),
            target: target.to_vec(),
            inv_scale,
            energy_scale: 1.0 / (s * s),
            shape,
        }
    }

    pub fn dim(&self) -> usize {
        self.width * self.steps
    }

    fn workspace(&self) -> Workspace {
        let d = self.shape.total_dim();
        Workspace {
            states: vec![0.0; (self.steps * self.sub + 1) * d],
            w: vec![0.0; d],
            gw: vec![0.0; d],
            lam: vec![0.0; d],
            stages: Stages::new(d),
            scratch: std::array::from_fn(|_| vec![0.0; d]),
        }
    }

    /// Runs the dynamics, storing every substep state. Returns the endpoint.
    fn forward(&self, x: &[f64], ws: &mut Workspace) -> Vec<f64> {
        let d = self.shape.total_dim();
        let h = self.dt / self.sub as f64;
        ws.states[..d].copy_from_slice(&self.start);
        let mut y = self.start.clone();
        let mut slot = 1;
        for m in 0..self.steps {
            ws.w[..self.width].copy_from_slice(&x[m * self.width..(m + 1) * self.width]);
            for _ in 0..self.sub {
                rk4_step(&self.shape, &mut y, &ws.w, h, &mut ws.stages);
                ws.states[slot * d..(slot + 1) * d].copy_from_slice(&y);
                slot += 1;
            }
        }
        y
    }

    /// Pulls `ws.lam` (endpoint cotangent) back through the trajectory and adds
    /// the control gradient into `grad`.
    fn reverse(&self, x: &[f64], ws: &mut Workspace, grad: &mut [f64]) {
        let d = self.shape.total_dim();
        let h = self.dt / self.sub as f64;
        for m in (0..self.steps).rev() {
            ws.w.iter_mut().for_each(|v| *v = 0.0);
            ws.w[..self.width].copy_from_slice(&x[m * self.width..(m + 1) * self.width]);
            ws.gw.iter_mut().for_each(|v| *v = 0.0);
            for s in (0..self.sub).rev() {
                let slot = m * self.sub + s;
                let y = &ws.states[slot * d..(slot + 1) * d];
                rk4_step_reverse(&self.shape, y, &ws.w, h, &mut ws.lam, &mut ws.gw, &mut ws.stages, &mut ws.scratch);
            }
            for (g, v) in grad[m * self.width..(m + 1) * self.width].iter_mut().zip(&ws.gw) {
                *g += v;
            }
        }
    }

    pub fn endpoint(&self, x: &[f64]) -> Vec<f64> {
        let mut ws = self.workspace();
        self.forward(x, &mut ws)
    }

    /// Scaled mismatch `(end_i - target_i) / s^{w_i}`.
    pub fn constraint(&self, x: &[f64]) -> Vec<f64> {
        let end = self.endpoint(x);
        self.scaled_gap(&end)
    }

    fn scaled_gap(&self, end: &[f64]) -> Vec<f64> {
        end.iter().zip(&self.target).zip(&self.inv_scale).map(|((e, t), s)| (e - t) * s).collect()
    }

    fn energy(&self, x: &[f64]) -> f64 {
        self.dt * self.energy_scale * x.iter().map(|v| v * v).sum::<f64>()
    }

    /// Augmented Lagrangian value and gradient.
    fn lagrangian(&self, x: &[f64], mult: &[f64], mu: f64, grad: &mut [f64], ws: &mut Workspace) -> f64 {
        let end = self.forward(x, ws);
        let c = self.scaled_gap(&end);
        let mut value = self.energy(x);
        for i in 0..c.len() {
            value += mult[i] * c[i] + 0.5 * mu * c[i] * c[i];
            ws.lam[i] = (mult[i] + mu * c[i]) * self.inv_scale[i];
        }
        let e = 2.0 * self.dt * self.energy_scale;
        for (g, v) in grad.iter_mut().zip(x) {
            *g = e * v;
        }
        self.reverse(x, ws, grad);
        value
    }

    /// Scaled constraint and its Jacobian, one reverse sweep per component.
    fn jacobian(&self, x: &[f64], ws: &mut Workspace) -> (Vec<f64>, DMatrix<f64>) {
        let d = self.shape.total_dim();
        let end = self.forward(x, ws);
        let c = self.scaled_gap(&end);
        let mut jac = DMatrix::zeros(d, self.dim());
        let mut row = vec![0.0; self.dim()];
        for i in 0..d {
            ws.lam.iter_mut().for_each(|v| *v = 0.0);
            ws.lam[i] = self.inv_scale[i];
            row.iter_mut().for_each(|v| *v = 0.0);
            self.reverse(x, ws, &mut row);
            for (col, v) in row.iter().enumerate() {
                jac[(i, col)] = *v;
            }
        }
        (c, jac)
    }
}

/// Limited-memory BFGS with Armijo backtracking. Returns the final point and
/// the number of iterations used.
pub(crate) fn lbfgs<F>(mut f: F, x0: Vec<f64>, max_iter: usize, gtol: f64) -> (Vec<f64>, usize)
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    const MEMORY: usize = 12;
    let dim = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; dim];
    let mut fx = f(&x, &mut g);
    let mut s_hist: Vec<Vec<f64>> = Vec::with_capacity(MEMORY);
    let mut y_hist: Vec<Vec<f64>> = Vec::with_capacity(MEMORY);
    let mut rho_hist: Vec<f64> = Vec::with_capacity(MEMORY);
    let mut x_new = vec![0.0; dim];
    let mut g_new = vec![0.0; dim];
    let mut stalls = 0;
    for iter in 0..max_iter {
        let gnorm = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gnorm <= gtol || !fx.is_finite() {
            return (x, iter);
        }
        // two-loop recursion
        let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alpha = vec![0.0; s_hist.len()];
        for j in (0..s_hist.len()).rev() {
            alpha[j] = rho_hist[j] * dot(&s_hist[j], &dir);
            axpy_in(&mut dir, -alpha[j], &y_hist[j]);
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            let gamma = dot(s, y) / dot(y, y);
            dir.iter_mut().for_each(|v| *v *= gamma);
        }
        for j in 0..s_hist.len() {
            let beta = rho_hist[j] * dot(&y_hist[j], &dir);
            axpy_in(&mut dir, alpha[j] - beta, &s_hist[j]);
        }
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }
        let mut step = if s_hist.is_empty() { 1.0 / gnorm.max(1.0) } else { 1.0 };
        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..dim {
                x_new[i] = x[i] + step * dir[i];
            }
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                let s: Vec<f64> = (0..dim).map(|i| x_new[i] - x[i]).collect();
                let y: Vec<f64> = (0..dim).map(|i| g_new[i] - g[i]).collect();
                let sy = dot(&s, &y);
                if sy > 1e-300 {
                    if s_hist.len() == MEMORY {
                        s_hist.remove(0);
                        y_hist.remove(0);
                        rho_hist.remove(0);
                    }
                    s_hist.push(s);
                    y_hist.push(y);
                    rho_hist.push(1.0 / sy);
                }
                let decrease = fx - f_new;
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut g, &mut g_new);
                fx = f_new;
                stalls = if decrease <= 1e-16 * fx.abs().max(1e-300) { stalls + 1 } else { 0 };
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || stalls >= 5 {
            return (x, iter + 1);
        }
    }
    (x, max_iter)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn axpy_in(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Result of one local solve.
pub(crate) struct Solved {
    pub controls: Vec<f64>,
    /// `max |c_i|` in scaled units.
    pub mismatch: f64,
}

/// Augmented-Lagrangian solve from `x0`, then Newton polish on the constraint.
pub(crate) fn solve(problem: &Problem, x0: Vec<f64>, budget: usize) -> Solved {
    let d = problem.shape.total_dim();
    let mut ws = problem.workspace();
    let mut mult = vec![0.0; d];
    let mut mu = 10.0;
    let mut x = x0;
    let mut used = 0;
    let mut prev = f64::INFINITY;
    while used < budget {
        let chunk = (budget - used).min(400);
        let (nx, it) = lbfgs(|p, g| problem.lagrangian(p, &mult, mu, g, &mut ws), x, chunk, 1e-9);
        x = nx;
        used += it.max(1);
        let c = problem.constraint(&x);
        let viol = c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if viol < 1e-9 {
            break;
        }
        for (m, ci) in mult.iter_mut().zip(&c) {
            *m += mu * ci;
        }
        if viol > 0.25 * prev {
            mu = (mu * 10.0).min(1e9);
        }
        prev = viol;
    }
    let mismatch = newton_polish(problem, &mut x, &mut ws);
    Solved { controls: x, mismatch }
}

/// Minimum-norm Newton corrections `x <- x - J^T (J J^T)^{-1} c`.
fn newton_polish(problem: &Problem, x: &mut Vec<f64>, ws: &mut Workspace) -> f64 {
    let mut best = problem.constraint(x).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for _ in 0..8 {
        if best < 1e-14 {
            break;
        }
        let (c, jac) = problem.jacobian(x, ws);
        let jjt = &jac * jac.transpose();
        let rhs = DVector::from_vec(c);
        let Some(y) = jjt.clone().cholesky().map(|ch| ch.solve(&rhs)).or_else(|| jjt.lu().solve(&rhs)) else {
            break;
        };
        let dx = jac.transpose() * y;
        let trial: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, b)| a - b).collect();
        let viol = problem.constraint(&trial).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(viol < best) {
            break;
        }
        *x = trial;
        best = viol;
    }
    best
}

/// Deterministic start generator: Fourier perturbations of a base control.
pub(crate) fn perturbed_starts(
    base: &[f64],
    width: usize,
    steps: usize,
    amplitude: f64,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut x = base.to_vec();
            for comp in 0..width {
                for freq in 1..=3usize {
                    let a: f64 = StandardNormal.sample(&mut rng);
                    let b: f64 = StandardNormal.sample(&mut rng);
                    for m in 0..steps {
                        let t = (m as f64 + 0.5) / steps as f64;
                        let arg = 2.0 * std::f64::consts::PI * freq as f64 * t;
                        x[m * width + comp] += amplitude * (a * arg.cos() + b * arg.sin()) / freq as f64;
                    }
                }
            }
            x
        })
        .collect()
}
