use std::sync::Arc;

use crate::error::{JetError, Result};
use crate::jet::JetShape;

/// Piecewise-constant frame coefficients over `[0, 1]`, split into `steps`
/// equal intervals.
pub trait Signal {
    fn shape(&self) -> &Arc<JetShape>;
    fn steps(&self) -> usize;
    /// Coefficients per step: the leading `width` frame slots.
    fn width(&self) -> usize;
    fn data(&self) -> &[f64];

    fn step(&self, m: usize) -> &[f64] {
        let w = self.width();
        &self.data()[m * w..(m + 1) * w]
    }

    fn dt(&self) -> f64 {
        1.0 / self.steps() as f64
    }
}

fn check_data(steps: usize, width: usize, data: &[f64]) -> Result<()> {
    if steps == 0 {
        return Err(JetError::InvalidArgument("a signal needs at least one step".into()));
    }
    if data.len() != steps * width {
        return Err(JetError::DimensionMismatch { expected: steps * width, got: data.len() });
    }
    if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
        return Err(JetError::NonFinite(format!("control value {bad}")));
    }
    Ok(())
}

/// Horizontal controls: coefficients of `X_i` and `d/du^k_I` only.
#[derive(Clone, Debug)]
pub struct ControlSignal {
    shape: Arc<JetShape>,
    steps: usize,
    data: Vec<f64>,
}

impl ControlSignal {
    /// `data` holds `steps` rows of `n + d_k` values, `(a_m, b_m)` per row.
    pub fn new(shape: Arc<JetShape>, steps: usize, data: Vec<f64>) -> Result<Self> {
        check_data(steps, shape.horizontal_dim(), &data)?;
        Ok(ControlSignal { shape, steps, data })
    }

    pub fn constant(shape: Arc<JetShape>, steps: usize, a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != shape.n() {
            return Err(JetError::DimensionMismatch { expected: shape.n(), got: a.len() });
        }
        let dk = shape.level_dim(shape.k());
        if b.len() != dk {
            return Err(JetError::DimensionMismatch { expected: dk, got: b.len() });
        }
        let row: Vec<f64> = a.iter().chain(b).copied().collect();
        let data = row.iter().copied().cycle().take(steps * row.len()).collect();
        ControlSignal::new(shape, steps, data)
    }

    /// Samples `f` at step midpoints.
    pub fn from_fn<F: Fn(f64) -> Vec<f64>>(shape: Arc<JetShape>, steps: usize, f: F) -> Result<Self> {
        let mut data = Vec::with_capacity(steps * shape.horizontal_dim());
        for m in 0..steps {
            data.extend(f((m as f64 + 0.5) / steps as f64));
        }
        ControlSignal::new(shape, steps, data)
    }

    /// Time reversal: runs the same curve backwards.
    pub fn reversed(&self) -> Self {
        let w = self.shape.horizontal_dim();
        let mut data = Vec::with_capacity(self.data.len());
        for m in (0..self.steps).rev() {
            data.extend(self.data[m * w..(m + 1) * w].iter().map(|v| -v));
        }
        ControlSignal { shape: self.shape.clone(), steps: self.steps, data }
    }
}

impl Signal for ControlSignal {
    fn shape(&self) -> &Arc<JetShape> {
        &self.shape
    }
    fn steps(&self) -> usize {
        self.steps
    }
    fn width(&self) -> usize {
        self.shape.horizontal_dim()
    }
    fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Controls on the whole frame, all strata admissible.
#[derive(Clone, Debug)]
pub struct CurveSignal {
    shape: Arc<JetShape>,
    steps: usize,
    data: Vec<f64>,
}

impl CurveSignal {
    pub fn new(shape: Arc<JetShape>, steps: usize, data: Vec<f64>) -> Result<Self> {
        check_data(steps, shape.total_dim(), &data)?;
        Ok(CurveSignal { shape, steps, data })
    }

    pub fn from_fn<F: Fn(f64) -> Vec<f64>>(shape: Arc<JetShape>, steps: usize, f: F) -> Result<Self> {
        let mut data = Vec::with_capacity(steps * shape.total_dim());
        for m in 0..steps {
            data.extend(f((m as f64 + 0.5) / steps as f64));
        }
        CurveSignal::new(shape, steps, data)
    }

    pub fn reversed(&self) -> Self {
        let w = self.shape.total_dim();
        let mut data = Vec::with_capacity(self.data.len());
        for m in (0..self.steps).rev() {
            data.extend(self.data[m * w..(m + 1) * w].iter().map(|v| -v));
        }
        CurveSignal { shape: self.shape.clone(), steps: self.steps, data }
    }
}

impl From<&ControlSignal> for CurveSignal {
    fn from(c: &ControlSignal) -> Self {
        let d = c.shape.total_dim();
        let h = c.shape.horizontal_dim();
        let mut data = vec![0.0; c.steps * d];
        for m in 0..c.steps {
            data[m * d..m * d + h].copy_from_slice(c.step(m));
        }
        CurveSignal { shape: c.shape.clone(), steps: c.steps, data }
    }
}

impl Signal for CurveSignal {
    fn shape(&self) -> &Arc<JetShape> {
        &self.shape
    }
    fn steps(&self) -> usize {
        self.steps
    }
    fn width(&self) -> usize {
        self.shape.total_dim()
    }
    fn data(&self) -> &[f64] {
        &self.data
    }
}

/// `sum_m dt |w_m|`, the `g_0`-length of the curve a signal drives.
pub fn length<S: Signal + ?Sized>(s: &S) -> f64 {
    let dt = s.dt();
    (0..s.steps()).map(|m| s.step(m).iter().map(|v| v * v).sum::<f64>().sqrt() * dt).sum()
}
