//! The boundary map `F` on `dQ^{n+1}` built from a boundary-compatible pair
//! `(f0, f1)`, the certified lower bound on the Lipschitz constant of every
//! extension of `delta_L o F`, measured constants of concrete extensions, the
//! unbounded-set witness, and the isometric subspace `E`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::CoordinateMapGrid;
use crate::error::{JetError, Result};
use crate::jet::{coords_to_frame, dilate_nonneg, JetPoint, JetShape};
use crate::jetmaps::{
    boundary_max_deviation, canonical_pair, cube_boundary_grid, cube_grid, default_boundary_resolution, euclid,
    integrate_cube, jet_lip_bound, lip_factor_on_cube, prolong_in, ScalarField,
};
use crate::multiindex::layer_dim;
use crate::numfmt::num;
use crate::paths::{cc_upper_bound, coordinate_lower_bound, OptimizerOpts};

/// Largest boundary jet deviation accepted as compatible.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// A boundary-compatible pair `(f0, f1)` with dilation scale `L`.
#[derive(Clone, Debug)]
pub struct BoundaryMapSpec {
    shape: Arc<JetShape>,
    f0: ScalarField,
    f1: ScalarField,
    scale: f64,
    gap: f64,
    gap_error: f64,
}

impl BoundaryMapSpec {
    pub fn new(f0: ScalarField, f1: ScalarField, k: usize, scale: f64) -> Result<Self> {
        if f0.n() != f1.n() {
            return Err(JetError::DimensionMismatch { expected: f0.n(), got: f1.n() });
        }
        check_scale(scale)?;
        let n = f0.n();
        let shape = JetShape::new(n, k)?;
        let deviation = boundary_max_deviation(&f0, &f1, k, default_boundary_resolution(n))?;
        if !(deviation <= BOUNDARY_TOL) {
            return Err(JetError::IncompatiblePair { max_deviation: deviation });
        }
        let (i0, e0) = integrate_cube(&f0)?;
        let (i1, e1) = integrate_cube(&f1)?;
        Ok(BoundaryMapSpec { shape, f0, f1, scale, gap: i0 - i1, gap_error: e0 + e1 })
    }

    /// `f0 = 0`, `f1 = prod (x_i (1 - x_i))^{k+1}`.
    pub fn canonical(n: usize, k: usize, scale: f64) -> Result<Self> {
        let (f0, f1) = canonical_pair(n, k)?;
        BoundaryMapSpec::new(f0, f1, k, scale)
    }

    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        check_scale(scale)?;
        Ok(BoundaryMapSpec { scale, ..self.clone() })
    }

    pub fn shape(&self) -> &Arc<JetShape> {
        &self.shape
    }

    pub fn n(&self) -> usize {
        self.shape.n()
    }

    pub fn k(&self) -> usize {
        self.shape.k()
    }

    pub fn f0(&self) -> &ScalarField {
        &self.f0
    }

    pub fn f1(&self) -> &ScalarField {
        &self.f1
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `int_{Q^n} (f0 - f1)`.
    pub fn integral_gap(&self) -> f64 {
        self.gap
    }

    /// Quadrature error bound on [`Self::integral_gap`]; zero for polynomials.
    pub fn gap_error(&self) -> f64 {
        self.gap_error
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(JetError::InvalidArgument(format!("dilation scale must be finite and >= 0, got {scale}")));
    }
    Ok(())
}

/// `delta_L o F` at `(x, t) in dQ^{n+1}`: the jet of `f1` on the top face away
/// from `dQ^n`, the jet of `f0` everywhere else.
pub fn eval_f(spec: &BoundaryMapSpec, x: &[f64], t: f64) -> Result<JetPoint> {
    let n = spec.n();
    if x.len() != n {
        return Err(JetError::DimensionMismatch { expected: n, got: x.len() });
    }
    let mut z = x.to_vec();
    z.push(t);
    if z.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(JetError::NotOnBoundary(z));
    }
    let on_side = x.iter().any(|&v| v == 0.0 || v == 1.0);
    let field = if t == 0.0 || on_side {
        &spec.f0
    } else if t == 1.0 {
        &spec.f1
    } else {
        return Err(JetError::NotOnBoundary(z));
    };
    Ok(dilate_nonneg(spec.scale, &prolong_in(&spec.shape, field, x)?))
}

/// `L^{1 + k/(n+1)} |int (f0 - f1)|^{1/(n+1)}`, a lower bound on the
/// `d_0`-Lipschitz constant of every extension of `delta_L o F` to `Q^{n+1}`.
pub fn certified_lower_bound(spec: &BoundaryMapSpec) -> Result<f64> {
    if !(spec.scale > 0.0) {
        return Err(JetError::InvalidArgument("certified_lower_bound needs L > 0".into()));
    }
    let m = (spec.n() + 1) as f64;
    Ok(spec.scale.powf(1.0 + spec.k() as f64 / m) * spec.gap.abs().powf(1.0 / m))
}

/// An upper bound `Lambda` on the `d_c`-Lipschitz constant of `F` at scale one,
/// with respect to the Euclidean metric on `dQ^{n+1}`.
///
/// Every pair of boundary points is joined by a boundary path of Euclidean
/// length at most their distance along which `F` is a prolongation, so the
/// larger of the two prolongation speed bounds controls `F`.
pub fn lip_f_upper(spec: &BoundaryMapSpec, per_axis: usize) -> Result<f64> {
    let k = spec.k();
    Ok(lip_factor_on_cube(&spec.f0, k, per_axis)?.max(lip_factor_on_cube(&spec.f1, k, per_axis)?))
}

/// Grid resolution used for `Lambda` when none is configured.
pub const DEFAULT_LIP_RESOLUTION: usize = 4097;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionKind {
    CanonicalInterpolation,
    UserGrid,
}

#[derive(Clone, Debug)]
enum CandidateRepr {
    Canonical,
    /// Nodal coordinates, first axis fastest, `total_dim` values per node.
    Grid {
        cells: usize,
        values: Vec<f64>,
    },
}

/// A map `Q^{n+1} -> J^k(R^n)` agreeing with `delta_L o F` on the boundary.
#[derive(Clone, Debug)]
pub struct ExtensionCandidate {
    spec: BoundaryMapSpec,
    repr: CandidateRepr,
}

/// `(x, t) -> delta_L(j^k((1 - t) f0 + t f1)(x))`.
pub fn canonical_extension(spec: &BoundaryMapSpec) -> ExtensionCandidate {
    ExtensionCandidate { spec: spec.clone(), repr: CandidateRepr::Canonical }
}

impl ExtensionCandidate {
    /// Multilinear interpolation of nodal jet coordinates. Boundary nodes must
    /// match `delta_L o F` within `tol`.
    pub fn from_grid(spec: &BoundaryMapSpec, cells: usize, values: Vec<f64>, tol: f64) -> Result<Self> {
        let dim = spec.n() + 1;
        let d = spec.shape.total_dim();
        if cells == 0 {
            return Err(JetError::DegenerateGrid("zero cells per axis".into()));
        }
        let nodes =
            (cells + 1).checked_pow(dim as u32).ok_or_else(|| JetError::DegenerateGrid("grid too large".into()))?;
        if values.len() != nodes * d {
            return Err(JetError::DimensionMismatch { expected: nodes * d, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(JetError::NonFinite("extension grid value".into()));
        }
        let cand = ExtensionCandidate { spec: spec.clone(), repr: CandidateRepr::Grid { cells, values } };
        let mut worst: f64 = 0.0;
        for flat in 0..nodes {
            let z = node_point(dim, cells, flat);
            if z.iter().any(|&v| v == 0.0 || v == 1.0) {
                let want = eval_f(spec, &z[..dim - 1], z[dim - 1])?;
                worst = worst.max(cand.eval(&z)?.max_abs_diff(&want));
            }
        }
        if !(worst <= tol) {
            return Err(JetError::InvalidArgument(format!(
                "extension grid differs from the boundary map by {worst:e}"
            )));
        }
        Ok(cand)
    }

    pub fn kind(&self) -> ExtensionKind {
        match self.repr {
            CandidateRepr::Canonical => ExtensionKind::CanonicalInterpolation,
            CandidateRepr::Grid { .. } => ExtensionKind::UserGrid,
        }
    }

    pub fn spec(&self) -> &BoundaryMapSpec {
        &self.spec
    }

    /// Domain dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.spec.n() + 1
    }

    /// Evaluates at `z = (x, t)`. Points slightly outside the cube are
    /// extrapolated, which finite differences rely on.
    pub fn eval(&self, z: &[f64]) -> Result<JetPoint> {
        let dim = self.dim();
        if z.len() != dim {
            return Err(JetError::DimensionMismatch { expected: dim, got: z.len() });
        }
        let shape = &self.spec.shape;
        match &self.repr {
            CandidateRepr::Canonical => {
                let (x, t) = (&z[..dim - 1], z[dim - 1]);
                let p0 = prolong_in(shape, &self.spec.f0, x)?;
                let p1 = prolong_in(shape, &self.spec.f1, x)?;
                let n = shape.n();
                let mut coords = p0.into_coords();
                for (c, b) in coords[n..].iter_mut().zip(&p1.coords()[n..]) {
                    *c = (1.0 - t) * *c + t * b;
                }
                Ok(dilate_nonneg(self.spec.scale, &JetPoint::new(shape.clone(), coords)?))
            }
            CandidateRepr::Grid { cells, values } => {
                let d = shape.total_dim();
                let nf = *cells as f64;
                let mut base = Vec::with_capacity(dim);
                let mut xi = Vec::with_capacity(dim);
                for &v in z {
                    let i = ((v * nf).floor().max(0.0) as usize).min(cells - 1);
                    base.push(i);
                    xi.push(v * nf - i as f64);
                }
                let mut coords = vec![0.0; d];
                for c in 0..1usize << dim {
                    let mut w = 1.0;
                    let mut flat = 0;
                    for a in (0..dim).rev() {
                        let bit = (c >> a) & 1;
                        w *= if bit == 1 { xi[a] } else { 1.0 - xi[a] };
                        flat = flat * (cells + 1) + base[a] + bit;
                    }
                    for (o, v) in coords.iter_mut().zip(&values[flat * d..(flat + 1) * d]) {
                        *o += w * v;
                    }
                }
                JetPoint::new(shape.clone(), coords)
            }
        }
    }

    /// Largest coordinate gap to `delta_L o F` over a boundary grid.
    pub fn boundary_agreement(&self, per_axis: usize) -> Result<f64> {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for z in cube_boundary_grid(dim, per_axis) {
            let want = eval_f(&self.spec, &z[..dim - 1], z[dim - 1])?;
            worst = worst.max(self.eval(&z)?.max_abs_diff(&want));
        }
        Ok(worst)
    }

    /// Samples `h_1..h_n` (the `x`-part) and `h_{n+1}` (the `u^0` coordinate).
    pub fn coordinate_grid(&self, cells: usize) -> Result<CoordinateMapGrid> {
        let n = self.spec.n();
        CoordinateMapGrid::sample(n + 1, cells, |z| {
            let p = self.eval(z)?;
            let mut h = p.x().to_vec();
            h.push(p.u0());
            Ok(h)
        })
    }

    /// Operator norm of the differential at `z` from `g_0` (Euclidean in
    /// frame coefficients) to the Euclidean metric, by central differences.
    pub fn differential_norm(&self, z: &[f64]) -> Result<f64> {
        const STEP: f64 = 1e-5;
        let dim = self.dim();
        let base = self.eval(z)?;
        let d = base.shape().total_dim();
        let mut cols = Vec::with_capacity(d * dim);
        let mut zz = z.to_vec();
        for a in 0..dim {
            zz[a] = z[a] + STEP;
            let plus = self.eval(&zz)?;
            zz[a] = z[a] - STEP;
            let minus = self.eval(&zz)?;
            zz[a] = z[a];
            let v: Vec<f64> = plus.coords().iter().zip(minus.coords()).map(|(p, m)| (p - m) / (2.0 * STEP)).collect();
            cols.extend_from_slice(coords_to_frame(&base, &v)?.frame());
        }
        if cols.iter().any(|v| !v.is_finite()) {
            return Err(JetError::NonFinite(format!("differential at {z:?}")));
        }
        let m = DMatrix::from_column_slice(d, dim, &cols);
        Ok(m.singular_values().max())
    }
}

fn node_point(dim: usize, cells: usize, mut flat: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let i = flat % (cells + 1);
            flat /= cells + 1;
            i as f64 / cells as f64
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LipMode {
    /// Largest sampled `coordinate_lower_bound / |p - q|`: never exceeds the true constant.
    Lower,
    /// Largest sampled differential norm: approaches the true constant from below.
    Upper,
}

/// Point and pair sampling for [`measured_lip`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    /// Quasi-random pairs (lower mode) or twice as many points (upper mode).
    pub pairs: usize,
    /// Points per axis of the deterministic grid added to the quasi-random ones.
    pub face_grid: usize,
    pub seed: u64,
    /// Sample doublings allowed while the estimate still moves by 1% or more.
    pub max_doublings: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { pairs: 256, face_grid: 9, seed: 0, max_doublings: 3 }
    }
}

const PRIMES: [u8; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Halton points with a seeded Cranley-Patterson rotation.
fn halton_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (1..=count)
        .map(|i| {
            (0..dim)
                .map(|a| {
                    let base = PRIMES[a % PRIMES.len()];
                    (halton::number(base, i) + shift[a]).fract()
                })
                .collect()
        })
        .collect()
}

fn max_in_order(values: Vec<Result<f64>>) -> Result<f64> {
    let mut best: f64 = 0.0;
    for v in values {
        best = best.max(v?);
    }
    Ok(best)
}

fn lip_estimate(cand: &ExtensionCandidate, mode: LipMode, s: &Sampling, count: usize) -> Result<f64> {
    let dim = cand.dim();
    let grid = cube_grid(dim, s.face_grid.max(2));
    match mode {
        LipMode::Upper => {
            let mut pts = halton_points(dim, 2 * count, s.seed);
            pts.extend(grid);
            max_in_order(pts.par_iter().map(|z| cand.differential_norm(z)).collect())
        }
        LipMode::Lower => {
            let h = halton_points(dim, 2 * count, s.seed);
            let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = h.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect();
            let step = 1.0 / (s.face_grid.max(2) - 1) as f64;
            for g in &grid {
                for a in 0..dim {
                    if g[a] + step <= 1.0 + 1e-12 {
                        let mut q = g.clone();
                        q[a] = (g[a] + step).min(1.0);
                        pairs.push((g.clone(), q));
                    }
                }
            }
            max_in_order(
                pairs
                    .par_iter()
                    .map(|(p, q)| {
                        let dist = euclid(p, q);
                        if dist == 0.0 {
                            return Ok(0.0);
                        }
                        Ok(coordinate_lower_bound(&cand.eval(p)?, &cand.eval(q)?)? / dist)
                    })
                    .collect(),
            )
        }
    }
}

/// Sampled Lipschitz estimate of `cand` into `(J^k, d_0)`, labelled by `mode`.
/// Samples double until the estimate moves by less than 1%.
pub fn measured_lip(cand: &ExtensionCandidate, mode: LipMode, sampling: &Sampling) -> Result<f64> {
    if sampling.pairs == 0 {
        return Err(JetError::InvalidArgument("sampling needs at least one pair".into()));
    }
    let mut count = sampling.pairs;
    let mut est = lip_estimate(cand, mode, sampling, count)?;
    for _ in 0..sampling.max_doublings {
        count *= 2;
        let next = lip_estimate(cand, mode, sampling, count)?;
        let moved = (next - est).abs() > 0.01 * est.abs();
        est = est.max(next);
        if !moved {
            break;
        }
    }
    Ok(est)
}

/// Least-squares slope through `(x, y)` points; `None` without two distinct `x`.
pub fn regression_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    #[serde(rename = "L")]
    pub scale: f64,
    pub certified: f64,
    pub measured_upper: f64,
    /// `measured_upper / certified`, infinite when nothing is certified.
    pub ratio: f64,
    /// Log-log slope of the certified column up to this row.
    pub slope_so_far: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthTable {
    pub n: usize,
    pub k: usize,
    pub rows: Vec<GrowthRow>,
    /// Log-log slope of the certified column over all rows.
    pub slope: Option<f64>,
    /// `1 + k/(n+1)`.
    pub expected_slope: f64,
}

impl GrowthTable {
    /// Rows whose measured estimate falls below `certified * (1 - rel_tol)`.
    pub fn violations(&self, rel_tol: f64) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !(r.measured_upper >= r.certified * (1.0 - rel_tol)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Columns `L,certified,measured_upper,ratio,slope_so_far`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| JetError::Parse(e.to_string());
        out.write_record(["L", "certified", "measured_upper", "ratio", "slope_so_far"]).map_err(csv_err)?;
        for r in &self.rows {
            out.write_record([
                num(r.scale),
                num(r.certified),
                num(r.measured_upper),
                num(r.ratio),
                r.slope_so_far.map_or(String::new(), num),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn certified_slope(rows: &[(f64, f64)]) -> Option<f64> {
    if rows.iter().any(|&(_, c)| !(c > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(l, c)| (l.log2(), c.log2())).collect();
    regression_slope(&pts)
}

/// Certified bound and measured upper estimate of the canonical extension per
/// scale. Certified values grow like `L^{1 + k/(n+1)}`, faster than the linear
/// growth any `d_c`-Lipschitz extension of `F` would allow.
pub fn growth_table(spec: &BoundaryMapSpec, scales: &[f64], sampling: &Sampling) -> Result<GrowthTable> {
    if scales.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(JetError::InvalidArgument("growth_table needs finite L > 0".into()));
    }
    let cells: Vec<(f64, f64, f64)> = scales
        .par_iter()
        .map(|&l| {
            let s = spec.with_scale(l)?;
            let certified = certified_lower_bound(&s)?;
            let measured = measured_lip(&canonical_extension(&s), LipMode::Upper, sampling)?;
            Ok((l, certified, measured))
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(f64, f64)> = cells.iter().map(|&(l, c, _)| (l, c)).collect();
    let rows = cells
        .iter()
        .enumerate()
        .map(|(i, &(l, c, m))| GrowthRow {
            scale: l,
            certified: c,
            measured_upper: m,
            ratio: if c > 0.0 { m / c } else { f64::INFINITY },
            slope_so_far: certified_slope(&pairs[..=i]),
        })
        .collect();
    let (n, k) = (spec.n(), spec.k());
    Ok(GrowthTable { n, k, rows, slope: certified_slope(&pairs), expected_slope: 1.0 + k as f64 / (n + 1) as f64 })
}

/// One sampled point `z in dQ^{n+1}` with `F(z)` at scale one and the upper
/// bound on `d_c(0, F(z))`.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessSample {
    pub z: Vec<f64>,
    pub value: JetPoint,
    pub cc_to_origin: f64,
}

/// The set `A = U dA_L`, `A_L = [-2^{L-1}, 2^{L-1}]^{n+1}`, with
/// `f(2^L (z - e)) = delta_{2^L}(F(z))`, sampled on `L = 0..=levels`.
#[derive(Clone, Debug)]
pub struct UnboundedWitness {
    spec: BoundaryMapSpec,
    levels: usize,
    samples: Vec<WitnessSample>,
    c: f64,
}

/// Samples `F` on a boundary grid with `per_axis` points per free axis and
/// bounds `c = max d_c(0, F(z))` through [`cc_upper_bound`].
pub fn build_witness(
    spec: &BoundaryMapSpec,
    levels: usize,
    per_axis: usize,
    opts: &OptimizerOpts,
) -> Result<UnboundedWitness> {
    if levels < 1 {
        return Err(JetError::InvalidArgument("a witness needs at least one level above 0".into()));
    }
    let spec = spec.with_scale(1.0)?;
    let dim = spec.n() + 1;
    let origin = JetPoint::origin(spec.shape.clone());
    let samples: Vec<WitnessSample> = cube_boundary_grid(dim, per_axis.max(2))
        .into_par_iter()
        .map(|z| {
            let value = eval_f(&spec, &z[..dim - 1], z[dim - 1])?;
            let cc_to_origin = cc_upper_bound(&origin, &value, opts)?;
            Ok(WitnessSample { z, value, cc_to_origin })
        })
        .collect::<Result<_>>()?;
    let c = samples.iter().map(|s| s.cc_to_origin).fold(0.0, f64::max);
    Ok(UnboundedWitness { spec, levels, samples, c })
}

#[derive(Serialize)]
struct ShellPoint<'a> {
    x: Vec<f64>,
    value: JetPoint,
    z: &'a [f64],
}

#[derive(Serialize)]
struct Shell<'a> {
    level: usize,
    half_edge: f64,
    points: Vec<ShellPoint<'a>>,
}

#[derive(Serialize)]
struct WitnessExport<'a> {
    n: usize,
    k: usize,
    levels: usize,
    c: f64,
    integral_gap: f64,
    samples: &'a [WitnessSample],
    shells: Vec<Shell<'a>>,
}

impl UnboundedWitness {
    pub fn spec(&self) -> &BoundaryMapSpec {
        &self.spec
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn samples(&self) -> &[WitnessSample] {
        &self.samples
    }

    /// `max_z d_c(0, F(z))` over the samples, as an upper bound.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `2^L (z - e)`.
    pub fn shell_point(&self, level: usize, z: &[f64]) -> Vec<f64> {
        let s = 2f64.powi(level as i32);
        z.iter().map(|v| s * (v - 0.5)).collect()
    }

    /// `delta_{2^L}(F(z))`.
    pub fn shell_value(&self, level: usize, sample: &WitnessSample) -> JetPoint {
        dilate_nonneg(2f64.powi(level as i32), &sample.value)
    }

    /// Shells, sample points and constants as a JSON document.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_value()?)?)
    }

    pub fn to_value(&self) -> Result<serde_json::Value> {
        let shells = (0..=self.levels)
            .map(|level| Shell {
                level,
                half_edge: 2f64.powi(level as i32 - 1),
                points: self
                    .samples
                    .iter()
                    .map(|s| ShellPoint {
                        x: self.shell_point(level, &s.z),
                        value: self.shell_value(level, s),
                        z: &s.z,
                    })
                    .collect(),
            })
            .collect();
        let doc = WitnessExport {
            n: self.spec.n(),
            k: self.spec.k(),
            levels: self.levels,
            c: self.c,
            integral_gap: self.spec.gap,
            samples: &self.samples,
            shells,
        };
        Ok(serde_json::to_value(&doc)?)
    }
}

/// `dist(dA_L, dA_{L'}) = |2^{L-1} - 2^{L'-1}|` for the concentric cubes.
pub fn shell_distance(l1: usize, l2: usize) -> f64 {
    (2f64.powi(l1 as i32 - 1) - 2f64.powi(l2 as i32 - 1)).abs()
}

/// Whether `dist(dA_L, dA_{L'}) >= 2^{max(L, L') - 2}` for all `L != L' <= max_level`.
pub fn shell_separation_holds(max_level: usize) -> bool {
    (0..=max_level)
        .all(|a| (0..=max_level).filter(|&b| b != a).all(|b| shell_distance(a, b) >= 2f64.powi(a.max(b) as i32 - 2)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossShellReport {
    pub pairs: usize,
    /// Largest `(2^L c_z + 2^{L'} c_{z'}) / |x - x'|`, an upper bound on the sampled `d_c` ratios.
    pub max_ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Samples pairs on different shells. `d_c(f(x), f(x')) <= 2^L c_z + 2^{L'} c_{z'}`
/// by the triangle inequality through the origin and homogeneity.
pub fn cross_shell_check(w: &UnboundedWitness, pairs: usize, seed: u64) -> CrossShellReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = w.samples.len();
    let mut max_ratio: f64 = 0.0;
    for _ in 0..pairs {
        let l1 = rng.gen_range(0..=w.levels);
        let mut l2 = rng.gen_range(0..w.levels);
        if l2 >= l1 {
            l2 += 1;
        }
        let a = &w.samples[rng.gen_range(0..m)];
        let b = &w.samples[rng.gen_range(0..m)];
        let x = w.shell_point(l1, &a.z);
        let y = w.shell_point(l2, &b.z);
        let num = 2f64.powi(l1 as i32) * a.cc_to_origin + 2f64.powi(l2 as i32) * b.cc_to_origin;
        max_ratio = max_ratio.max(num / euclid(&x, &y));
    }
    let bound = 8.0 * w.c;
    CrossShellReport { pairs, max_ratio, bound, holds: max_ratio <= bound }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WithinShellReport {
    pub pairs: usize,
    /// Largest boundary-path bound on `d_c(f(x), f(x'))` over `|x - x'|`.
    pub max_ratio: f64,
    pub lip_estimate: f64,
    pub holds: bool,
}

/// Speed-bound samples per segment in the within-shell path bounds.
const PATH_SAMPLES: usize = 1025;

/// Upper bound on `d_c(F(z), F(z'))` at scale one along a boundary path that
/// follows one prolongation, or two joined where the path crosses `dQ^n`.
pub fn boundary_path_bound(spec: &BoundaryMapSpec, z: &[f64], w: &[f64]) -> Result<f64> {
    #[derive(PartialEq)]
    enum Branch {
        Either,
        Bottom,
        Top,
    }
    let n = spec.n();
    let k = spec.k();
    let branch = |p: &[f64]| {
        if p[..n].iter().any(|&v| v == 0.0 || v == 1.0) {
            Branch::Either
        } else if p[n] == 0.0 {
            Branch::Bottom
        } else {
            Branch::Top
        }
    };
    let (bz, bw) = (branch(z), branch(w));
    let (x, y) = (&z[..n], &w[..n]);
    if bz != Branch::Bottom && bw != Branch::Bottom {
        let f = if bz == Branch::Top || bw == Branch::Top { &spec.f1 } else { &spec.f0 };
        return jet_lip_bound(f, k, x, y, PATH_SAMPLES);
    }
    if bz != Branch::Top && bw != Branch::Top {
        return jet_lip_bound(&spec.f0, k, x, y, PATH_SAMPLES);
    }
    let (xb, xt) = if bz == Branch::Bottom { (x, y) } else { (y, x) };
    let mut best = f64::INFINITY;
    for axis in 0..n {
        for side in [0.0, 1.0] {
            // cross dQ^n where the segment to the mirror image of xt meets it
            let mirror = 2.0 * side - xt[axis];
            let tau = (xb[axis] - side) / (xb[axis] - mirror);
            let mut b: Vec<f64> = xb
                .iter()
                .zip(xt)
                .enumerate()
                .map(|(j, (p, q))| if j == axis { side } else { p + tau * (q - p) })
                .collect();
            b.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            let len =
                jet_lip_bound(&spec.f0, k, xb, &b, PATH_SAMPLES)? + jet_lip_bound(&spec.f1, k, &b, xt, PATH_SAMPLES)?;
            best = best.min(len);
        }
    }
    Ok(best)
}

/// Samples pairs within a shell and compares boundary-path bounds against
/// `lip_estimate`. Ratios do not depend on the level. Both sides certify upper
/// bounds of the same prolongation speed, up to their own discretization
/// slack, so 1% is allowed.
pub fn within_shell_check(
    w: &UnboundedWitness,
    pairs: usize,
    seed: u64,
    lip_estimate: f64,
) -> Result<WithinShellReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = w.samples.len();
    let picks: Vec<(usize, usize)> = (0..pairs).map(|_| (rng.gen_range(0..m), rng.gen_range(0..m))).collect();
    let ratios: Vec<Result<f64>> = picks
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&w.samples[i].z, &w.samples[j].z);
            let dist = euclid(a, b);
            if dist == 0.0 {
                return Ok(0.0);
            }
            Ok(boundary_path_bound(&w.spec, a, b)? / dist)
        })
        .collect();
    let max_ratio = max_in_order(ratios)?;
    Ok(WithinShellReport { pairs, max_ratio, lip_estimate, holds: max_ratio <= lip_estimate * 1.01 })
}

/// Smallest level `L` with `(2^L lambda)^{n+1} < 2^{L(n+k+1)} |gap|`: no
/// `lambda`-Lipschitz extension of the witness exists past it.
pub fn contradiction_level(n: usize, k: usize, gap: f64, lambda: f64) -> Result<usize> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(JetError::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if gap == 0.0 || !gap.is_finite() {
        return Err(JetError::ZeroGap);
    }
    let (m, k) = ((n + 1) as f64, k as f64);
    let violated = |l: f64| m * (l + lambda.log2()) < l * (m + k) + gap.abs().log2();
    let threshold = (m * lambda.log2() - gap.abs().log2()) / k;
    let mut level = if threshold < 0.0 { 0 } else { threshold.floor() as usize + 1 };
    while level > 0 && violated((level - 1) as f64) {
        level -= 1;
    }
    while !violated(level as f64) {
        level += 1;
    }
    Ok(level)
}

/// [`contradiction_level`] for the witness's pair.
pub fn witness_contradiction_curve(w: &UnboundedWitness, lambda: f64) -> Result<usize> {
    contradiction_level(w.spec.n(), w.spec.k(), w.spec.gap, lambda)
}

/// Whether `J^l(R^m)` contains a copy of `R^{n+1}` along the top layer,
/// `binom(m + l - 1, l) >= n + 1`.
pub fn corollary_applicable(n: usize, l: usize, m: usize) -> Result<bool> {
    Ok(layer_dim(m, l)? >= (n + 1) as u64)
}

/// `(0, v, 0, ..., 0) in J^l(R^m)`.
pub fn embed_e(l: usize, m: usize, v: &[f64]) -> Result<JetPoint> {
    let shape = JetShape::new(m, l)?;
    let dl = shape.level_dim(l);
    if v.len() != dl {
        return Err(JetError::DimensionMismatch { expected: dl, got: v.len() });
    }
    let mut coords = vec![0.0; shape.total_dim()];
    coords[shape.level_range(l)].copy_from_slice(v);
    JetPoint::new(shape, coords)
}

/// `(x, u^l, ..., u^0) -> u^l`.
pub fn project_e(p: &JetPoint) -> Vec<f64> {
    p.block(p.k()).to_vec()
}
