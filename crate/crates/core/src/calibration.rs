//! The calibration form `omega = dx_1 ^ ... ^ dx_n ^ du^0`, and both sides of
//! the Stokes identity for Lipschitz maps `h = (h_1, ..., h_{n+1})` on the
//! unit cube.
//!
//! A [`CoordinateMapGrid`] stores nodal values; both integrals are taken of
//! the piecewise-multilinear interpolant of those values. That interpolant is
//! itself Lipschitz, so Stokes holds for it exactly, and Gauss-Legendre with
//! `ceil((n+1)/2)` points per axis integrates every cell and face polynomial
//! without error. The residual therefore sits at rounding level, while the
//! integrals converge to those of a `C^2` map at order two.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{JetError, Result};
use crate::jet::{JetPoint, TangentVector};
use crate::nonextension::BoundaryMapSpec;
use crate::numfmt::num;
use crate::poly::{gauss_legendre_unit, Polynomial};

/// `omega(p)(V_1, ..., V_{n+1}) = det(a^i, b^{0,i})`, rows built from frame coefficients.
pub fn omega_eval(p: &JetPoint, vectors: &[TangentVector]) -> Result<f64> {
    let n = p.n();
    if vectors.len() != n + 1 {
        return Err(JetError::DimensionMismatch { expected: n + 1, got: vectors.len() });
    }
    let mut rows = Vec::with_capacity((n + 1) * (n + 1));
    for v in vectors {
        p.same_shape(v.base())?;
        rows.extend_from_slice(v.a());
        rows.push(v.b(0)[0]);
    }
    Ok(DMatrix::from_row_slice(n + 1, n + 1, &rows).determinant())
}

const BINARY_MAGIC: &[u8; 8] = b"JCGRID\x00\x01";

/// Nodal values of `h_1, ..., h_dim` on the uniform grid with `cells` cells per
/// axis. Nodes are stored with the first axis varying fastest, and each node
/// holds its `dim` values consecutively.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateMapGrid {
    dim: usize,
    cells: usize,
    values: Vec<f64>,
}

impl CoordinateMapGrid {
    pub fn new(dim: usize, cells: usize, values: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(JetError::DegenerateGrid(format!("dimension {dim} is below 2")));
        }
        if cells == 0 {
            return Err(JetError::DegenerateGrid("zero cells per axis".into()));
        }
        let nodes = node_count(dim, cells)?;
        if values.len() != nodes * dim {
            return Err(JetError::DimensionMismatch { expected: nodes * dim, got: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(JetError::NonFinite(format!("grid value at offset {pos}")));
        }
        Ok(CoordinateMapGrid { dim, cells, values })
    }

    /// Samples `f` at every node, in parallel.
    pub fn sample<F>(dim: usize, cells: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
    {
        let nodes = node_count(dim, cells)?;
        let rows: Vec<Vec<f64>> = (0..nodes)
            .into_par_iter()
            .map(|flat| {
                let x = node_coords(dim, cells, flat);
                let v = f(&x)?;
                if v.len() != dim {
                    return Err(JetError::DimensionMismatch { expected: dim, got: v.len() });
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        CoordinateMapGrid::new(dim, cells, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn node_value(&self, flat: usize, comp: usize) -> f64 {
        self.values[flat * self.dim + comp]
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        let stride = self.cells + 1;
        idx.iter().rev().fold(0, |acc, &i| acc * stride + i)
    }

    fn check_integrable(&self) -> Result<()> {
        if self.cells < 2 {
            return Err(JetError::DegenerateGrid(format!("need at least 2 cells per axis, got {}", self.cells)));
        }
        Ok(())
    }

    /// CSV with header `x1..x{dim},h1..h{dim}`, one node per row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let header: Vec<String> =
            (1..=self.dim).map(|i| format!("x{i}")).chain((1..=self.dim).map(|i| format!("h{i}"))).collect();
        out.write_record(&header).map_err(csv_err)?;
        let nodes = self.values.len() / self.dim;
        for flat in 0..nodes {
            let x = node_coords(self.dim, self.cells, flat);
            let row: Vec<String> =
                x.iter().chain(&self.values[flat * self.dim..(flat + 1) * self.dim]).map(|&v| num(v)).collect();
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let width = rdr.headers().map_err(csv_err)?.len();
        if width < 4 || width % 2 != 0 {
            return Err(JetError::Parse(format!("grid CSV has {width} columns")));
        }
        let dim = width / 2;
        let mut values = Vec::new();
        let mut rows = 0usize;
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            for field in rec.iter().skip(dim) {
                values.push(field.trim().parse::<f64>().map_err(|e| JetError::Parse(format!("{field}: {e}")))?);
            }
            rows += 1;
        }
        let side = (rows as f64).powf(1.0 / dim as f64).round() as usize;
        if side < 2 || side.checked_pow(dim as u32) != Some(rows) {
            return Err(JetError::Parse(format!("{rows} rows is not a full grid in dimension {dim}")));
        }
        CoordinateMapGrid::new(dim, side - 1, values)
    }

    /// Binary layout: 8-byte magic, `dim` and `cells` as little-endian `u32`,
    /// then every value as little-endian `f64` in node order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.cells as u32).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(JetError::Parse("not a coordinate grid file".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let dim = u32::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let cells = u32::from_le_bytes(word) as usize;
        let count = node_count(dim, cells)? * dim;
        let mut values = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        CoordinateMapGrid::new(dim, cells, values)
    }
}

fn csv_err(e: csv::Error) -> JetError {
    JetError::Parse(e.to_string())
}

fn node_count(dim: usize, cells: usize) -> Result<usize> {
    (cells + 1)
        .checked_pow(dim as u32)
        .filter(|&c| c <= 1 << 28)
        .ok_or_else(|| JetError::DegenerateGrid(format!("{cells} cells in dimension {dim} is too large")))
}

fn node_coords(dim: usize, cells: usize, mut flat: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let i = flat % (cells + 1);
            flat /= cells + 1;
            i as f64 / cells as f64
        })
        .collect()
}

/// Tensor Gauss-Legendre points on `[0,1]^m` with their weights.
fn tensor_rule(m: usize, points: usize) -> Vec<(Vec<f64>, f64)> {
    let (x, w) = gauss_legendre_unit(points);
    let total = points.pow(m as u32);
    (0..total)
        .map(|mut flat| {
            let mut p = Vec::with_capacity(m);
            let mut weight = 1.0;
            for _ in 0..m {
                p.push(x[flat % points]);
                weight *= w[flat % points];
                flat /= points;
            }
            (p, weight)
        })
        .collect()
}

/// Multilinear shape data at one local point: value weights per corner and
/// derivative weights per corner and axis.
struct Shape {
    value: Vec<f64>,
    grad: Vec<Vec<f64>>,
}

fn shape_at(xi: &[f64]) -> Shape {
    let m = xi.len();
    let corners = 1usize << m;
    let mut value = vec![0.0; corners];
    let mut grad = vec![vec![0.0; m]; corners];
    for c in 0..corners {
        let bit = |a: usize| (c >> a) & 1 == 1;
        let factor = |a: usize| if bit(a) { xi[a] } else { 1.0 - xi[a] };
        value[c] = (0..m).map(factor).product();
        for (j, g) in grad[c].iter_mut().enumerate() {
            let sign = if bit(j) { 1.0 } else { -1.0 };
            *g = sign * (0..m).filter(|&a| a != j).map(factor).product::<f64>();
        }
    }
    Shape { value, grad }
}

fn quadrature_points(dim: usize) -> usize {
    dim.div_ceil(2)
}

/// Fixed-order pairwise sum, so parallel evaluation stays deterministic.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// `int_{Q^{n+1}} det(d_j h_i)` of the multilinear interpolant.
pub fn interior_integral(g: &CoordinateMapGrid) -> Result<f64> {
    g.check_integrable()?;
    let d = g.dim;
    let n_cells = g.cells;
    let rule: Vec<(Shape, f64)> =
        tensor_rule(d, quadrature_points(d)).into_iter().map(|(p, w)| (shape_at(&p), w)).collect();
    let cell_volume = (n_cells as f64).powi(-(d as i32));
    let scale = n_cells as f64;
    let total_cells = n_cells.pow(d as u32);
    let corners = 1usize << d;
    let per_cell: Vec<f64> = (0..total_cells)
        .into_par_iter()
        .map(|flat| {
            let mut base = vec![0usize; d];
            let mut rest = flat;
            for b in base.iter_mut() {
                *b = rest % n_cells;
                rest /= n_cells;
            }
            let corner_nodes: Vec<usize> = (0..corners)
                .map(|c| {
                    let idx: Vec<usize> = (0..d).map(|a| base[a] + ((c >> a) & 1)).collect();
                    g.flat_index(&idx)
                })
                .collect();
            let mut acc = 0.0;
            let mut jac = DMatrix::<f64>::zeros(d, d);
            for (sh, w) in &rule {
                for i in 0..d {
                    for j in 0..d {
                        let mut s = 0.0;
                        for (c, &node) in corner_nodes.iter().enumerate() {
                            s += g.node_value(node, i) * sh.grad[c][j];
                        }
                        jac[(i, j)] = s * scale;
                    }
                }
                acc += w * jac.clone().determinant();
            }
            acc * cell_volume
        })
        .collect();
    Ok(pairwise_sum(&per_cell))
}

/// `int_{dQ^{n+1}} h_1 dh_2 ^ ... ^ dh_{n+1}` of the multilinear interpolant:
/// `sum_j (-1)^{j-1} [F_j(1) - F_j(0)]` over faces `x_j = l`, where `F_j(l)`
/// integrates `h_1 det(d h_i / d x_m)`, `i >= 2`, `m != j` in increasing order.
pub fn boundary_integral(g: &CoordinateMapGrid) -> Result<f64> {
    g.check_integrable()?;
    let d = g.dim;
    let fd = d - 1;
    let n_cells = g.cells;
    let rule: Vec<(Shape, f64)> =
        tensor_rule(fd, quadrature_points(d)).into_iter().map(|(p, w)| (shape_at(&p), w)).collect();
    let cell_area = (n_cells as f64).powi(-(fd as i32));
    let scale = n_cells as f64;
    let face_cells = n_cells.pow(fd as u32);
    let corners = 1usize << fd;
    let mut terms = Vec::with_capacity(2 * d);
    for j in 0..d {
        let axes: Vec<usize> = (0..d).filter(|&a| a != j).collect();
        for side in [0usize, 1] {
            let orientation = if j % 2 == 0 { 1.0 } else { -1.0 } * if side == 1 { 1.0 } else { -1.0 };
            let per_cell: Vec<f64> = (0..face_cells)
                .into_par_iter()
                .map(|flat| {
                    let mut idx = vec![0usize; d];
                    idx[j] = side * n_cells;
                    let mut rest = flat;
                    let mut base = vec![0usize; fd];
                    for b in base.iter_mut() {
                        *b = rest % n_cells;
                        rest /= n_cells;
                    }
                    let corner_nodes: Vec<usize> = (0..corners)
                        .map(|c| {
                            let mut at = idx.clone();
                            for (pos, &a) in axes.iter().enumerate() {
                                at[a] = base[pos] + ((c >> pos) & 1);
                            }
                            g.flat_index(&at)
                        })
                        .collect();
                    let mut acc = 0.0;
                    let mut jac = DMatrix::<f64>::zeros(fd, fd);
                    for (sh, w) in &rule {
                        let h1: f64 =
                            corner_nodes.iter().enumerate().map(|(c, &node)| g.node_value(node, 0) * sh.value[c]).sum();
                        for i in 0..fd {
                            for m in 0..fd {
                                let mut s = 0.0;
                                for (c, &node) in corner_nodes.iter().enumerate() {
                                    s += g.node_value(node, i + 1) * sh.grad[c][m];
                                }
                                jac[(i, m)] = s * scale;
                            }
                        }
                        acc += w * h1 * jac.clone().determinant();
                    }
                    acc * cell_area
                })
                .collect();
            terms.push(orientation * pairwise_sum(&per_cell));
        }
    }
    Ok(terms.iter().sum())
}

/// `|interior - boundary| / (1 + |interior|)`.
pub fn stokes_residual(g: &CoordinateMapGrid) -> Result<f64> {
    let i = interior_integral(g)?;
    let b = boundary_integral(g)?;
    Ok((i - b).abs() / (1.0 + i.abs()))
}

/// The boundary integral every extension of `delta_L o F` must produce:
/// `L^{n+k+1} int_{Q^n} (f_1 - f_0)`.
///
/// The top and bottom faces contribute through `h_{n+1} = L^{k+1} f_t`, the side
/// faces through a vanishing `dx`-determinant, which reduces the face sum to this
/// closed form for every `n`.
pub fn extension_boundary_value(spec: &BoundaryMapSpec) -> f64 {
    let (n, k) = (spec.n(), spec.k());
    -spec.scale().powi((n + k + 1) as i32) * spec.integral_gap()
}

/// `int_{Q^d} det(d_j p_i)` computed symbolically for polynomial maps.
pub fn polynomial_interior_exact(maps: &[Polynomial]) -> Result<f64> {
    let d = maps.len();
    if d < 2 || maps.iter().any(|p| p.n() != d) {
        return Err(JetError::DimensionMismatch { expected: d, got: maps.first().map_or(0, Polynomial::n) });
    }
    let partials: Vec<Vec<Polynomial>> = maps
        .iter()
        .map(|p| (0..d).map(|j| Ok(p.partial(&crate::multiindex::MultiIndex::unit(d, j)?))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut det = Polynomial::zero(d);
    for perm in permutations(d) {
        let sign = permutation_sign(&perm);
        let mut term = Polynomial::constant(d, sign);
        for (i, &j) in perm.iter().enumerate() {
            term = term.mul(&partials[i][j]);
        }
        det = det.add(&term);
    }
    Ok(det.integrate_unit_cube())
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, d - 1);
            out.push(q);
        }
    }
    out
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut inversions = 0;
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            if p[a] > p[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// One row of a refinement study.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct StokesRow {
    pub cells: usize,
    pub interior: f64,
    pub boundary: f64,
    pub residual: f64,
    /// `|interior - exact|` when an exact value is known.
    pub error: Option<f64>,
}

/// Residuals of `f` sampled at each resolution, with errors against `exact`.
pub fn stokes_study<F>(dim: usize, resolutions: &[usize], f: F, exact: Option<f64>) -> Result<Vec<StokesRow>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    resolutions
        .iter()
        .map(|&cells| {
            let g = CoordinateMapGrid::sample(dim, cells, &f)?;
            let interior = interior_integral(&g)?;
            let boundary = boundary_integral(&g)?;
            Ok(StokesRow {
                cells,
                interior,
                boundary,
                residual: (interior - boundary).abs() / (1.0 + interior.abs()),
                error: exact.map(|e| (interior - e).abs()),
            })
        })
        .collect()
}

/// Least-squares slope of `-log2(error)` against `log2(cells)`.
pub fn observed_order(rows: &[StokesRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.error.filter(|e| *e > 0.0).map(|e| ((r.cells as f64).log2(), -e.log2())))
        .collect();
    crate::nonextension::regression_slope(&pts)
}
