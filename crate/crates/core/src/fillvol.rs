//! Filling-volume lower bounds. The cycle `T_L` is the boundary image of
//! `delta_L o F`; it enters only through its mass bound and its pairing with
//! `alpha`, where `d alpha = omega`.

use std::io::Write;

use serde::Serialize;

use crate::error::{JetError, Result};
use crate::nonextension::BoundaryMapSpec;
use crate::numfmt::num;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(JetError::InvalidArgument(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// `Vol(dQ^{n+1}) = 2(n+1)`.
pub fn boundary_volume(n: usize) -> f64 {
    2.0 * (n + 1) as f64
}

/// `M(T_L) <= L^n Lambda^n Vol(dQ^{n+1})`.
pub fn mass_upper(spec: &BoundaryMapSpec, scale: f64, lip_f_upper: f64) -> Result<f64> {
    check_positive("L", scale)?;
    check_positive("lipF_upper", lip_f_upper)?;
    let n = spec.n();
    Ok((scale * lip_f_upper).powi(n as i32) * boundary_volume(n))
}

/// Inverse of [`mass_upper`] in `L`: the scale whose mass bound equals `mass`.
pub fn scale_for_mass(spec: &BoundaryMapSpec, mass: f64, lip_f_upper: f64) -> Result<f64> {
    check_positive("mass", mass)?;
    check_positive("lipF_upper", lip_f_upper)?;
    let n = spec.n();
    Ok((mass / boundary_volume(n)).powf(1.0 / n as f64) / lip_f_upper)
}

/// `L^{n+k+1} |int (f0 - f1)|`, a lower bound on the mass of every filling of `T_L`.
pub fn filling_lower(spec: &BoundaryMapSpec, scale: f64) -> Result<f64> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(JetError::InvalidArgument(format!("L must be finite and >= 0, got {scale}")));
    }
    Ok(scale.powi((spec.n() + spec.k() + 1) as i32) * spec.integral_gap().abs())
}

/// `delta = Lambda^{-(n+k+1)} Vol(dQ^{n+1})^{-(n+k+1)/n} |int (f0 - f1)|`. Any
/// `Lambda` at least the true Lipschitz constant of `F` gives a valid constant.
pub fn delta_constant(spec: &BoundaryMapSpec, lip_f_upper: f64) -> Result<f64> {
    check_positive("lipF_upper", lip_f_upper)?;
    let gap = spec.integral_gap();
    if gap == 0.0 {
        return Err(JetError::ZeroGap);
    }
    let n = spec.n();
    let p = (n + spec.k() + 1) as i32;
    Ok(lip_f_upper.powi(-p) * boundary_volume(n).powf(-(p as f64) / n as f64) * gap.abs())
}

/// `(n+k+1)/n`.
pub fn fv_exponent(n: usize, k: usize) -> f64 {
    (n + k + 1) as f64 / n as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FvRow {
    pub r: f64,
    pub lower_bound: f64,
}

/// `FV_{n+1}(r) >= delta r^{(n+k+1)/n}` sampled at `r_values`.
pub fn fv_curve(spec: &BoundaryMapSpec, lip_f_upper: f64, r_values: &[f64]) -> Result<Vec<FvRow>> {
    let delta = delta_constant(spec, lip_f_upper)?;
    let e = fv_exponent(spec.n(), spec.k());
    r_values
        .iter()
        .map(|&r| {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(JetError::InvalidArgument(format!("r must be finite and >= 0, got {r}")));
            }
            Ok(FvRow { r, lower_bound: delta * r.powf(e) })
        })
        .collect()
}

/// Columns `r,lower_bound`.
pub fn write_fv_csv<W: Write>(rows: &[FvRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let csv_err = |e: csv::Error| JetError::Parse(e.to_string());
    out.write_record(["r", "lower_bound"]).map_err(csv_err)?;
    for row in rows {
        out.write_record([num(row.r), num(row.lower_bound)]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FillingRow {
    #[serde(rename = "L")]
    pub scale: f64,
    pub mass_upper: f64,
    pub filling_lower: f64,
    /// `|delta mass_upper^{(n+k+1)/n} - filling_lower| / filling_lower`.
    pub identity_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FillingReport {
    pub n: usize,
    pub k: usize,
    /// Which boundary pair produced the report.
    pub pair: String,
    pub integral_gap: f64,
    #[serde(rename = "lipF_upper")]
    pub lip_f_upper: f64,
    pub boundary_volume: f64,
    pub delta: f64,
    pub exponent: f64,
    pub rows: Vec<FillingRow>,
}

impl FillingReport {
    pub fn build(spec: &BoundaryMapSpec, pair: &str, lip_f_upper: f64, scales: &[f64]) -> Result<Self> {
        let delta = delta_constant(spec, lip_f_upper)?;
        let (n, k) = (spec.n(), spec.k());
        let e = fv_exponent(n, k);
        let rows = scales
            .iter()
            .map(|&l| {
                let mass = mass_upper(spec, l, lip_f_upper)?;
                let fill = filling_lower(spec, l)?;
                Ok(FillingRow {
                    scale: l,
                    mass_upper: mass,
                    filling_lower: fill,
                    identity_residual: (delta * mass.powf(e) - fill).abs() / fill,
                })
            })
            .collect::<Result<_>>()?;
        Ok(FillingReport {
            n,
            k,
            pair: pair.to_string(),
            integral_gap: spec.integral_gap(),
            lip_f_upper,
            boundary_volume: boundary_volume(n),
            delta,
            exponent: e,
            rows,
        })
    }

    /// Largest relative residual of `delta M^{(n+k+1)/n} = filling_lower`.
    pub fn max_identity_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.identity_residual).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::extension_boundary_value;
    use crate::jetmaps::ScalarField;

    fn canonical() -> BoundaryMapSpec {
        BoundaryMapSpec::canonical(1, 1, 1.0).unwrap()
    }

    #[test]
    fn mass_bound() {
        let s = canonical();
        assert_eq!(mass_upper(&s, 1.0, 1.0).unwrap(), 4.0);
        assert_eq!(mass_upper(&s, 2.0, 1.7).unwrap(), 8.0 * 1.7);
        let s2 = BoundaryMapSpec::canonical(2, 1, 1.0).unwrap();
        let ratio = mass_upper(&s2, 4.0, 1.3).unwrap() / mass_upper(&s2, 2.0, 1.3).unwrap();
        assert!((ratio - 4.0).abs() < 1e-14);
        let l = scale_for_mass(&s2, mass_upper(&s2, 3.0, 1.3).unwrap(), 1.3).unwrap();
        assert!((l - 3.0).abs() < 1e-13);
        assert!(mass_upper(&s, 0.0, 1.0).is_err());
    }

    #[test]
    fn filling_bound_matches_boundary_value() {
        let s = canonical();
        assert!((filling_lower(&s, 2.0).unwrap() - 4.0 / 15.0).abs() < 1e-15);
        assert!(
            (filling_lower(&s, 2.0).unwrap() - extension_boundary_value(&s.with_scale(2.0).unwrap())).abs() < 1e-15
        );
        let same = BoundaryMapSpec::new(ScalarField::zero(1), ScalarField::zero(1), 1, 1.0).unwrap();
        assert_eq!(filling_lower(&same, 5.0).unwrap(), 0.0);
        assert!(matches!(delta_constant(&same, 1.0), Err(JetError::ZeroGap)));
    }

    #[test]
    fn delta_formula() {
        let s = canonical();
        let lam = 2.3;
        let d = delta_constant(&s, lam).unwrap();
        assert!((d - 1.0 / (1920.0 * lam.powi(3))).abs() < 1e-15 * d);
        let half = delta_constant(&s, lam / 2.0).unwrap();
        assert!((half / d - 8.0).abs() < 1e-12);
    }

    #[test]
    fn identity_and_curve() {
        for (n, k) in [(1, 1), (2, 1), (1, 3)] {
            let s = BoundaryMapSpec::canonical(n, k, 1.0).unwrap();
            let r = FillingReport::build(&s, "canonical", 2.5, &[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
            assert!(r.max_identity_residual() < 1e-12);
        }
        let rows = fv_curve(&canonical(), 2.0, &[0.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(rows[0].lower_bound, 0.0);
        let slope = (rows[3].lower_bound / rows[2].lower_bound).log2();
        assert!((slope - 3.0).abs() < 1e-12);
        assert!(fv_curve(&canonical(), 2.0, &[-1.0]).is_err());
    }
}
