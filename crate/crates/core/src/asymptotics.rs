//! Expansion densities, their integrals over a domain, and least-squares fits of
//! log-determinant sweeps against `{ε⁻², ε⁻¹, log ε, 1}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::complex::{BoundarySpec, Rect, Side};
use crate::error::{Error, Result};
use crate::latticefn::dilog_im;
use crate::metric::MetricField;
use crate::quad;
use crate::spectral::SweepSample;

/// Which form of the densities to evaluate.
///
/// `Theorem` and `Derivation` are the two printed forms. `Corrected` carries the bulk density
/// with `-log λ`, half-weight boundary densities that depend on the side type, and a
/// corner-counting log coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityVariant {
    Theorem,
    Derivation,
    Corrected,
}

impl DensityVariant {
    pub const ALL: [DensityVariant; 3] = [DensityVariant::Theorem, DensityVariant::Derivation, DensityVariant::Corrected];

    pub fn name(self) -> &'static str {
        match self {
            DensityVariant::Theorem => "theorem",
            DensityVariant::Derivation => "derivation",
            DensityVariant::Corrected => "corrected",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown density variant `{s}` (expected theorem, derivation or corrected)")))
    }
}

/// Axis normal to a boundary segment: `X` for the left and right sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    X,
    Y,
}

impl Orientation {
    pub fn of(side: Side) -> Self {
        if side.is_vertical() {
            Orientation::X
        } else {
            Orientation::Y
        }
    }
}

fn bulk_dilog(omega: f64) -> f64 {
    2.0 / PI * (dilog_im(omega) + dilog_im(1.0 / omega))
}

/// Bulk density `F(λ, ω)`.
#[allow(non_snake_case)]
pub fn density_F(lambda: f64, omega: f64, variant: DensityVariant) -> f64 {
    match variant {
        DensityVariant::Derivation => lambda.ln() + bulk_dilog(omega),
        DensityVariant::Theorem | DensityVariant::Corrected => bulk_dilog(omega) - lambda.ln(),
    }
}

/// `log(1 + sqrt(1 + ω^∓2))`, the orientation-dependent boundary term.
fn edge_term(omega: f64, orientation: Orientation) -> f64 {
    let r = match orientation {
        Orientation::X => 1.0 / omega,
        Orientation::Y => omega,
    };
    (1.0 + (1.0 + r * r).sqrt()).ln()
}

/// Boundary density on a Dirichlet segment normal to `orientation`.
#[allow(non_snake_case)]
pub fn density_B(lambda: f64, omega: f64, orientation: Orientation, variant: DensityVariant) -> f64 {
    density_B_side(lambda, omega, orientation, true, variant)
}

/// Boundary density on a segment of the given type. Only `Corrected` distinguishes Dirichlet
/// from Neumann segments.
#[allow(non_snake_case)]
pub fn density_B_side(lambda: f64, omega: f64, orientation: Orientation, dirichlet: bool, variant: DensityVariant) -> f64 {
    match variant {
        DensityVariant::Theorem => {
            // Printed identically for both orientations, in terms of gxx gyy and gyy.
            let (p, gyy) = (lambda * lambda, lambda * omega);
            -0.5 * (p.sqrt() + (p + gyy).sqrt()).ln()
        }
        DensityVariant::Derivation => -edge_term(omega, orientation) - lambda.ln(),
        DensityVariant::Corrected => {
            let e = edge_term(omega, orientation);
            if dirichlet {
                0.5 * lambda.ln() - 0.5 * e
            } else {
                let tilt = match orientation {
                    Orientation::X => -omega.ln(),
                    Orientation::Y => omega.ln(),
                };
                0.5 * density_F(lambda, omega, DensityVariant::Corrected) + 0.5 * tilt - 0.5 * e
            }
        }
    }
}

/// Log coefficient predicted by each variant. `Corrected` adds `+1/8` per corner joining two
/// sides of the same type and `-1/8` per corner joining a Dirichlet and a Neumann side.
pub fn log_coefficient(boundary: &BoundarySpec, variant: DensityVariant) -> f64 {
    match variant {
        DensityVariant::Theorem => 0.5,
        DensityVariant::Derivation => -0.5,
        DensityVariant::Corrected => {
            let mut c = 0.0;
            for v in [Side::Left, Side::Right] {
                for h in [Side::Bottom, Side::Top] {
                    c += if boundary.contains(v) == boundary.contains(h) { 0.125 } else { -0.125 };
                }
            }
            c
        }
    }
}

/// Predicted coefficients of `ε⁻²`, `ε⁻¹` and `log ε`.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub variant: DensityVariant,
    pub I_F: f64,
    pub I_B: f64,
    pub c_log: f64,
}

pub const PREDICT_TOL: f64 = 1e-10;

/// Integrates the densities of `variant` over `rect` and its sides (coordinate arc length).
pub fn predict_expansion(g: &MetricField, rect: Rect, boundary: &BoundarySpec, variant: DensityVariant) -> Result<Prediction> {
    let frame = |x: f64, y: f64| g.frame(x, y).map(|f| (f.lambda, f.omega));
    let bad = std::cell::Cell::new(None);
    let guard = |r: Result<(f64, f64)>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            bad.set(Some(e));
            None
        }
    };
    let f = |x: f64, y: f64| guard(frame(x, y)).map_or(f64::NAN, |(l, o)| density_F(l, o, variant));
    let i_f = quad::adaptive_2d(f, rect.x0, rect.x1, rect.y0, rect.y1, PREDICT_TOL);
    if let Some(e) = bad.take() {
        return Err(e);
    }
    let i_f = i_f?;
    let mut i_b = 0.0;
    for side in Side::ALL {
        let o = Orientation::of(side);
        let d = boundary.contains(side);
        let on_side = |t: f64| match side {
            Side::Left => (rect.x0, t),
            Side::Right => (rect.x1, t),
            Side::Bottom => (t, rect.y0),
            Side::Top => (t, rect.y1),
        };
        let (t0, t1) = if side.is_vertical() { (rect.y0, rect.y1) } else { (rect.x0, rect.x1) };
        let b = |t: f64| {
            let (x, y) = on_side(t);
            guard(frame(x, y)).map_or(f64::NAN, |(l, om)| density_B_side(l, om, o, d, variant))
        };
        let v = quad::adaptive(b, t0, t1, PREDICT_TOL, PREDICT_TOL);
        if let Some(e) = bad.take() {
            return Err(e);
        }
        i_b += v?;
    }
    Ok(Prediction { variant, I_F: i_f, I_B: i_b, c_log: log_coefficient(boundary, variant) })
}

pub const BASIS_NAMES: [&str; 4] = ["c_bulk", "c_boundary", "c_log", "c_const"];

/// Basis value `k` at mesh `eps`: `ε⁻²`, `ε⁻¹`, `log ε`, `1`.
pub fn basis(k: usize, eps: f64) -> f64 {
    match k {
        0 => eps.powi(-2),
        1 => 1.0 / eps,
        2 => eps.ln(),
        _ => 1.0,
    }
}

/// Coefficients held fixed during a fit; `None` entries are fitted.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModelBasis {
    pub fixed: [Option<f64>; 4],
}

impl ModelBasis {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn with_fixed(mut self, k: usize, v: f64) -> Self {
        self.fixed[k] = Some(v);
        self
    }

    /// Fixes `c_bulk`, `c_boundary` and `c_log` to a prediction.
    pub fn from_prediction(p: &Prediction) -> Self {
        ModelBasis::free().with_fixed(0, p.I_F).with_fixed(1, p.I_B).with_fixed(2, p.c_log)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionCoeffs {
    pub c_bulk: f64,
    pub c_boundary: f64,
    pub c_log: f64,
    pub c_const: f64,
    /// Euclidean norm of the residual vector.
    pub residual: f64,
    /// Condition number of the column-scaled design matrix of the free coefficients.
    pub condition: f64,
}

impl ExpansionCoeffs {
    pub fn get(&self, k: usize) -> f64 {
        [self.c_bulk, self.c_boundary, self.c_log, self.c_const][k]
    }

    pub fn eval(&self, eps: f64) -> f64 {
        (0..4).map(|k| self.get(k) * basis(k, eps)).sum()
    }
}

pub const MIN_LEVELS: usize = 4;
const RANK_TOL: f64 = 1e-13;

/// Least-squares fit of `logdet(ε)` with some coefficients optionally held fixed.
pub fn fit_expansion(series: &[SweepSample], model: &ModelBasis) -> Result<ExpansionCoeffs> {
    let free: Vec<usize> = (0..4).filter(|&k| model.fixed[k].is_none()).collect();
    let m = series.len();
    if m < MIN_LEVELS.max(free.len()) {
        return Err(Error::Fit(format!("{m} samples, need at least {}", MIN_LEVELS.max(free.len()))));
    }
    if let Some(s) = series.iter().find(|s| !(s.epsilon > 0.0 && s.epsilon.is_finite() && s.logdet.is_finite())) {
        return Err(Error::Fit(format!("invalid sample epsilon = {}, logdet = {}", s.epsilon, s.logdet)));
    }
    let target: Vec<f64> = series
        .iter()
        .map(|s| s.logdet - (0..4).filter_map(|k| model.fixed[k].map(|c| c * basis(k, s.epsilon))).sum::<f64>())
        .collect();
    let mut coeffs = [0.0; 4];
    for k in 0..4 {
        if let Some(c) = model.fixed[k] {
            coeffs[k] = c;
        }
    }
    let mut condition = 1.0;
    if !free.is_empty() {
        let mut a = DMatrix::from_fn(m, free.len(), |i, j| basis(free[j], series[i].epsilon));
        let scale: Vec<f64> = (0..free.len()).map(|j| a.column(j).norm()).collect();
        for (j, s) in scale.iter().enumerate() {
            a.column_mut(j).unscale_mut(*s);
        }
        let svd = a.svd(true, true);
        let sv = &svd.singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > RANK_TOL * smax) {
            return Err(Error::Fit(format!("rank-deficient design matrix (singular values {smax:.3e} .. {smin:.3e})")));
        }
        condition = smax / smin;
        let x = svd
            .solve(&DVector::from_vec(target.clone()), 0.0)
            .map_err(|e| Error::Fit(e.to_string()))?;
        for (j, &k) in free.iter().enumerate() {
            coeffs[k] = x[j] / scale[j];
        }
    }
    let residual = series
        .iter()
        .map(|s| {
            let r = s.logdet - (0..4).map(|k| coeffs[k] * basis(k, s.epsilon)).sum::<f64>();
            r * r
        })
        .sum::<f64>()
        .sqrt();
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Fit("non-finite coefficients".into()));
    }
    Ok(ExpansionCoeffs { c_bulk: coeffs[0], c_boundary: coeffs[1], c_log: coeffs[2], c_const: coeffs[3], residual, condition })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FittedBlock {
    pub c_bulk: f64,
    pub c_boundary: f64,
    pub c_log: f64,
    pub c_const: f64,
}

impl From<&ExpansionCoeffs> for FittedBlock {
    fn from(c: &ExpansionCoeffs) -> Self {
        FittedBlock { c_bulk: c.c_bulk, c_boundary: c.c_boundary, c_log: c.c_log, c_const: c.c_const }
    }
}

/// Per-variant comparison. `fitted` is the unconstrained fit; `residual` is the residual with
/// the three leading coefficients held at the variant's prediction.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize)]
pub struct VariantReport {
    pub variant: DensityVariant,
    pub I_F: f64,
    pub I_B: f64,
    pub c_log_predicted: f64,
    pub fitted: FittedBlock,
    pub residual: f64,
    pub deltas: FittedBlock,
}

#[derive(Debug, Clone, Serialize)]
pub struct Adjudication {
    pub selected_variant: DensityVariant,
    /// `+` when the fitted log coefficient has the sign of `+(1/2) log ε`.
    pub log_sign: String,
    pub fitted: ExpansionCoeffs,
    pub variants: Vec<VariantReport>,
}

/// Fits `series` freely and against each variant's prediction; selects the variant with the
/// smallest constrained residual.
pub fn adjudicate(series: &[SweepSample], g: &MetricField, boundary: &BoundarySpec) -> Result<Adjudication> {
    let fitted = fit_expansion(series, &ModelBasis::free())?;
    let mut variants = Vec::new();
    for v in DensityVariant::ALL {
        let p = predict_expansion(g, g.domain, boundary, v)?;
        let constrained = fit_expansion(series, &ModelBasis::from_prediction(&p))?;
        variants.push(VariantReport {
            variant: v,
            I_F: p.I_F,
            I_B: p.I_B,
            c_log_predicted: p.c_log,
            fitted: (&fitted).into(),
            residual: constrained.residual,
            deltas: FittedBlock {
                c_bulk: fitted.c_bulk - p.I_F,
                c_boundary: fitted.c_boundary - p.I_B,
                c_log: fitted.c_log - p.c_log,
                c_const: fitted.c_const - constrained.c_const,
            },
        });
    }
    // Ties go to the later variant, which covers every boundary configuration.
    let selected = variants
        .iter()
        .rev()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .map(|r| r.variant)
        .expect("three variants");
    let log_sign = if fitted.c_log >= 0.0 { "+" } else { "-" }.to_string();
    Ok(Adjudication { selected_variant: selected, log_sign, fitted, variants })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latticefn::CATALAN;
    use crate::spectral::logdet_constant_oracle;

    #[test]
    fn identity_values() {
        for v in DensityVariant::ALL {
            assert!((density_F(1.0, 1.0, v) - 4.0 * CATALAN / PI).abs() < 1e-14);
        }
        let d = density_B(1.0, 1.0, Orientation::X, DensityVariant::Derivation);
        assert!((d - (2f64.sqrt() - 1.0).ln()).abs() < 1e-15);
        let t = density_B(1.0, 1.0, Orientation::Y, DensityVariant::Theorem);
        assert!((t + 0.5 * (1.0 + 2f64.sqrt()).ln()).abs() < 1e-15);
        assert!((density_F(3.0, 1.0, DensityVariant::Derivation) - 4.0 * CATALAN / PI - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn orientation_swaps_omega() {
        for v in [DensityVariant::Derivation, DensityVariant::Corrected] {
            let bx = density_B(1.3, 2.0, Orientation::X, v);
            let by = density_B(1.3, 0.5, Orientation::Y, v);
            assert!((bx - by).abs() < 1e-15);
        }
    }

    #[test]
    fn scan_is_finite() {
        for k in 0..=100 {
            let om = 0.1 * 100f64.powf(k as f64 / 100.0);
            for v in DensityVariant::ALL {
                for o in [Orientation::X, Orientation::Y] {
                    assert!(density_B(1.0, om, o, v).is_finite());
                }
                assert!(density_F(1.0, om, v).is_finite());
            }
        }
    }

    #[test]
    fn corner_rule() {
        assert_eq!(log_coefficient(&BoundarySpec::all(), DensityVariant::Corrected), 0.5);
        let one = BoundarySpec::new(&[Side::Bottom]).unwrap();
        assert_eq!(log_coefficient(&one, DensityVariant::Corrected), 0.0);
        let lr = BoundarySpec::new(&[Side::Left, Side::Right]).unwrap();
        assert_eq!(log_coefficient(&lr, DensityVariant::Corrected), -0.5);
    }

    #[test]
    fn identity_prediction_and_doubling() {
        let g = MetricField::identity(Rect::unit());
        let p = predict_expansion(&g, Rect::unit(), &BoundarySpec::all(), DensityVariant::Derivation).unwrap();
        assert!((p.I_F - 4.0 * CATALAN / PI).abs() < 1e-10);
        assert!((p.I_B - 4.0 * (2f64.sqrt() - 1.0).ln()).abs() < 1e-10);
        let r2 = Rect::new(0.0, 2.0, 0.0, 2.0).unwrap();
        let g2 = MetricField::identity(r2);
        let q = predict_expansion(&g2, r2, &BoundarySpec::all(), DensityVariant::Derivation).unwrap();
        assert!((q.I_F - 4.0 * p.I_F).abs() < 1e-9 && (q.I_B - 2.0 * p.I_B).abs() < 1e-9);
    }

    #[test]
    fn exact_synthetic_series() {
        let c = [1.25, -0.75, 0.5, 2.0];
        let s: Vec<SweepSample> = (2..8)
            .map(|k| {
                let e = 0.5f64.powi(k);
                SweepSample { epsilon: e, logdet: (0..4).map(|j| c[j] * basis(j, e)).sum() }
            })
            .collect();
        let f = fit_expansion(&s, &ModelBasis::free()).unwrap();
        for k in 0..4 {
            assert!((f.get(k) - c[k]).abs() < 1e-9, "{k}: {}", f.get(k));
        }
        assert!(f.residual < 1e-9);
        let fixed = fit_expansion(&s, &ModelBasis::free().with_fixed(0, 1.25).with_fixed(1, -0.75)).unwrap();
        assert!((fixed.c_log - 0.5).abs() < 1e-9);
        assert!(fit_expansion(&s[..3], &ModelBasis::free()).is_err());
    }

    #[test]
    fn duplicate_meshes_are_rank_deficient() {
        let s = vec![SweepSample { epsilon: 0.1, logdet: 1.0 }; 5];
        assert!(matches!(fit_expansion(&s, &ModelBasis::free()), Err(Error::Fit(_))));
    }

    #[test]
    fn oracle_series_recovers_bulk() {
        let s: Vec<SweepSample> = [16usize, 32, 64, 128, 256]
            .iter()
            .map(|&n| SweepSample {
                epsilon: 1.0 / n as f64,
                logdet: logdet_constant_oracle(n - 1, n - 1, 1.0, 1.0, &BoundarySpec::all()).logdet,
            })
            .collect();
        let f = fit_expansion(&s, &ModelBasis::free()).unwrap();
        assert!((f.c_bulk / (4.0 * CATALAN / PI) - 1.0).abs() < 1e-3, "{f:?}");
    }
}
