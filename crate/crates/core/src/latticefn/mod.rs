//! Lattice logarithm, inverse tangent integral, smooth Green's functions and the parametrix.

mod greens;
mod parametrix;

pub use greens::{smooth_greens_constant, SmoothGreens};
pub use parametrix::{
    greens_diagonal_derivatives, parametrix, DiagonalDerivatives, GreensDecomposition, ImageKind, ImageTerm, NeumannSeriesCheck, Parametrix,
    ParametrixConfig, ResidualSeries, SingularPart, DiagonalDifferences, neumann_series_check, residual_series,
};

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Catalan's constant.
pub const CATALAN: f64 = 0.915_965_594_177_219;

const MEMO_RADIUS: i64 = 256;
const QUAD_TOL: f64 = 1e-13;

/// Anisotropy weights of `(1/a) D_x² + (1/b) D_y²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeLogParams {
    pub a: f64,
    pub b: f64,
}

impl LatticeLogParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Config(format!("lattice log weights must be positive, got a = {a}, b = {b}")));
        }
        Ok(LatticeLogParams { a, b })
    }

    /// `w = atan(sqrt(b / a))`.
    pub fn w(&self) -> f64 {
        (self.b / self.a).sqrt().atan()
    }

    pub fn swapped(&self) -> Self {
        LatticeLogParams { a: self.b, b: self.a }
    }

    /// Constant `2 γ_e + log(16 / (a + b))` of the far-field expansion.
    pub fn kappa(&self) -> f64 {
        2.0 * EULER_GAMMA + (16.0 / (self.a + self.b)).ln()
    }
}

/// `Im Li₂(i t)`, the inverse tangent integral.
pub fn dilog_im(t: f64) -> f64 {
    if t < 0.0 {
        return -dilog_im(-t);
    }
    if t > 1.0 {
        return dilog_im(1.0 / t) + 0.5 * PI * t.ln();
    }
    if t <= 0.5 {
        let t2 = t * t;
        let mut term = t;
        let mut sum = 0.0;
        let mut k = 0u32;
        loop {
            let c = term / ((2 * k + 1) as f64).powi(2);
            sum += if k % 2 == 0 { c } else { -c };
            if c <= 1e-18 * sum.abs() {
                break;
            }
            term *= t2;
            k += 1;
        }
        return sum;
    }
    // Alternating series Σ (-1)^k t^{2k+1}/(2k+1)² with Cohen–Villegas–Zagier acceleration.
    let n = 28usize;
    let mut d = (3.0 + 8f64.sqrt()).powi(n as i32);
    d = 0.5 * (d + 1.0 / d);
    let (mut b, mut c, mut s) = (-1.0f64, -d, 0.0);
    let t2 = t * t;
    let mut tk = t;
    for k in 0..n {
        c = b - c;
        s += c * tk / ((2 * k + 1) as f64).powi(2);
        b *= (k as f64 + n as f64) * (k as f64 - n as f64) / ((k as f64 + 0.5) * (k as f64 + 1.0));
        tk *= t2;
    }
    s / d
}

type MemoKey = (u64, u64, i64, i64);

fn memo() -> &'static RwLock<HashMap<MemoKey, f64>> {
    static MEMO: OnceLock<RwLock<HashMap<MemoKey, f64>>> = OnceLock::new();
    MEMO.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Lattice logarithm: `𝕃(0,0) = 0`, `((1/a) D_x² + (1/b) D_y²) 𝕃 = δ`, logarithmic growth.
///
/// Computed as `(1/π) ∫_0^π (1 - cos(xθ) t^|y|) / sqrt(α(α + 2β)) dθ` with `α = (4/a) sin²(θ/2)`,
/// `β = 2/b`, after integrating the second Fourier variable in closed form.
pub fn lattice_log(p: LatticeLogParams, x: i64, y: i64) -> Result<f64> {
    let (mut x, mut y) = (x.abs(), y.abs());
    let mut p = p;
    if x > y {
        std::mem::swap(&mut x, &mut y);
        p = p.swapped();
    }
    if x == 0 && y == 0 {
        return Ok(0.0);
    }
    let key = (p.a.to_bits(), p.b.to_bits(), x, y);
    let cache = y <= MEMO_RADIUS;
    if cache {
        if let Some(&v) = memo().read().unwrap().get(&key) {
            return Ok(v);
        }
    }
    let v = lattice_log_quadrature(p, x, y)?;
    if cache {
        memo().write().unwrap().insert(key, v);
    }
    Ok(v)
}

fn lattice_log_quadrature(p: LatticeLogParams, x: i64, y: i64) -> Result<f64> {
    let beta = 2.0 / p.b;
    let (xf, yf) = (x as f64, y as f64);
    let f = |th: f64| {
        let sh = (0.5 * th).sin();
        let alpha = 4.0 / p.a * sh * sh;
        let s = (alpha * (alpha + 2.0 * beta)).sqrt();
        if s == 0.0 {
            return yf / beta;
        }
        let ln_t = ((alpha - s) / beta).ln_1p();
        let sx = (0.5 * xf * th).sin();
        (2.0 * sx * sx - (xf * th).cos() * (yf * ln_t).exp_m1()) / s
    };
    // Split at the oscillation scale so the adaptive rule starts well resolved.
    let pieces = ((x.max(1) as usize) * 2).min(512);
    let mut total = 0.0;
    for k in 0..pieces {
        let lo = PI * k as f64 / pieces as f64;
        let hi = PI * (k + 1) as f64 / pieces as f64;
        total += quad::adaptive(f, lo, hi, QUAD_TOL / pieces as f64, 1e-14).map_err(|e| Error::Quadrature(format!("lattice log at ({x}, {y}): {e}")))?;
    }
    Ok(total / PI)
}

/// Direct two-dimensional Fourier form, used to validate the one-dimensional reduction.
pub fn lattice_log_fourier_2d(p: LatticeLogParams, x: i64, y: i64, tol: f64) -> Result<f64> {
    let (xf, yf) = (x as f64, y as f64);
    // Integrate over [0, π]² using evenness; the integrand is bounded at the origin.
    let f = |th: f64, ph: f64| {
        let den = 2.0 / p.a * (1.0 - th.cos()) + 2.0 / p.b * (1.0 - ph.cos());
        if den == 0.0 {
            return 0.0;
        }
        let num = 1.0 - (xf * th).cos() * (yf * ph).cos();
        num / den
    };
    Ok(quad::adaptive_2d(f, 0.0, PI, 0.0, PI, tol)? / (PI * PI))
}

/// Far-field expansion of the lattice logarithm through order `r⁻²`.
pub fn lattice_log_asymptotic(p: LatticeLogParams, x: f64, y: f64) -> f64 {
    let (a, b) = (p.a, p.b);
    let r2 = a * x * x + b * y * y;
    let pref = (a * b).sqrt() / (4.0 * PI);
    let th = (b.sqrt() * y).atan2(a.sqrt() * x);
    pref * (r2.ln() + p.kappa()) + pref / (6.0 * r2) * ((a - b) * (2.0 * th).cos() - 0.5 * (a + b) * (4.0 * th).cos())
}

/// `D_x² 𝕃(0,0) = 2 𝕃(1,0)` in closed form.
pub fn lattice_log_dxx_origin(p: LatticeLogParams) -> f64 {
    2.0 * p.a / PI * p.w()
}

/// `(1/a) D_x² 𝕃 + (1/b) D_y² 𝕃` at a lattice point.
pub fn lattice_log_laplacian(p: LatticeLogParams, x: i64, y: i64) -> Result<f64> {
    let c = lattice_log(p, x, y)?;
    let dxx = lattice_log(p, x + 1, y)? + lattice_log(p, x - 1, y)? - 2.0 * c;
    let dyy = lattice_log(p, x, y + 1)? + lattice_log(p, x, y - 1)? - 2.0 * c;
    Ok(dxx / p.a + dyy / p.b)
}

/// One row of a lattice-log table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LatticeLogRow {
    pub x: i64,
    pub y: i64,
    pub value: f64,
    pub asymptotic_value: Option<f64>,
}

/// Values on `[-r, r]²`.
pub fn lattice_log_table(p: LatticeLogParams, radius: i64) -> Result<Vec<LatticeLogRow>> {
    let mut rows = Vec::new();
    for y in -radius..=radius {
        for x in -radius..=radius {
            let asymptotic_value = (x != 0 || y != 0).then(|| lattice_log_asymptotic(p, x as f64, y as f64));
            rows.push(LatticeLogRow { x, y, value: lattice_log(p, x, y)?, asymptotic_value });
        }
    }
    Ok(rows)
}

pub fn lattice_log_csv(rows: &[LatticeLogRow]) -> String {
    let mut s = String::from("x,y,value,asymptotic_value\n");
    for r in rows {
        let asym = r.asymptotic_value.map(crate::fmt17).unwrap_or_default();
        s.push_str(&format!("{},{},{},{}\n", r.x, r.y, crate::fmt17(r.value), asym));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> LatticeLogParams {
        LatticeLogParams::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn dilog_values() {
        assert_eq!(dilog_im(0.0), 0.0);
        assert!((dilog_im(1.0) - CATALAN).abs() < 1e-15);
        // Ti₂(1/2) from the direct series.
        let direct: f64 = (0..60).map(|k| (-1f64).powi(k) * 0.5f64.powi(2 * k + 1) / ((2 * k + 1) as f64).powi(2)).sum();
        assert!((dilog_im(0.5) - direct).abs() < 1e-16);
        let s: f64 = (0..200).map(|k| (-1f64).powi(k) * 0.75f64.powi(2 * k + 1) / ((2 * k + 1) as f64).powi(2)).sum();
        assert!((dilog_im(0.75) - s).abs() < 1e-15);
        assert!((dilog_im(-2.0) + dilog_im(2.0)).abs() < 1e-16);
    }

    #[test]
    fn dilog_continuous_across_one() {
        let lo = dilog_im(1.0 - 1e-9);
        let hi = dilog_im(1.0 + 1e-9);
        assert!((hi - lo).abs() < 1e-8);
    }

    #[test]
    fn origin_and_neighbors() {
        let p = unit();
        assert_eq!(lattice_log(p, 0, 0).unwrap(), 0.0);
        assert!((lattice_log(p, 1, 0).unwrap() - 0.25).abs() < 1e-13);
        let q = LatticeLogParams::new(4.0, 1.0).unwrap();
        assert!((lattice_log(q, 1, 0).unwrap() - 0.590_334_47).abs() < 1e-8);
        assert!((lattice_log(q, 0, 1).unwrap() - 0.352_416_38).abs() < 1e-8);
    }

    #[test]
    fn harmonic_away_from_origin() {
        for p in [unit(), LatticeLogParams::new(3.0, 0.5).unwrap()] {
            assert!((lattice_log_laplacian(p, 0, 0).unwrap() - 1.0).abs() < 1e-10);
            assert!(lattice_log_laplacian(p, 3, 2).unwrap().abs() < 1e-10);
            assert!(lattice_log_laplacian(p, 0, 7).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn one_dimensional_reduction_matches_double_integral() {
        let p = LatticeLogParams::new(4.0, 1.0).unwrap();
        for (x, y) in [(1, 0), (2, 1), (0, 3)] {
            let v1 = lattice_log(p, x, y).unwrap();
            let v2 = lattice_log_fourier_2d(p, x, y, 1e-11).unwrap();
            assert!((v1 - v2).abs() < 1e-8, "({x},{y}): {v1} vs {v2}");
        }
    }

    #[test]
    fn far_field_agrees() {
        let p = unit();
        let v = lattice_log(p, 50, 0).unwrap();
        assert!((v - lattice_log_asymptotic(p, 50.0, 0.0)).abs() < 1e-7);
        let q = LatticeLogParams::new(4.0, 1.0).unwrap();
        let v = lattice_log(q, 13, 17).unwrap();
        assert!((v - lattice_log_asymptotic(q, 13.0, 17.0)).abs() < 1e-6);
    }
}
