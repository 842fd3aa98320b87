//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Cached order-8 rule.
pub fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// Fixed-order Gauss–Legendre on [a, b].
pub fn fixed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule.0.iter().zip(&rule.1).map(|(&x, &w)| w * f(c + h * x)).sum::<f64>() * h
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * h, ((resk - resg) * h).abs())
}

/// Globally adaptive 15-point Gauss–Kronrod integration of `f` over [a, b].
///
/// Converges when the summed error estimate is below `max(abs_tol, rel_tol * |I|)`.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    adaptive_with_limit(f, a, b, abs_tol, rel_tol, 4000)
}

pub fn adaptive_with_limit<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&f, a, b);
    let mut segs = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if segs.len() >= max_intervals {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] after {max_intervals} intervals (error estimate {err:.3e})"
            )));
        }
        let k = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(k, _)| k)
            .unwrap();
        let (lo, hi, sv, se) = segs.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature(format!("interval [{lo}, {hi}] cannot be split further")));
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        total += v1 + v2 - sv;
        err += e1 + e2 - se;
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
        if !total.is_finite() {
            return Err(Error::Quadrature("non-finite integrand".into()));
        }
    }
    // Re-sum to shed accumulated rounding from the running update.
    Ok(segs.iter().map(|s| s.2).sum())
}

/// Iterated adaptive integration over a rectangle.
pub fn adaptive_2d<F: Fn(f64, f64) -> f64>(f: F, x0: f64, x1: f64, y0: f64, y1: f64, tol: f64) -> Result<f64> {
    let inner_err = std::cell::Cell::new(None);
    let outer = adaptive(
        |x| match adaptive(|y| f(x, y), y0, y1, tol * 0.1, tol * 0.1) {
            Ok(v) => v,
            Err(e) => {
                inner_err.set(Some(e));
                f64::NAN
            }
        },
        x0,
        x1,
        tol,
        tol,
    );
    if let Some(e) = inner_err.take() {
        return Err(e);
    }
    outer
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        for k in 0..16 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let got = fixed(|x| x.powi(k), -1.0, 1.0, &rule);
            assert!((got - exact).abs() < 1e-14, "degree {k}: {got} vs {exact}");
        }
        assert!((rule.1.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let v = adaptive(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 1e-13).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn adaptive_2d_area() {
        let v = adaptive_2d(|x, y| x * y, 0.0, 2.0, 0.0, 3.0, 1e-12).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
    }
}
