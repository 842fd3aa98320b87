//! Diagonal metric fields, Riemannian weights and the de Rham integration map.

pub mod expr;

use serde::Serialize;

use crate::complex::{Axis, CellComplex, Rect};
use crate::error::{Error, Result};
use crate::quad;
pub use expr::{parse, BinOp, Expr, Func, Var};

/// Parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricExpr {
    pub text: String,
    pub expr: Expr,
}

impl MetricExpr {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.expr.eval(x, y)
    }

    pub fn constant(v: f64) -> Self {
        MetricExpr { text: format!("{v:?}"), expr: Expr::Num(v) }
    }
}

pub fn parse_metric_expr(text: &str) -> Result<MetricExpr> {
    Ok(MetricExpr { text: text.to_string(), expr: parse(text)? })
}

/// Metric `gxx dx² + gyy dy²` on a rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub gxx: MetricExpr,
    pub gyy: MetricExpr,
    pub domain: Rect,
}

/// Pointwise invariants `lambda = sqrt(gxx gyy)` and `omega = sqrt(gyy / gxx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricFrame {
    pub lambda: f64,
    pub omega: f64,
}

impl MetricFrame {
    pub fn gxx(&self) -> f64 {
        self.lambda / self.omega
    }

    pub fn gyy(&self) -> f64 {
        self.lambda * self.omega
    }
}

impl MetricField {
    /// Builds a field and checks positivity on a 33 x 33 sample of the domain.
    pub fn new(gxx: MetricExpr, gyy: MetricExpr, domain: Rect) -> Result<Self> {
        let g = MetricField { gxx, gyy, domain };
        let n = 32;
        for i in 0..=n {
            for j in 0..=n {
                let x = domain.x0 + domain.width() * i as f64 / n as f64;
                let y = domain.y0 + domain.height() * j as f64 / n as f64;
                g.components(x, y)?;
            }
        }
        Ok(g)
    }

    pub fn parse(gxx: &str, gyy: &str, domain: Rect) -> Result<Self> {
        Self::new(parse_metric_expr(gxx)?, parse_metric_expr(gyy)?, domain)
    }

    pub fn constant(a: f64, b: f64, domain: Rect) -> Result<Self> {
        Self::new(MetricExpr::constant(a), MetricExpr::constant(b), domain)
    }

    pub fn identity(domain: Rect) -> Self {
        Self::constant(1.0, 1.0, domain).expect("identity metric is positive")
    }

    /// Short identifier used in reports.
    pub fn id(&self) -> String {
        format!("gxx={};gyy={}", self.gxx.text, self.gyy.text)
    }

    /// Constant components, if both expressions are constant.
    pub fn constant_components(&self) -> Option<(f64, f64)> {
        (self.gxx.expr.is_constant() && self.gyy.expr.is_constant()).then(|| (self.gxx.eval(0.0, 0.0), self.gyy.eval(0.0, 0.0)))
    }

    /// The field `c * g`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let wrap = |m: &MetricExpr| MetricExpr {
            text: format!("{c:?} * ({})", m.text),
            expr: Expr::Bin(BinOp::Mul, Box::new(Expr::Num(c)), Box::new(m.expr.clone())),
        };
        Self::new(wrap(&self.gxx), wrap(&self.gyy), self.domain)
    }

    /// `(gxx, gyy)` at a point, rejecting non-positive or non-finite values.
    pub fn components(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (a, b) = (self.gxx.eval(x, y), self.gyy.eval(x, y));
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
            return Err(Error::InvalidMetric { x, y, detail: format!("gxx = {a}, gyy = {b}") });
        }
        Ok((a, b))
    }

    pub fn frame(&self, x: f64, y: f64) -> Result<MetricFrame> {
        let (a, b) = self.components(x, y)?;
        Ok(MetricFrame { lambda: (a * b).sqrt(), omega: (b / a).sqrt() })
    }

    /// Laplace–Beltrami operator applied to a smooth function, evaluated exactly through
    /// symbolic differentiation.
    pub fn laplace_beltrami(&self, f: &Expr) -> impl Fn(f64, f64) -> f64 {
        let (gxx, gyy) = (self.gxx.expr.clone(), self.gyy.expr.clone());
        let (gxx_x, gyy_x) = (gxx.diff(Var::X), gyy.diff(Var::X));
        let (gxx_y, gyy_y) = (gxx.diff(Var::Y), gyy.diff(Var::Y));
        let (fx, fy) = (f.diff(Var::X), f.diff(Var::Y));
        let (fxx, fyy) = (fx.diff(Var::X), fy.diff(Var::Y));
        move |x, y| {
            let (a, b) = (gxx.eval(x, y), gyy.eval(x, y));
            let lam = (a * b).sqrt();
            let om = (b / a).sqrt();
            // d(omega)/dx and d(1/omega)/dy from the component derivatives.
            let om_x = 0.5 * om * (gyy_x.eval(x, y) / b - gxx_x.eval(x, y) / a);
            let iom_y = 0.5 / om * (gxx_y.eval(x, y) / a - gyy_y.eval(x, y) / b);
            (om_x * fx.eval(x, y) + om * fxx.eval(x, y) + iom_y * fy.eval(x, y) + fyy.eval(x, y) / om) / lam
        }
    }
}

/// Per-cell volume weights of a diagonal Riemannian structure.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannianWeights {
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl RiemannianWeights {
    pub fn uniform(counts: [usize; 3], w0: f64, w1: f64, w2: f64) -> Self {
        RiemannianWeights { w0: vec![w0; counts[0]], w1: vec![w1; counts[1]], w2: vec![w2; counts[2]] }
    }

    pub fn get(&self, q: usize) -> &[f64] {
        match q {
            0 => &self.w0,
            1 => &self.w1,
            _ => &self.w2,
        }
    }

    /// Reciprocal weights, as transported to the dual complex.
    pub fn reciprocal(&self) -> Self {
        let inv = |v: &[f64]| v.iter().map(|w| 1.0 / w).collect();
        RiemannianWeights { w0: inv(&self.w0), w1: inv(&self.w1), w2: inv(&self.w2) }
    }
}

/// Vertex weights `eps² λ`, edge weights `ω` (x-edges) or `1/ω` (y-edges) at midpoints,
/// face weights `1 / (eps² λ)` at centers.
pub fn weights_from_metric(x: &CellComplex, g: &MetricField) -> Result<RiemannianWeights> {
    let eps2 = x.mesh() * x.mesh();
    let w0 = (0..x.n_vertices())
        .map(|v| {
            let (px, py) = x.vertex_pos(v);
            Ok(eps2 * g.frame(px, py)?.lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    let w1 = (0..x.n_edges())
        .map(|e| {
            let (px, py) = x.edge_midpoint(e);
            let om = g.frame(px, py)?.omega;
            Ok(match x.edge(e).axis {
                Axis::X => om,
                Axis::Y => 1.0 / om,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let w2 = (0..x.n_faces())
        .map(|f| {
            let (px, py) = x.face_center(f);
            Ok(1.0 / (eps2 * g.frame(px, py)?.lambda))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RiemannianWeights { w0, w1, w2 })
}

type ScalarFn<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);

/// Smooth differential form given by component functions.
#[derive(Clone, Copy)]
pub enum Form<'a> {
    /// Function `f`.
    Zero(ScalarFn<'a>),
    /// `u dx + v dy`.
    One(ScalarFn<'a>, ScalarFn<'a>),
    /// `phi dx ∧ dy`.
    Two(ScalarFn<'a>),
}

impl Form<'_> {
    pub fn degree(&self) -> usize {
        match self {
            Form::Zero(_) => 0,
            Form::One(..) => 1,
            Form::Two(_) => 2,
        }
    }
}

/// de Rham map: point values, order-8 Gauss–Legendre line integrals along edges, and
/// tensor order-8 rules over faces.
pub fn integrate_form(x: &CellComplex, f: &Form) -> Vec<f64> {
    let rule = quad::gl8();
    match f {
        Form::Zero(f) => (0..x.n_vertices()).map(|v| {
            let (px, py) = x.vertex_pos(v);
            f(px, py)
        }).collect(),
        Form::One(u, v) => (0..x.n_edges())
            .map(|e| {
                let (t, h) = x.edge_endpoints(e);
                let (a, b) = (x.vertex_pos(t), x.vertex_pos(h));
                match x.edge(e).axis {
                    Axis::X => quad::fixed(|s| u(s, a.1), a.0, b.0, rule),
                    Axis::Y => quad::fixed(|s| v(a.0, s), a.1, b.1, rule),
                }
            })
            .collect(),
        Form::Two(phi) => (0..x.n_faces())
            .map(|k| {
                let (cx, cy) = x.face_center(k);
                let (hx, hy) = (0.5 * x.hx(), 0.5 * x.hy());
                quad::fixed(|s| quad::fixed(|t| phi(s, t), cy - hy, cy + hy, rule), cx - hx, cx + hx, rule)
            })
            .collect(),
    }
}

/// Discrete norm `Σ |σ| c(σ)²`.
pub fn discrete_norm(w: &RiemannianWeights, q: usize, c: &[f64]) -> f64 {
    w.get(q).iter().zip(c).map(|(w, c)| w * c * c).sum()
}

/// Continuum Hodge norm of a form under a diagonal metric.
pub fn continuum_norm(g: &MetricField, f: &Form, tol: f64) -> Result<f64> {
    let r = g.domain;
    let density = |x: f64, y: f64| -> f64 {
        let fr = match g.frame(x, y) {
            Ok(fr) => fr,
            Err(_) => return f64::NAN,
        };
        match f {
            Form::Zero(f) => f(x, y).powi(2) * fr.lambda,
            Form::One(u, v) => u(x, y).powi(2) * fr.omega + v(x, y).powi(2) / fr.omega,
            Form::Two(phi) => phi(x, y).powi(2) / fr.lambda,
        }
    };
    let v = quad::adaptive_2d(density, r.x0, r.x1, r.y0, r.y1, tol)?;
    if !v.is_finite() {
        return Err(Error::Quadrature("continuum norm is not finite".into()));
    }
    Ok(v)
}

/// Error-versus-mesh series with fitted log-log slope.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSeries {
    pub levels: Vec<u32>,
    pub epsilon: Vec<f64>,
    pub error: Vec<f64>,
    pub slope: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `|<I f, I f> - <f, f>|` across subdivision levels of `base`.
pub fn consistency_error(base: &CellComplex, levels: &[u32], g: &MetricField, f: &Form) -> Result<ConvergenceSeries> {
    if levels.len() < 3 {
        return Err(Error::Config("consistency series needs at least 3 levels".into()));
    }
    let exact = continuum_norm(g, f, 1e-13)?;
    let q = f.degree();
    let mut eps = Vec::new();
    let mut err = Vec::new();
    for &lvl in levels {
        let x = base.at_level(lvl);
        let w = weights_from_metric(&x, g)?;
        let c = integrate_form(&x, f);
        eps.push(x.mesh());
        err.push((discrete_norm(&w, q, &c) - exact).abs());
    }
    let slope = loglog_slope(&eps, &err);
    Ok(ConvergenceSeries { levels: levels.to_vec(), epsilon: eps, error: err, slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights_at_half_mesh() {
        let x = CellComplex::unit_square(2);
        let w = weights_from_metric(&x, &MetricField::identity(Rect::unit())).unwrap();
        assert!(w.w0.iter().all(|&v| v == 0.25));
        assert!(w.w1.iter().all(|&v| v == 1.0));
        assert!(w.w2.iter().all(|&v| v == 4.0));
    }

    #[test]
    fn anisotropic_edge_weights() {
        let x = CellComplex::unit_square(4);
        let g = MetricField::constant(4.0, 1.0, Rect::unit()).unwrap();
        let w = weights_from_metric(&x, &g).unwrap();
        assert_eq!(w.w1[x.xedge(0, 0)], 0.5);
        assert_eq!(w.w1[x.yedge(0, 0)], 2.0);
        assert_eq!(w.w0[0], 2.0 / 16.0);
    }

    #[test]
    fn nonpositive_metric_names_point() {
        let r = Rect::unit();
        let err = MetricField::parse("x - 0.5", "1", r).unwrap_err();
        assert!(matches!(err, Error::InvalidMetric { .. }));
    }

    #[test]
    fn exact_integrals() {
        let x = CellComplex::unit_square(4);
        let one = |_: f64, _: f64| 1.0;
        let zero = |_: f64, _: f64| 0.0;
        let c = integrate_form(&x, &Form::One(&one, &zero));
        for e in 0..x.n_edges() {
            let want = if x.edge(e).axis == Axis::X { 0.25 } else { 0.0 };
            assert!((c[e] - want).abs() < 1e-15);
        }
        let c = integrate_form(&x, &Form::Two(&one));
        assert!(c.iter().all(|v| (v - 0.0625).abs() < 1e-15));
        assert!(integrate_form(&x, &Form::Zero(&one)).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn laplace_beltrami_of_quadratic() {
        let g = MetricField::parse("(1 + x/2)^2", "1", Rect::unit()).unwrap();
        let f = parse("x^2 + y^2").unwrap();
        // lambda = 1 + x/2, omega = 1/(1 + x/2): (1/lam)[d/dx(2x/lam) + lam * 2]
        let lb = g.laplace_beltrami(&f);
        let (x, y) = (0.3, 0.6);
        let lam: f64 = 1.0 + x / 2.0;
        let want = (2.0 / lam - 2.0 * x * 0.5 / (lam * lam) + 2.0 * lam) / lam;
        assert!((lb(x, y) - want).abs() < 1e-13);
    }
}
