//! Parametrix `G^i` for `Δ̂` on a constant-metric rectangle: lattice logarithms replace the
//! logarithmic singularities of the continuum Green's function near the source and near its
//! reflections in boundary sides within the collar width `δ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::greens::SmoothGreens;
use super::{lattice_log, LatticeLogParams};
use crate::complex::{BoundarySpec, CellComplex, Rect, Side};
use crate::error::{Error, Result};
use crate::metric::{loglog_slope, weights_from_metric, MetricField};
use crate::operators::{laplacian0, LaplacianBundle};
use crate::spectral::SymmetrizedSolver;

#[derive(Debug, Clone)]
pub struct ParametrixConfig {
    pub metric: MetricField,
    pub boundary: BoundarySpec,
    pub base: CellComplex,
    pub level: u32,
    /// Collar width; defaults to 1/8 of the shorter side.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageKind {
    Direct,
    Side(Side),
    Corner(Side, Side),
}

/// A source or one of its reflections. `sign` is -1 per Dirichlet reflection.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ImageTerm {
    pub kind: ImageKind,
    pub sign: f64,
    pub lattice: (i64, i64),
    pub continuum: (f64, f64),
}

/// One singular term: its continuum logarithm and the lattice replacement.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SingularPart {
    pub image: ImageTerm,
    /// `-(√ab/4π) s ln(a Δx² + b Δy²)`.
    pub log_part: f64,
    /// `s (-𝕃(Δ/ε) + c₀)`.
    pub lattice_part: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GreensDecomposition {
    /// Continuum Green's function minus every replaced logarithm.
    pub smooth: f64,
    pub parts: Vec<SingularPart>,
    /// `smooth + Σ lattice_part`.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Parametrix {
    pub complex: CellComplex,
    pub bundle: LaplacianBundle,
    pub greens: SmoothGreens,
    pub lattice: LatticeLogParams,
    pub epsilon: f64,
    pub delta: f64,
    /// `(√ab/4π)(2γ_e + ln(16/(a+b)) - 2 ln ε)`.
    pub c0: f64,
    pref: f64,
}

pub fn parametrix(cfg: &ParametrixConfig) -> Result<Parametrix> {
    Parametrix::new(cfg)
}

impl Parametrix {
    pub fn new(cfg: &ParametrixConfig) -> Result<Self> {
        let (a, b) = cfg
            .metric
            .constant_components()
            .ok_or_else(|| Error::Config("the parametrix needs a constant metric".into()))?;
        let x = cfg.base.at_level(cfg.level);
        if (x.hx() - x.hy()).abs() > 1e-12 * x.hx() {
            return Err(Error::Config(format!("the parametrix needs square cells, got {} by {}", x.hx(), x.hy())));
        }
        let rect = x.rect();
        let short = rect.width().min(rect.height());
        let delta = cfg.delta.unwrap_or(short / 8.0);
        let eps = x.mesh();
        if delta <= 2.0 * eps {
            return Err(Error::Config(format!("collar width {delta} must exceed twice the mesh {eps}")));
        }
        if 2.0 * delta > short {
            return Err(Error::Config(format!("collar width {delta} reaches opposite sides of a {short} domain")));
        }
        let w = weights_from_metric(&x, &cfg.metric)?;
        let bundle = laplacian0(&x, &w, &cfg.boundary)?;
        // Neumann rows reflect about the half-cell line outside each free side.
        let half = 0.5 * eps;
        let grow = |s: Side| if cfg.boundary.contains(s) { 0.0 } else { half };
        let effective = Rect::new(rect.x0 - grow(Side::Left), rect.x1 + grow(Side::Right), rect.y0 - grow(Side::Bottom), rect.y1 + grow(Side::Top))?;
        let greens = SmoothGreens::new(a, b, effective, cfg.boundary)?;
        let lattice = LatticeLogParams::new(a, b)?;
        let pref = (a * b).sqrt() / (4.0 * PI);
        let c0 = pref * (lattice.kappa() - 2.0 * eps.ln());
        Ok(Parametrix { complex: x, bundle, greens, lattice, epsilon: eps, delta, c0, pref })
    }

    pub fn n(&self) -> usize {
        self.bundle.n()
    }

    fn dirichlet(&self, s: Side) -> bool {
        self.greens.boundary.contains(s)
    }

    fn reflect_lattice(&self, s: Side, (i, j): (i64, i64)) -> (i64, i64) {
        // Neumann rows behave as an even reflection about the half-cell line outside the side.
        let shift = if self.dirichlet(s) { 0 } else { 1 };
        let (nx, ny) = (self.complex.nx() as i64, self.complex.ny() as i64);
        match s {
            Side::Left => (-i - shift, j),
            Side::Right => (2 * nx + shift - i, j),
            Side::Bottom => (i, -j - shift),
            Side::Top => (i, 2 * ny + shift - j),
        }
    }

    fn lattice_position(&self, (i, j): (i64, i64)) -> (f64, f64) {
        let r = self.complex.rect();
        (r.x0 + i as f64 * self.complex.hx(), r.y0 + j as f64 * self.complex.hy())
    }

    fn side_distance(&self, s: Side, (x, y): (f64, f64)) -> f64 {
        let r = self.complex.rect();
        match s {
            Side::Left => x - r.x0,
            Side::Right => r.x1 - x,
            Side::Bottom => y - r.y0,
            Side::Top => r.y1 - y,
        }
    }

    /// Sides whose collar contains the vertex.
    pub fn collar_sides(&self, v: usize) -> Vec<Side> {
        let p = self.complex.vertex_pos(v);
        Side::ALL.iter().copied().filter(|&s| self.side_distance(s, p) < self.delta).collect()
    }

    /// Source at vertex `v` and the reflections replaced by lattice logarithms.
    pub fn images(&self, v: usize) -> Vec<ImageTerm> {
        let (i, j) = self.complex.vertex_ij(v);
        let lat = (i as i64, j as i64);
        let pos = self.complex.vertex_pos(v);
        let sign = |s: Side| if self.dirichlet(s) { -1.0 } else { 1.0 };
        let mut out = vec![ImageTerm { kind: ImageKind::Direct, sign: 1.0, lattice: lat, continuum: pos }];
        let near = self.collar_sides(v);
        for &s in &near {
            let lr = self.reflect_lattice(s, lat);
            out.push(ImageTerm { kind: ImageKind::Side(s), sign: sign(s), lattice: lr, continuum: self.lattice_position(lr) });
        }
        for &s in near.iter().filter(|s| s.is_vertical()) {
            for &t in near.iter().filter(|t| !t.is_vertical()) {
                let lr = self.reflect_lattice(t, self.reflect_lattice(s, lat));
                out.push(ImageTerm { kind: ImageKind::Corner(s, t), sign: sign(s) * sign(t), lattice: lr, continuum: self.lattice_position(lr) });
            }
        }
        out
    }

    fn dist2(&self, p: (f64, f64), q: (f64, f64)) -> f64 {
        let (dx, dy) = (p.0 - q.0, p.1 - q.1);
        self.greens.a * dx * dx + self.greens.b * dy * dy
    }

    /// Continuum Green's function minus the logarithms of the source and its replaced reflections.
    fn smooth(&self, p: (f64, f64), imgs: &[ImageTerm]) -> f64 {
        let mut v = self.greens.regular(p, imgs[0].continuum);
        for r in &imgs[1..] {
            v += self.pref * r.sign * self.dist2(p, r.continuum).ln();
        }
        v
    }

    fn lattice_part(&self, (i, j): (i64, i64), r: &ImageTerm) -> Result<f64> {
        Ok(r.sign * (self.c0 - lattice_log(self.lattice, i - r.lattice.0, j - r.lattice.1)?))
    }

    fn entry_with(&self, v1: usize, imgs: &[ImageTerm]) -> Result<f64> {
        let (i, j) = self.complex.vertex_ij(v1);
        let lat = (i as i64, j as i64);
        let mut total = self.smooth(self.complex.vertex_pos(v1), imgs);
        for r in imgs {
            total += self.lattice_part(lat, r)?;
        }
        Ok(total)
    }

    /// `G^i(v1, v2)` for vertices.
    pub fn entry(&self, v1: usize, v2: usize) -> Result<f64> {
        self.entry_with(v1, &self.images(v2))
    }

    pub fn decompose(&self, v1: usize, v2: usize) -> Result<GreensDecomposition> {
        let imgs = self.images(v2);
        let p = self.complex.vertex_pos(v1);
        let (i, j) = self.complex.vertex_ij(v1);
        let smooth = self.smooth(p, &imgs);
        let mut parts = Vec::new();
        let mut value = smooth;
        for r in &imgs {
            let d2 = self.dist2(p, r.continuum);
            let log_part = if d2 > 0.0 { -self.pref * r.sign * d2.ln() } else { f64::NEG_INFINITY * r.sign };
            let lattice_part = self.lattice_part((i as i64, j as i64), r)?;
            value += lattice_part;
            parts.push(SingularPart { image: *r, log_part, lattice_part });
        }
        Ok(GreensDecomposition { smooth, parts, value })
    }

    /// Column of `G^i` for the unknown with row index `col`, indexed by unknown rows.
    pub fn column(&self, col: usize) -> Result<Vec<f64>> {
        let imgs = self.images(self.bundle.vertices[col]);
        self.bundle.vertices.par_iter().map(|&v| self.entry_with(v, &imgs)).collect()
    }

    pub fn dense(&self) -> Result<DMatrix<f64>> {
        let n = self.n();
        let cols: Vec<Vec<f64>> = (0..n).into_par_iter().map(|c| self.column(c)).collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(n, n, |r, c| cols[c][r]))
    }

    /// Column of `R = I - Δ̂ G^i`.
    pub fn residual_column(&self, col: usize) -> Result<Vec<f64>> {
        let g = self.column(col)?;
        let mut r: Vec<f64> = self.bundle.delta0_hat.matvec(&g).iter().map(|v| -v).collect();
        r[col] += 1.0;
        Ok(r)
    }

    /// Row of `R` at the unknown `row`, over all columns.
    pub fn residual_row(&self, row: usize) -> Result<Vec<f64>> {
        let stencil: Vec<(usize, f64)> = self.bundle.delta0_hat.row(row).collect();
        (0..self.n())
            .into_par_iter()
            .map(|c| {
                let imgs = self.images(self.bundle.vertices[c]);
                let mut s = if c == row { 1.0 } else { 0.0 };
                for &(q, w) in &stencil {
                    s -= w * self.entry_with(self.bundle.vertices[q], &imgs)?;
                }
                Ok(s)
            })
            .collect()
    }

    /// Unknown rows on a coarse sub-lattice plus the three lines nearest every side.
    pub fn sample_columns(&self) -> Vec<usize> {
        let pick = |n: usize| -> Vec<usize> {
            let stride = (n / 8).max(1);
            let mut v: Vec<usize> = (0..=n).filter(|&k| k <= 3 || k + 3 >= n || k % stride == 0).collect();
            v.dedup();
            v
        };
        let (nx, ny) = (self.complex.nx(), self.complex.ny());
        let mut out = Vec::new();
        for j in pick(ny) {
            for i in pick(nx) {
                let r = self.bundle.row_of[self.complex.vertex(i, j)];
                if r != usize::MAX {
                    out.push(r);
                }
            }
        }
        out
    }

    /// Unknown nearest the center of the rectangle.
    pub fn center_row(&self) -> usize {
        let (i, j) = (self.complex.nx() / 2, self.complex.ny() / 2);
        self.bundle.row_of[self.complex.vertex(i, j)]
    }
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualSeries {
    pub levels: Vec<u32>,
    pub epsilon: Vec<f64>,
    /// Largest column L1 norm of `R` over sampled columns.
    pub column_l1: Vec<f64>,
    pub column_slope: f64,
    /// L1 norm of the row of `R` at the center.
    pub bulk_row_l1: Vec<f64>,
    pub bulk_row_slope: f64,
}

/// Residual norms of the parametrix across levels.
pub fn residual_series(cfg: &ParametrixConfig, levels: &[u32]) -> Result<ResidualSeries> {
    let mut out = ResidualSeries { levels: levels.to_vec(), epsilon: vec![], column_l1: vec![], column_slope: f64::NAN, bulk_row_l1: vec![], bulk_row_slope: f64::NAN };
    for &level in levels {
        let p = Parametrix::new(&ParametrixConfig { level, ..cfg.clone() })?;
        let worst = p
            .sample_columns()
            .par_iter()
            .map(|&c| p.residual_column(c).map(|r| l1(&r)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        out.epsilon.push(p.epsilon);
        out.column_l1.push(worst);
        out.bulk_row_l1.push(l1(&p.residual_row(p.center_row())?));
    }
    if levels.len() >= 2 {
        out.column_slope = loglog_slope(&out.epsilon, &out.column_l1);
        out.bulk_row_slope = loglog_slope(&out.epsilon, &out.bulk_row_l1);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct NeumannSeriesCheck {
    pub levels: Vec<u32>,
    pub epsilon: Vec<f64>,
    /// Max-norm distance to `Δ̂⁻¹` on sampled columns for `G`, `G(I+R)`, `G(I+R+R²)`.
    pub error_terms1: Vec<f64>,
    pub error_terms2: Vec<f64>,
    pub error_terms3: Vec<f64>,
}

/// Compares truncated Neumann series `G(I + R + R² ...)` with a direct solve.
pub fn neumann_series_check(cfg: &ParametrixConfig, levels: &[u32]) -> Result<NeumannSeriesCheck> {
    let mut out = NeumannSeriesCheck { levels: levels.to_vec(), epsilon: vec![], error_terms1: vec![], error_terms2: vec![], error_terms3: vec![] };
    for &level in levels {
        let p = Parametrix::new(&ParametrixConfig { level, ..cfg.clone() })?;
        let g = p.dense()?;
        let a = &p.bundle.delta0_hat;
        let solver = SymmetrizedSolver::new(a, &p.bundle.w0)?;
        let n = p.n();
        let mut errs = [0.0f64; 3];
        for c in p.sample_columns() {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            let exact = solver.solve(&e);
            let g0: Vec<f64> = g.column(c).iter().copied().collect();
            let mut r1: Vec<f64> = a.matvec(&g0).iter().map(|v| -v).collect();
            r1[c] += 1.0;
            let g1 = (&g * DVector::from_vec(r1.clone())).data.as_vec().clone();
            let r2: Vec<f64> = r1.iter().zip(a.matvec(&g1)).map(|(r, v)| r - v).collect();
            let g2 = (&g * DVector::from_vec(r2)).data.as_vec().clone();
            for k in 0..n {
                let s0 = g0[k];
                let s1 = s0 + g1[k];
                let s2 = s1 + g2[k];
                errs[0] = errs[0].max((s0 - exact[k]).abs());
                errs[1] = errs[1].max((s1 - exact[k]).abs());
                errs[2] = errs[2].max((s2 - exact[k]).abs());
            }
        }
        out.epsilon.push(p.epsilon);
        out.error_terms1.push(errs[0]);
        out.error_terms2.push(errs[1]);
        out.error_terms3.push(errs[2]);
    }
    Ok(out)
}

/// Second and central first differences in the first argument, on the diagonal.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagonalDifferences {
    pub dxx: f64,
    pub dx: f64,
    pub dyy: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalDerivatives {
    pub point: (f64, f64),
    /// Euclidean distance to the boundary.
    pub distance: f64,
    pub collar_sides: Vec<Side>,
    /// Differences of `-Δ̂⁻¹`, the inverse of `(1/a) D_x² + (1/b) D_y²` with the boundary conditions.
    pub exact: DiagonalDifferences,
    /// Lattice logarithm of the source alone.
    pub bulk: DiagonalDifferences,
    /// Source plus reflections in collar sides.
    pub with_images: DiagonalDifferences,
}

/// Diagonal differences of the exact discrete inverse at the unknown nearest `p`, with the
/// lattice-logarithm predictions.
pub fn greens_diagonal_derivatives(cfg: &ParametrixConfig, p: (f64, f64)) -> Result<DiagonalDerivatives> {
    let par = Parametrix::new(cfg)?;
    let x = &par.complex;
    let r = x.rect();
    let i = ((p.0 - r.x0) / x.hx()).round().clamp(1.0, x.nx() as f64 - 1.0) as usize;
    let j = ((p.1 - r.y0) / x.hy()).round().clamp(1.0, x.ny() as f64 - 1.0) as usize;
    let v = x.vertex(i, j);
    let row = par.bundle.row_of[v];
    if row == usize::MAX {
        return Err(Error::Config("derivative point lies on a Dirichlet side".into()));
    }
    let solver = SymmetrizedSolver::new(&par.bundle.delta0_hat, &par.bundle.w0)?;
    let mut e = vec![0.0; par.n()];
    e[row] = 1.0;
    let col = par.bundle.extend(&solver.solve(&e), x.n_vertices());
    let k = |ii: usize, jj: usize| -col[x.vertex(ii, jj)];
    let exact = DiagonalDifferences {
        dxx: k(i + 1, j) + k(i - 1, j) - 2.0 * k(i, j),
        dx: 0.5 * (k(i + 1, j) - k(i - 1, j)),
        dyy: k(i, j + 1) + k(i, j - 1) - 2.0 * k(i, j),
        dy: 0.5 * (k(i, j + 1) - k(i, j - 1)),
    };
    let lp = par.lattice;
    let ll = |a: i64, b: i64| lattice_log(lp, a, b);
    let bulk = DiagonalDifferences { dxx: 2.0 * ll(1, 0)?, dx: 0.0, dyy: 2.0 * ll(0, 1)?, dy: 0.0 };
    let mut with_images = bulk;
    let (li, lj) = (i as i64, j as i64);
    for img in &par.images(v)[1..] {
        let (vx, vy) = (li - img.lattice.0, lj - img.lattice.1);
        let c = ll(vx, vy)?;
        with_images.dxx += img.sign * (ll(vx + 1, vy)? + ll(vx - 1, vy)? - 2.0 * c);
        with_images.dx += img.sign * 0.5 * (ll(vx + 1, vy)? - ll(vx - 1, vy)?);
        with_images.dyy += img.sign * (ll(vx, vy + 1)? + ll(vx, vy - 1)? - 2.0 * c);
        with_images.dy += img.sign * 0.5 * (ll(vx, vy + 1)? - ll(vx, vy - 1)?);
    }
    let pos = x.vertex_pos(v);
    let distance = Side::ALL.iter().map(|&s| par.side_distance(s, pos)).fold(f64::INFINITY, f64::min);
    Ok(DiagonalDerivatives { point: pos, distance, collar_sides: par.collar_sides(v), exact, bulk, with_images })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(a: f64, b: f64, l: BoundarySpec, level: u32) -> ParametrixConfig {
        ParametrixConfig { metric: MetricField::constant(a, b, Rect::unit()).unwrap(), boundary: l, base: CellComplex::unit_square(1), level, delta: None }
    }

    #[test]
    fn bulk_column_is_nearly_inverted() {
        let p = Parametrix::new(&cfg(1.0, 1.0, BoundarySpec::all(), 5)).unwrap();
        let r = p.residual_column(p.center_row()).unwrap();
        assert!(l1(&r) < 0.05, "{}", l1(&r));
    }

    #[test]
    fn dirichlet_images_cancel_on_the_side() {
        let p = Parametrix::new(&cfg(4.0, 1.0, BoundarySpec::all(), 5)).unwrap();
        let x = &p.complex;
        let src = x.vertex(2, 9);
        let imgs = p.images(src);
        assert!(imgs.iter().any(|t| t.kind == ImageKind::Side(Side::Left)));
        let on_side = x.vertex(0, 11);
        assert!(p.entry_with(on_side, &imgs).unwrap().abs() < 1e-3);
    }

    #[test]
    fn rejects_wide_collar_and_varying_metric() {
        let mut c = cfg(1.0, 1.0, BoundarySpec::all(), 5);
        c.delta = Some(0.6);
        assert!(matches!(Parametrix::new(&c), Err(Error::Config(_))));
        c.delta = Some(0.01);
        assert!(matches!(Parametrix::new(&c), Err(Error::Config(_))));
        c.delta = None;
        c.metric = MetricField::parse("1 + x", "1", Rect::unit()).unwrap();
        assert!(matches!(Parametrix::new(&c), Err(Error::Config(_))));
    }

    #[test]
    fn diagonal_second_difference_near_property_value() {
        let d = greens_diagonal_derivatives(&cfg(1.0, 1.0, BoundarySpec::all(), 5), (0.5, 0.5)).unwrap();
        assert!((d.exact.dxx - 0.5).abs() < 1e-3, "{:?}", d.exact);
        assert!(d.exact.dx.abs() < 1e-12);
    }
}
