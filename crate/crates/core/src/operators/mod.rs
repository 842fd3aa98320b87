//! Coboundary, codifferential, Laplacian and Dirac operators with mixed boundary conditions.
//!
//! Relative cochains `C^q(X, L)` live on cells not in `L`. An edge joining an unknown vertex
//! to a vertex of `L` stays in the complex unless the edge itself lies in `L`, so the missing
//! neighbor acts as a zero Dirichlet value.

mod sparse;

pub use sparse::SparseOperator;

use serde::Serialize;

use crate::complex::{BoundarySpec, CellComplex, CellMask, CellRef, ChainComplex};
use crate::error::{Error, Result};
use crate::metric::{integrate_form, loglog_slope, weights_from_metric, ConvergenceSeries, Expr, Form, MetricField, RiemannianWeights};

fn coboundary_of(cc: &ChainComplex, q: usize) -> &SparseOperator {
    match q {
        0 => &cc.d0,
        1 => &cc.d1,
        _ => panic!("coboundary degree {q} out of range"),
    }
}

fn active_weights(w: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&k| w[k]).collect()
}

/// `d_q` restricted to relative cochains.
pub fn relative_coboundary(cc: &ChainComplex, active: &CellMask, q: usize) -> SparseOperator {
    coboundary_of(cc, q).select(&active.indices(q + 1), &active.indices(q))
}

/// `δ_q = g_{q-1}^{-1} d_{q-1}^T g_q` on relative cochains, `q` in {1, 2}.
pub fn relative_codifferential(cc: &ChainComplex, w: &RiemannianWeights, active: &CellMask, q: usize) -> Result<SparseOperator> {
    if !(1..=2).contains(&q) {
        return Err(Error::Config(format!("codifferential degree must be 1 or 2, got {q}")));
    }
    let d = relative_coboundary(cc, active, q - 1);
    let lo = active_weights(w.get(q - 1), &active.indices(q - 1));
    let hi = active_weights(w.get(q), &active.indices(q));
    let inv_lo: Vec<f64> = lo.iter().map(|v| 1.0 / v).collect();
    Ok(d.transpose().scale(&inv_lo, &hi))
}

/// Unnormalized positive Laplacian `δ_1 d_0` on `C^0(X, L)`.
pub fn relative_laplacian0(cc: &ChainComplex, w: &RiemannianWeights, active: &CellMask) -> SparseOperator {
    let d0 = relative_coboundary(cc, active, 0);
    relative_codifferential(cc, w, active, 1).expect("degree 1").mul(&d0)
}

/// Unnormalized positive Laplacian `d_1 δ_2` on `C^2(X, L)`.
pub fn relative_laplacian2(cc: &ChainComplex, w: &RiemannianWeights, active: &CellMask) -> SparseOperator {
    let d1 = relative_coboundary(cc, active, 1);
    d1.mul(&relative_codifferential(cc, w, active, 2).expect("degree 2"))
}

/// Dirac operator `S+ = C^0 ⊕ C^2 -> S- = C^1` with row and column cell maps.
#[derive(Debug, Clone)]
pub struct DiracOperator {
    pub matrix: SparseOperator,
    /// Row index -> 1-cell.
    pub rows: Vec<usize>,
    /// Column index -> 0-cell or 2-cell.
    pub cols: Vec<CellRef>,
}

impl DiracOperator {
    pub fn is_square(&self) -> bool {
        self.matrix.nrows() == self.matrix.ncols()
    }

    pub fn check_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { plus: self.matrix.ncols(), minus: self.matrix.nrows() })
        }
    }

    /// True when either side is trivial.
    pub fn is_degenerate(&self) -> bool {
        self.matrix.nrows() == 0 || self.matrix.ncols() == 0
    }
}

pub fn relative_dirac(cc: &ChainComplex, w: &RiemannianWeights, active: &CellMask) -> DiracOperator {
    let d0 = relative_coboundary(cc, active, 0);
    let delta2 = relative_codifferential(cc, w, active, 2).expect("degree 2");
    let cols = active
        .indices(0)
        .into_iter()
        .map(|index| CellRef { dim: 0, index })
        .chain(active.indices(2).into_iter().map(|index| CellRef { dim: 2, index }))
        .collect();
    DiracOperator { matrix: d0.hcat(&delta2), rows: active.indices(1), cols }
}

pub fn codifferential(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec, q: usize) -> Result<SparseOperator> {
    relative_codifferential(&x.chain(), w, &x.relative_cells(l), q)
}

pub fn dirac(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec) -> DiracOperator {
    relative_dirac(&x.chain(), w, &x.relative_cells(l))
}

/// Normalized Laplacian `eps² δ_1 d_0` on interior and Neumann vertices.
#[derive(Debug, Clone)]
pub struct LaplacianBundle {
    pub delta0_hat: SparseOperator,
    /// Row index -> vertex.
    pub vertices: Vec<usize>,
    /// Vertex -> row index, `usize::MAX` for Dirichlet vertices.
    pub row_of: Vec<usize>,
    /// Vertex weights of the unknowns; `diag(w0) Δ̂` is symmetric.
    pub w0: Vec<f64>,
    pub epsilon: f64,
    /// Always true: the operator is `ε²(-Δ_L)`, positive definite for nonempty `L`.
    pub positive_definite: bool,
}

impl LaplacianBundle {
    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    /// Embeds an unknown vector as a vertex cochain with zeros on `L`.
    pub fn extend(&self, u: &[f64], n_vertices: usize) -> Vec<f64> {
        let mut f = vec![0.0; n_vertices];
        for (k, &v) in self.vertices.iter().enumerate() {
            f[v] = u[k];
        }
        f
    }
}

/// Direct stencil assembly: row `p` carries `Σ (eps² w1(σ) / w0(p)) (f(p) - f(q))` over edges
/// `σ = [p, q]` not in `L`.
pub fn laplacian0(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec) -> Result<LaplacianBundle> {
    let lm = x.subcomplex(l);
    let nv = x.n_vertices();
    let mut row_of = vec![usize::MAX; nv];
    let mut vertices = Vec::new();
    for v in 0..nv {
        if !lm.cells[0][v] {
            row_of[v] = vertices.len();
            vertices.push(v);
        }
    }
    if vertices.len() == nv {
        return Err(Error::Singular("empty Dirichlet subcomplex".into()));
    }
    let eps2 = x.mesh() * x.mesh();
    let mut incident: Vec<Vec<usize>> = vec![Vec::with_capacity(4); nv];
    for e in 0..x.n_edges() {
        if lm.cells[1][e] {
            continue;
        }
        let (a, b) = x.edge_endpoints(e);
        incident[a].push(e);
        incident[b].push(e);
    }
    let mut trips = Vec::with_capacity(5 * vertices.len());
    for (r, &p) in vertices.iter().enumerate() {
        let mut diag = 0.0;
        for &e in &incident[p] {
            let (a, b) = x.edge_endpoints(e);
            let q = if a == p { b } else { a };
            let c = eps2 * w.w1[e] / w.w0[p];
            diag += c;
            if row_of[q] != usize::MAX {
                trips.push((r, row_of[q], -c));
            }
        }
        trips.push((r, r, diag));
    }
    let n = vertices.len();
    let w0 = vertices.iter().map(|&v| w.w0[v]).collect();
    Ok(LaplacianBundle {
        delta0_hat: SparseOperator::from_triplets(n, n, trips),
        vertices,
        row_of,
        w0,
        epsilon: x.mesh(),
        positive_definite: true,
    })
}

/// Residual `(1/eps²) Δ̂ I f + I Δ_g f` in max norm over vertices at least two cells from the
/// boundary, across subdivision levels.
pub fn consistency_residual(base: &CellComplex, levels: &[u32], g: &MetricField, l: &BoundarySpec, f: &Expr) -> Result<ConvergenceSeries> {
    if levels.len() < 3 {
        return Err(Error::Config("consistency series needs at least 3 levels".into()));
    }
    let lb = g.laplace_beltrami(f);
    let fe = |x: f64, y: f64| f.eval(x, y);
    let mut eps = Vec::new();
    let mut res = Vec::new();
    for &lvl in levels {
        let x = base.at_level(lvl);
        let w = weights_from_metric(&x, g)?;
        let bundle = laplacian0(&x, &w, l)?;
        let fv = integrate_form(&x, &Form::Zero(&fe));
        let u: Vec<f64> = bundle.vertices.iter().map(|&v| fv[v]).collect();
        let au = bundle.delta0_hat.matvec(&u);
        let e2 = bundle.epsilon * bundle.epsilon;
        let mut worst: f64 = 0.0;
        for (r, &v) in bundle.vertices.iter().enumerate() {
            let (i, j) = x.vertex_ij(v);
            if i < 2 || j < 2 || i + 2 > x.nx() || j + 2 > x.ny() {
                continue;
            }
            let (px, py) = x.vertex_pos(v);
            worst = worst.max((au[r] / e2 + lb(px, py)).abs());
        }
        eps.push(x.mesh());
        res.push(worst);
    }
    let slope = loglog_slope(&eps, &res);
    Ok(ConvergenceSeries { levels: levels.to_vec(), epsilon: eps, error: res, slope })
}

/// Operator summary for reports.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorSummary {
    pub nrows: usize,
    pub ncols: usize,
    pub nnz: usize,
}

impl From<&SparseOperator> for OperatorSummary {
    fn from(a: &SparseOperator) -> Self {
        OperatorSummary { nrows: a.nrows(), ncols: a.ncols(), nnz: a.nnz() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{Rect, Side};
    use crate::metric::MetricField;

    fn identity_weights(x: &CellComplex) -> RiemannianWeights {
        weights_from_metric(x, &MetricField::identity(x.rect())).unwrap()
    }

    #[test]
    fn single_interior_vertex() {
        let x = CellComplex::unit_square(2);
        let b = laplacian0(&x, &identity_weights(&x), &BoundarySpec::all()).unwrap();
        assert_eq!(b.delta0_hat.to_dense().as_slice(), &[4.0]);
    }

    #[test]
    fn stencil_matches_operator_product() {
        let x = CellComplex::new(Rect::unit(), 5, 4).unwrap();
        let g = MetricField::parse("1 + x*y", "exp(x) + y^2", Rect::unit()).unwrap();
        let w = weights_from_metric(&x, &g).unwrap();
        for l in [BoundarySpec::all(), BoundarySpec::new(&[Side::Bottom]).unwrap(), BoundarySpec::new(&[Side::Left, Side::Top]).unwrap()] {
            let b = laplacian0(&x, &w, &l).unwrap();
            let prod = relative_laplacian0(&x.chain(), &w, &x.relative_cells(&l));
            let e2 = x.mesh() * x.mesh();
            for (r, c, v) in prod.triplets() {
                let got = b.delta0_hat.get(r, c);
                assert!((got - e2 * v).abs() <= 1e-14 * got.abs().max(1.0), "({r},{c}) {got} vs {}", e2 * v);
            }
            assert_eq!(prod.nnz(), b.delta0_hat.nnz());
        }
    }

    #[test]
    fn dirac_squares_to_laplacians() {
        let x = CellComplex::new(Rect::unit(), 3, 2).unwrap();
        let g = MetricField::constant(4.0, 1.0, Rect::unit()).unwrap();
        let w = weights_from_metric(&x, &g).unwrap();
        let l = BoundarySpec::new(&[Side::Left]).unwrap();
        let act = x.relative_cells(&l);
        let d = relative_dirac(&x.chain(), &w, &act);
        // D† = g_+^{-1} Dᵀ g_-
        let gp: Vec<f64> = d.cols.iter().map(|c| w.get(c.dim)[c.index]).collect();
        let gm: Vec<f64> = d.rows.iter().map(|&e| w.w1[e]).collect();
        let inv: Vec<f64> = gp.iter().map(|v| 1.0 / v).collect();
        let dd = d.matrix.transpose().scale(&inv, &gm).mul(&d.matrix).to_dense();
        let l0 = relative_laplacian0(&x.chain(), &w, &act).to_dense();
        let l2 = relative_laplacian2(&x.chain(), &w, &act).to_dense();
        let n0 = l0.nrows();
        assert!((dd.view((0, 0), (n0, n0)) - &l0).amax() < 1e-12);
        assert!((dd.view((n0, n0), (l2.nrows(), l2.nrows())) - &l2).amax() < 1e-12);
        assert!(dd.view((0, n0), (n0, l2.nrows())).amax() < 1e-12);
    }
}
