//! Gaussian bosonic and fermionic partition functions on weighted complexes, the dimer model
//! on the double, and the identities relating them.
//!
//! Volume weights `|σ|` of a [`RiemannianWeights`] are cochain norms. The chain norm of a cell
//! is the reciprocal `1/|σ|`; the dimer weights and the fermionic prefactor are written in
//! chain norms, which is what makes the dimer and fermion partition functions agree.

mod matching;

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::complex::{double_complex, dual_complex, BoundarySpec, CellComplex, CellMask, CellRef, ChainComplex, DualComplex, Legs};
use crate::error::{Error, Result};
use crate::metric::RiemannianWeights;
use crate::operators::{relative_dirac, relative_laplacian0};
use crate::spectral::{logdet_pd, SymmetrizedSolver};

pub use matching::{enumerate as enumerate_matchings, matching_sum, MAX_STATES, MAX_VERTICES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimerEdge {
    pub black: usize,
    pub white: usize,
    pub weight: f64,
    /// Kasteleyn sign, `+1` or `-1`.
    pub sign: f64,
}

/// Bipartite graph with positive edge weights and quadrilateral faces.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBipartiteGraph {
    pub n_vertices: usize,
    pub white: Vec<bool>,
    /// Underlying cell of `X` for double vertices, `None` for leg ends and abstract graphs.
    pub cells: Vec<Option<CellRef>>,
    pub edges: Vec<DimerEdge>,
    pub faces: Vec<[usize; 4]>,
}

impl WeightedBipartiteGraph {
    /// Graph without faces from `(black, white, weight)` triples; signs are `+1`.
    pub fn from_edges(n_vertices: usize, white: Vec<bool>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if white.len() != n_vertices {
            return Err(Error::Config(format!("{} colors for {n_vertices} vertices", white.len())));
        }
        let mut out = Vec::with_capacity(edges.len());
        for &(b, w, weight) in edges {
            if b >= n_vertices || w >= n_vertices || white[b] || !white[w] {
                return Err(Error::Config(format!("edge ({b}, {w}) does not join a black vertex to a white one")));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::Config(format!("edge ({b}, {w}) has weight {weight}")));
            }
            out.push(DimerEdge { black: b, white: w, weight, sign: 1.0 });
        }
        Ok(WeightedBipartiteGraph { n_vertices, white, cells: vec![None; n_vertices], edges: out, faces: Vec::new() })
    }

    pub fn n_white(&self) -> usize {
        self.white.iter().filter(|&&w| w).count()
    }

    fn edge_between(&self, a: usize, b: usize) -> Option<&DimerEdge> {
        self.edges.iter().find(|e| (e.black == a && e.white == b) || (e.black == b && e.white == a))
    }

    /// Signed weighted adjacency, rows white and columns black, in vertex order.
    pub fn kasteleyn_matrix(&self) -> Result<DMatrix<f64>> {
        let whites: Vec<usize> = (0..self.n_vertices).filter(|&v| self.white[v]).collect();
        let blacks: Vec<usize> = (0..self.n_vertices).filter(|&v| !self.white[v]).collect();
        if whites.len() != blacks.len() {
            return Err(Error::DimensionMismatch { plus: blacks.len(), minus: whites.len() });
        }
        let mut pos = vec![0; self.n_vertices];
        for (k, &v) in whites.iter().enumerate() {
            pos[v] = k;
        }
        for (k, &v) in blacks.iter().enumerate() {
            pos[v] = k;
        }
        let mut k = DMatrix::zeros(whites.len(), blacks.len());
        for e in &self.edges {
            k[(pos[e.white], pos[e.black])] += e.sign * e.weight;
        }
        Ok(k)
    }

    /// Edge list CSV `u,v,weight,sign` with `u` black and `v` white.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("u,v,weight,sign\n");
        for e in &self.edges {
            let _ = writeln!(s, "{},{},{},{}", e.black, e.white, crate::fmt17(e.weight), e.sign as i64);
        }
        s
    }
}

/// `Σ_σ |σ| (df)(σ)²` over all edges.
pub fn dirichlet_energy(f: &[f64], x: &CellComplex, w: &RiemannianWeights) -> Result<f64> {
    if f.len() != x.n_vertices() {
        return Err(Error::Config(format!("cochain has {} values, complex has {} vertices", f.len(), x.n_vertices())));
    }
    let df = x.coboundary(0)?.matvec(f);
    Ok(df.iter().zip(&w.w1).map(|(d, s)| s * d * d).sum())
}

fn active_weights(w: &[f64], active: &CellMask, q: usize) -> Vec<f64> {
    active.indices(q).into_iter().map(|k| w[k]).collect()
}

/// Bosonic partition function of a relative complex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BosonResult {
    pub log_z: f64,
    /// `log det Δ_L` of the unnormalized Laplacian `δ_1 d_0`.
    pub log_det: f64,
    pub dim: usize,
}

fn boson(cc: &ChainComplex, w: &RiemannianWeights, active: &CellMask) -> Result<BosonResult> {
    let dim = active.count(0);
    if dim == 0 {
        return Ok(BosonResult { log_z: 0.0, log_det: 0.0, dim });
    }
    let lap = relative_laplacian0(cc, w, active);
    let log_det = logdet_pd(&lap, Some(&active_weights(&w.w0, active, 0)))
        .map_err(|e| Error::Singular(format!("bosonic Laplacian: {e}")))?
        .logdet;
    Ok(BosonResult { log_z: -0.5 * log_det + 0.5 * dim as f64 * (2.0 * PI).ln(), log_det, dim })
}

/// `log Z_b(X, L) = -(1/2) log det Δ_L + (1/2) dim log 2π`, with `Δ_L = δ_1 d_0` unnormalized, so
/// `log det Δ_L = log det Δ̂ - n log ε²`.
pub fn log_zb(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec) -> Result<BosonResult> {
    boson(&x.chain(), w, &x.relative_cells(l))
}

/// Fermionic partition function: `log|Z_f|` and the sign of `det D_L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FermionResult {
    pub log_abs: f64,
    pub sign: f64,
    pub log_abs_det: f64,
    pub dim: usize,
}

fn fermion(cc: &ChainComplex, w: &RiemannianWeights, active: &CellMask) -> Result<FermionResult> {
    let d = relative_dirac(cc, w, active);
    d.check_square()?;
    let n = d.matrix.nrows();
    let lu = d.matrix.to_dense().lu();
    let det = lu.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Singular(format!("Dirac operator determinant is {det}")));
    }
    // Chain norms: prod sqrt(1/|ψ|) / prod sqrt(1/|χ|).
    let log_edges: f64 = active.indices(1).iter().map(|&e| w.w1[e].ln()).sum();
    let log_plus: f64 = active.indices(0).iter().map(|&v| w.w0[v].ln()).sum::<f64>()
        + active.indices(2).iter().map(|&f| w.w2[f].ln()).sum::<f64>();
    let log_abs_det = det.abs().ln();
    Ok(FermionResult { log_abs: log_abs_det + 0.5 * (log_edges - log_plus), sign: det.signum(), log_abs_det, dim: n })
}

/// `Z_f(X, L)` as a determinant formula. Fails with both dimensions when `S+` and `S-` differ.
pub fn log_zf(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec) -> Result<FermionResult> {
    fermion(&x.chain(), w, &x.relative_cells(l))
}

/// Weights of `X` transported to the truncated dual by `|φσ| = 1/|σ|`.
pub fn dual_weights(x: &CellComplex, dual: &DualComplex, w: &RiemannianWeights) -> RiemannianWeights {
    let [n0, n1, n2] = dual.chain.counts;
    let mut w0 = vec![0.0; n0];
    let mut w1 = vec![0.0; n1];
    let mut w2 = vec![0.0; n2];
    for f in 0..x.n_faces() {
        w0[dual.face_to_vertex[f]] = 1.0 / w.w2[f];
    }
    for e in 0..x.n_edges() {
        w1[dual.edge_to_edge[e]] = 1.0 / w.w1[e];
        if let Some(dv) = dual.boundary_edge_to_vertex[e] {
            w0[dv] = 1.0 / w.w1[e];
        }
    }
    for v in 0..x.n_vertices() {
        w2[dual.vertex_to_face[v]] = 1.0 / w.w0[v];
        if let Some(de) = dual.boundary_vertex_to_edge[v] {
            w1[de] = 1.0 / w.w0[v];
        }
    }
    RiemannianWeights { w0, w1, w2 }
}

/// `Z_b(X̃_L, L̃)` on the truncated dual with transported weights.
pub fn log_zb_dual(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec) -> Result<BosonResult> {
    let dual = dual_complex(x);
    let wd = dual_weights(x, &dual, w);
    boson(&dual.chain, &wd, &dual.relative_cells(x, l))
}

/// `Z̃_f`: the determinant formula on `(X̃_L, L̃)`, where `d` and `δ` trade roles.
pub fn log_zf_dual(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec) -> Result<FermionResult> {
    let dual = dual_complex(x);
    let wd = dual_weights(x, &dual, w);
    fermion(&dual.chain, &wd, &dual.relative_cells(x, l))
}

/// Both sides of the boson/fermion duality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityCheck {
    pub log_zf: f64,
    pub log_zf_dual: f64,
    pub log_zb: f64,
    pub log_zb_dual: f64,
    /// `dim S+ = dim C^0(X, L) + dim C^2(X, L)`.
    pub n_plus: usize,
    /// `log |Z_f Z̃_f Z_b(X̃_L, L̃) Z_b(X, L)|`.
    pub log_product: f64,
    /// `log |Z_f| + log Z_b(X, L) + log Z_b(X̃_L, L̃) - (n_plus / 2) log 2π`.
    pub log_single_fermion_product: f64,
}

pub fn duality_check(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec) -> Result<DualityCheck> {
    let zf = log_zf(x, w, l)?;
    let zfd = log_zf_dual(x, w, l)?;
    let zb = log_zb(x, w, l)?;
    let zbd = log_zb_dual(x, w, l)?;
    let n_plus = zf.dim;
    Ok(DualityCheck {
        log_zf: zf.log_abs,
        log_zf_dual: zfd.log_abs,
        log_zb: zb.log_z,
        log_zb_dual: zbd.log_z,
        n_plus,
        log_product: zf.log_abs + zfd.log_abs + zb.log_z + zbd.log_z,
        log_single_fermion_product: zf.log_abs + zb.log_z + zbd.log_z - 0.5 * n_plus as f64 * (2.0 * PI).ln(),
    })
}

/// Chain norm `1/|σ|` of a cell.
fn chain_norm(w: &RiemannianWeights, c: CellRef) -> f64 {
    1.0 / w.get(c.dim)[c.index]
}

/// Double `D(X)'` with legs on the cells of `L`, weights `w_r([p_σ, p_τ]) = sqrt(‖σ‖ / ‖τ‖)` in
/// chain norms for `dim σ < dim τ`, unit legs, and signs of the Dirac operator entries.
pub fn dimer_weights_wr(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec) -> WeightedBipartiteGraph {
    let dc = double_complex(x, None, Legs::On(*l));
    let cc = x.chain();
    let mut edges = Vec::with_capacity(dc.edges.len());
    for (k, &(b, wh)) in dc.edges.iter().enumerate() {
        if dc.legs.contains(&k) {
            edges.push(DimerEdge { black: b, white: wh, weight: 1.0, sign: 1.0 });
            continue;
        }
        let (cb, cw) = (dc.vertices[b].cell.expect("cell vertex"), dc.vertices[wh].cell.expect("cell vertex"));
        let (lo, hi) = if cb.dim < cw.dim { (cb, cw) } else { (cw, cb) };
        let weight = (chain_norm(w, lo) / chain_norm(w, hi)).sqrt();
        let sign = if cb.dim == 0 { cc.d0.get(cw.index, cb.index) } else { cc.d1.get(cb.index, cw.index) };
        edges.push(DimerEdge { black: b, white: wh, weight, sign: sign.signum() });
    }
    WeightedBipartiteGraph {
        n_vertices: dc.vertices.len(),
        white: dc.vertices.iter().map(|v| v.white).collect(),
        cells: dc.vertices.iter().map(|v| v.cell).collect(),
        edges,
        faces: dc.faces,
    }
}

/// Multiplies each edge weight by the gauge values at its endpoints.
pub fn gauge_transform(g: &WeightedBipartiteGraph, lam: &[f64]) -> Result<WeightedBipartiteGraph> {
    if lam.len() != g.n_vertices {
        return Err(Error::Config(format!("gauge has {} values for {} vertices", lam.len(), g.n_vertices)));
    }
    if let Some(v) = lam.iter().position(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::Config(format!("gauge value at vertex {v} is {}", lam[v])));
    }
    let mut out = g.clone();
    for e in &mut out.edges {
        e.weight *= lam[e.black] * lam[e.white];
    }
    Ok(out)
}

/// Gauge `1/sqrt‖σ‖` on 0- and 2-cells and `sqrt‖σ‖` on 1-cells (chain norms), `1` on legs.
pub fn proposition_gauge(g: &WeightedBipartiteGraph, w: &RiemannianWeights) -> Vec<f64> {
    g.cells
        .iter()
        .map(|c| match c {
            Some(c) if c.dim == 1 => chain_norm(w, *c).sqrt(),
            Some(c) => 1.0 / chain_norm(w, *c).sqrt(),
            None => 1.0,
        })
        .collect()
}

/// Partition function by exhaustive enumeration.
pub fn dimer_z_brute(g: &WeightedBipartiteGraph) -> Result<f64> {
    matching_sum(g)
}

/// Verifies the Kasteleyn face rule and returns `|det K|`.
pub fn kasteleyn_check(g: &WeightedBipartiteGraph) -> Result<f64> {
    for (k, face) in g.faces.iter().enumerate() {
        let mut product = 1.0;
        for i in 0..4 {
            let e = g
                .edge_between(face[i], face[(i + 1) % 4])
                .ok_or_else(|| Error::Config(format!("face {k} is not a cycle of the graph")))?;
            product *= e.sign;
        }
        // Faces with a multiple of four edges need product -1.
        if product != -1.0 {
            return Err(Error::FaceRule { face: k, product });
        }
    }
    Ok(g.kasteleyn_matrix()?.determinant().abs())
}

/// Result of the dimer/fermion comparison on one complex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrespondenceCheck {
    pub z_dimer_kasteleyn: f64,
    pub z_dimer_brute: Option<f64>,
    pub z_fermion: f64,
    pub faces_checked: usize,
}

impl CorrespondenceCheck {
    pub fn max_relative_error(&self) -> f64 {
        let r = |a: f64| ((a - self.z_fermion) / self.z_fermion).abs();
        r(self.z_dimer_kasteleyn).max(self.z_dimer_brute.map_or(0.0, r))
    }
}

/// Builds `D(X)'`, checks the face rule, and compares its partition function with `|Z_f|`.
pub fn kasteleyn_check_and_z(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec, brute: bool) -> Result<CorrespondenceCheck> {
    let g = dimer_weights_wr(x, w, l);
    let z_k = kasteleyn_check(&g)?;
    let zf = log_zf(x, w, l)?;
    let z_b = if brute { Some(dimer_z_brute(&g)?) } else { None };
    Ok(CorrespondenceCheck { z_dimer_kasteleyn: z_k, z_dimer_brute: z_b, z_fermion: zf.log_abs.exp(), faces_checked: g.faces.len() })
}

/// Matching probabilities under the Gibbs measure, one per matching from [`enumerate_matchings`].
pub fn matching_probabilities(g: &WeightedBipartiteGraph, limit: usize) -> Result<Vec<f64>> {
    let ms = enumerate_matchings(g, limit)?;
    let weights: Vec<f64> = ms.iter().map(|m| m.iter().map(|&e| g.edges[e].weight).product()).collect();
    let z: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|v| v / z).collect())
}

fn interior_index(x: &CellComplex, l: &BoundarySpec, v: usize) -> Result<usize> {
    let active = x.relative_cells(l);
    if v >= x.n_vertices() || !active.cells[0][v] {
        return Err(Error::Config(format!("vertex {v} is not a degree of freedom")));
    }
    Ok(active.cells[0][..v].iter().filter(|&&b| b).count())
}

/// Two-point function `(Δ_L⁻¹)_{p1, p2}` for vertices `p1`, `p2` not in `L`.
pub fn two_point(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec, p1: usize, p2: usize) -> Result<f64> {
    let (i, j) = (interior_index(x, l, p1)?, interior_index(x, l, p2)?);
    let active = x.relative_cells(l);
    let lap = relative_laplacian0(&x.chain(), w, &active);
    let solver = SymmetrizedSolver::new(&lap, &active_weights(&w.w0, &active, 0))?;
    let mut e = vec![0.0; lap.nrows()];
    e[j] = 1.0;
    Ok(solver.solve(&e)[i])
}

/// The same entry by Cramer's rule on the dense matrix.
pub fn two_point_cramer(x: &CellComplex, w: &RiemannianWeights, l: &BoundarySpec, p1: usize, p2: usize) -> Result<f64> {
    let (i, j) = (interior_index(x, l, p1)?, interior_index(x, l, p2)?);
    let active = x.relative_cells(l);
    let a = relative_laplacian0(&x.chain(), w, &active).to_dense();
    let det = a.determinant();
    if det == 0.0 {
        return Err(Error::Singular("Laplacian determinant vanishes".into()));
    }
    let minor = a.clone().remove_row(j).remove_column(i);
    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * minor.determinant() / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{Rect, Side};
    use crate::metric::{weights_from_metric, MetricField};

    fn unit(counts: [usize; 3]) -> RiemannianWeights {
        RiemannianWeights::uniform(counts, 1.0, 1.0, 1.0)
    }

    #[test]
    fn energy_of_corner_spike() {
        let x = CellComplex::unit_square(1);
        let w = unit(x.counts());
        assert_eq!(dirichlet_energy(&[1.0; 4], &x, &w).unwrap(), 0.0);
        assert_eq!(dirichlet_energy(&[0.0, 1.0, 0.0, 0.0], &x, &w).unwrap(), 2.0);
    }

    #[test]
    fn single_vertex_boson() {
        let x = CellComplex::new(Rect::new(0.0, 2.0, 0.0, 2.0).unwrap(), 2, 2).unwrap();
        let z = log_zb(&x, &unit(x.counts()), &BoundarySpec::all()).unwrap();
        assert_eq!(z.dim, 1);
        assert!((z.log_z - (-0.5 * 4f64.ln() + 0.5 * (2.0 * PI).ln())).abs() < 1e-14);
    }

    #[test]
    fn small_matchings() {
        let g = WeightedBipartiteGraph::from_edges(2, vec![false, true], &[(0, 1, 3.0)]).unwrap();
        assert_eq!(dimer_z_brute(&g).unwrap(), 3.0);
        let sq = WeightedBipartiteGraph::from_edges(4, vec![false, true, false, true], &[(0, 1, 1.0), (2, 1, 1.0), (2, 3, 1.0), (0, 3, 1.0)]).unwrap();
        assert_eq!(dimer_z_brute(&sq).unwrap(), 2.0);
        let doubled = gauge_transform(&g, &[2.0, 1.0]).unwrap();
        assert_eq!(dimer_z_brute(&doubled).unwrap(), 6.0);
    }

    #[test]
    fn wr_examples() {
        let x = CellComplex::unit_square(1);
        let g = dimer_weights_wr(&x, &unit(x.counts()), &BoundarySpec::new(&[Side::Bottom]).unwrap());
        assert!(g.edges.iter().all(|e| e.weight == 1.0));
        // Chain norms 1/4 on a vertex and 1 on an edge give 1/2.
        let w = RiemannianWeights::uniform(x.counts(), 4.0, 1.0, 1.0);
        let g = dimer_weights_wr(&x, &w, &BoundarySpec::new(&[Side::Bottom]).unwrap());
        let ve = g.edges.iter().find(|e| g.cells[e.black].is_some_and(|c| c.dim == 0)).unwrap();
        assert_eq!(ve.weight, 0.5);
    }

    #[test]
    fn one_by_one_matches_dirac() {
        let x = CellComplex::unit_square(1);
        let l = BoundarySpec::new(&[Side::Bottom]).unwrap();
        let w = unit(x.counts());
        let g = dimer_weights_wr(&x, &w, &l);
        assert_eq!(dimer_z_brute(&g).unwrap(), 3.0);
        let zf = log_zf(&x, &w, &l).unwrap();
        assert!((zf.log_abs_det - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn anisotropic_correspondence() {
        let l = BoundarySpec::new(&[Side::Left, Side::Bottom]).unwrap();
        let x = CellComplex::new(Rect::unit(), 2, 3).unwrap();
        let w = weights_from_metric(&x, &MetricField::constant(4.0, 1.0, Rect::unit()).unwrap()).unwrap();
        let c = kasteleyn_check_and_z(&x, &w, &l, true).unwrap();
        assert!(c.max_relative_error() < 1e-9, "{c:?}");
    }

    #[test]
    fn closed_boundary_is_not_square() {
        let x = CellComplex::unit_square(2);
        assert!(matches!(log_zf(&x, &unit(x.counts()), &BoundarySpec::all()), Err(Error::DimensionMismatch { .. })));
    }
}
