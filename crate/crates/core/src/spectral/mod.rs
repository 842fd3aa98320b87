//! Exact log-determinants, the constant-metric eigenvalue oracle and subdivision sweeps.

mod ldl;
mod ordering;

pub use ldl::Ldl;
pub use ordering::nested_dissection;

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::complex::{BoundarySpec, CellComplex, Side};
use crate::error::{Error, Result};
use crate::metric::{weights_from_metric, MetricField};
use crate::operators::{laplacian0, SparseOperator};

/// Default cap on vertices of the finest grid in a sweep.
pub const DEFAULT_VERTEX_BUDGET: usize = 1025 * 1025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Factorization,
    Eigenproduct,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogDetResult {
    pub logdet: f64,
    pub n: usize,
    pub method: Method,
    pub mesh: Option<f64>,
}

/// `W^{1/2} A W^{-1/2}`, which is symmetric when `diag(w) A` is.
pub fn symmetrize(a: &SparseOperator, w: &[f64]) -> Result<SparseOperator> {
    let s: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let inv: Vec<f64> = s.iter().map(|v| 1.0 / v).collect();
    let sym = a.scale(&s, &inv);
    let tol = 1e-12 * sym.max_abs().max(f64::MIN_POSITIVE);
    for (r, c, v) in sym.triplets() {
        if (v - sym.get(c, r)).abs() > tol {
            return Err(Error::NotSymmetrizable(format!("entry ({r}, {c}) differs from its transpose")));
        }
    }
    Ok(sym)
}

/// Log-determinant of a positive definite operator. `w` makes `diag(w) A` symmetric; pass `None`
/// when `A` is already symmetric.
pub fn logdet_pd(a: &SparseOperator, w: Option<&[f64]>) -> Result<LogDetResult> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { plus: a.ncols(), minus: a.nrows() });
    }
    let sym = match w {
        Some(w) => symmetrize(a, w)?,
        None => symmetrize(a, &vec![1.0; a.nrows()])?,
    };
    let f = Ldl::factor(&sym)?;
    Ok(LogDetResult { logdet: f.logdet(), n: a.nrows(), method: Method::Factorization, mesh: None })
}

/// Solver for `Δ̂ u = b` through the symmetrized factor.
#[derive(Debug, Clone)]
pub struct SymmetrizedSolver {
    factor: Ldl,
    sqrt_w: Vec<f64>,
}

impl SymmetrizedSolver {
    pub fn new(a: &SparseOperator, w: &[f64]) -> Result<Self> {
        let sym = symmetrize(a, w)?;
        Ok(SymmetrizedSolver { factor: Ldl::factor(&sym)?, sqrt_w: w.iter().map(|v| v.sqrt()).collect() })
    }

    pub fn logdet(&self) -> f64 {
        self.factor.logdet()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = b.iter().zip(&self.sqrt_w).map(|(v, s)| v * s).collect();
        let mut u = self.factor.solve(&rhs);
        u.iter_mut().zip(&self.sqrt_w).for_each(|(v, s)| *v /= s);
        u
    }
}

/// Eigenvalues of the 1-D second difference on `cells` cells; `lo`, `hi` mark Dirichlet ends.
pub fn eigenvalues_1d(cells: usize, lo: bool, hi: bool) -> Vec<f64> {
    let m = cells as f64;
    let mu = |t: f64| 2.0 - 2.0 * t.cos();
    match (lo, hi) {
        (true, true) => (1..cells).map(|j| mu(j as f64 * PI / m)).collect(),
        (true, false) | (false, true) => (1..=cells).map(|j| mu((2 * j - 1) as f64 * PI / (2.0 * m + 1.0))).collect(),
        (false, false) => (0..=cells).map(|j| mu(j as f64 * PI / (m + 1.0))).collect(),
    }
}

/// Closed-form logdet of `Δ̂` for the constant metric `diag(a, b)`. `nx`, `ny` count interior
/// vertices per axis, so the grid has `nx + 1` by `ny + 1` cells.
pub fn logdet_constant_oracle(nx: usize, ny: usize, a: f64, b: f64, l: &BoundarySpec) -> LogDetResult {
    let mx = eigenvalues_1d(nx + 1, l.contains(Side::Left), l.contains(Side::Right));
    let my = eigenvalues_1d(ny + 1, l.contains(Side::Bottom), l.contains(Side::Top));
    let mut total = 0.0;
    for &u in &mx {
        let mut row = 0.0;
        for &v in &my {
            row += (u / a + v / b).ln();
        }
        total += row;
    }
    LogDetResult { logdet: total, n: mx.len() * my.len(), method: Method::Eigenproduct, mesh: None }
}

/// Assembles `Δ̂` on `x` and returns its log-determinant.
pub fn logdet_laplacian(x: &CellComplex, g: &MetricField, l: &BoundarySpec) -> Result<LogDetResult> {
    let w = weights_from_metric(x, g)?;
    let bundle = laplacian0(x, &w, l)?;
    let mut r = logdet_pd(&bundle.delta0_hat, Some(&bundle.w0))?;
    r.mesh = Some(bundle.epsilon);
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub level: u32,
    pub epsilon: f64,
    pub n_interior: usize,
    pub logdet: f64,
    /// Eigenproduct value for constant metrics.
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSeries {
    pub entries: Vec<SweepEntry>,
    pub metric_id: String,
    pub boundary: BoundarySpec,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub vertex_budget: usize,
    pub with_oracle: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { vertex_budget: DEFAULT_VERTEX_BUDGET, with_oracle: false }
    }
}

/// Factors `Δ̂` on `base` subdivided to each level. Levels run in parallel; output is ordered.
pub fn sweep(g: &MetricField, base: &CellComplex, l: &BoundarySpec, levels: &[u32], opts: SweepOptions) -> Result<SweepSeries> {
    if levels.is_empty() {
        return Err(Error::Config("sweep needs at least one level".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("sweep levels must be strictly ascending".into()));
    }
    let finest = base.at_level(*levels.last().unwrap());
    if finest.n_vertices() > opts.vertex_budget {
        return Err(Error::Budget(format!(
            "level {} has {} vertices, budget is {}",
            levels.last().unwrap(),
            finest.n_vertices(),
            opts.vertex_budget
        )));
    }
    let constant = g.constant_components();
    let entries: Vec<Result<SweepEntry>> = levels
        .par_iter()
        .map(|&level| {
            let x = base.at_level(level);
            let r = logdet_laplacian(&x, g, l).map_err(|e| Error::AtLevel { level, source: Box::new(e) })?;
            let oracle = match (opts.with_oracle, constant) {
                (true, Some((a, b))) => Some(logdet_constant_oracle(x.nx() - 1, x.ny() - 1, a, b, l).logdet),
                _ => None,
            };
            Ok(SweepEntry { level, epsilon: x.mesh(), n_interior: r.n, logdet: r.logdet, oracle })
        })
        .collect();
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepSeries { entries, metric_id: g.id(), boundary: l.clone() })
}

impl SweepSeries {
    pub fn to_csv(&self) -> String {
        let with_oracle = self.entries.iter().any(|e| e.oracle.is_some());
        let mut s = String::from("level,epsilon,n_interior,logdet");
        if with_oracle {
            s.push_str(",oracle,abs_diff");
        }
        s.push('\n');
        for e in &self.entries {
            let _ = write!(s, "{},{},{},{}", e.level, crate::fmt17(e.epsilon), e.n_interior, crate::fmt17(e.logdet));
            if with_oracle {
                match e.oracle {
                    Some(o) => {
                        let _ = write!(s, ",{},{}", crate::fmt17(o), crate::fmt17((o - e.logdet).abs()));
                    }
                    None => s.push_str(",,"),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// One `(epsilon, logdet)` sample read back from sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSample {
    pub epsilon: f64,
    pub logdet: f64,
}

/// Reads the `epsilon` and `logdet` columns of sweep CSV.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepSample>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| Error::Config("empty sweep csv".into()))?.split(',').map(str::trim).collect();
    let col = |name: &str| header.iter().position(|h| *h == name).ok_or_else(|| Error::Config(format!("sweep csv lacks column {name}")));
    let (ce, cl) = (col("epsilon")?, col("logdet")?);
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |c: usize| -> Result<f64> {
            f.get(c)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Config(format!("sweep csv row {}: bad number in column {c}", k + 1)))
        };
        out.push(SweepSample { epsilon: num(ce)?, logdet: num(cl)? });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::Rect;

    #[test]
    fn one_by_one() {
        let a = SparseOperator::from_diagonal(&[4.0]);
        assert!((logdet_pd(&a, None).unwrap().logdet - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_interior() {
        let x = CellComplex::unit_square(3);
        let r = logdet_laplacian(&x, &MetricField::identity(Rect::unit()), &BoundarySpec::all()).unwrap();
        assert_eq!(r.n, 4);
        assert!((r.logdet - 192f64.ln()).abs() < 1e-13);
        let o = logdet_constant_oracle(2, 2, 1.0, 1.0, &BoundarySpec::all());
        assert!((o.logdet - 192f64.ln()).abs() < 1e-13);
        assert!((logdet_constant_oracle(1, 1, 1.0, 1.0, &BoundarySpec::all()).logdet - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mixed_ends_match_oracle() {
        let x = CellComplex::new(Rect::unit(), 7, 5).unwrap();
        let g = MetricField::constant(3.0, 0.5, Rect::unit()).unwrap();
        for sides in [vec![Side::Bottom], vec![Side::Left, Side::Top], vec![Side::Left, Side::Right, Side::Top]] {
            let l = BoundarySpec::new(&sides).unwrap();
            let r = logdet_laplacian(&x, &g, &l).unwrap();
            let o = logdet_constant_oracle(6, 4, 3.0, 0.5, &l);
            assert_eq!(r.n, o.n);
            assert!((r.logdet - o.logdet).abs() < 1e-10, "{sides:?}: {} vs {}", r.logdet, o.logdet);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let g = MetricField::identity(Rect::unit());
        let s = sweep(&g, &CellComplex::unit_square(2), &BoundarySpec::all(), &[1, 2], SweepOptions::default()).unwrap();
        let back = parse_sweep_csv(&s.to_csv()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].logdet, s.entries[1].logdet);
    }

    #[test]
    fn rejects_unsorted_levels() {
        let g = MetricField::identity(Rect::unit());
        assert!(sweep(&g, &CellComplex::unit_square(2), &BoundarySpec::all(), &[2, 1], SweepOptions::default()).is_err());
    }
}
