//! Invariant suites behind `lapdet verify`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::complex::{BoundarySpec, CellComplex, Rect, Side};
use crate::dimerft::{dimer_weights_wr, dimer_z_brute, duality_check, gauge_transform, kasteleyn_check_and_z, proposition_gauge};
use crate::error::Result;
use crate::latticefn::{
    lattice_log, lattice_log_asymptotic, lattice_log_dxx_origin, lattice_log_laplacian, neumann_series_check, residual_series,
    LatticeLogParams, ParametrixConfig,
};
use crate::metric::{consistency_error, parse_metric_expr, weights_from_metric, Form, MetricField};
use crate::operators::consistency_residual;
use crate::spectral::logdet_laplacian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Lattice,
    Dimer,
    Parametrix,
    Consistency,
    All,
}

/// One named check: `value` compared against `limit` under `relation`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub relation: &'static str,
    pub limit: f64,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), passed: value <= limit, value, relation: "<=", limit }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Check { name: name.into(), passed: value >= limit, value, relation: ">=", limit }
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("{status} {} ({:.3e} {} {:.3e})", self.name, self.value, self.relation, self.limit)
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        Suite::Lattice => lattice(&mut rng),
        Suite::Dimer => dimer(&mut rng),
        Suite::Parametrix => parametrix(),
        Suite::Consistency => consistency(&mut rng),
        Suite::All => {
            let mut out = lattice(&mut rng)?;
            out.extend(dimer(&mut rng)?);
            out.extend(parametrix()?);
            out.extend(consistency(&mut rng)?);
            Ok(out)
        }
    }
}

pub const LATTICE_PAIRS: [(f64, f64); 4] = [(1.0, 1.0), (4.0, 1.0), (1.0, 4.0), (3.0, 0.5)];

fn lattice(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let unit = LatticeLogParams::new(1.0, 1.0)?;
    let mut p1: f64 = 0.0;
    for (a, b) in LATTICE_PAIRS {
        p1 = p1.max(lattice_log(LatticeLogParams::new(a, b)?, 0, 0)?.abs());
    }
    out.push(Check::at_most("lattice/property1_origin_zero", p1, 0.0));

    let mut harm: f64 = 0.0;
    for x in -20..=20 {
        for y in -20..=20 {
            if (x, y) != (0, 0) {
                harm = harm.max(lattice_log_laplacian(unit, x, y)?.abs());
            }
        }
    }
    out.push(Check::at_most("lattice/property2_harmonic_r20", harm, 1e-10));
    out.push(Check::at_most("lattice/property2_unit_source", (lattice_log_laplacian(unit, 0, 0)? - 1.0).abs(), 1e-10));

    let (a, b) = (rng.random_range(0.25..4.0), rng.random_range(0.25..4.0));
    let p = LatticeLogParams::new(a, b)?;
    let mut worst: f64 = (lattice_log_laplacian(p, 0, 0)? - 1.0).abs();
    for _ in 0..24 {
        let (x, y) = (rng.random_range(-20..=20), rng.random_range(-20..=20));
        if (x, y) != (0, 0) {
            worst = worst.max(lattice_log_laplacian(p, x, y)?.abs());
        }
    }
    out.push(Check::at_most(format!("lattice/property2_seeded_a{a:.3}_b{b:.3}"), worst, 1e-10));

    let mut p5: f64 = 0.0;
    for (a, b) in LATTICE_PAIRS {
        let p = LatticeLogParams::new(a, b)?;
        let l10 = lattice_log(p, 1, 0)?;
        let l01 = lattice_log(p, 0, 1)?;
        let dx = 0.5 * (l10 - lattice_log(p, -1, 0)?);
        let dy = 0.5 * (l01 - lattice_log(p, 0, -1)?);
        let dxx = l10 + lattice_log(p, -1, 0)?;
        let dyy = l01 + lattice_log(p, 0, -1)?;
        p5 = p5
            .max(dx.abs())
            .max(dy.abs())
            .max((dxx - lattice_log_dxx_origin(p)).abs())
            .max((dyy - lattice_log_dxx_origin(p.swapped())).abs());
    }
    out.push(Check::at_most("lattice/property5_origin_derivatives", p5, 1e-10));

    let far = (lattice_log(unit, 50, 0)? - lattice_log_asymptotic(unit, 50.0, 0.0)).abs();
    out.push(Check::at_most("lattice/property3_far_field_r50", far, 3e-4));

    let q = LatticeLogParams::new(4.0, 1.0)?;
    let mut sym: f64 = 0.0;
    for (x, y) in [(3, 2), (5, 1), (0, 4)] {
        let v = lattice_log(q, x, y)?;
        sym = sym
            .max((v - lattice_log(q, -x, y)?).abs())
            .max((v - lattice_log(q, x, -y)?).abs())
            .max((v - lattice_log(q.swapped(), y, x)?).abs());
    }
    out.push(Check::at_most("lattice/reflection_symmetry", sym, 1e-12));
    Ok(out)
}

/// Constant metrics of the small-complex battery.
pub const DIMER_METRICS: [(f64, f64); 3] = [(1.0, 1.0), (4.0, 1.0), (1.0, 2.5)];

pub fn dimer_boundaries() -> [BoundarySpec; 2] {
    [BoundarySpec::new(&[Side::Bottom]).expect("one side"), BoundarySpec::new(&[Side::Left, Side::Bottom]).expect("two sides")]
}

fn dimer(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let (mut corr, mut faces, mut gauge, mut dual): (f64, usize, f64, f64) = (0.0, 0, 0.0, 0.0);
    let mut cases = 0;
    for (a, b) in DIMER_METRICS {
        let g = MetricField::constant(a, b, Rect::unit())?;
        for nx in 1..=3 {
            for ny in 1..=3 {
                let x = CellComplex::new(Rect::unit(), nx, ny)?;
                let w = weights_from_metric(&x, &g)?;
                for l in dimer_boundaries() {
                    let c = kasteleyn_check_and_z(&x, &w, &l, true)?;
                    corr = corr.max(c.max_relative_error());
                    faces += c.faces_checked;
                    let graph = dimer_weights_wr(&x, &w, &l);
                    let z = dimer_z_brute(&graph)?;
                    let seeded: Vec<f64> = (0..graph.n_vertices).map(|_| rng.random_range(0.5..2.0)).collect();
                    for lam in [proposition_gauge(&graph, &w), seeded] {
                        let zg = dimer_z_brute(&gauge_transform(&graph, &lam)?)?;
                        let scale: f64 = lam.iter().product();
                        gauge = gauge.max((zg / (scale * z) - 1.0).abs());
                    }
                    dual = dual.max(duality_check(&x, &w, &l)?.log_single_fermion_product.abs());
                    cases += 1;
                }
            }
        }
    }
    Ok(vec![
        Check::at_most(format!("dimer/correspondence_{cases}_cases"), corr, 1e-9),
        Check::at_least("dimer/kasteleyn_faces_checked", faces as f64, 1.0),
        Check::at_most("dimer/gauge_identity", gauge, 1e-12),
        Check::at_most("dimer/duality_single_fermion", dual, 1e-9),
    ])
}

/// Collar width used by the parametrix suite.
pub const PARAMETRIX_DELTA: f64 = 3.0 / 16.0;

fn parametrix() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (a, b) in [(1.0, 1.0), (4.0, 1.0)] {
        let cfg = ParametrixConfig {
            metric: MetricField::constant(a, b, Rect::unit())?,
            boundary: BoundarySpec::all(),
            base: CellComplex::unit_square(1),
            level: 4,
            delta: Some(PARAMETRIX_DELTA),
        };
        let levels = [4, 5, 6];
        let r = residual_series(&cfg, &levels)?;
        out.push(Check::at_least(format!("parametrix/residual_slope_a{a}_b{b}"), r.column_slope, 0.8));
        let n = neumann_series_check(&cfg, &levels)?;
        let e = &n.error_terms3;
        let decreasing = e.windows(2).all(|w| w[1] < w[0]);
        out.push(Check {
            name: format!("parametrix/neumann3_decreasing_a{a}_b{b}"),
            passed: decreasing,
            value: e[e.len() - 1],
            relation: "<",
            limit: e[0],
        });
    }
    Ok(out)
}

fn consistency(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let base = CellComplex::unit_square(1);
    let levels = [4, 5, 6, 7];
    let varying = MetricField::parse("(1 + x/2)^2", "1", Rect::unit())?;
    let f = parse_metric_expr("sin(2*x + 0.3) * cos(3*y - 0.2)")?;
    let lap = consistency_residual(&base, &levels, &varying, &BoundarySpec::all(), &f.expr)?;
    out.push(Check::at_most("consistency/laplacian_slope_minus_2", (lap.slope - 2.0).abs(), 0.1));

    let f0 = |x: f64, y: f64| (x + 0.5 * y).exp();
    let (u, v) = (|x: f64, y: f64| (x * y).cos(), |x: f64, y: f64| x - y * y);
    let f2 = |x: f64, y: f64| 1.0 + x * y;
    for form in [Form::Zero(&f0), Form::One(&u, &v), Form::Two(&f2)] {
        let s = consistency_error(&base, &levels, &varying, &form)?;
        out.push(Check::at_least(format!("consistency/riemannian_{}form_slope", form.degree()), s.slope, 0.9));
    }

    let c: f64 = rng.random_range(0.5..4.0);
    let x = base.at_level(5);
    let r0 = logdet_laplacian(&x, &varying, &BoundarySpec::all())?;
    let r1 = logdet_laplacian(&x, &varying.scaled(c)?, &BoundarySpec::all())?;
    let n = r0.n as f64;
    let err = (r1.logdet - r0.logdet + n * c.ln()).abs();
    out.push(Check::at_most(format!("consistency/scaling_identity_c{c:.4}"), err / n, 1e-10));
    Ok(out)
}
