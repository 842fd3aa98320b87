//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line and asserts the same outcome.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use lapdet::asymptotics::{adjudicate, density_F, fit_expansion, DensityVariant, ModelBasis};
use lapdet::complex::{BoundarySpec, CellComplex, Rect};
use lapdet::dimerft::{dimer_weights_wr, dimer_z_brute, duality_check, gauge_transform, kasteleyn_check_and_z, proposition_gauge};
use lapdet::latticefn::{
    lattice_log, lattice_log_asymptotic, lattice_log_dxx_origin, lattice_log_laplacian, neumann_series_check, residual_series,
    LatticeLogParams, ParametrixConfig, CATALAN,
};
use lapdet::metric::{consistency_error, parse_metric_expr, weights_from_metric, Form, MetricField};
use lapdet::operators::consistency_residual;
use lapdet::spectral::{logdet_laplacian, sweep, SweepOptions, SweepSample, SweepSeries};

mod tol {
    pub const BULK_REL: f64 = 1e-3;
    pub const BOUNDARY_ABS: f64 = 1e-2;
    pub const LOG_ABS: f64 = 0.05;
    pub const VARYING_BULK_REL: f64 = 0.01;
    pub const VARYING_BOUNDARY_REL: f64 = 0.05;
    pub const ORACLE_ABS: f64 = 1e-8;
    pub const HARMONIC: f64 = 1e-10;
    pub const ORIGIN_CLOSED_FORM: f64 = 1e-10;
    pub const FAR_FIELD_R50: f64 = 3e-4;
    pub const RESIDUAL_SLOPE: f64 = 0.8;
    pub const DIMER_REL: f64 = 1e-9;
    pub const GAUGE_REL: f64 = 1e-12;
    pub const DUALITY: f64 = 1e-9;
    pub const LAPLACIAN_SLOPE: f64 = 2.0;
    pub const LAPLACIAN_SLOPE_BAND: f64 = 0.1;
    pub const RIEMANNIAN_SLOPE: f64 = 0.9;
    pub const SCALING_PER_UNKNOWN: f64 = 1e-10;
}

/// Sweep levels giving `N ∈ {16, 32, 64, 128, 256}` cells per side.
const LEVELS_16_256: [u32; 5] = [4, 5, 6, 7, 8];

fn verdict(criterion: u32, title: &str, passed: bool, detail: String) {
    println!("{} criterion {criterion} {title}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "criterion {criterion} {title}: {detail}");
}

fn run_sweep(g: &MetricField, l: &BoundarySpec, oracle: bool) -> (SweepSeries, Vec<SweepSample>, Duration) {
    let t = Instant::now();
    let s = sweep(g, &CellComplex::unit_square(1), l, &LEVELS_16_256, SweepOptions { with_oracle: oracle, ..Default::default() }).unwrap();
    let samples = s.entries.iter().map(|e| SweepSample { epsilon: e.epsilon, logdet: e.logdet }).collect();
    (s, samples, t.elapsed())
}

fn identity_sweep() -> (Vec<SweepSample>, Duration) {
    let (_, samples, dt) = run_sweep(&MetricField::identity(Rect::unit()), &BoundarySpec::all(), false);
    (samples, dt)
}

#[test]
fn criterion_01_bulk_constant() {
    let (samples, dt) = identity_sweep();
    let fit = fit_expansion(&samples, &ModelBasis::free()).unwrap();
    let target = 4.0 * CATALAN / PI;
    let rel = (fit.c_bulk - target).abs() / target;
    let ok = rel < tol::BULK_REL && dt < Duration::from_secs(120);
    verdict(1, "bulk constant", ok, format!("c_bulk {:.10} vs 4G/pi {target:.10}, rel {rel:.2e}, sweep {dt:.1?}", fit.c_bulk));
}

#[test]
fn criterion_02_boundary_constant() {
    let (samples, _) = identity_sweep();
    let fit = fit_expansion(&samples, &ModelBasis::free()).unwrap();
    let perimeter = 4.0;
    let per_length = fit.c_boundary / perimeter;
    let target = (2f64.sqrt() - 1.0).ln();
    let err = (per_length - target).abs();
    verdict(
        2,
        "boundary constant",
        err < tol::BOUNDARY_ABS,
        format!("c_boundary/perimeter {per_length:.6} vs log(sqrt2 - 1) {target:.6}, |diff| {err:.3e} (c_boundary {:.6})", fit.c_boundary),
    );
}

#[test]
fn criterion_03_log_coefficient() {
    let (samples, _) = identity_sweep();
    let free = fit_expansion(&samples, &ModelBasis::free()).unwrap();
    let frozen = fit_expansion(&samples, &ModelBasis::free().with_fixed(0, free.c_bulk).with_fixed(1, free.c_boundary)).unwrap();
    // (1/4) log(NM) with N = M = 1/eps is (1/2) |log eps|.
    let magnitude = 0.5;
    let err = (frozen.c_log.abs() - magnitude).abs();
    let sign = if frozen.c_log >= 0.0 { "+" } else { "-" };
    verdict(
        3,
        "log coefficient",
        err < tol::LOG_ABS,
        format!("c_log {:.5} (|c_log| vs 1/2: {err:.2e}); sign {sign} relative to +(1/2) log eps", frozen.c_log),
    );
}

#[test]
fn criterion_04_varying_metric() {
    let g = MetricField::parse("(1 + x/2)^2", "1", Rect::unit()).unwrap();
    let l = BoundarySpec::all();
    let (_, samples, dt) = run_sweep(&g, &l, false);
    let adj = adjudicate(&samples, &g, &l).unwrap();
    let v = adj.variants.iter().find(|r| r.variant == adj.selected_variant).unwrap();
    let bulk = (adj.fitted.c_bulk - v.I_F).abs() / v.I_F.abs();
    let bdry = (adj.fitted.c_boundary - v.I_B).abs() / v.I_B.abs();
    let ok = bulk < tol::VARYING_BULK_REL && bdry < tol::VARYING_BOUNDARY_REL && dt < Duration::from_secs(300);
    verdict(
        4,
        "varying metric",
        ok,
        format!(
            "variant {}: c_bulk {:.8} vs {:.8} (rel {bulk:.2e}), c_boundary {:.6} vs {:.6} (rel {bdry:.2e}), sweep {dt:.1?}",
            adj.selected_variant.name(),
            adj.fitted.c_bulk,
            v.I_F,
            adj.fitted.c_boundary,
            v.I_B
        ),
    );
}

#[test]
fn criterion_05_anisotropic_constant_metric() {
    let g = MetricField::constant(4.0, 1.0, Rect::unit()).unwrap();
    let (s, samples, _) = run_sweep(&g, &BoundarySpec::all(), true);
    let oracle_diff = s.entries.iter().map(|e| (e.oracle.unwrap() - e.logdet).abs()).fold(0.0, f64::max);
    let fit = fit_expansion(&samples, &ModelBasis::free()).unwrap();
    let target = Rect::unit().area() * density_F(2.0, 0.5, DensityVariant::Corrected);
    let rel = (fit.c_bulk - target).abs() / target;
    verdict(
        5,
        "anisotropic constant metric",
        rel < tol::BULK_REL && oracle_diff < tol::ORACLE_ABS,
        format!("c_bulk {:.10} vs Area*F(2,1/2) {target:.10}, rel {rel:.2e}; max |logdet - oracle| {oracle_diff:.2e}", fit.c_bulk),
    );
}

#[test]
fn criterion_06_lattice_logarithm() {
    let pairs = [(1.0, 1.0), (4.0, 1.0), (1.0, 4.0), (3.0, 0.5)];
    let unit = LatticeLogParams::new(1.0, 1.0).unwrap();
    let p1 = pairs.iter().all(|&(a, b)| lattice_log(LatticeLogParams::new(a, b).unwrap(), 0, 0).unwrap() == 0.0);
    let mut harm: f64 = 0.0;
    for x in -20..=20 {
        for y in -20..=20 {
            let v = lattice_log_laplacian(unit, x, y).unwrap();
            harm = harm.max(if (x, y) == (0, 0) { (v - 1.0).abs() } else { v.abs() });
        }
    }
    let mut p5: f64 = 0.0;
    for (a, b) in pairs {
        let p = LatticeLogParams::new(a, b).unwrap();
        let l = |x, y| lattice_log(p, x, y).unwrap();
        let dxx = l(1, 0) + l(-1, 0) - 2.0 * l(0, 0);
        let dyy = l(0, 1) + l(0, -1) - 2.0 * l(0, 0);
        let dxx_closed = 2.0 * a / PI * (b / a).sqrt().atan();
        let dyy_closed = 2.0 * b / PI * (a / b).sqrt().atan();
        assert_eq!(dxx_closed, lattice_log_dxx_origin(p));
        p5 = p5
            .max((dxx - dxx_closed).abs())
            .max((dyy - dyy_closed).abs())
            .max((0.5 * (l(1, 0) - l(-1, 0))).abs())
            .max((0.5 * (l(0, 1) - l(0, -1))).abs());
    }
    let far = (lattice_log(unit, 50, 0).unwrap() - lattice_log_asymptotic(unit, 50.0, 0.0)).abs();
    let ok = p1 && harm < tol::HARMONIC && p5 < tol::ORIGIN_CLOSED_FORM && far < tol::FAR_FIELD_R50;
    verdict(6, "lattice logarithm", ok, format!("P1 {p1}; P2 max {harm:.2e}; P5 max {p5:.2e}; P3 |diff| at (50,0) {far:.2e}"));
}

#[test]
fn criterion_07_parametrix_residual() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (a, b) in [(1.0, 1.0), (4.0, 1.0)] {
        let cfg = ParametrixConfig {
            metric: MetricField::constant(a, b, Rect::unit()).unwrap(),
            boundary: BoundarySpec::all(),
            base: CellComplex::unit_square(1),
            level: 4,
            delta: Some(3.0 / 16.0),
        };
        let r = residual_series(&cfg, &[4, 5, 6, 7]).unwrap();
        // Dense Neumann products are limited to 64 x 64 cells.
        let n = neumann_series_check(&cfg, &[4, 5, 6]).unwrap();
        let e = &n.error_terms3;
        let decreasing = e.windows(2).all(|w| w[1] < w[0]);
        ok &= r.column_slope >= tol::RESIDUAL_SLOPE && decreasing;
        detail.push(format!("({a},{b}) slope {:.3}, 3-term max error {:.2e} -> {:.2e}", r.column_slope, e[0], e[e.len() - 1]));
    }
    verdict(7, "parametrix residual", ok, detail.join("; "));
}

fn dimer_battery() -> Vec<(CellComplex, lapdet::metric::RiemannianWeights, BoundarySpec)> {
    let mut out = Vec::new();
    for (a, b) in [(1.0, 1.0), (4.0, 1.0), (1.0, 2.5)] {
        let g = MetricField::constant(a, b, Rect::unit()).unwrap();
        for nx in 1..=3 {
            for ny in 1..=3 {
                let x = CellComplex::new(Rect::unit(), nx, ny).unwrap();
                let w = weights_from_metric(&x, &g).unwrap();
                for l in lapdet::cli::verify::dimer_boundaries() {
                    out.push((x.clone(), w.clone(), l));
                }
            }
        }
    }
    out
}

#[test]
fn criterion_08_dimer_correspondence() {
    let (mut corr, mut faces, mut gauge): (f64, usize, f64) = (0.0, 0, 0.0);
    let battery = dimer_battery();
    let mut face_rule = true;
    for (x, w, l) in &battery {
        match kasteleyn_check_and_z(x, w, l, true) {
            Ok(c) => {
                corr = corr.max(c.max_relative_error());
                faces += c.faces_checked;
            }
            Err(_) => face_rule = false,
        }
        let g = dimer_weights_wr(x, w, l);
        let lam = proposition_gauge(&g, w);
        let z = dimer_z_brute(&g).unwrap();
        let zg = dimer_z_brute(&gauge_transform(&g, &lam).unwrap()).unwrap();
        gauge = gauge.max((zg / (lam.iter().product::<f64>() * z) - 1.0).abs());
    }
    let ok = face_rule && corr < tol::DIMER_REL && gauge < tol::GAUGE_REL;
    verdict(
        8,
        "dimer correspondence",
        ok,
        format!("{} complexes, {faces} faces, face rule {face_rule}; max rel |Z_d - Z_f| {corr:.2e}; gauge {gauge:.2e}", battery.len()),
    );
}

#[test]
fn criterion_09_duality() {
    let (mut product, mut single): (f64, f64) = (0.0, 0.0);
    for (x, w, l) in dimer_battery() {
        let d = duality_check(&x, &w, &l).unwrap();
        product = product.max(d.log_product.abs());
        single = single.max(d.log_single_fermion_product.abs());
    }
    let err = product.exp_m1();
    verdict(
        9,
        "duality",
        err < tol::DUALITY,
        format!("max |Z_f Zt_f Z_b Zt_b - 1| = {err:.3e} (max |log| {product:.3}); single-fermion form max |log| {single:.2e}"),
    );
}

#[test]
fn criterion_10_consistency_orders() {
    let base = CellComplex::unit_square(1);
    let levels = [4, 5, 6, 7];
    let g = MetricField::parse("(1 + x/2)^2", "1", Rect::unit()).unwrap();
    let f = parse_metric_expr("sin(2*x + 0.3) * cos(3*y - 0.2)").unwrap();
    let lap = consistency_residual(&base, &levels, &g, &BoundarySpec::all(), &f.expr).unwrap();
    let f0 = |x: f64, y: f64| (x + 0.5 * y).exp();
    let (u, v) = (|x: f64, y: f64| (x * y).cos(), |x: f64, y: f64| x - y * y);
    let f2 = |x: f64, y: f64| 1.0 + x * y;
    let slopes: Vec<f64> = [Form::Zero(&f0), Form::One(&u, &v), Form::Two(&f2)]
        .iter()
        .map(|form| consistency_error(&base, &levels, &g, form).unwrap().slope)
        .collect();
    let x = base.at_level(6);
    let c = 2.5;
    let r0 = logdet_laplacian(&x, &g, &BoundarySpec::all()).unwrap();
    let r1 = logdet_laplacian(&x, &g.scaled(c).unwrap(), &BoundarySpec::all()).unwrap();
    let n = r0.n as f64;
    let scaling = (r1.logdet - r0.logdet + n * c.ln()).abs();
    let ok = (lap.slope - tol::LAPLACIAN_SLOPE).abs() <= tol::LAPLACIAN_SLOPE_BAND
        && slopes.iter().all(|&s| s >= tol::RIEMANNIAN_SLOPE)
        && scaling <= tol::SCALING_PER_UNKNOWN * n;
    verdict(
        10,
        "consistency orders",
        ok,
        format!("laplacian slope {:.3}; riemannian slopes {:.3?}; scaling |err| {scaling:.2e} (n = {})", lap.slope, slopes, r0.n),
    );
}
