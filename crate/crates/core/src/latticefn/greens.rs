//! Green's function of `-(1/a) ∂x² - (1/b) ∂y²` on a rectangle with Dirichlet sides `L` and
//! Neumann elsewhere, by a closed-form strip kernel summed over reflections along the strip.

use std::f64::consts::PI;

use crate::complex::{BoundarySpec, Rect, Side};
use crate::error::{Error, Result};

const MAX_IMAGES: i64 = 1_000_000;

/// One Dirichlet strip kernel for a fixed source: width `h`, `sin²(v/2)` for the source and its
/// reflection across `η = 0`, and the source offset `v1` for the regularized term.
#[derive(Clone, Copy)]
struct Piece {
    h: f64,
    s1: f64,
    s2: f64,
    v1: f64,
    direct: bool,
}

impl Piece {
    fn new(eta: f64, eta_s: f64, h: f64, direct: bool) -> Self {
        let v1 = PI * (eta - eta_s) / h;
        let v2 = PI * (eta + eta_s) / h;
        let (a, b) = ((0.5 * v1).sin(), (0.5 * v2).sin());
        Piece { h, s1: a * a, s2: b * b, v1, direct }
    }
}

#[derive(Debug, Clone)]
pub struct SmoothGreens {
    pub a: f64,
    pub b: f64,
    pub rect: Rect,
    pub boundary: BoundarySpec,
    /// Strip walls are bottom and top when true, left and right otherwise.
    walls_horizontal: bool,
    /// Strip width and length in isotropic coordinates.
    hs: f64,
    wd: f64,
    /// Dirichlet flags of the strip walls at `η = 0` and `η = hs`.
    wall_lo: bool,
    wall_hi: bool,
    /// Reflection signs at the strip ends `ξ = 0` and `ξ = wd`.
    end_lo: f64,
    end_hi: f64,
    kmax: i64,
}

fn image_count(hs: f64, wd: f64, both_dirichlet: bool) -> i64 {
    // Terms decay like exp(-π (2k - 1) wd / h); stop below e^-32.
    let h_eff = if both_dirichlet { hs } else { 2.0 * hs };
    ((32.0 * h_eff / (PI * wd) + 1.0) / 2.0).ceil() as i64
}

impl SmoothGreens {
    pub fn new(a: f64, b: f64, rect: Rect, boundary: BoundarySpec) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Config(format!("metric constants must be positive, got {a}, {b}")));
        }
        let (w_iso, h_iso) = (a.sqrt() * rect.width(), b.sqrt() * rect.height());
        let sign = |s: Side| if boundary.contains(s) { -1.0 } else { 1.0 };
        let mut best: Option<SmoothGreens> = None;
        for walls_horizontal in [true, false] {
            let (lo, hi, end_lo, end_hi, hs, wd) = if walls_horizontal {
                (Side::Bottom, Side::Top, Side::Left, Side::Right, h_iso, w_iso)
            } else {
                (Side::Left, Side::Right, Side::Bottom, Side::Top, w_iso, h_iso)
            };
            let (wall_lo, wall_hi) = (boundary.contains(lo), boundary.contains(hi));
            if !(wall_lo || wall_hi) {
                continue;
            }
            let kmax = image_count(hs, wd, wall_lo && wall_hi);
            let cand = SmoothGreens {
                a,
                b,
                rect,
                boundary,
                walls_horizontal,
                hs,
                wd,
                wall_lo,
                wall_hi,
                end_lo: sign(end_lo),
                end_hi: sign(end_hi),
                kmax,
            };
            if best.as_ref().is_none_or(|g| kmax < g.kmax) {
                best = Some(cand);
            }
        }
        let g = best.expect("boundary spec is nonempty");
        if g.kmax > MAX_IMAGES {
            return Err(Error::Budget(format!("image series needs {} terms", g.kmax)));
        }
        Ok(g)
    }

    fn canonical(&self, p: (f64, f64)) -> (f64, f64) {
        let x = self.a.sqrt() * (p.0 - self.rect.x0);
        let y = self.b.sqrt() * (p.1 - self.rect.y0);
        if self.walls_horizontal {
            (x, y)
        } else {
            (y, x)
        }
    }

    fn pieces(&self, eta: f64, eta_s: f64, regular: bool) -> ([Piece; 2], usize) {
        let h = self.hs;
        let (e, es) = if self.wall_lo { (eta, eta_s) } else { (h - eta, h - eta_s) };
        if self.wall_lo && self.wall_hi {
            let p = Piece::new(e, es, h, regular);
            ([p, p], 1)
        } else {
            // Dirichlet at η = 0 and Neumann at η = h: even reflection across η = h.
            ([Piece::new(e, es, 2.0 * h, regular), Piece::new(e, 2.0 * h - es, 2.0 * h, false)], 2)
        }
    }

    /// Isotropic Green's function; with `regular` the source singularity `-(1/4π) ln R²` is
    /// removed, `R² = a Δx² + b Δy²`.
    fn iso(&self, p: (f64, f64), q: (f64, f64), regular: bool) -> f64 {
        let (xi, eta) = self.canonical(p);
        let (xs, es) = self.canonical(q);
        let (pieces, np) = self.pieces(eta, es, regular);
        let pieces = &pieces[..np];
        let h = pieces[0].h;
        let sigma = self.end_lo * self.end_hi;
        let mut total = 0.0;
        for k in -self.kmax..=self.kmax {
            let shift = 2.0 * k as f64 * self.wd;
            let w = if k.rem_euclid(2) == 0 { 1.0 } else { sigma };
            for (fam, (family, dxi)) in [(1.0, xi - xs - shift), (self.end_lo, xi + xs - shift)].into_iter().enumerate() {
                let u = PI * dxi / h;
                let e = (-u.abs()).exp();
                let ome = if u.abs() < 1.0 { -(-u.abs()).exp_m1() } else { 1.0 - e };
                let base = 0.5 * ome * ome;
                let mut acc = 0.0;
                for pc in pieces {
                    let a1 = base + 2.0 * e * pc.s1;
                    let a2 = base + 2.0 * e * pc.s2;
                    acc += if pc.direct && k == 0 && fam == 0 {
                        let r2 = u * u + pc.v1 * pc.v1;
                        let reg = if r2 == 0.0 { 0.5 } else { a1 / r2 };
                        (reg / a2).ln() - 2.0 * (pc.h / PI).ln()
                    } else {
                        (a1 / a2).ln()
                    };
                }
                total += w * family * acc;
            }
        }
        -total / (4.0 * PI)
    }

    /// `G(p, q)`, singular as `-(√ab/4π) ln(a Δx² + b Δy²)`.
    pub fn green(&self, p: (f64, f64), q: (f64, f64)) -> f64 {
        (self.a * self.b).sqrt() * self.iso(p, q, false)
    }

    /// `G(p, q) + (√ab/4π) ln(a Δx² + b Δy²)`, finite at `p = q`.
    pub fn regular(&self, p: (f64, f64), q: (f64, f64)) -> f64 {
        (self.a * self.b).sqrt() * self.iso(p, q, true)
    }

    /// Number of reflection pairs summed per evaluation.
    pub fn terms(&self) -> i64 {
        2 * self.kmax + 1
    }
}

/// Green's function of the constant-metric operator on `rect` with Dirichlet sides `l`.
pub fn smooth_greens_constant(a: f64, b: f64, rect: Rect, l: &BoundarySpec, p1: (f64, f64), p2: (f64, f64)) -> Result<f64> {
    if p1 == p2 {
        return Err(Error::Singular("Green's function evaluated on the diagonal".into()));
    }
    Ok(SmoothGreens::new(a, b, rect, *l)?.green(p1, p2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs() -> Vec<BoundarySpec> {
        vec![
            BoundarySpec::all(),
            BoundarySpec::new(&[Side::Bottom]).unwrap(),
            BoundarySpec::new(&[Side::Left, Side::Top]).unwrap(),
            BoundarySpec::new(&[Side::Right]).unwrap(),
        ]
    }

    #[test]
    fn symmetric() {
        let rect = Rect::new(0.0, 1.0, 0.0, 0.5).unwrap();
        for l in specs() {
            let g = SmoothGreens::new(3.0, 0.5, rect, l).unwrap();
            let (p, q) = ((0.2, 0.1), (0.7, 0.33));
            assert!((g.green(p, q) - g.green(q, p)).abs() < 1e-12);
        }
    }

    #[test]
    fn vanishes_on_dirichlet_sides() {
        let rect = Rect::unit();
        for l in specs() {
            let g = SmoothGreens::new(2.0, 1.0, rect, l).unwrap();
            let q = (0.4, 0.6);
            let interior = g.green((0.5, 0.5), q).abs();
            for s in l.sides() {
                let p = match s {
                    Side::Left => (1e-3, 0.3),
                    Side::Right => (1.0 - 1e-3, 0.3),
                    Side::Bottom => (0.3, 1e-3),
                    Side::Top => (0.3, 1.0 - 1e-3),
                };
                assert!(g.green(p, q).abs() < 1e-2 * interior, "{s:?}");
            }
        }
    }

    #[test]
    fn neumann_sides_have_zero_flux() {
        let l = BoundarySpec::new(&[Side::Bottom]).unwrap();
        let g = SmoothGreens::new(1.0, 2.0, Rect::unit(), l).unwrap();
        let q = (0.3, 0.4);
        let h = 1e-5;
        let dx = (g.green((h, 0.7), q) - g.green((-h, 0.7), q)) / (2.0 * h);
        let dy = (g.green((0.6, 1.0 + h), q) - g.green((0.6, 1.0 - h), q)) / (2.0 * h);
        assert!(dx.abs() < 1e-8 && dy.abs() < 1e-8);
    }

    #[test]
    fn regular_part_is_bounded_and_continuous() {
        let g = SmoothGreens::new(4.0, 1.0, Rect::unit(), BoundarySpec::all()).unwrap();
        let p = (0.4, 0.55);
        let at = g.regular(p, p);
        let near = g.regular(p, (0.4 + 1e-6, 0.55 - 1e-6));
        assert!(at.is_finite() && (at - near).abs() < 1e-5);
        let q = (0.42, 0.5);
        let direct = g.green(p, q) + (4f64).sqrt() / (4.0 * PI) * (4.0 * 0.02f64.powi(2) + 0.05f64.powi(2)).ln();
        assert!((g.regular(p, q) - direct).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_square_matches_eigen_series() {
        // G = Σ 4 sin(mπx) sin(nπy) sin(mπx') sin(nπy') / (π²(m² + n²)) on the unit square.
        let g = SmoothGreens::new(1.0, 1.0, Rect::unit(), BoundarySpec::all()).unwrap();
        let (p, q) = ((0.3, 0.4), (0.6, 0.7));
        let mut s = 0.0;
        for m in 1..400 {
            for n in 1..400 {
                let (mf, nf) = (m as f64 * PI, n as f64 * PI);
                s += 4.0 * (mf * p.0).sin() * (nf * p.1).sin() * (mf * q.0).sin() * (nf * q.1).sin() / (mf * mf + nf * nf);
            }
        }
        assert!((g.green(p, q) - s).abs() < 1e-4, "{} vs {s}", g.green(p, q));
    }
}
