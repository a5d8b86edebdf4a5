//! Independent reference constructions shared by the integration tests.
//!
//! Nothing here calls the library's dissipator, coefficient tables or
//! quadrature. The eigenbasis is taken from the library, since it is the
//! object under comparison rather than under test.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type Cm = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// sigma_minus on `site` (1-based, site 1 the leftmost kron factor):
/// |1><0|, where index 0 is the sigma_z = +1 state.
pub fn sigma_minus(n: usize, site: usize) -> Cm {
    let mut s = Cm::zeros(2, 2);
    s[(1, 0)] = c(1.0, 0.0);
    let mut out = Cm::identity(1, 1);
    for l in 1..=n {
        let f = if l == site { s.clone() } else { Cm::identity(2, 2) };
        out = out.kronecker(&f);
    }
    out
}

/// Bath parameters for the reference coefficients.
#[derive(Clone, Copy, Debug)]
pub struct RefBath {
    pub site: usize,
    pub beta: f64,
    pub gamma: f64,
    pub omega_c: f64,
    /// Upper integration limit.
    pub upper: f64,
}

impl RefBath {
    fn j(&self, w: f64) -> f64 {
        self.gamma * w * (-(w / self.omega_c).powi(2)).exp()
    }

    /// J n on (0, inf), continuous at 0.
    pub fn jn(&self, w: f64) -> f64 {
        if w <= 1e-300 {
            return self.gamma / self.beta;
        }
        self.j(w) / ((self.beta * w).exp() - 1.0)
    }

    /// J (n + 1) on (0, inf), continuous at 0.
    pub fn jn1(&self, w: f64) -> f64 {
        if w <= 1e-300 {
            return self.gamma / self.beta;
        }
        self.j(w) / (1.0 - (-self.beta * w).exp())
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (even) intervals.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Panels refined geometrically toward both `0` and `pole`.
fn breakpoints(upper: f64, pole: f64) -> Vec<f64> {
    let mut pts = vec![0.0, upper];
    let mut x = 0.25;
    while x < upper {
        pts.push(x);
        x += 0.25;
    }
    if pole < 0.0 {
        for k in -2..4 {
            pts.push((-pole * 10f64.powi(k)).min(upper));
        }
    }
    for k in 0..14 {
        let r = 10f64.powi(-k);
        pts.push(r.min(upper));
        if pole > 0.0 && pole < upper {
            for s in [-1.0, 1.0] {
                let x = pole + s * r * pole.min(upper - pole);
                if x > 0.0 && x < upper {
                    pts.push(x);
                }
            }
        }
    }
    if pole > 0.0 && pole < upper {
        pts.push(pole);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `P int_0^upper f(w) / (w - pole) dw` by subtracting `f(pole)` near an
/// interior pole.
pub fn principal_value<F: Fn(f64) -> f64>(f: F, pole: f64, upper: f64) -> f64 {
    let interior = pole > 0.0 && pole < upper;
    let fp = if interior { f(pole) } else { 0.0 };
    let g = |w: f64| {
        let dw = w - pole;
        if interior {
            if dw.abs() < 1e-12 * pole.max(1.0) {
                let h = 1e-6 * pole.max(1e-3);
                (f(pole + h) - f(pole - h)) / (2.0 * h)
            } else {
                (f(w) - fp) / dw
            }
        } else {
            f(w) / dw
        }
    };
    let pts = breakpoints(upper, pole);
    let smooth: f64 = pts
        .windows(2)
        .map(|p| simpson(&g, p[0], p[1], if p[1] - p[0] < 0.2 { 400 } else { 100 }))
        .sum();
    if interior {
        smooth + fp * ((upper - pole) / pole).ln()
    } else {
        smooth
    }
}

/// `(C, D)` at gap `e`; zero imaginary part at a vanishing gap.
pub fn coefficients(b: &RefBath, e: f64) -> (Complex64, Complex64) {
    if e.abs() < 1e-12 {
        let r = 0.5 * b.gamma / b.beta;
        return (c(r, 0.0), c(r, 0.0));
    }
    let (rc, rd) = if e > 0.0 { (0.5 * b.jn(e), 0.5 * b.jn1(e)) } else { (0.0, 0.0) };
    let ic = -principal_value(|w| b.jn(w), e, b.upper);
    let id = -principal_value(|w| b.jn1(w), e, b.upper);
    (c(rc, ic), c(rd, id))
}

/// Dense `d^2 x d^2` superoperator acting on column-stacked site-basis
/// matrices, assembled one basis element at a time by expanding every
/// commutator with explicit projectors.
pub fn dense_superoperator(n: usize, vectors: &Cm, energies: &[f64], baths: &[RefBath]) -> Cm {
    let d = 1usize << n;
    let proj: Vec<Cm> = (0..d).map(|a| vectors.column(a) * vectors.column(a).adjoint()).collect();
    // A_{alpha gamma} = P_alpha s P_gamma, with coefficients
    let mut terms: Vec<(Cm, Vec<(Cm, Complex64, Complex64)>)> = Vec::new();
    for b in baths {
        let s = sigma_minus(n, b.site);
        let mut parts = Vec::new();
        for a in 0..d {
            for g in 0..d {
                let piece = &proj[a] * &s * &proj[g];
                if piece.iter().all(|z| z.norm() < 1e-15) {
                    continue;
                }
                let (cc, dd) = coefficients(b, energies[g] - energies[a]);
                parts.push((piece, cc, dd));
            }
        }
        terms.push((s.adjoint(), parts));
    }
    let t = |rho: &Cm| -> Cm {
        let mut out = Cm::zeros(d, d);
        for (sp, parts) in &terms {
            for (piece, cc, dd) in parts {
                let x = rho * piece;
                out += (&x * sp - sp * &x) * *cc;
                let y = piece * rho;
                out += (sp * &y - &y * sp) * *dd;
            }
        }
        out
    };
    let mut sup = Cm::zeros(d * d, d * d);
    for col in 0..d * d {
        let mut e = Cm::zeros(d, d);
        e[(col % d, col / d)] = c(1.0, 0.0);
        let l = -(t(&e) + t(&e.adjoint()).adjoint());
        for (k, z) in l.iter().enumerate() {
            sup[(k, col)] = *z;
        }
    }
    sup
}

pub fn apply_dense(sup: &Cm, rho: &Cm) -> Cm {
    let d = rho.nrows();
    let v = DMatrix::from_iterator(d * d, 1, rho.iter().copied());
    let out = sup * v;
    Cm::from_iterator(d, d, out.iter().copied())
}

pub fn max_abs(m: &Cm) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
