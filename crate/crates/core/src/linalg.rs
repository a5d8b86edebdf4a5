//! Small dense helpers shared by the physics modules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Kronecker product, with `a` acting on the more significant factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// LAPACK `zheevd` on the upper triangle. Eigenvalues ascending; columns of
/// the returned matrix are orthonormal eigenvectors (empty unless `vectors`).
/// `None` only when LAPACK reports non-convergence.
pub fn hermitian_eigh(m: &CMatrix, vectors: bool) -> Option<(Vec<f64>, CMatrix)> {
    assert!(m.is_square(), "hermitian_eigh needs a square matrix");
    let n = m.nrows();
    if n == 0 {
        return Some((vec![], CMatrix::zeros(0, 0)));
    }
    let jobz = if vectors { b'V' } else { b'N' };
    let ni = n as i32;
    // column-major, as LAPACK expects
    let mut a: Vec<Complex64> = m.as_slice().to_vec();
    let mut w = vec![0.0; n];
    let (mut work, mut rwork, mut iwork) = (vec![Complex64::default()], vec![0.0], vec![0i32]);
    let mut info = 0;
    for query in [true, false] {
        let (lw, lrw, liw) = if query { (-1, -1, -1) } else { (work.len() as i32, rwork.len() as i32, iwork.len() as i32) };
        unsafe {
            lapack::zheevd(jobz, b'U', ni, &mut a, ni, &mut w, &mut work, lw, &mut rwork, lrw, &mut iwork, liw, &mut info);
        }
        if info != 0 {
            return None;
        }
        if query {
            work = vec![Complex64::default(); work[0].re as usize];
            rwork = vec![0.0; rwork[0] as usize];
            iwork = vec![0; iwork[0] as usize];
        }
    }
    let v = if vectors { CMatrix::from_vec(n, n, a) } else { CMatrix::zeros(0, 0) };
    Some((w, v))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    match hermitian_eigh(m, false) {
        Some((ev, _)) => ev,
        None => {
            let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            ev
        }
    }
}

pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()).scale(0.5)
}

/// Random full-rank density matrix `A A^dag / Tr(A A^dag)`.
pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let rho = &a * a.adjoint();
    let tr = trace(&rho).re;
    rho.unscale(tr)
}

pub fn random_psd<R: Rng + ?Sized>(n: usize, trace_value: f64, rng: &mut R) -> CMatrix {
    random_density(n, rng).scale(trace_value)
}

/// `out += w * m`.
pub fn add_scaled(out: &mut CMatrix, w: Complex64, m: &CMatrix) {
    out.zip_apply(m, |o, x| *o += w * x);
}
