//! Real symmetric embedding of Hermitian matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_residual, CMatrix, RMatrix};

/// `[[X, -Y], [Y, X]]` for `M = X + iY`. PSD iff `M` is, with every
/// eigenvalue of `M` appearing twice.
pub fn hermitian_embedding(m: &CMatrix) -> Result<RMatrix> {
    let res = hermiticity_residual(m);
    if res > 1e-10 {
        return Err(Error::NotHermitian(res));
    }
    let n = m.nrows();
    Ok(RMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    }))
}

/// Recovers `M` from an embedded block, averaging the redundant copies.
pub fn hermitian_from_embedding(r: &RMatrix) -> CMatrix {
    let n = r.nrows() / 2;
    CMatrix::from_fn(n, n, |a, b| {
        let x = 0.5 * (r[(a, b)] + r[(n + a, n + b)]);
        let y = 0.5 * (r[(n + a, b)] - r[(a, n + b)]);
        Complex64::new(x, y)
    })
}

/// Scaled-triangle entries of the embedding of a sparse Hermitian direction
/// given as `(a, b, value)` entries, both triangles listed.
pub fn embedded_svec_entries(n: usize, entries: &[(usize, usize, Complex64)]) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(4 * entries.len());
    let mut push = |i: usize, j: usize, v: f64| {
        if i <= j && v != 0.0 {
            let scale = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
            out.push((super::svec_index(i, j), scale * v));
        }
    };
    for &(a, b, z) in entries {
        push(a, b, z.re);
        push(n + a, n + b, z.re);
        push(a, n + b, -z.im);
        push(n + a, b, z.im);
    }
    out
}
