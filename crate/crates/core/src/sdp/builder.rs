//! Assembly of the population and population-coherence programs.
//!
//! Variable vector layout: `[Gamma_L params | Gamma_R params | H_L params |
//! H_R params | objective auxiliaries]`. Each Kossakowski matrix is affine in
//! its parameters with the last diagonal entry eliminated, so the trace
//! equality never appears as a row and the embedded PSD block has trace
//! `2 t` identically.

use nalgebra::DVector;
use num_complex::Complex64;

use super::embedding::embedded_svec_entries;
use super::{Cone, ConicProblem, Objective, SparseMatrix};
use crate::error::{Error, Result};
use crate::lindblad_family::{real_diagonal, AffineMapTables, BlockTables, LindbladCandidate, Side, DIAGONAL_REALITY_TOL};
use crate::linalg::{add_scaled, hermiticity_residual, CMatrix, RMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const IM: Complex64 = Complex64::new(0.0, 1.0);

type Entries = Vec<(usize, usize, Complex64)>;

/// Coefficients below this fraction of the largest one are dropped; they come
/// from products of tiny populations and stall interior-point solvers.
pub const PRUNE_REL: f64 = 1e-14;

fn pruned(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> SparseMatrix {
    let cut = PRUNE_REL * trip.iter().fold(0.0f64, |m, t| m.max(t.2.abs()));
    trip.retain(|t| t.2.abs() > cut);
    SparseMatrix::from_triplets(nrows, ncols, trip)
}

/// Off-diagonal pairs `a < b`, column-major.
fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(|b| (0..b).map(move |a| (a, b)))
}

/// Hermitian `n x n` matrix, affine in `x[offset..offset + n_params()]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianParam {
    pub n: usize,
    pub offset: usize,
    /// Fixed trace; the last diagonal entry is then `t - sum(others)`.
    pub trace: Option<f64>,
}

impl HermitianParam {
    fn n_diag(&self) -> usize {
        self.n - usize::from(self.trace.is_some())
    }

    pub fn n_params(&self) -> usize {
        self.n_diag() + self.n * (self.n - 1)
    }

    /// Entries of the `k`-th direction, both triangles listed.
    pub fn direction(&self, k: usize) -> Entries {
        let nd = self.n_diag();
        if k < nd {
            let mut e = vec![(k, k, ONE)];
            if self.trace.is_some() {
                e.push((self.n - 1, self.n - 1, -ONE));
            }
            return e;
        }
        let pair = (k - nd) / 2;
        let (a, b) = upper_pairs(self.n).nth(pair).expect("direction index in range");
        if (k - nd) % 2 == 0 {
            vec![(a, b, ONE), (b, a, ONE)]
        } else {
            vec![(a, b, IM), (b, a, -IM)]
        }
    }

    pub fn constant(&self) -> Entries {
        match self.trace {
            Some(t) => vec![(self.n - 1, self.n - 1, Complex64::new(t, 0.0))],
            None => vec![],
        }
    }

    pub fn matrix(&self, x: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for (a, b, z) in self.constant() {
            m[(a, b)] += z;
        }
        for k in 0..self.n_params() {
            let v = x[self.offset + k];
            for (a, b, z) in self.direction(k) {
                m[(a, b)] += z * v;
            }
        }
        m
    }

    /// Parameters reproducing a Hermitian `m`; the trace of `m` must match.
    pub fn params_of(&self, m: &CMatrix) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.n_diag()).map(|k| m[(k, k)].re).collect();
        for (a, b) in upper_pairs(self.n) {
            out.push(m[(a, b)].re);
            out.push(m[(a, b)].im);
        }
        out
    }
}

/// Hermitian matrix `sum_r x[offset + r] basis[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedParam {
    pub offset: usize,
    pub basis: Vec<CMatrix>,
}

impl ReducedParam {
    pub fn matrix(&self, x: &[f64], dim: usize) -> CMatrix {
        let mut m = CMatrix::zeros(dim, dim);
        for (r, b) in self.basis.iter().enumerate() {
            add_scaled(&mut m, Complex64::new(x[self.offset + r], 0.0), b);
        }
        m
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariableLayout {
    pub gamma_left: Option<HermitianParam>,
    pub gamma_right: Option<HermitianParam>,
    pub hls_left: Option<ReducedParam>,
    pub hls_right: Option<ReducedParam>,
    /// `(n_ops, d_block)` per side, zero for absent blocks.
    pub shape_left: (usize, usize),
    pub shape_right: (usize, usize),
    /// Population slacks `s_a` of the population program.
    pub slacks: Option<(usize, usize)>,
    /// Epigraph variable of the population-coherence program.
    pub tau: Option<usize>,
    pub n_vars: usize,
}

impl VariableLayout {
    pub fn candidate(&self, x: &[f64]) -> LindbladCandidate {
        let gamma = |p: &Option<HermitianParam>, n: usize| p.as_ref().map_or_else(|| CMatrix::zeros(n, n), |p| p.matrix(x));
        let hls = |p: &Option<ReducedParam>, d: usize| p.as_ref().map_or_else(|| CMatrix::zeros(d, d), |p| p.matrix(x, d));
        LindbladCandidate {
            gamma_left: gamma(&self.gamma_left, self.shape_left.0),
            gamma_right: gamma(&self.gamma_right, self.shape_right.0),
            hls_left: hls(&self.hls_left, self.shape_left.1),
            hls_right: hls(&self.hls_right, self.shape_right.1),
        }
    }

    pub fn gamma(&self, side: Side) -> Option<&HermitianParam> {
        match side {
            Side::Left => self.gamma_left.as_ref(),
            Side::Right => self.gamma_right.as_ref(),
        }
    }
}

fn output_of(block: &BlockTables, entries: &Entries) -> CMatrix {
    let d = block.m[0].nrows();
    let mut out = CMatrix::zeros(d, d);
    for &(a, b, z) in entries {
        add_scaled(&mut out, z, block.sandwich(a, b));
    }
    out
}

fn lamb_output(block: &BlockTables, h: &CMatrix) -> CMatrix {
    let d = block.m[0].nrows();
    let db = block.d_block();
    let mut out = CMatrix::zeros(d, d);
    for a in 0..db {
        for b in 0..db {
            if h[(a, b)] != ZERO {
                add_scaled(&mut out, h[(a, b)], block.lamb_shift_unit(a, b));
            }
        }
    }
    out
}

/// `(diag, sqrt2 Re upper, sqrt2 Im upper)`; its 2-norm is the Frobenius norm
/// of a Hermitian matrix.
pub fn vec_real(m: &CMatrix) -> DVector<f64> {
    let d = m.nrows();
    let mut v = Vec::with_capacity(d * d);
    v.extend((0..d).map(|k| m[(k, k)].re));
    let r2 = std::f64::consts::SQRT_2;
    for (a, b) in upper_pairs(d) {
        v.push(r2 * m[(a, b)].re);
        v.push(r2 * m[(a, b)].im);
    }
    DVector::from_vec(v)
}

/// Affine map from Kossakowski parameters to `L2'(rho0)`, with the PSD rows.
struct GammaPart {
    columns: Vec<CMatrix>,
    constant: CMatrix,
    psd_triplets: Vec<(usize, usize, f64)>,
    psd_b: Vec<f64>,
    cones: Vec<Cone>,
    left: Option<HermitianParam>,
    right: Option<HermitianParam>,
}

fn gamma_part(tables: &AffineMapTables, trace: [Option<f64>; 2], row_offset: usize) -> GammaPart {
    let d = tables.dim();
    let mut part = GammaPart {
        columns: vec![],
        constant: CMatrix::zeros(d, d),
        psd_triplets: vec![],
        psd_b: vec![],
        cones: vec![],
        left: None,
        right: None,
    };
    let mut col = 0;
    let mut row = row_offset;
    for (block, t) in [(tables.left.as_ref(), trace[0]), (tables.right.as_ref(), trace[1])] {
        let Some(block) = block else { continue };
        let param = HermitianParam {
            n: block.n_ops,
            offset: col,
            trace: t,
        };
        let constant = param.constant();
        part.constant += output_of(block, &constant);
        let dim = 2 * param.n;
        let rows = dim * (dim + 1) / 2;
        let mut b = vec![0.0; rows];
        for (idx, v) in embedded_svec_entries(param.n, &constant) {
            b[idx] += v;
        }
        for k in 0..param.n_params() {
            let dir = param.direction(k);
            part.columns.push(output_of(block, &dir));
            for (idx, v) in embedded_svec_entries(param.n, &dir) {
                part.psd_triplets.push((row + idx, col + k, -v));
            }
        }
        part.psd_b.extend(b);
        part.cones.push(Cone::PsdTriangle(dim));
        col += param.n_params();
        row += rows;
        match block.side {
            Side::Left => part.left = Some(param),
            Side::Right => part.right = Some(param),
        }
    }
    part
}

fn shapes(tables: &AffineMapTables) -> ((usize, usize), (usize, usize)) {
    let s = |b: Option<&BlockTables>| b.map_or((0, 0), |b| (b.n_ops, b.d_block()));
    (s(tables.left.as_ref()), s(tables.right.as_ref()))
}

fn check_traces(tables: &AffineMapTables, t_left: f64, t_right: f64) -> Result<()> {
    for (present, t, name) in [(tables.left.is_some(), t_left, "t_L"), (tables.right.is_some(), t_right, "t_R")] {
        if present && !(t.is_finite() && t > 0.0) {
            return Err(Error::Config(format!("{name} must be positive, got {t}")));
        }
    }
    if tables.left.is_none() && tables.right.is_none() {
        return Err(Error::InvalidChain("no bath-attached block: nothing to optimize".into()));
    }
    Ok(())
}

/// Minimizes `sum_a |<E_a|L2'(rho0)|E_a>|` over PSD Kossakowski matrices
/// with fixed traces. Lamb shifts are dropped: they never touch diagonals.
pub fn build_tau_pop_problem(tables: &AffineMapTables, t_left: f64, t_right: f64) -> Result<ConicProblem> {
    check_traces(tables, t_left, t_right)?;
    let d = tables.dim();
    let nonneg_rows = 2 * d;
    let g = gamma_part(tables, [Some(t_left), Some(t_right)], nonneg_rows);
    let n_gamma = g.columns.len();
    let n_vars = n_gamma + d;

    let diag_cols: Vec<DVector<f64>> = g
        .columns
        .iter()
        .map(|m| real_diagonal(m, DIAGONAL_REALITY_TOL))
        .collect::<Result<_>>()?;
    let diag0 = real_diagonal(&g.constant, DIAGONAL_REALITY_TOL)?;

    // rows 2a, 2a+1:  s_a - diag_a >= 0,  s_a + diag_a >= 0
    let mut trip = g.psd_triplets;
    let mut b = Vec::with_capacity(nonneg_rows + g.psd_b.len());
    for a in 0..d {
        let slack_col = n_gamma + a;
        for (r, sign) in [(2 * a, 1.0), (2 * a + 1, -1.0)] {
            trip.push((r, slack_col, -1.0));
            for (k, col) in diag_cols.iter().enumerate() {
                trip.push((r, k, sign * col[a]));
            }
            b.push(-sign * diag0[a]);
        }
    }
    b.extend(g.psd_b);
    let mut cones = vec![Cone::Nonneg(nonneg_rows)];
    cones.extend(g.cones);

    let mut objective = vec![0.0; n_vars];
    objective[n_gamma..].fill(1.0);
    let (shape_left, shape_right) = shapes(tables);
    let problem = ConicProblem {
        objective,
        a: pruned(b.len(), n_vars, trip),
        b,
        cones,
        layout: VariableLayout {
            gamma_left: g.left,
            gamma_right: g.right,
            hls_left: None,
            hls_right: None,
            shape_left,
            shape_right,
            slacks: Some((n_gamma, d)),
            tau: None,
            n_vars,
        },
        kind: Objective::Pop,
        description: format!("population mismatch, d = {d}, t = ({t_left}, {t_right})"),
    };
    problem.validate()?;
    Ok(problem)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopCohOptions {
    pub t_left: f64,
    pub t_right: f64,
    /// Drop the trace equalities, keeping only `Gamma >= 0`.
    pub free_trace: bool,
    /// Pin both Lamb-shift Hamiltonians to zero.
    pub fix_hls_zero: bool,
    /// Replace the cone's tail by its QR-compressed equivalent when shorter.
    pub compress: bool,
}

impl Default for PopCohOptions {
    fn default() -> Self {
        Self {
            t_left: 1.0,
            t_right: 1.0,
            free_trace: false,
            fix_hls_zero: false,
            compress: true,
        }
    }
}

/// Traceless Hermitian directions on a `db`-dimensional block.
fn traceless_directions(db: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(db * db - 1);
    for k in 0..db - 1 {
        let mut m = CMatrix::zeros(db, db);
        m[(k, k)] = ONE;
        m[(db - 1, db - 1)] = -ONE;
        out.push(m);
    }
    for (a, b) in upper_pairs(db) {
        let mut re = CMatrix::zeros(db, db);
        re[(a, b)] = ONE;
        re[(b, a)] = ONE;
        out.push(re);
        let mut im = CMatrix::zeros(db, db);
        im[(a, b)] = IM;
        im[(b, a)] = -IM;
        out.push(im);
    }
    out
}

/// Lamb-shift directions restricted to the row space of their action on
/// `rho0`, so no free variable is invisible to the objective. Outputs are
/// recomputed from the combined matrices rather than read off a factorization.
fn lamb_shift_basis(block: &BlockTables) -> (Vec<CMatrix>, Vec<DVector<f64>>) {
    let dirs = traceless_directions(block.d_block());
    let cols: Vec<DVector<f64>> = dirs.iter().map(|h| vec_real(&lamb_output(block, h))).collect();
    if cols.is_empty() {
        return (vec![], vec![]);
    }
    let vh = RMatrix::from_columns(&cols);
    let gram = vh.transpose() * &vh;
    let eig = gram.symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let mut basis = vec![];
    let mut outputs = vec![];
    for (r, &l) in eig.eigenvalues.iter().enumerate() {
        if !(l > 1e-18 * lmax) {
            continue;
        }
        let mut h = CMatrix::zeros(block.d_block(), block.d_block());
        for (k, dir) in dirs.iter().enumerate() {
            add_scaled(&mut h, Complex64::new(eig.eigenvectors[(k, r)], 0.0), dir);
        }
        outputs.push(vec_real(&lamb_output(block, &h)));
        basis.push(h);
    }
    (basis, outputs)
}

/// Minimizes `|| L2'(rho0) - L2(rho0) ||_F` over PSD Kossakowski matrices and
/// Hermitian Lamb shifts.
pub fn build_tau_popcoh_problem(tables: &AffineMapTables, l2_rho0: &CMatrix, opts: &PopCohOptions) -> Result<ConicProblem> {
    check_traces(tables, opts.t_left, opts.t_right)?;
    let d = tables.dim();
    if l2_rho0.shape() != (d, d) {
        return Err(Error::Dimension(format!("target is {:?}, expected {d}x{d}", l2_rho0.shape())));
    }
    let herm = hermiticity_residual(l2_rho0);
    if herm > 1e-9 {
        return Err(Error::NotHermitian(herm));
    }
    let m = d * d;
    let trace = if opts.free_trace {
        [None, None]
    } else {
        [Some(opts.t_left), Some(opts.t_right)]
    };

    // Epigraph rows come first; their count depends on compression, so the
    // PSD rows are assembled at offset 0 and shifted afterwards.
    let g = gamma_part(tables, trace, 0);
    let mut columns: Vec<DVector<f64>> = g.columns.iter().map(vec_real).collect();
    let n_gamma = columns.len();

    let mut hls = [None, None];
    if !opts.fix_hls_zero {
        for (slot, block) in [tables.left.as_ref(), tables.right.as_ref()].into_iter().enumerate() {
            let Some(block) = block else { continue };
            let (basis, outputs) = lamb_shift_basis(block);
            if basis.is_empty() {
                continue;
            }
            hls[slot] = Some(ReducedParam {
                offset: columns.len(),
                basis,
            });
            columns.extend(outputs);
        }
    }
    let n_cols = columns.len();
    let tau = n_cols;
    let n_vars = n_cols + 1;
    let h = vec_real(&g.constant) - vec_real(l2_rho0);

    // The cone tail is V x + h with V = [columns].
    let v = if n_cols > 0 {
        RMatrix::from_columns(&columns)
    } else {
        RMatrix::zeros(m, 0)
    };
    let (tail_a, tail_b): (RMatrix, DVector<f64>) = if opts.compress && m > n_cols + 2 {
        let qr = v.qr();
        let q = qr.q();
        let r = qr.r();
        let qth = q.transpose() * &h;
        let perp = (&h - &q * &qth).norm();
        let mut a = RMatrix::zeros(n_cols + 1, n_cols);
        a.rows_mut(0, n_cols).copy_from(&r);
        let mut b = DVector::zeros(n_cols + 1);
        b.rows_mut(0, n_cols).copy_from(&qth);
        b[n_cols] = perp;
        (a, b)
    } else {
        (v, h)
    };
    let soc_rows = 1 + tail_a.nrows();

    let mut trip: Vec<(usize, usize, f64)> = vec![(0, tau, -1.0)];
    let mut b = vec![0.0];
    for r in 0..tail_a.nrows() {
        for c in 0..n_cols {
            let val = tail_a[(r, c)];
            if val != 0.0 {
                trip.push((1 + r, c, -val));
            }
        }
        b.push(tail_b[r]);
    }
    trip.extend(g.psd_triplets.iter().map(|&(r, c, v)| (r + soc_rows, c, v)));
    b.extend(&g.psd_b);
    let mut cones = vec![Cone::Soc(soc_rows)];
    cones.extend(g.cones);

    let mut objective = vec![0.0; n_vars];
    objective[tau] = 1.0;
    let (shape_left, shape_right) = shapes(tables);
    let [hls_left, hls_right] = hls;
    let problem = ConicProblem {
        objective,
        a: pruned(b.len(), n_vars, trip),
        b,
        cones,
        layout: VariableLayout {
            gamma_left: g.left,
            gamma_right: g.right,
            hls_left,
            hls_right,
            shape_left,
            shape_right,
            slacks: None,
            tau: Some(tau),
            n_vars,
        },
        kind: Objective::PopCoh,
        description: format!(
            "population-coherence mismatch, d = {d}, t = ({}, {}), free_trace = {}, H_LS fixed = {}, {n_gamma} Gamma params",
            opts.t_left, opts.t_right, opts.free_trace, opts.fix_hls_zero
        ),
    };
    problem.validate()?;
    Ok(problem)
}
