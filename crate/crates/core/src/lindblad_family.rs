//! Locality-constrained GKSL family acting on the zeroth-order state.
//!
//! A candidate is a pair of Kossakowski matrices `Gamma_L`, `Gamma_R` over the
//! non-identity operator basis of the left/right bath blocks plus Lamb-shift
//! Hamiltonians on the same blocks. Its action on `rho0 = diag(p)` is linear
//! in the candidate, so it is tabulated once per grid point.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    add_scaled, anticommutator, commutator, frobenius, hermitian_eigenvalues, hermiticity_residual, identity, kron, random_density,
    random_hermitian, CMatrix, RMatrix, I,
};
use crate::redfield::{normalize_populations, DEFAULT_UNIQUENESS_RATIO};
use crate::spin_chain::{operator_basis, ChainSpec, EnergyEigenbasis};

/// Tolerance on imaginary parts of diagonal entries that must be real.
pub const DIAGONAL_REALITY_TOL: f64 = 1e-10;

/// Smallest admissible eigenvalue of a Kossakowski matrix.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Tabulated action of one bath block.
#[derive(Debug, Clone)]
pub struct BlockTables {
    pub side: Side,
    pub n_qubits: usize,
    /// Number of non-identity basis operators, `d_B^2 - 1`.
    pub n_ops: usize,
    /// `U^dag (f_i (x) I) U`, including the `1/sqrt(d_rest)` normalization.
    pub ops: Vec<CMatrix>,
    /// `m[i * n_ops + j]`: contribution of `Gamma_ij` to `L2'(rho0)`.
    pub m: Vec<CMatrix>,
    /// `hls[a * d_B + b]`: contribution of the matrix unit `|a><b|` of the
    /// Lamb-shift Hamiltonian, `i [rho0, U^dag (|a><b| (x) I) U]`.
    pub hls: Vec<CMatrix>,
    /// Block operators embedded in the full space, computational basis.
    pub full_ops: Vec<CMatrix>,
}

impl BlockTables {
    pub fn d_block(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn sandwich(&self, i: usize, j: usize) -> &CMatrix {
        &self.m[i * self.n_ops + j]
    }

    pub fn lamb_shift_unit(&self, a: usize, b: usize) -> &CMatrix {
        &self.hls[a * self.d_block() + b]
    }
}

#[derive(Debug, Clone)]
pub struct AffineMapTables {
    pub chain: ChainSpec,
    pub populations: DVector<f64>,
    pub left: Option<BlockTables>,
    pub right: Option<BlockTables>,
}

impl AffineMapTables {
    pub fn dim(&self) -> usize {
        self.populations.len()
    }

    pub fn rho0(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.populations.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn blocks(&self) -> impl Iterator<Item = &BlockTables> {
        self.left.iter().chain(self.right.iter())
    }

    pub fn block(&self, side: Side) -> Option<&BlockTables> {
        match side {
            Side::Left => self.left.as_ref(),
            Side::Right => self.right.as_ref(),
        }
    }
}

/// Embeds a block operator: `f (x) I_rest` on the left, `I_rest (x) f` on the right.
fn embed(side: Side, f: &CMatrix, rest: usize) -> CMatrix {
    match side {
        Side::Left => kron(f, &identity(rest)),
        Side::Right => kron(&identity(rest), f),
    }
}

fn block_tables(
    side: Side,
    n_block: usize,
    chain: &ChainSpec,
    eigs: &EnergyEigenbasis,
    rho0: &CMatrix,
) -> Result<BlockTables> {
    let basis = operator_basis(n_block)?;
    let d = chain.dim();
    let d_b = basis.block_dim();
    let rest = d / d_b;
    let norm = 1.0 / (rest as f64).sqrt();
    let n_ops = basis.len() - 1;

    let full_ops: Vec<CMatrix> = basis.elements[..n_ops]
        .iter()
        .map(|f| embed(side, f, rest).scale(norm))
        .collect();
    let ops: Vec<CMatrix> = full_ops.iter().map(|f| eigs.to_eigenbasis(f)).collect();
    let p: Vec<f64> = (0..d).map(|k| rho0[(k, k)].re).collect();

    let mut m = Vec::with_capacity(n_ops * n_ops);
    for fi in &ops {
        let fi_dag = fi.adjoint();
        for fj in &ops {
            let sandwich = fj * rho0 * &fi_dag;
            let prod = &fi_dag * fj;
            m.push(sandwich - anticommutator(&prod, rho0).scale(0.5));
        }
    }

    // i [rho0, X] for diagonal rho0 is i (p_a - p_b) X_ab
    let mut hls = Vec::with_capacity(d_b * d_b);
    for a in 0..d_b {
        for b in 0..d_b {
            let mut unit = CMatrix::zeros(d_b, d_b);
            unit[(a, b)] = Complex64::new(1.0, 0.0);
            let x = eigs.to_eigenbasis(&embed(side, &unit, rest));
            hls.push(CMatrix::from_fn(d, d, |r, c| I * (p[r] - p[c]) * x[(r, c)]));
        }
    }

    Ok(BlockTables {
        side,
        n_qubits: n_block,
        n_ops,
        ops,
        m,
        hls,
        full_ops,
    })
}

/// Tabulates the family on `rho0 = diag(p)`. Blocks with no attached qubits
/// are omitted.
pub fn build_affine_tables(chain: &ChainSpec, eigs: &EnergyEigenbasis, p: &DVector<f64>) -> Result<AffineMapTables> {
    chain.validate()?;
    eigs.require_nondegenerate()?;
    if eigs.dim() != chain.dim() || p.len() != chain.dim() {
        return Err(Error::Dimension(format!(
            "chain dimension {}, eigenbasis {}, populations {}",
            chain.dim(),
            eigs.dim(),
            p.len()
        )));
    }
    let rho0 = CMatrix::from_diagonal(&p.map(|x| Complex64::new(x, 0.0)));
    let left = (chain.n_left > 0)
        .then(|| block_tables(Side::Left, chain.n_left, chain, eigs, &rho0))
        .transpose()?;
    let right = (chain.n_right > 0)
        .then(|| block_tables(Side::Right, chain.n_right, chain, eigs, &rho0))
        .transpose()?;
    Ok(AffineMapTables {
        chain: *chain,
        populations: p.clone(),
        left,
        right,
    })
}

/// Kossakowski matrices and Lamb-shift Hamiltonians. Absent blocks are `0x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladCandidate {
    pub gamma_left: CMatrix,
    pub gamma_right: CMatrix,
    pub hls_left: CMatrix,
    pub hls_right: CMatrix,
}

impl LindbladCandidate {
    pub fn zeros(tables: &AffineMapTables) -> Self {
        let dims = |b: Option<&BlockTables>| b.map_or((0, 0), |b| (b.n_ops, b.d_block()));
        let (nl, dl) = dims(tables.left.as_ref());
        let (nr, dr) = dims(tables.right.as_ref());
        Self {
            gamma_left: CMatrix::zeros(nl, nl),
            gamma_right: CMatrix::zeros(nr, nr),
            hls_left: CMatrix::zeros(dl, dl),
            hls_right: CMatrix::zeros(dr, dr),
        }
    }

    pub fn gamma(&self, side: Side) -> &CMatrix {
        match side {
            Side::Left => &self.gamma_left,
            Side::Right => &self.gamma_right,
        }
    }

    pub fn hls(&self, side: Side) -> &CMatrix {
        match side {
            Side::Left => &self.hls_left,
            Side::Right => &self.hls_right,
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            gamma_left: self.gamma_left.scale(t),
            gamma_right: self.gamma_right.scale(t),
            hls_left: self.hls_left.scale(t),
            hls_right: self.hls_right.scale(t),
        }
    }

    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            gamma_left: self.gamma_left.scale(a) + other.gamma_left.scale(b),
            gamma_right: self.gamma_right.scale(a) + other.gamma_right.scale(b),
            hls_left: self.hls_left.scale(a) + other.hls_left.scale(b),
            hls_right: self.hls_right.scale(a) + other.hls_right.scale(b),
        }
    }

    fn check_shape(&self, tables: &AffineMapTables) -> Result<()> {
        for side in [Side::Left, Side::Right] {
            let (n, db) = tables.block(side).map_or((0, 0), |b| (b.n_ops, b.d_block()));
            let g = self.gamma(side);
            let h = self.hls(side);
            if g.shape() != (n, n) || h.shape() != (db, db) {
                return Err(Error::Dimension(format!(
                    "{side:?} block expects Gamma {n}x{n} and H_LS {db}x{db}, got {:?} and {:?}",
                    g.shape(),
                    h.shape()
                )));
            }
        }
        Ok(())
    }
}

/// `L2'(rho0)` in the eigenbasis.
pub fn apply_candidate(tables: &AffineMapTables, cand: &LindbladCandidate) -> Result<CMatrix> {
    cand.check_shape(tables)?;
    let d = tables.dim();
    let mut out = CMatrix::zeros(d, d);
    for block in tables.blocks() {
        let g = cand.gamma(block.side);
        for i in 0..block.n_ops {
            for j in 0..block.n_ops {
                let w = g[(i, j)];
                if w != Complex64::new(0.0, 0.0) {
                    add_scaled(&mut out, w, block.sandwich(i, j));
                }
            }
        }
        let h = cand.hls(block.side);
        let db = block.d_block();
        for a in 0..db {
            for b in 0..db {
                let w = h[(a, b)];
                if w != Complex64::new(0.0, 0.0) {
                    add_scaled(&mut out, w, block.lamb_shift_unit(a, b));
                }
            }
        }
    }
    Ok(out)
}

/// Real diagonal of `m`, refusing imaginary parts above `tol`.
pub fn real_diagonal(m: &CMatrix, tol: f64) -> Result<DVector<f64>> {
    let d = m.nrows();
    let mut out = DVector::zeros(d);
    for k in 0..d {
        let z = m[(k, k)];
        if z.im.abs() > tol {
            return Err(Error::ComplexDiagonal { index: k, imag: z.im });
        }
        out[k] = z.re;
    }
    Ok(out)
}

/// `sum_a |<E_a| L2'(rho0) |E_a>|`.
pub fn tau_pop(tables: &AffineMapTables, cand: &LindbladCandidate) -> Result<f64> {
    let out = apply_candidate(tables, cand)?;
    Ok(real_diagonal(&out, DIAGONAL_REALITY_TOL)?.lp_norm(1))
}

/// `|| L2'(rho0) - L2(rho0) ||_F`.
pub fn tau_pop_coh(tables: &AffineMapTables, cand: &LindbladCandidate, l2_rho0: &CMatrix) -> Result<f64> {
    let out = apply_candidate(tables, cand)?;
    if out.shape() != l2_rho0.shape() {
        return Err(Error::Dimension(format!(
            "target is {:?}, family output is {:?}",
            l2_rho0.shape(),
            out.shape()
        )));
    }
    real_diagonal(&out, DIAGONAL_REALITY_TOL)?;
    Ok(frobenius(&(out - l2_rho0)))
}

/// Population rate matrix of a candidate, `C[(k, a)] = <E_k| L2'(|E_a><E_a|) |E_k>`.
///
/// Independent of `rho0`; columns sum to zero and, for PSD `Gamma`,
/// off-diagonal entries are nonnegative.
pub fn candidate_rate_matrix(tables: &AffineMapTables, cand: &LindbladCandidate) -> Result<RMatrix> {
    cand.check_shape(tables)?;
    let d = tables.dim();
    let mut c = RMatrix::zeros(d, d);
    for block in tables.blocks() {
        let g = cand.gamma(block.side);
        let n = block.n_ops;
        let mut v = DVector::<Complex64>::zeros(n);
        for a in 0..d {
            for k in 0..d {
                if k == a {
                    continue;
                }
                for i in 0..n {
                    v[i] = block.ops[i][(k, a)];
                }
                // v^dag Gamma v
                let rate = (v.adjoint() * g * &v)[(0, 0)].re;
                c[(k, a)] += rate;
                c[(a, a)] -= rate;
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct CandidateSteadyState {
    pub populations: DVector<f64>,
    /// Number of closed communicating classes when the fallback was used.
    pub closed_classes: Option<usize>,
}

/// A stationary population vector of the candidate's rate matrix.
///
/// The SVD null vector is used when it is unique and nonnegative. Otherwise
/// the state is supported on the first closed communicating class of the
/// rate graph; any stationary state serves for the trace-distance bound.
pub fn candidate_steady_state(rates: &RMatrix) -> Result<CandidateSteadyState> {
    let d = rates.nrows();
    if d == 1 {
        return Ok(CandidateSteadyState {
            populations: DVector::from_element(1, 1.0),
            closed_classes: None,
        });
    }
    let svd = rates.clone().svd(true, true);
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
    let (k, smallest, second) = (order[0], sv[order[0]], sv[order[1]]);
    if second >= DEFAULT_UNIQUENESS_RATIO * smallest && second > f64::EPSILON * d as f64 * sv.max() {
        let v = svd.v_t.as_ref().expect("requested V^T").row(k).transpose();
        if let Ok((p, _)) = normalize_populations(v) {
            return Ok(CandidateSteadyState {
                populations: p,
                closed_classes: None,
            });
        }
    }
    closed_class_state(rates)
}

fn closed_class_state(rates: &RMatrix) -> Result<CandidateSteadyState> {
    let d = rates.nrows();
    let scale = rates.amax();
    let edge_tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let reach: Vec<Vec<bool>> = (0..d)
        .map(|s| {
            let mut seen = vec![false; d];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(a) = stack.pop() {
                for k in 0..d {
                    if !seen[k] && rates[(k, a)] > edge_tol {
                        seen[k] = true;
                        stack.push(k);
                    }
                }
            }
            seen
        })
        .collect();
    let closed: Vec<usize> = (0..d)
        .filter(|&s| (0..d).all(|k| !reach[s][k] || reach[k][s]))
        .collect();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &s in &closed {
        if !classes.iter().any(|c| c.contains(&s)) {
            classes.push((0..d).filter(|&k| reach[s][k]).collect());
        }
    }
    let class = classes
        .first()
        .ok_or_else(|| Error::InvalidSteadyState("rate graph has no closed class".into()))?;
    let sub = RMatrix::from_fn(class.len(), class.len(), |r, c| rates[(class[r], class[c])]);
    let v = if class.len() == 1 {
        DVector::from_element(1, 1.0)
    } else {
        let svd = sub.svd(false, true);
        let k = svd.singular_values.imin();
        svd.v_t.expect("requested V^T").row(k).transpose()
    };
    let (local, _) = normalize_populations(v)?;
    let mut p = DVector::zeros(d);
    for (r, &s) in class.iter().enumerate() {
        p[s] = local[r];
    }
    Ok(CandidateSteadyState {
        populations: p,
        closed_classes: Some(classes.len()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GkslReport {
    pub min_eigenvalue_left: Option<f64>,
    pub min_eigenvalue_right: Option<f64>,
    pub hermiticity_residual: f64,
    pub passed: bool,
}

pub fn check_gksl(cand: &LindbladCandidate) -> GkslReport {
    let min_eig = |g: &CMatrix| (g.nrows() > 0).then(|| hermitian_eigenvalues(g)[0]);
    let herm = [&cand.gamma_left, &cand.gamma_right, &cand.hls_left, &cand.hls_right]
        .iter()
        .map(|m| if m.nrows() == 0 { 0.0 } else { hermiticity_residual(m) })
        .fold(0.0, f64::max);
    let left = min_eig(&cand.gamma_left);
    let right = min_eig(&cand.gamma_right);
    let psd = [left, right].iter().flatten().all(|&e| e >= -PSD_TOL);
    GkslReport {
        min_eigenvalue_left: left,
        min_eigenvalue_right: right,
        hermiticity_residual: herm,
        passed: psd && herm <= DIAGONAL_REALITY_TOL,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub trials: usize,
    pub max_violation: f64,
    pub vacuous: bool,
    pub passed: bool,
}

pub const CONSERVATION_TOL: f64 = 1e-10;

/// Full dissipator of a candidate in the computational basis, Hamiltonian
/// part excluded.
pub fn candidate_dissipator(tables: &AffineMapTables, cand: &LindbladCandidate, rho: &CMatrix) -> Result<CMatrix> {
    cand.check_shape(tables)?;
    let d = tables.dim();
    let mut out = CMatrix::zeros(d, d);
    for block in tables.blocks() {
        let g = cand.gamma(block.side);
        for (i, fi) in block.full_ops.iter().enumerate() {
            let fi_dag = fi.adjoint();
            for (j, fj) in block.full_ops.iter().enumerate() {
                let w = g[(i, j)];
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let term = fj * rho * &fi_dag - anticommutator(&(&fi_dag * fj), rho).scale(0.5);
                add_scaled(&mut out, w, &term);
            }
        }
        let rest = d / block.d_block();
        let h = embed(block.side, cand.hls(block.side), rest);
        out += commutator(rho, &h) * I;
    }
    Ok(out)
}

/// Largest `|Tr[(I_L (x) O_M (x) I_R) D(rho)]|` over random Hermitian `O_M`
/// and random states, with `D` any superoperator in the computational basis.
pub fn conservation_violation<R, F>(chain: &ChainSpec, trials: usize, rng: &mut R, dissipator: F) -> Result<ConservationReport>
where
    R: Rng + ?Sized,
    F: Fn(&CMatrix) -> Result<CMatrix>,
{
    if chain.n_middle() == 0 {
        return Ok(ConservationReport {
            trials: 0,
            max_violation: 0.0,
            vacuous: true,
            passed: true,
        });
    }
    let d = chain.dim();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let o_m = random_hermitian(chain.d_middle(), rng);
        let obs = kron(&kron(&identity(chain.d_left()), &o_m), &identity(chain.d_right()));
        let rho = random_density(d, rng);
        let v = (&obs * dissipator(&rho)?).trace();
        worst = worst.max(v.norm());
    }
    Ok(ConservationReport {
        trials,
        max_violation: worst,
        vacuous: false,
        passed: worst < CONSERVATION_TOL,
    })
}

/// Audits that the candidate leaves observables of the middle block alone.
pub fn check_local_conservation<R: Rng + ?Sized>(
    tables: &AffineMapTables,
    cand: &LindbladCandidate,
    trials: usize,
    rng: &mut R,
) -> Result<ConservationReport> {
    conservation_violation(&tables.chain, trials, rng, |rho| candidate_dissipator(tables, cand, rho))
}
