//! Real conic programs in geometric form and the solver plumbing around them.
//!
//! A [`ConicProblem`] is
//!
//! ```text
//! minimize    c'x
//! subject to  s = b - A x,   s in K = K_1 x ... x K_m
//! ```
//!
//! with each `K_i` a zero, nonnegative, second-order or PSD cone. PSD slacks
//! are stored as the scaled upper triangle (column-major, off-diagonals times
//! sqrt 2), so `<svec X, svec Y> = Tr(X Y)`.

mod builder;
mod clarabel_backend;
pub mod embedding;
mod external;
pub mod sdpa;
mod verify;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

pub use builder::{build_tau_pop_problem, build_tau_popcoh_problem, vec_real, HermitianParam, PopCohOptions, ReducedParam, VariableLayout};
pub use clarabel_backend::{ClarabelBackend, SolverTolerances};
pub use external::SdpaScriptBackend;
pub use verify::{
    alpha, lemma_check, trace_distance, trace_distance_bound, verify_solution, Certification, FeasibilityVerdict,
    LemmaCheck, Verdict, CERTIFICATION_REL_TOL, LEMMA_SLACK,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cone {
    Zero(usize),
    Nonneg(usize),
    /// `(t, u)` with `||u|| <= t`; the size counts `t`.
    Soc(usize),
    /// Symmetric `n x n` PSD matrices in scaled-triangle form.
    PsdTriangle(usize),
}

impl Cone {
    pub fn rows(&self) -> usize {
        match *self {
            Cone::Zero(n) | Cone::Nonneg(n) | Cone::Soc(n) => n,
            Cone::PsdTriangle(n) => n * (n + 1) / 2,
        }
    }
}

/// Position of `(i, j)`, `i <= j`, in the scaled upper triangle.
#[inline]
pub fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

/// Unpacks a scaled triangle into a dense symmetric matrix.
pub fn smat(v: &[f64], n: usize) -> RMatrix {
    let mut m = RMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = v[svec_index(i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                m[(i, j)] = x / std::f64::consts::SQRT_2;
                m[(j, i)] = m[(i, j)];
            }
        }
    }
    m
}

/// Column-oriented sparse matrix kept as sorted triplets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    /// `(row, col, value)` sorted by column, then row; no duplicates.
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.retain(|t| t.2 != 0.0);
        triplets.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for t in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == t.0 && last.1 == t.1 => last.2 += t.2,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        Self {
            nrows,
            ncols,
            triplets: merged,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
        y
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &(usize, usize, f64)> {
        let start = self.triplets.partition_point(|t| t.1 < col);
        self.triplets[start..].iter().take_while(move |t| t.1 == col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Absolute population mismatch.
    Pop,
    /// Frobenius mismatch with the Redfield generator on `rho0`.
    PopCoh,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::Pop => "pop",
            Objective::PopCoh => "pop_coh",
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pop" => Ok(Objective::Pop),
            "pop_coh" => Ok(Objective::PopCoh),
            other => Err(Error::Config(format!("unknown objective {other:?} (expected pop or pop_coh)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub objective: Vec<f64>,
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub cones: Vec<Cone>,
    pub layout: VariableLayout,
    pub kind: Objective,
    pub description: String,
}

impl ConicProblem {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let rows: usize = self.cones.iter().map(Cone::rows).sum();
        if rows != self.b.len() || self.a.nrows != rows || self.a.ncols != self.objective.len() {
            return Err(Error::Dimension(format!(
                "cones cover {rows} rows, b has {}, A is {}x{}, c has {}",
                self.b.len(),
                self.a.nrows,
                self.a.ncols,
                self.objective.len()
            )));
        }
        if self.objective.iter().chain(&self.b).any(|v| !v.is_finite())
            || self.a.triplets.iter().any(|t| !t.2.is_finite())
        {
            return Err(Error::Solver("problem data contains non-finite values".into()));
        }
        Ok(())
    }

    /// `b - A x`.
    pub fn slack(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.a.mul_vec(x);
        self.b.iter().zip(ax).map(|(b, ax)| b - ax).collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Largest violation of cone membership by `s` (zero when inside).
    pub fn cone_violation(&self, s: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        let mut off = 0;
        for cone in &self.cones {
            let n = cone.rows();
            let block = &s[off..off + n];
            let v = match *cone {
                Cone::Zero(_) => block.iter().map(|x| x.abs()).fold(0.0, f64::max),
                Cone::Nonneg(_) => block.iter().map(|x| (-x).max(0.0)).fold(0.0, f64::max),
                Cone::Soc(_) => {
                    let norm = block[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
                    (norm - block[0]).max(0.0)
                }
                Cone::PsdTriangle(dim) => {
                    let m = smat(block, dim);
                    (-crate::linalg::hermitian_eigenvalues(&m.map(|x| crate::linalg::re(x)))[0]).max(0.0)
                }
            };
            worst = worst.max(v);
            off += n;
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    NumericalError,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near_optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::NumericalError => "numerical_error",
        }
    }

    pub fn has_solution(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    /// Dual multipliers, one per row; empty if the backend does not report them.
    pub z: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub status: SolveStatus,
    /// Status string as reported by the backend.
    pub backend_status: String,
    /// `|p - d| / max(1, min(|p|, |d|))`.
    pub duality_gap: f64,
    /// `max(||b - A x - s||_inf, cone violation of b - A x)`.
    pub primal_residual: f64,
    pub solve_time: f64,
    pub iterations: u32,
}

pub fn relative_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual).abs() / primal.abs().min(dual.abs()).max(1.0)
}

/// Certification thresholds applied after every backend solve.
pub const GAP_TOL: f64 = 1e-8;
pub const RESIDUAL_TOL: f64 = 1e-8;

pub trait ConicBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve_raw(&self, problem: &ConicProblem) -> Result<ConicSolution>;
}

/// Solves with `backend` and re-derives gap and residuals from the returned
/// point. An `optimal` status that fails the thresholds is downgraded.
pub fn solve(problem: &ConicProblem, backend: &dyn ConicBackend) -> Result<ConicSolution> {
    problem.validate()?;
    let mut sol = match backend.solve_raw(problem) {
        Ok(sol) => sol,
        Err(e) => {
            return Ok(ConicSolution {
                x: vec![],
                z: vec![],
                primal_objective: f64::NAN,
                dual_objective: f64::NAN,
                status: SolveStatus::NumericalError,
                backend_status: e.to_string(),
                duality_gap: f64::NAN,
                primal_residual: f64::NAN,
                solve_time: 0.0,
                iterations: 0,
            })
        }
    };
    if !sol.status.has_solution() {
        return Ok(sol);
    }
    if sol.x.len() != problem.n_vars() || sol.x.iter().any(|v| !v.is_finite()) {
        sol.status = SolveStatus::NumericalError;
        return Ok(sol);
    }
    let s = problem.slack(&sol.x);
    let scale = problem.b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    sol.primal_residual = problem.cone_violation(&s);
    sol.primal_objective = problem.objective_value(&sol.x);
    sol.duality_gap = relative_gap(sol.primal_objective, sol.dual_objective);
    if sol.status == SolveStatus::Optimal && (sol.duality_gap >= GAP_TOL || sol.primal_residual >= RESIDUAL_TOL * scale)
    {
        sol.status = SolveStatus::NearOptimal;
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trivial_problem(objective: Vec<f64>, a: SparseMatrix, b: Vec<f64>, cones: Vec<Cone>) -> ConicProblem {
        ConicProblem {
            objective,
            a,
            b,
            cones,
            layout: VariableLayout::default(),
            kind: Objective::Pop,
            description: "test".into(),
        }
    }

    #[test]
    fn lower_bound_on_scalar() {
        // min x  s.t.  x - 3 >= 0   <=>   s = -3 - (-1) x
        let p = trivial_problem(
            vec![1.0],
            SparseMatrix::from_triplets(1, 1, vec![(0, 0, -1.0)]),
            vec![-3.0],
            vec![Cone::Nonneg(1)],
        );
        let sol = solve(&p, &ClarabelBackend::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_objective - 3.0).abs() < 1e-8);
    }

    #[test]
    fn smallest_eigenvalue_sdp() {
        // min Tr(diag(1,2) X), Tr X = 1, X psd; x = svec(X)
        let c = vec![1.0, 0.0, 2.0];
        let mut t = vec![(0, 0, 1.0), (0, 2, 1.0)];
        for k in 0..3 {
            t.push((1 + k, k, -1.0));
        }
        let p = trivial_problem(
            c,
            SparseMatrix::from_triplets(4, 3, t),
            vec![1.0, 0.0, 0.0, 0.0],
            vec![Cone::Zero(1), Cone::PsdTriangle(2)],
        );
        let sol = solve(&p, &ClarabelBackend::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal_objective - 1.0).abs() < 1e-8);
        assert!((sol.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_is_reported() {
        // x >= 1 and -x >= 0
        let p = trivial_problem(
            vec![1.0],
            SparseMatrix::from_triplets(2, 1, vec![(0, 0, -1.0), (1, 0, 1.0)]),
            vec![-1.0, 0.0],
            vec![Cone::Nonneg(2)],
        );
        let sol = solve(&p, &ClarabelBackend::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn svec_round_trip() {
        let v = [1.0, 2.0f64.sqrt(), 3.0];
        let m = smat(&v, 2);
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(1, 0)], 1.0);
        assert_eq!(svec_index(1, 2), 4);
    }

    #[test]
    fn triplets_merge_and_sort() {
        let s = SparseMatrix::from_triplets(2, 2, vec![(1, 1, 1.0), (0, 0, 2.0), (1, 1, -1.0), (1, 0, 3.0)]);
        assert_eq!(s.triplets, vec![(0, 0, 2.0), (1, 0, 3.0)]);
        assert_eq!(s.column(0).count(), 2);
        assert_eq!(s.column(1).count(), 0);
    }
}
