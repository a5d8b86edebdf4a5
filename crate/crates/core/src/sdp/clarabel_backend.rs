//! Interior-point backend on top of Clarabel.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::{relative_gap, Cone, ConicBackend, ConicProblem, ConicSolution, SolveStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerances {
    pub gap_abs: f64,
    pub gap_rel: f64,
    pub feas: f64,
    pub max_iter: u32,
    /// Seconds; zero means unlimited.
    pub time_limit: f64,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            gap_abs: 1e-12,
            gap_rel: 1e-10,
            feas: 1e-10,
            max_iter: 400,
            time_limit: 0.0,
        }
    }
}

/// Tries `linear_solver` first; a run that stops short of `Solved` is
/// repeated with the other factorization and then at tenfold looser
/// tolerances, keeping the first `Solved` outcome (or the last attempt).
#[derive(Debug, Clone)]
pub struct ClarabelBackend {
    pub tolerances: SolverTolerances,
    pub verbose: bool,
    /// `"faer"` or `"qdldl"`.
    pub linear_solver: String,
    pub retry: bool,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self {
            tolerances: SolverTolerances::default(),
            verbose: false,
            linear_solver: "faer".into(),
            retry: true,
        }
    }
}

fn cone_of(c: &Cone) -> SupportedConeT<f64> {
    match *c {
        Cone::Zero(n) => SupportedConeT::ZeroConeT(n),
        Cone::Nonneg(n) => SupportedConeT::NonnegativeConeT(n),
        Cone::Soc(n) => SupportedConeT::SecondOrderConeT(n),
        Cone::PsdTriangle(n) => SupportedConeT::PSDTriangleConeT(n),
    }
}

fn status_of(s: SolverStatus) -> SolveStatus {
    match s {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::NearOptimal,
        SolverStatus::PrimalInfeasible
        | SolverStatus::DualInfeasible
        | SolverStatus::AlmostPrimalInfeasible
        | SolverStatus::AlmostDualInfeasible => SolveStatus::Infeasible,
        _ => SolveStatus::NumericalError,
    }
}

impl ConicBackend for ClarabelBackend {
    fn name(&self) -> &str {
        "clarabel"
    }

    fn solve_raw(&self, problem: &ConicProblem) -> Result<ConicSolution> {
        let other = if self.linear_solver == "faer" { "qdldl" } else { "faer" };
        let loose = SolverTolerances {
            gap_abs: self.tolerances.gap_abs * 10.0,
            gap_rel: self.tolerances.gap_rel * 10.0,
            feas: self.tolerances.feas * 10.0,
            ..self.tolerances
        };
        let mut attempts = vec![(self.linear_solver.as_str(), self.tolerances)];
        if self.retry {
            attempts.push((other, self.tolerances));
            attempts.push((self.linear_solver.as_str(), loose));
        }
        let mut last = None;
        for (method, tol) in attempts {
            let sol = self.run(problem, method, &tol)?;
            if sol.backend_status == "Solved" || sol.status == SolveStatus::Infeasible {
                return Ok(sol);
            }
            last = Some(sol);
        }
        Ok(last.expect("at least one attempt"))
    }
}

impl ClarabelBackend {
    fn run(&self, problem: &ConicProblem, method: &str, t: &SolverTolerances) -> Result<ConicSolution> {
        let n = problem.n_vars();
        let (rows, (cols, vals)): (Vec<usize>, (Vec<usize>, Vec<f64>)) =
            problem.a.triplets.iter().map(|&(r, c, v)| (r, (c, v))).unzip();
        let a = CscMatrix::new_from_triplets(problem.n_rows(), n, rows, cols, vals);
        let p = CscMatrix::zeros((n, n));
        let cones: Vec<_> = problem.cones.iter().map(cone_of).collect();
        let settings = DefaultSettings {
            verbose: self.verbose,
            max_iter: t.max_iter,
            time_limit: if t.time_limit > 0.0 { t.time_limit } else { f64::INFINITY },
            tol_gap_abs: t.gap_abs,
            tol_gap_rel: t.gap_rel,
            tol_feas: t.feas,
            direct_solve_method: method.to_string(),
            ..DefaultSettings::default()
        };
        let mut solver = DefaultSolver::new(&p, &problem.objective, &a, &problem.b, &cones, settings)
            .map_err(|e| Error::Solver(format!("clarabel setup: {e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        Ok(ConicSolution {
            x: sol.x.clone(),
            z: sol.z.clone(),
            primal_objective: sol.obj_val,
            dual_objective: sol.obj_val_dual,
            status: status_of(sol.status),
            backend_status: format!("{:?}", sol.status),
            duality_gap: relative_gap(sol.obj_val, sol.obj_val_dual),
            primal_residual: sol.r_prim,
            solve_time: sol.solve_time,
            iterations: sol.iterations,
        })
    }
}
