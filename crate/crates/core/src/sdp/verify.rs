//! Post-solve certification, verdicts and the trace-distance bound.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConicProblem, ConicSolution, Objective};
use crate::error::{Error, Result};
use crate::lindblad_family::{
    candidate_rate_matrix, candidate_steady_state, check_gksl, check_local_conservation, tau_pop, tau_pop_coh,
    AffineMapTables, ConservationReport, GkslReport, LindbladCandidate,
};
use crate::linalg::CMatrix;

/// Allowed `|oracle - objective| / (1 + objective)`.
pub const CERTIFICATION_REL_TOL: f64 = 1e-7;

/// `2 (t_L d_L^3 + t_R d_R^3 - t_L d_L - t_R d_R)`; a one-dimensional block
/// contributes nothing.
pub fn alpha(t_left: f64, t_right: f64, d_left: usize, d_right: usize) -> f64 {
    let term = |t: f64, d: usize| t * ((d * d * d) as f64 - d as f64);
    2.0 * (term(t_left, d_left) + term(t_right, d_right))
}

pub fn trace_distance_bound(tau: f64, t_left: f64, t_right: f64, d_left: usize, d_right: usize) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidDistribution(format!("tau must be nonnegative, got {tau}")));
    }
    let a = alpha(t_left, t_right, d_left, d_right);
    if a <= 0.0 {
        return Err(Error::UndefinedBound(a));
    }
    Ok(tau / a)
}

/// `1/2 sum |p_a - q_a|` for two probability vectors.
pub fn trace_distance(p: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!("lengths {} and {}", p.len(), q.len())));
    }
    for v in [p, q] {
        let sum = v.sum();
        if (sum - 1.0).abs() > 1e-9 || v.iter().any(|&x| x < -1e-12 || !x.is_finite()) {
            return Err(Error::InvalidDistribution(format!("not a probability vector (sum {sum})")));
        }
    }
    Ok(0.5 * (p - q).abs().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    MaybePossible,
    Impossible,
}

impl Verdict {
    pub fn from_tau(tau: f64, delta_tol: f64) -> Self {
        if tau < delta_tol {
            Verdict::MaybePossible
        } else {
            Verdict::Impossible
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::MaybePossible => "maybe_possible",
            Verdict::Impossible => "impossible",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub tau_opt: f64,
    pub delta_tol: f64,
    pub verdict: Verdict,
    pub bound_alpha: f64,
    /// Only meaningful for the population objective and `alpha > 0`.
    pub trace_distance_lower_bound: Option<f64>,
}

impl FeasibilityVerdict {
    pub fn new(objective: Objective, tau_opt: f64, delta_tol: f64, t: (f64, f64), dims: (usize, usize)) -> Self {
        let bound_alpha = alpha(t.0, t.1, dims.0, dims.1);
        let trace_distance_lower_bound = match objective {
            Objective::Pop => trace_distance_bound(tau_opt.max(0.0), t.0, t.1, dims.0, dims.1).ok(),
            Objective::PopCoh => None,
        };
        Self {
            tau_opt,
            delta_tol,
            verdict: Verdict::from_tau(tau_opt, delta_tol),
            bound_alpha,
            trace_distance_lower_bound,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    #[serde(skip)]
    pub candidate: LindbladCandidate,
    pub objective_value: f64,
    pub oracle_tau: f64,
    pub relative_mismatch: f64,
    pub gksl: GkslReport,
    pub conservation: ConservationReport,
    pub passed: bool,
}

/// Rebuilds the candidate from the primal point and re-evaluates everything
/// with the independent oracles of the Lindblad family.
pub fn verify_solution(
    problem: &ConicProblem,
    solution: &ConicSolution,
    tables: &AffineMapTables,
    l2_rho0: Option<&CMatrix>,
    trials: usize,
    seed: u64,
) -> Result<Certification> {
    if !solution.status.has_solution() || solution.x.len() != problem.n_vars() {
        return Err(Error::Solver(format!("no primal point to certify (status {})", solution.status.as_str())));
    }
    let candidate = problem.layout.candidate(&solution.x);
    let objective_value = problem.objective_value(&solution.x);
    let oracle_tau = match problem.kind {
        Objective::Pop => tau_pop(tables, &candidate)?,
        Objective::PopCoh => {
            let l2 = l2_rho0.ok_or_else(|| Error::Solver("population-coherence certification needs L2(rho0)".into()))?;
            tau_pop_coh(tables, &candidate, l2)?
        }
    };
    let relative_mismatch = (oracle_tau - objective_value).abs() / (1.0 + objective_value.abs());
    let gksl = check_gksl(&candidate);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let conservation = check_local_conservation(tables, &candidate, trials, &mut rng)?;
    let passed = relative_mismatch < CERTIFICATION_REL_TOL && gksl.passed && conservation.passed;
    Ok(Certification {
        candidate,
        objective_value,
        oracle_tau,
        relative_mismatch,
        gksl,
        conservation,
        passed,
    })
}

/// Candidate's own zeroth-order populations against the reference ones.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub candidate_populations: Vec<f64>,
    pub trace_distance: f64,
    pub bound: f64,
    /// Closed classes used when the candidate's steady state is not unique.
    pub closed_classes: Option<usize>,
    pub satisfied: bool,
}

/// Slack granted to the comparison `trace_distance >= bound`.
pub const LEMMA_SLACK: f64 = 1e-9;

pub fn lemma_check(tables: &AffineMapTables, candidate: &LindbladCandidate, tau: f64, t: (f64, f64)) -> Result<LemmaCheck> {
    let dims = (
        tables.left.as_ref().map_or(1, |b| b.d_block()),
        tables.right.as_ref().map_or(1, |b| b.d_block()),
    );
    let bound = trace_distance_bound(tau, t.0, t.1, dims.0, dims.1)?;
    let ness = candidate_steady_state(&candidate_rate_matrix(tables, candidate)?)?;
    let td = trace_distance(&ness.populations, &tables.populations)?;
    Ok(LemmaCheck {
        candidate_populations: ness.populations.iter().copied().collect(),
        trace_distance: td,
        bound,
        closed_classes: ness.closed_classes,
        satisfied: td >= bound - LEMMA_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, CMatrix};
    use rand::Rng;

    #[test]
    fn alpha_arithmetic() {
        assert_eq!(alpha(1.0, 1.0, 2, 2), 24.0);
        assert_eq!(alpha(1.0, 1.0, 4, 4), 240.0);
        assert_eq!(trace_distance_bound(0.0, 1.0, 1.0, 2, 2).unwrap(), 0.0);
        assert!((trace_distance_bound(0.48, 1.0, 1.0, 2, 2).unwrap() - 0.02).abs() < 1e-15);
        assert!(matches!(trace_distance_bound(1.0, 1.0, 1.0, 1, 1), Err(Error::UndefinedBound(_))));
    }

    #[test]
    fn trace_distance_basics() {
        let p = DVector::from_vec(vec![1.0, 0.0]);
        let q = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(trace_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(trace_distance(&p, &q).unwrap(), 1.0);
        assert!(trace_distance(&p, &DVector::from_vec(vec![0.5, 0.6])).is_err());
    }

    #[test]
    fn trace_distance_matches_dense_trace_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let mut draw = || {
                let v = DVector::from_fn(6, |_, _| rng.random_range(0.0..1.0));
                let s = v.sum();
                v / s
            };
            let (p, q) = (draw(), draw());
            let diff = CMatrix::from_diagonal(&(&p - &q).map(|x| x.into()));
            let dense: f64 = hermitian_eigenvalues(&diff).iter().map(|e| e.abs()).sum::<f64>() / 2.0;
            assert!((trace_distance(&p, &q).unwrap() - dense).abs() < 1e-14);
        }
    }

    #[test]
    fn verdict_threshold_is_strict() {
        assert_eq!(Verdict::from_tau(1e-6, 1e-6), Verdict::Impossible);
        assert_eq!(Verdict::from_tau(9.9e-7, 1e-6), Verdict::MaybePossible);
        let v = FeasibilityVerdict::new(Objective::Pop, 0.24, 1e-6, (1.0, 1.0), (2, 2));
        assert_eq!(v.trace_distance_lower_bound, Some(0.01));
        assert_eq!(FeasibilityVerdict::new(Objective::PopCoh, 0.24, 1e-6, (1.0, 1.0), (2, 2)).trace_distance_lower_bound, None);
    }
}
