//! One physical configuration end to end: spectrum, Redfield steady state,
//! affine tables, conic solve and certification.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bath::{BathSpec, QuadratureConfig};
use crate::error::{Error, Result};
use crate::lindblad_family::{build_affine_tables, AffineMapTables, LindbladCandidate};
use crate::linalg::CMatrix;
use crate::redfield::{common_inverse_temperature, diagonal_state, NessSolution, NullspaceMethod, RedfieldDissipator};
use crate::sdp::{
    build_tau_pop_problem, build_tau_popcoh_problem, lemma_check, solve, verify_solution, Certification, ConicBackend,
    ConicProblem, ConicSolution, FeasibilityVerdict, LemmaCheck, Objective, PopCohOptions,
};
use crate::spin_chain::{build_hamiltonian, diagonalize, ChainSpec, DEFAULT_GAP_THRESHOLD};

/// Chain, baths and quadrature settings of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub chain: ChainSpec,
    /// One bath per attached site, in site order.
    pub baths: Vec<BathSpec>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

impl PointSpec {
    /// Left-block sites get `beta_left`, right-block sites `beta_right`.
    pub fn two_temperature(chain: ChainSpec, beta_left: f64, beta_right: f64, gamma: f64, omega_c: f64) -> Result<Self> {
        let betas: Vec<f64> = chain
            .attached_sites()
            .into_iter()
            .map(|s| if s <= chain.n_left { beta_left } else { beta_right })
            .collect();
        Self::per_site(chain, &betas, &[gamma], omega_c, 0.0)
    }

    /// `betas` and `gammas` hold one entry per attached site, or a single
    /// entry broadcast to all of them.
    pub fn per_site(chain: ChainSpec, betas: &[f64], gammas: &[f64], omega_c: f64, mu: f64) -> Result<Self> {
        chain.validate()?;
        let sites = chain.attached_sites();
        let pick = |v: &[f64], k: usize, what: &str| -> Result<f64> {
            match v.len() {
                1 => Ok(v[0]),
                n if n == sites.len() => Ok(v[k]),
                n => Err(Error::Config(format!("{what} has {n} entries for {} attached sites", sites.len()))),
            }
        };
        let baths = sites
            .iter()
            .enumerate()
            .map(|(k, &site)| {
                let mut b = BathSpec::new(site, pick(betas, k, "betas")?, pick(gammas, k, "gammas")?, omega_c);
                b.chem_potential = mu;
                b.validate()?;
                Ok(b)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            chain,
            baths,
            quadrature: QuadratureConfig::default(),
        })
    }
}

/// Everything the optimizations need, computed once per grid point.
#[derive(Debug, Clone)]
pub struct PreparedPoint {
    pub spec: PointSpec,
    pub redfield: RedfieldDissipator,
    pub ness: NessSolution,
    pub tables: AffineMapTables,
    /// `L2(rho0)` in the energy eigenbasis.
    pub l2_rho0: CMatrix,
}

pub fn prepare_point(spec: &PointSpec) -> Result<PreparedPoint> {
    spec.quadrature.validate()?;
    let h = build_hamiltonian(&spec.chain)?;
    let eigs = diagonalize(&h, DEFAULT_GAP_THRESHOLD)?;
    eigs.require_nondegenerate()?;
    let redfield = RedfieldDissipator::new(spec.chain, eigs.clone(), &spec.baths, &spec.quadrature)?;
    let mut ness = redfield.solve_ness(NullspaceMethod::Svd)?;
    if let Some(beta) = common_inverse_temperature(&spec.baths) {
        ness = ness.with_gibbs_distance(&eigs, beta);
    }
    let l2_rho0 = redfield.apply(&diagonal_state(&ness.populations))?;
    let tables = build_affine_tables(&spec.chain, &eigs, &ness.populations)?;
    Ok(PreparedPoint {
        spec: spec.clone(),
        redfield,
        ness,
        tables,
        l2_rho0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveRequest {
    pub objective: Objective,
    pub t_left: f64,
    pub t_right: f64,
    /// Population-coherence only: drop the trace equalities.
    pub free_trace: bool,
    pub fix_hls_zero: bool,
    pub delta_tol: f64,
    pub conservation_trials: usize,
    pub seed: u64,
}

impl SolveRequest {
    pub fn new(objective: Objective) -> Self {
        Self {
            objective,
            t_left: 1.0,
            t_right: 1.0,
            free_trace: false,
            fix_hls_zero: false,
            delta_tol: 1e-6,
            conservation_trials: 8,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub request: SolveRequest,
    pub solution: ConicSolution,
    pub verdict: Option<FeasibilityVerdict>,
    pub certification: Option<Certification>,
    /// Population objective only, when the bound is defined.
    pub lemma: Option<LemmaCheck>,
    /// Why the lemma check or certification could not run.
    pub notes: Vec<String>,
    pub n_vars: usize,
    pub n_rows: usize,
    pub seconds: f64,
}

impl PointOutcome {
    pub fn tau(&self) -> Option<f64> {
        self.solution.status.has_solution().then_some(self.solution.primal_objective)
    }

    pub fn candidate(&self) -> Option<&LindbladCandidate> {
        self.certification.as_ref().map(|c| &c.candidate)
    }

    pub fn succeeded(&self) -> bool {
        self.solution.status.has_solution() && self.certification.as_ref().is_some_and(|c| c.passed)
    }
}

pub fn block_dims(tables: &AffineMapTables) -> (usize, usize) {
    (
        tables.left.as_ref().map_or(1, |b| b.d_block()),
        tables.right.as_ref().map_or(1, |b| b.d_block()),
    )
}

pub fn build_problem(prep: &PreparedPoint, req: &SolveRequest) -> Result<ConicProblem> {
    match req.objective {
        Objective::Pop => build_tau_pop_problem(&prep.tables, req.t_left, req.t_right),
        Objective::PopCoh => build_tau_popcoh_problem(
            &prep.tables,
            &prep.l2_rho0,
            &PopCohOptions {
                t_left: req.t_left,
                t_right: req.t_right,
                free_trace: req.free_trace,
                fix_hls_zero: req.fix_hls_zero,
                compress: true,
            },
        ),
    }
}

pub fn solve_point(prep: &PreparedPoint, req: &SolveRequest, backend: &dyn ConicBackend) -> Result<PointOutcome> {
    let start = Instant::now();
    let problem = build_problem(prep, req)?;
    let solution = solve(&problem, backend)?;
    let mut notes = Vec::new();
    let mut verdict = None;
    let mut certification = None;
    let mut lemma = None;
    if solution.status.has_solution() {
        let tau = solution.primal_objective;
        verdict = Some(FeasibilityVerdict::new(
            req.objective,
            tau,
            req.delta_tol,
            (req.t_left, req.t_right),
            block_dims(&prep.tables),
        ));
        match verify_solution(&problem, &solution, &prep.tables, Some(&prep.l2_rho0), req.conservation_trials, req.seed) {
            Ok(c) => {
                if req.objective == Objective::Pop {
                    match lemma_check(&prep.tables, &c.candidate, tau.max(0.0), (req.t_left, req.t_right)) {
                        Ok(l) => lemma = Some(l),
                        Err(e) => notes.push(format!("lemma check skipped: {e}")),
                    }
                }
                certification = Some(c);
            }
            Err(e) => notes.push(format!("certification failed: {e}")),
        }
    }
    Ok(PointOutcome {
        request: *req,
        n_vars: problem.n_vars(),
        n_rows: problem.n_rows(),
        solution,
        verdict,
        certification,
        lemma,
        notes,
        seconds: start.elapsed().as_secs_f64(),
    })
}
