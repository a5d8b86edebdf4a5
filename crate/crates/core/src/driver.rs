//! Batch driver behind the CLI: sweeps, dump verification and SDPA export.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{GridPoint, SweepConfig};
use crate::dump::{diff_points, point_hash, CandidateDump, DumpMetadata};
use crate::error::{Error, Result};
use crate::lindblad_family::{check_gksl, check_local_conservation, tau_pop, tau_pop_coh, ConservationReport, GkslReport};
use crate::pipeline::{build_problem, prepare_point, solve_point, PointOutcome, PreparedPoint, SolveRequest};
use crate::sdp::sdpa::to_sdpa_string;
use crate::sdp::{alpha, lemma_check, ConicBackend, LemmaCheck, Objective, Verdict};

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 22] = [
    "N", "N_L", "N_M", "N_R", "omega0", "eps0", "g", "beta_L", "beta_R", "gammas", "omega_c", "t_L", "t_R",
    "objective", "tau_opt", "verdict", "alpha", "td_bound", "status", "gap", "residual", "seconds",
];

/// Equal-temperature points must reproduce the Gibbs weights this closely
/// before any optimization is attempted.
pub const GIBBS_SANITY_TOL: f64 = 1e-8;

/// Stored and replayed oracle values must agree this closely.
pub const REPLAY_TOL: f64 = 1e-9;

/// One CSV line. Failed rows leave `tau_opt`, `verdict` and `td_bound` empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "N_L")]
    pub n_left: usize,
    #[serde(rename = "N_M")]
    pub n_middle: usize,
    #[serde(rename = "N_R")]
    pub n_right: usize,
    pub omega0: f64,
    pub eps0: f64,
    pub g: f64,
    #[serde(rename = "beta_L")]
    pub beta_left: Option<f64>,
    #[serde(rename = "beta_R")]
    pub beta_right: Option<f64>,
    /// `;`-joined, one per attached site.
    pub gammas: String,
    pub omega_c: f64,
    #[serde(rename = "t_L")]
    pub t_left: f64,
    #[serde(rename = "t_R")]
    pub t_right: f64,
    pub objective: String,
    pub tau_opt: Option<f64>,
    pub verdict: Option<String>,
    pub alpha: f64,
    pub td_bound: Option<f64>,
    pub status: String,
    pub gap: Option<f64>,
    pub residual: Option<f64>,
    pub seconds: f64,
}

/// A row plus everything that does not go into the CSV.
#[derive(Debug, Clone)]
pub struct RowResult {
    pub point: GridPoint,
    pub objective: Objective,
    pub row: SweepRow,
    pub failed: bool,
    pub messages: Vec<String>,
    pub dump: Option<CandidateDump>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOverrides {
    pub out_dir: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub delta_tol: Option<f64>,
    pub free_trace: Option<bool>,
}

impl SweepOverrides {
    pub fn apply(&self, cfg: &mut SweepConfig) -> Result<()> {
        if let Some(d) = &self.out_dir {
            cfg.output.dir = d.clone();
        }
        if let Some(p) = self.parallelism {
            cfg.output.parallelism = p;
        }
        if let Some(t) = self.delta_tol {
            cfg.optimization.delta_tol = t;
        }
        if let Some(f) = self.free_trace {
            cfg.optimization.free_trace = f;
        }
        cfg.validate()
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<RowResult>,
}

impl SweepReport {
    pub fn n_failed(&self) -> usize {
        self.rows.iter().filter(|r| r.failed).count()
    }
}

fn request(cfg: &SweepConfig, objective: Objective) -> SolveRequest {
    let o = &cfg.optimization;
    SolveRequest {
        objective,
        t_left: o.t_left,
        t_right: o.t_right,
        free_trace: o.free_trace,
        fix_hls_zero: false,
        delta_tol: o.delta_tol,
        conservation_trials: o.conservation_trials,
        seed: o.seed,
    }
}

fn base_row(point: &GridPoint, req: &SolveRequest) -> SweepRow {
    let c = &point.spec.chain;
    let dims = (c.d_left(), c.d_right());
    SweepRow {
        n: c.n_qubits,
        n_left: c.n_left,
        n_middle: c.n_middle(),
        n_right: c.n_right,
        omega0: c.onsite_energy,
        eps0: c.energy_bias,
        g: c.coupling,
        beta_left: point.beta_left,
        beta_right: point.beta_right,
        gammas: point.spec.baths.iter().map(|b| format!("{:?}", b.coupling)).collect::<Vec<_>>().join(";"),
        omega_c: point.spec.baths.first().map_or(0.0, |b| b.cutoff),
        t_left: req.t_left,
        t_right: req.t_right,
        objective: req.objective.as_str().into(),
        tau_opt: None,
        verdict: None,
        alpha: alpha(req.t_left, req.t_right, dims.0, dims.1),
        td_bound: None,
        status: String::new(),
        gap: None,
        residual: None,
        seconds: 0.0,
    }
}

fn failed_row(point: &GridPoint, req: &SolveRequest, status: &str, message: String) -> RowResult {
    let mut row = base_row(point, req);
    row.status = status.into();
    RowResult {
        point: point.clone(),
        objective: req.objective,
        row,
        failed: true,
        messages: vec![message],
        dump: None,
    }
}

fn outcome_row(cfg: &SweepConfig, point: &GridPoint, out: &PointOutcome, backend: &str) -> RowResult {
    let req = &out.request;
    let mut row = base_row(point, req);
    row.seconds = out.seconds;
    row.gap = Some(out.solution.duality_gap).filter(|g| g.is_finite());
    row.residual = Some(out.solution.primal_residual).filter(|r| r.is_finite());
    let mut messages = out.notes.clone();
    let ok = out.succeeded();
    row.status = if ok || !out.solution.status.has_solution() {
        out.solution.status.as_str().into()
    } else {
        "uncertified".into()
    };
    if let Some(c) = &out.certification {
        if !c.passed {
            messages.push(format!(
                "certification: mismatch {:.2e}, gksl {}, conservation {}",
                c.relative_mismatch, c.gksl.passed, c.conservation.passed
            ));
        }
    }
    if let Some(l) = &out.lemma {
        if !l.satisfied {
            messages.push(format!("lemma bound violated: {:e} < {:e}", l.trace_distance, l.bound));
        }
    }
    let mut dump = None;
    if ok {
        let v = out.verdict.as_ref().expect("solved outcomes carry a verdict");
        row.tau_opt = Some(v.tau_opt);
        row.verdict = Some(v.verdict.as_str().into());
        row.td_bound = v.trace_distance_lower_bound;
        let wanted = cfg.output.dump_all || (cfg.output.dump_candidates && v.verdict == Verdict::MaybePossible);
        if wanted {
            let cert = out.certification.as_ref().expect("succeeded implies certified");
            let meta = DumpMetadata {
                point: point.spec.clone(),
                point_hash: String::new(),
                grid_index: point.index.clone(),
                grid_label: point.label(),
                objective: req.objective,
                t_left: req.t_left,
                t_right: req.t_right,
                free_trace: req.free_trace,
                delta_tol: req.delta_tol,
                epsilon: cfg.optimization.epsilon,
                solver: backend.into(),
                status: row.status.clone(),
                tau_opt: v.tau_opt,
                oracle_tau: cert.oracle_tau,
            };
            match CandidateDump::new(meta, &cert.candidate) {
                Ok(d) => dump = Some(d),
                Err(e) => messages.push(format!("dump: {e}")),
            }
        }
    }
    RowResult {
        point: point.clone(),
        objective: req.objective,
        row,
        failed: !ok,
        messages,
        dump,
    }
}

fn run_point(cfg: &SweepConfig, point: &GridPoint, backend: &dyn ConicBackend) -> Vec<RowResult> {
    let reqs: Vec<SolveRequest> = cfg.optimization.objectives.iter().map(|&o| request(cfg, o)).collect();
    let prep = match prepare_point(&point.spec) {
        Ok(p) => p,
        Err(e) => return reqs.iter().map(|r| failed_row(point, r, "prepare_failed", e.to_string())).collect(),
    };
    if let Some(d) = prep.ness.gibbs_distance {
        if !(d < GIBBS_SANITY_TOL) {
            let msg = format!("equal temperatures but |p - gibbs|_inf = {d:e}");
            return reqs.iter().map(|r| failed_row(point, r, "gibbs_check_failed", msg.clone())).collect();
        }
    }
    reqs.iter()
        .map(|r| match solve_point(&prep, r, backend) {
            Ok(out) => outcome_row(cfg, point, &out, backend.name()),
            Err(e) => failed_row(point, r, "solver_error", e.to_string()),
        })
        .collect()
}

/// Solves every grid point; rows come back in grid order, then objective order.
pub fn run_sweep(cfg: &SweepConfig, backend: &dyn ConicBackend) -> Result<SweepReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.output.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let rows: Vec<Vec<RowResult>> = pool.install(|| grid.par_iter().map(|p| run_point(cfg, p, backend)).collect());
    Ok(SweepReport {
        rows: rows.into_iter().flatten().collect(),
    })
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn dump_file_name(point: &GridPoint, objective: Objective) -> String {
    let idx = point.index.iter().map(usize::to_string).collect::<Vec<_>>().join("-");
    if idx.is_empty() {
        format!("candidate_{}.json", objective.as_str())
    } else {
        format!("candidate_{idx}_{}.json", objective.as_str())
    }
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    csv_schema_version: u32,
    columns: &'a [&'a str],
    csv: &'a str,
    rows: usize,
    failed_rows: usize,
    config: &'a SweepConfig,
    messages: Vec<String>,
    dumps: Vec<String>,
}

/// Writes the CSV, the dumps under `dumps/` and `manifest.json`; returns the CSV path.
pub fn write_outputs(cfg: &SweepConfig, report: &SweepReport) -> Result<PathBuf> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(&cfg.output.csv);
    let rows: Vec<SweepRow> = report.rows.iter().map(|r| r.row.clone()).collect();
    std::fs::write(&csv_path, csv_string(&rows)?)?;
    let mut dumps = Vec::new();
    for r in &report.rows {
        if let Some(d) = &r.dump {
            let name = format!("dumps/{}", dump_file_name(&r.point, r.objective));
            d.write(&dir.join(&name))?;
            dumps.push(name);
        }
    }
    let messages = report
        .rows
        .iter()
        .flat_map(|r| {
            r.messages
                .iter()
                .map(move |m| format!("[{}] {} {}: {m}", r.point.selector(), r.point.label(), r.objective.as_str()))
        })
        .collect();
    let manifest = Manifest {
        csv_schema_version: CSV_SCHEMA_VERSION,
        columns: &CSV_COLUMNS,
        csv: &cfg.output.csv,
        rows: report.rows.len(),
        failed_rows: report.n_failed(),
        config: cfg,
        messages,
        dumps,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(csv_path)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplayReport {
    pub grid_label: String,
    pub objective: Objective,
    pub stored_tau: f64,
    pub recomputed_tau: f64,
    pub tau_matches: bool,
    pub gksl: GkslReport,
    pub conservation: ConservationReport,
    pub lemma: Option<LemmaCheck>,
    pub notes: Vec<String>,
    pub passed: bool,
}

/// Re-evaluates a stored candidate against the grid point it claims to
/// come from. Refuses when the config no longer produces that point.
pub fn verify_dump(dump: &CandidateDump, cfg: &SweepConfig) -> Result<ReplayReport> {
    let meta = &dump.metadata;
    let point = cfg.select(&meta.grid_index.iter().map(usize::to_string).collect::<Vec<_>>().join(","))?;
    if point_hash(&point.spec)? != meta.point_hash {
        return Err(Error::HashMismatch(diff_points(&meta.point, &point.spec)?));
    }
    let prep = prepare_point(&point.spec)?;
    let cand = dump.candidate.to_candidate()?;
    let recomputed_tau = match meta.objective {
        Objective::Pop => tau_pop(&prep.tables, &cand)?,
        Objective::PopCoh => tau_pop_coh(&prep.tables, &cand, &prep.l2_rho0)?,
    };
    let tau_matches = (recomputed_tau - meta.oracle_tau).abs() <= REPLAY_TOL * meta.oracle_tau.abs().max(1.0);
    let gksl = check_gksl(&cand);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.optimization.seed);
    let conservation = check_local_conservation(&prep.tables, &cand, cfg.optimization.conservation_trials, &mut rng)?;
    let mut notes = Vec::new();
    let lemma = match meta.objective {
        Objective::Pop => match lemma_check(&prep.tables, &cand, recomputed_tau.max(0.0), (meta.t_left, meta.t_right)) {
            Ok(l) => Some(l),
            Err(e) => {
                notes.push(format!("lemma check skipped: {e}"));
                None
            }
        },
        Objective::PopCoh => None,
    };
    let passed = tau_matches && gksl.passed && conservation.passed && lemma.as_ref().is_none_or(|l| l.satisfied);
    Ok(ReplayReport {
        grid_label: meta.grid_label.clone(),
        objective: meta.objective,
        stored_tau: meta.oracle_tau,
        recomputed_tau,
        tau_matches,
        gksl,
        conservation,
        lemma,
        notes,
        passed,
    })
}

pub fn prepare_selected(cfg: &SweepConfig, selector: &str) -> Result<(GridPoint, PreparedPoint)> {
    let point = cfg.select(selector)?;
    let prep = prepare_point(&point.spec)?;
    Ok((point, prep))
}

/// SDPA text of one grid point's problem.
pub fn export_sdpa(cfg: &SweepConfig, selector: &str, objective: Objective) -> Result<String> {
    let (_, prep) = prepare_selected(cfg, selector)?;
    to_sdpa_string(&build_problem(&prep, &request(cfg, objective))?)
}

/// Problem sizes for a prepared point, as `(n_vars, n_rows)`.
pub fn problem_size(cfg: &SweepConfig, prep: &PreparedPoint, objective: Objective) -> Result<(usize, usize)> {
    let p = build_problem(prep, &request(cfg, objective))?;
    Ok((p.n_vars(), p.n_rows()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}
