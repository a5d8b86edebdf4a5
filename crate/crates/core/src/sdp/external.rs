//! Independent backend: exports SDPA and hands it to cvxopt in a subprocess.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use serde::Deserialize;

use super::sdpa::to_sdpa_string;
use super::{relative_gap, ConicBackend, ConicProblem, ConicSolution, SolveStatus};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SdpaScriptBackend {
    pub python: String,
    pub script: PathBuf,
}

impl Default for SdpaScriptBackend {
    fn default() -> Self {
        Self {
            python: std::env::var("LINDBLAD_SDP_PYTHON").unwrap_or_else(|_| "python3".into()),
            script: PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/scripts/solve_sdpa.py")),
        }
    }
}

#[derive(Deserialize)]
struct ScriptOutput {
    status: String,
    #[serde(default)]
    primal_objective: Option<f64>,
    #[serde(default)]
    dual_objective: Option<f64>,
    #[serde(default)]
    iterations: u32,
    #[serde(default)]
    x: Vec<f64>,
    #[serde(default)]
    message: Option<String>,
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

impl SdpaScriptBackend {
    /// True when the interpreter runs and imports cvxopt.
    pub fn available(&self) -> bool {
        self.script.exists()
            && Command::new(&self.python)
                .args(["-c", "import cvxopt"])
                .output()
                .map(|o| o.status.success())
                .unwrap_or(false)
    }
}

impl ConicBackend for SdpaScriptBackend {
    fn name(&self) -> &str {
        "cvxopt-sdpa"
    }

    fn solve_raw(&self, problem: &ConicProblem) -> Result<ConicSolution> {
        let text = to_sdpa_string(problem)?;
        let path = std::env::temp_dir().join(format!(
            "lindblad-sdp-{}-{}.dat-s",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::write(&path, text)?;
        let start = Instant::now();
        let out = Command::new(&self.python).arg(&self.script).arg(&path).output();
        let _ = std::fs::remove_file(&path);
        let out = out?;
        if !out.status.success() {
            return Err(Error::Solver(format!(
                "{} exited with {}: {}",
                self.script.display(),
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        let parsed: ScriptOutput = serde_json::from_slice(&out.stdout)?;
        let status = match parsed.status.as_str() {
            "optimal" => SolveStatus::Optimal,
            "primal infeasible" | "dual infeasible" => SolveStatus::Infeasible,
            _ => SolveStatus::NumericalError,
        };
        let p = parsed.primal_objective.unwrap_or(f64::NAN);
        let d = parsed.dual_objective.unwrap_or(f64::NAN);
        Ok(ConicSolution {
            x: parsed.x,
            z: vec![],
            primal_objective: p,
            dual_objective: d,
            status,
            backend_status: parsed.message.map_or(parsed.status.clone(), |m| format!("{}: {m}", parsed.status)),
            duality_gap: relative_gap(p, d),
            primal_residual: f64::NAN,
            solve_time: start.elapsed().as_secs_f64(),
            iterations: parsed.iterations,
        })
    }
}
