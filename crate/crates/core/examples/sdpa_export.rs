//! Writes one problem in SDPA sparse format, then solves it twice: with the
//! built-in backend and, when python3 has cvxopt, with the bundled script.
//!
//!     cargo run --release --example sdpa_export -- [out.dat-s]

use lindblad_sdp::pipeline::{build_problem, prepare_point, PointSpec, SolveRequest};
use lindblad_sdp::sdp::sdpa::to_sdpa_string;
use lindblad_sdp::sdp::{solve, ClarabelBackend, Objective, SdpaScriptBackend};
use lindblad_sdp::spin_chain::ChainSpec;

fn main() -> lindblad_sdp::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "tau_pop.dat-s".into());
    let chain = ChainSpec::from_geometry(1, 2, 1, 1.0, 0.0, 0.01)?;
    let prep = prepare_point(&PointSpec::two_temperature(chain, 1.0, 1.0, 1.0, 10.0)?)?;
    let problem = build_problem(&prep, &SolveRequest::new(Objective::Pop))?;
    let text = to_sdpa_string(&problem)?;
    std::fs::write(&path, &text)?;
    println!("{path}: {} variables, {} bytes", problem.n_vars(), text.len());

    let internal = solve(&problem, &ClarabelBackend::default())?;
    println!("clarabel {:>14.9e} ({})", internal.primal_objective, internal.status.as_str());
    let external = SdpaScriptBackend::default();
    if external.available() {
        let sol = solve(&problem, &external)?;
        println!("cvxopt   {:>14.9e} ({})", sol.primal_objective, sol.status.as_str());
    } else {
        println!("cvxopt not available, skipping the external solve");
    }
    Ok(())
}
