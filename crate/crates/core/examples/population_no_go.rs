//! Population objective for the 1-2-1 chain at a few temperature pairs,
//! with the lower bound on how far any admissible Lindbladian's populations
//! must sit from the Redfield ones, and the candidate's actual distance.
//!
//!     cargo run --release --example population_no_go

use lindblad_sdp::pipeline::{prepare_point, solve_point, PointSpec, SolveRequest};
use lindblad_sdp::sdp::{ClarabelBackend, Objective};
use lindblad_sdp::spin_chain::ChainSpec;

fn main() -> lindblad_sdp::Result<()> {
    let backend = ClarabelBackend::default();
    let chain = ChainSpec::from_geometry(1, 2, 1, 1.0, 0.0, 0.01)?;
    println!("{:>6} {:>6} {:>11} {:>14} {:>11} {:>11}", "beta_L", "beta_R", "tau_pop", "verdict", "bound", "distance");
    for (bl, br) in [(0.1, 1.0), (1.0, 1.0), (1.0, 0.5), (5.0, 0.5), (0.5, 5.0)] {
        let prep = prepare_point(&PointSpec::two_temperature(chain, bl, br, 1.0, 10.0)?)?;
        let out = solve_point(&prep, &SolveRequest::new(Objective::Pop), &backend)?;
        let v = out.verdict.as_ref().expect("solved");
        let lemma = out.lemma.as_ref().expect("population objective with alpha > 0");
        println!(
            "{bl:>6} {br:>6} {:>11.3e} {:>14} {:>11.3e} {:>11.3e}",
            v.tau_opt,
            v.verdict.as_str(),
            lemma.bound,
            lemma.trace_distance
        );
    }
    Ok(())
}
