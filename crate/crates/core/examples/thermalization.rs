//! Equal temperatures on every bath: the zeroth-order Redfield populations
//! must be the Gibbs weights, whatever the geometry.
//!
//!     cargo run --release --example thermalization

use lindblad_sdp::pipeline::{prepare_point, PointSpec};
use lindblad_sdp::redfield::gibbs_populations;
use lindblad_sdp::spin_chain::ChainSpec;

fn main() -> lindblad_sdp::Result<()> {
    let geometries = [(1, 0, 1), (1, 1, 1), (2, 0, 1), (1, 2, 1), (2, 0, 2)];
    println!("{:>9} {:>5} {:>12}  lowest populations", "geometry", "beta", "max |p - G|");
    for (l, m, r) in geometries {
        for beta in [0.5, 1.0, 5.0] {
            let chain = ChainSpec::from_geometry(l, m, r, 1.0, 0.0, 0.1)?;
            let prep = prepare_point(&PointSpec::two_temperature(chain, beta, beta, 1.0, 10.0)?)?;
            let gibbs = gibbs_populations(&prep.redfield.eigs.energies, beta);
            let dist = (&prep.ness.populations - &gibbs).amax();
            let head: Vec<String> = prep.ness.populations.iter().take(3).map(|p| format!("{p:.6}")).collect();
            println!("{:>9} {beta:>5} {dist:>12.2e}  {}", format!("{l}-{m}-{r}"), head.join(" "));
        }
    }
    Ok(())
}
