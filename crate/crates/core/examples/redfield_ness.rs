//! Nonequilibrium steady state of a boundary-driven chain: hot left bath,
//! cold right bath. Prints the populations, the second-order coherences and
//! the nullspace conditioning.
//!
//!     cargo run --release --example redfield_ness

use lindblad_sdp::bath::BathSpec;
use lindblad_sdp::bath::QuadratureConfig;
use lindblad_sdp::redfield::{NullspaceMethod, RedfieldDissipator};
use lindblad_sdp::spin_chain::{build_hamiltonian, diagonalize, ChainSpec, DEFAULT_GAP_THRESHOLD};

fn main() -> lindblad_sdp::Result<()> {
    let chain = ChainSpec::from_geometry(1, 1, 1, 1.0, 0.0, 0.1)?;
    let eigs = diagonalize(&build_hamiltonian(&chain)?, DEFAULT_GAP_THRESHOLD)?;
    eigs.require_nondegenerate()?;
    let baths = [BathSpec::new(1, 0.5, 1.0, 10.0), BathSpec::new(3, 5.0, 1.0, 10.0)];
    let rf = RedfieldDissipator::new(chain, eigs, &baths, &QuadratureConfig::default())?;

    let svd = rf.solve_ness(NullspaceMethod::Svd)?;
    let lsq = rf.solve_ness(NullspaceMethod::NormalizedLeastSquares)?;
    println!("  E_a        p_a (svd)    p_a (lsq)");
    for (a, e) in rf.eigs.energies.iter().enumerate() {
        println!("{e:>6.3}  {:>12.8} {:>12.8}", svd.populations[a], lsq.populations[a]);
    }
    println!("singular values {:.2e} / {:.2e}", svd.singular_values.0, svd.singular_values.1);
    println!("residual ||A p||_1 = {:.2e}", svd.residual);

    let c = &svd.coherences2;
    let largest = (0..c.nrows())
        .flat_map(|i| (0..c.ncols()).map(move |j| (i, j)))
        .max_by(|&(a, b), &(x, y)| c[(a, b)].norm().total_cmp(&c[(x, y)].norm()))
        .expect("nonempty");
    println!("largest second-order coherence |rho2_{{{},{}}}| = {:.3e}", largest.0, largest.1, c[largest].norm());
    Ok(())
}
