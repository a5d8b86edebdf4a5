//! The Redfield dissipator against a dense superoperator assembled
//! independently, plus trace and Hermiticity preservation on random inputs.

mod common;

use common::{apply_dense, dense_superoperator, max_abs, RefBath};
use lindblad_sdp::bath::{BathSpec, QuadratureConfig};
use lindblad_sdp::linalg::{random_density, random_hermitian, trace, CMatrix};
use lindblad_sdp::redfield::RedfieldDissipator;
use lindblad_sdp::spin_chain::{build_hamiltonian, diagonalize, ChainSpec, DEFAULT_GAP_THRESHOLD};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dissipator(chain: ChainSpec, betas: &[f64], gammas: &[f64]) -> RedfieldDissipator {
    let eigs = diagonalize(&build_hamiltonian(&chain).unwrap(), DEFAULT_GAP_THRESHOLD).unwrap();
    let baths: Vec<BathSpec> = chain
        .attached_sites()
        .into_iter()
        .enumerate()
        .map(|(k, s)| BathSpec::new(s, betas[k], gammas[k], 10.0))
        .collect();
    RedfieldDissipator::new(chain, eigs, &baths, &QuadratureConfig::default()).unwrap()
}

/// Largest entrywise deviation between the library (eigenbasis) and the
/// dense oracle (site basis) over every matrix unit.
fn oracle_deviation(rf: &RedfieldDissipator) -> f64 {
    let n = rf.chain.n_qubits;
    let d = rf.dim();
    let refs: Vec<RefBath> = rf
        .baths()
        .map(|b| RefBath {
            site: b.site,
            beta: b.inv_temperature,
            gamma: b.coupling,
            omega_c: b.cutoff,
            upper: 6.0 * b.cutoff,
        })
        .collect();
    let energies: Vec<f64> = rf.eigs.energies.iter().copied().collect();
    let u = &rf.eigs.vectors;
    let sup = dense_superoperator(n, u, &energies, &refs);
    let mut worst = 0.0f64;
    for col in 0..d * d {
        let mut e = CMatrix::zeros(d, d);
        e[(col % d, col / d)] = Complex64::new(1.0, 0.0);
        let lib = rf.apply(&e).unwrap();
        let site = apply_dense(&sup, &(u * &e * u.adjoint()));
        worst = worst.max(max_abs(&(u.adjoint() * site * u - lib)));
    }
    worst
}

#[test]
fn two_qubits_one_bath_match_dense_oracle() {
    let chain = ChainSpec::from_geometry(1, 1, 0, 1.0, 0.0, 0.1).unwrap();
    let dev = oracle_deviation(&dissipator(chain, &[1.0], &[1.0]));
    eprintln!("max deviation {dev:e}");
    assert!(dev < 1e-9);
}

#[test]
fn two_qubits_two_baths_match_dense_oracle() {
    let chain = ChainSpec::from_geometry(1, 0, 1, 1.0, 0.0, 0.3).unwrap();
    let dev = oracle_deviation(&dissipator(chain, &[0.5, 2.0], &[1.0, 0.7]));
    eprintln!("max deviation {dev:e}");
    assert!(dev < 1e-9);
}

#[test]
fn three_qubits_match_dense_oracle() {
    let chain = ChainSpec::from_geometry(1, 1, 1, 1.0, 0.05, 0.2).unwrap();
    let dev = oracle_deviation(&dissipator(chain, &[1.0, 5.0], &[1.0, 1.0]));
    eprintln!("max deviation {dev:e}");
    assert!(dev < 1e-9);
}

#[test]
fn random_density_matrices_keep_trace_and_hermiticity() {
    let chain = ChainSpec::from_geometry(1, 1, 1, 1.0, 0.0, 0.1).unwrap();
    let rf = dissipator(chain, &[0.7, 3.0], &[1.0, 1.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let rho = random_density(rf.dim(), &mut rng);
        let out = rf.apply(&rho).unwrap();
        assert!(trace(&out).norm() < 1e-12);
        assert!(max_abs(&(&out - out.adjoint())) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dissipator_is_linear_trace_annihilating_and_hermiticity_preserving(
        seed in any::<u64>(),
        g in 0.01f64..0.5,
        bl in 0.2f64..5.0,
        br in 0.2f64..5.0,
        a in -2.0f64..2.0,
    ) {
        let chain = ChainSpec::from_geometry(1, 0, 1, 1.0, 0.0, g).unwrap();
        let rf = dissipator(chain, &[bl, br], &[1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_hermitian(rf.dim(), &mut rng);
        let y = random_hermitian(rf.dim(), &mut rng);
        let lx = rf.apply(&x).unwrap();
        let ly = rf.apply(&y).unwrap();
        prop_assert!(trace(&lx).norm() < 1e-11);
        prop_assert!(max_abs(&(&lx - lx.adjoint())) < 1e-11);
        let combo = rf.apply(&(&x + y.scale(a))).unwrap();
        prop_assert!(max_abs(&(combo - (lx + ly.scale(a)))) < 1e-11);
    }
}
