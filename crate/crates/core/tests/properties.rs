//! Randomized invariants across the physics modules and the optimization layer.

use lindblad_sdp::bath::{principal_value, redfield_coefficients, BathSpec, QuadratureConfig};
use lindblad_sdp::lindblad_family::{apply_candidate, candidate_rate_matrix, tau_pop, tau_pop_coh, LindbladCandidate};
use lindblad_sdp::linalg::{frobenius, random_hermitian, random_psd, trace, CMatrix};
use lindblad_sdp::pipeline::{prepare_point, solve_point, PointSpec, PreparedPoint, SolveRequest};
use lindblad_sdp::sdp::{alpha, ClarabelBackend, Objective};
use lindblad_sdp::spin_chain::{build_hamiltonian, diagonalize, operator_basis, ChainSpec, DEFAULT_GAP_THRESHOLD};
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn geometry() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=2, 0usize..=2, 0usize..=2)
}

fn prepared(geom: (usize, usize, usize), g: f64, bl: f64, br: f64) -> Option<PreparedPoint> {
    let chain = ChainSpec::from_geometry(geom.0, geom.1, geom.2, 1.0, 0.0, g).ok()?;
    prepare_point(&PointSpec::two_temperature(chain, bl, br, 1.0, 10.0).ok()?).ok()
}

fn random_candidate(p: &PreparedPoint, seed: u64, t: (f64, f64)) -> LindbladCandidate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = LindbladCandidate::zeros(&p.tables);
    if let Some(b) = &p.tables.left {
        c.gamma_left = random_psd(b.n_ops, t.0, &mut rng);
        c.hls_left = random_hermitian(b.d_block(), &mut rng);
    }
    if let Some(b) = &p.tables.right {
        c.gamma_right = random_psd(b.n_ops, t.1, &mut rng);
        c.hls_right = random_hermitian(b.d_block(), &mut rng);
    }
    c
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_is_hermitian_and_diagonalizes(
        n in 1usize..=5, nl in 0usize..=2, w0 in 0.2f64..3.0, eps in -0.5f64..0.5, g in -1.0f64..1.0,
    ) {
        let nl = nl.min(n);
        let chain = ChainSpec::from_geometry(nl, n - nl, 0, w0, eps, g).unwrap();
        let h = build_hamiltonian(&chain).unwrap();
        prop_assert!(max_abs(&(&h - h.adjoint())) <= 1e-12);
        let e = diagonalize(&h, DEFAULT_GAP_THRESHOLD).unwrap();
        let u = &e.vectors;
        let d = h.nrows();
        prop_assert!(frobenius(&(u.adjoint() * u - CMatrix::identity(d, d))) < 1e-10);
        let diag = CMatrix::from_diagonal(&e.energies.map(|x| Complex64::new(x, 0.0)));
        prop_assert!(frobenius(&(u.adjoint() * &h * u - diag)) < 1e-9 * frobenius(&h));
    }

    #[test]
    fn zero_bias_is_bitwise_unbiased(n in 1usize..=5, g in -1.0f64..1.0, w0 in 0.2f64..3.0) {
        let a = build_hamiltonian(&ChainSpec::from_geometry(1, n - 1, 0, w0, 0.0, g).unwrap()).unwrap();
        let b = build_hamiltonian(&ChainSpec::from_geometry(1, n - 1, 0, w0, -0.0, g).unwrap()).unwrap();
        prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }

    #[test]
    fn operator_basis_reconstructs_hermitian(n in 1usize..=3, seed in any::<u64>()) {
        let basis = operator_basis(n).unwrap();
        let d = 1 << n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_hermitian(d, &mut rng);
        let mut back = CMatrix::zeros(d, d);
        for f in &basis.elements {
            back += f * trace(&(f.adjoint() * &x));
        }
        prop_assert!(max_abs(&(back - x)) < 1e-10);
    }

    #[test]
    fn detailed_balance_and_finite_tables(beta in 0.1f64..100.0, g in 0.01f64..0.5, eps in 0.0f64..0.2) {
        let chain = ChainSpec::from_geometry(1, 1, 1, 1.0, eps, g).unwrap();
        let e = diagonalize(&build_hamiltonian(&chain).unwrap(), DEFAULT_GAP_THRESHOLD).unwrap();
        prop_assume!(!e.degenerate);
        let bath = BathSpec::new(1, beta, 1.0, 10.0);
        let t = redfield_coefficients(&e, &bath, &QuadratureConfig::default()).unwrap();
        prop_assert!(t.c.iter().chain(t.d.iter()).all(|z| z.re.is_finite() && z.im.is_finite()));
        for a in 0..e.dim() {
            for c in 0..e.dim() {
                let gap = e.energies[c] - e.energies[a];
                if gap > 0.0 {
                    let lhs = t.d[(a, c)].re;
                    let rhs = (beta * gap).exp() * t.c[(a, c)].re;
                    prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300), "{lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn principal_value_linear_and_odd(pole in 0.2f64..5.0, a in -3.0f64..3.0, k in 0.1f64..2.0) {
        let cfg = QuadratureConfig::default();
        let upper = 2.0 * pole;
        let f = |w: f64| (-k * w).exp();
        let h = |w: f64| w.sin();
        let pf = principal_value(f, pole, upper, &cfg).unwrap();
        let ph = principal_value(h, pole, upper, &cfg).unwrap();
        let mix = principal_value(|w| f(w) + a * h(w), pole, upper, &cfg).unwrap();
        prop_assert!((mix - (pf + a * ph)).abs() < 1e-9 * (1.0 + pf.abs() + ph.abs()));
        // even about the pole on [0, 2 pole] integrates to zero
        let even = principal_value(|w| ((w - pole) * k).cos(), pole, upper, &cfg).unwrap();
        prop_assert!(even.abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn population_matrix_agrees_with_direct_application(
        geom in geometry(), g in 0.01f64..0.3, bl in 0.3f64..5.0, br in 0.3f64..5.0, seed in any::<u64>(),
    ) {
        let Some(p) = prepared(geom, g, bl, br) else { return Ok(()) };
        let a = p.redfield.population_matrix().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = DVector::from_fn(p.tables.dim(), |_, _| rand::Rng::random_range(&mut rng, 0.0..1.0));
        let direct = p.redfield.apply_to_populations(&q).unwrap();
        let via_a = &a * &q;
        for k in 0..q.len() {
            prop_assert!((direct[(k, k)].re - via_a[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn table_structure(geom in geometry(), g in 0.01f64..0.3, bl in 0.3f64..5.0, br in 0.3f64..5.0) {
        let Some(p) = prepared(geom, g, bl, br) else { return Ok(()) };
        for b in p.tables.blocks() {
            for i in 0..b.n_ops {
                for j in 0..b.n_ops {
                    prop_assert!(trace(b.sandwich(i, j)).norm() < 1e-12);
                    prop_assert!(max_abs(&(b.sandwich(i, j).adjoint() - b.sandwich(j, i))) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn objectives_homogeneous_convex_and_diagonal_real(
        geom in geometry(), g in 0.01f64..0.3, bl in 0.3f64..5.0, br in 0.3f64..5.0,
        s1 in any::<u64>(), s2 in any::<u64>(), t in 0.1f64..5.0,
    ) {
        let Some(p) = prepared(geom, g, bl, br) else { return Ok(()) };
        let x = random_candidate(&p, s1, (1.0, 1.0));
        let y = random_candidate(&p, s2, (1.0, 1.0));
        let l2 = apply_candidate(&p.tables, &x).unwrap();
        for k in 0..l2.nrows() {
            prop_assert!(l2[(k, k)].im.abs() < 1e-10);
        }
        let tx = tau_pop(&p.tables, &x).unwrap();
        let ty = tau_pop(&p.tables, &y).unwrap();
        prop_assert!((tau_pop(&p.tables, &x.scaled(t)).unwrap() - t * tx).abs() < 1e-12 * (1.0 + t * tx));
        let mid = x.combine(0.5, &y, 0.5);
        prop_assert!(tau_pop(&p.tables, &mid).unwrap() <= 0.5 * (tx + ty) + 1e-12);
        let cx = tau_pop_coh(&p.tables, &x, &p.l2_rho0).unwrap();
        let cy = tau_pop_coh(&p.tables, &y, &p.l2_rho0).unwrap();
        prop_assert!(tau_pop_coh(&p.tables, &mid, &p.l2_rho0).unwrap() <= 0.5 * (cx + cy) + 1e-12);
    }

    #[test]
    fn rate_matrix_columns_bounded_by_alpha(
        geom in geometry(), g in 0.01f64..0.3, bl in 0.3f64..5.0, br in 0.3f64..5.0,
        seed in any::<u64>(), tl in 0.1f64..3.0, tr in 0.1f64..3.0,
    ) {
        let Some(p) = prepared(geom, g, bl, br) else { return Ok(()) };
        let cand = random_candidate(&p, seed, (tl, tr));
        let c = candidate_rate_matrix(&p.tables, &cand).unwrap();
        let dl = p.tables.left.as_ref().map_or(1, |b| b.d_block());
        let dr = p.tables.right.as_ref().map_or(1, |b| b.d_block());
        let bound = alpha(tl, tr, dl, dr);
        for a in 0..c.ncols() {
            let col: f64 = c.column(a).iter().map(|x| x.abs()).sum();
            prop_assert!(col <= bound * (1.0 + 1e-12), "{col} > {bound}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fixing_lamb_shift_never_lowers_the_optimum_and_solves_repeat(
        g in 0.01f64..0.3, bl in 0.3f64..5.0, br in 0.3f64..5.0,
    ) {
        let Some(p) = prepared((1, 1, 1), g, bl, br) else { return Ok(()) };
        let backend = ClarabelBackend::default();
        let free = SolveRequest::new(Objective::PopCoh);
        let mut fixed = free;
        fixed.fix_hls_zero = true;
        let a = solve_point(&p, &free, &backend).unwrap();
        let b = solve_point(&p, &fixed, &backend).unwrap();
        let again = solve_point(&p, &free, &backend).unwrap();
        let (ta, tb, tc) = (a.tau().unwrap(), b.tau().unwrap(), again.tau().unwrap());
        prop_assert!(tb >= ta - 1e-8, "{tb} < {ta}");
        prop_assert!((ta - tc).abs() <= 1e-9);
    }
}
