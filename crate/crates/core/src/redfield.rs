//! Second-order Redfield dissipator in the energy eigenbasis, the zeroth-order
//! steady-state populations and the second-order coherences.
//!
//! Everything here works on eigenbasis matrices: `X[(a, b)] = <E_a|X|E_b>`.

use std::collections::HashMap;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::bath::{redfield_coefficients, BathSpec, CoefficientTables, QuadratureConfig};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, RMatrix, I};
use crate::spin_chain::{site_operator, ChainSpec, EnergyEigenbasis, PauliKind};

/// Uniqueness gate on the singular spectrum of the population matrix.
pub const DEFAULT_UNIQUENESS_RATIO: f64 = 1e3;

/// Populations more negative than this are an error rather than round-off.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
struct SiteTerm {
    bath: BathSpec,
    /// sigma_minus in the eigenbasis.
    s: CMatrix,
    /// `S . C` and `S . D`, entrywise.
    sc: CMatrix,
    sd: CMatrix,
    table: usize,
}

#[derive(Debug, Clone)]
pub struct RedfieldDissipator {
    pub chain: ChainSpec,
    pub eigs: EnergyEigenbasis,
    terms: Vec<SiteTerm>,
    tables: Vec<CoefficientTables>,
}

fn bath_key(b: &BathSpec) -> [u64; 4] {
    [
        b.inv_temperature.to_bits(),
        b.chem_potential.to_bits(),
        b.coupling.to_bits(),
        b.cutoff.to_bits(),
    ]
}

impl RedfieldDissipator {
    /// One bath per attached site; the site set must match the chain geometry.
    pub fn new(
        chain: ChainSpec,
        eigs: EnergyEigenbasis,
        baths: &[BathSpec],
        quad: &QuadratureConfig,
    ) -> Result<Self> {
        chain.validate()?;
        if eigs.dim() != chain.dim() {
            return Err(Error::Dimension(format!(
                "eigenbasis has dimension {}, chain needs {}",
                eigs.dim(),
                chain.dim()
            )));
        }
        let mut sites: Vec<usize> = baths.iter().map(|b| b.site).collect();
        sites.sort_unstable();
        if sites != chain.attached_sites() {
            return Err(Error::InvalidBath(format!(
                "bath sites {sites:?} do not match the attached sites {:?}",
                chain.attached_sites()
            )));
        }

        let mut tables = Vec::new();
        let mut by_key: HashMap<[u64; 4], usize> = HashMap::new();
        let mut terms = Vec::with_capacity(baths.len());
        for bath in baths {
            let table = match by_key.get(&bath_key(bath)) {
                Some(&k) => k,
                None => {
                    tables.push(redfield_coefficients(&eigs, bath, quad)?);
                    by_key.insert(bath_key(bath), tables.len() - 1);
                    tables.len() - 1
                }
            };
            let s = eigs.to_eigenbasis(&site_operator(chain.n_qubits, bath.site, PauliKind::Minus)?);
            let sc = s.component_mul(&tables[table].c);
            let sd = s.component_mul(&tables[table].d);
            terms.push(SiteTerm {
                bath: *bath,
                s,
                sc,
                sd,
                table,
            });
        }
        Ok(Self {
            chain,
            eigs,
            terms,
            tables,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigs.dim()
    }

    pub fn baths(&self) -> impl Iterator<Item = &BathSpec> {
        self.terms.iter().map(|t| &t.bath)
    }

    /// Coefficient tables `(C, D)` of the bath at `site`.
    pub fn coefficients(&self, site: usize) -> Option<&CoefficientTables> {
        self.terms
            .iter()
            .find(|t| t.bath.site == site)
            .map(|t| &self.tables[t.table])
    }

    /// sigma_minus of `site` in the eigenbasis.
    pub fn sigma_minus(&self, site: usize) -> Option<&CMatrix> {
        self.terms.iter().find(|t| t.bath.site == site).map(|t| &t.s)
    }

    // sum_l [X (S.C), S^dag] + [S^dag, (S.D) X]
    fn half(&self, x: &CMatrix) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d, d);
        for t in &self.terms {
            let sdag = t.s.adjoint();
            let xsc = x * &t.sc;
            let sdx = &t.sd * x;
            out += &xsc * &sdag - &sdag * &xsc + &sdag * &sdx - &sdx * &sdag;
        }
        out
    }

    /// `L2(rho)` for any eigenbasis matrix `rho`.
    ///
    /// The Hermitian-conjugate half is taken as `T(rho^dag)^dag`, which keeps
    /// the map linear for non-Hermitian inputs.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let d = self.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::Dimension(format!(
                "density matrix is {}x{}, dissipator acts on {d}x{d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let t = self.half(rho);
        let t_dag = self.half(&rho.adjoint()).adjoint();
        Ok(-(t + t_dag))
    }

    /// `A[(k, m)] = <E_k| L2(|E_m><E_m|) |E_k>`, in closed form.
    pub fn population_matrix(&self) -> Result<RMatrix> {
        self.eigs.require_nondegenerate()?;
        let d = self.dim();
        let mut a = RMatrix::zeros(d, d);
        for t in &self.terms {
            let tab = &self.tables[t.table];
            for m in 0..d {
                for k in 0..d {
                    if k == m {
                        continue;
                    }
                    // m -> k through <m|S|k> (absorption) and <k|S|m> (emission)
                    let rate = 2.0
                        * (t.s[(m, k)].norm_sqr() * tab.c[(m, k)].re
                            + t.s[(k, m)].norm_sqr() * tab.d[(k, m)].re);
                    a[(k, m)] += rate;
                    a[(m, m)] -= rate;
                }
            }
        }
        Ok(a)
    }

    /// `L2(rho0)` for `rho0 = diag(p)`.
    pub fn apply_to_populations(&self, p: &DVector<f64>) -> Result<CMatrix> {
        let rho0 = CMatrix::from_diagonal(&p.map(|x| Complex64::new(x, 0.0)));
        self.apply(&rho0)
    }

    /// Off-diagonal second-order correction `rho2 = -i L2(rho0)_ab / (E_a - E_b)`.
    pub fn second_order_coherences(&self, p: &DVector<f64>) -> Result<CMatrix> {
        self.eigs.require_nondegenerate()?;
        let l2 = self.apply_to_populations(p)?;
        let e = &self.eigs.energies;
        let d = self.dim();
        Ok(CMatrix::from_fn(d, d, |a, b| {
            if a == b {
                Complex64::new(0.0, 0.0)
            } else {
                -I * l2[(a, b)] / (e[a] - e[b])
            }
        }))
    }

    /// Zeroth-order populations and second-order coherences.
    pub fn solve_ness(&self, method: NullspaceMethod) -> Result<NessSolution> {
        let a = self.population_matrix()?;
        let mut sol = solve_zeroth_ness(&a, method)?;
        sol.coherences2 = self.second_order_coherences(&sol.populations)?;
        Ok(sol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NullspaceMethod {
    /// Right singular vector of the smallest singular value.
    #[default]
    Svd,
    /// Least-squares solve of `A` stacked with the normalization row.
    NormalizedLeastSquares,
}

#[derive(Debug, Clone)]
pub struct NessSolution {
    pub populations: DVector<f64>,
    /// `||A p||_1`.
    pub residual: f64,
    /// Zero diagonal.
    pub coherences2: CMatrix,
    pub gibbs_distance: Option<f64>,
    /// Round-off negatives were clipped to zero.
    pub clipped: bool,
    /// Two smallest singular values of `A`.
    pub singular_values: (f64, f64),
}

impl NessSolution {
    /// Fills `gibbs_distance` with the sup-norm distance to the Gibbs weights.
    pub fn with_gibbs_distance(mut self, eigs: &EnergyEigenbasis, beta: f64) -> Self {
        let g = gibbs_populations(&eigs.energies, beta);
        self.gibbs_distance = Some((&self.populations - g).amax());
        self
    }
}

fn two_smallest(values: &DVector<f64>) -> (usize, f64, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let second = idx.get(1).map_or(f64::INFINITY, |&k| values[k]);
    (idx[0], values[idx[0]], second)
}

pub fn solve_zeroth_ness(a: &RMatrix, method: NullspaceMethod) -> Result<NessSolution> {
    let d = a.nrows();
    if d == 0 || a.ncols() != d {
        return Err(Error::Dimension(format!("population matrix is {}x{}", a.nrows(), a.ncols())));
    }
    if d == 1 {
        return Ok(NessSolution {
            populations: DVector::from_element(1, 1.0),
            residual: a[(0, 0)].abs(),
            coherences2: CMatrix::zeros(1, 1),
            gibbs_distance: None,
            clipped: false,
            singular_values: (a[(0, 0)].abs(), f64::INFINITY),
        });
    }
    let svd = a.clone().svd(true, true);
    let (k, smallest, second) = two_smallest(&svd.singular_values);
    let largest = svd.singular_values.max();
    // a second null direction at round-off level also counts as non-unique
    let floor = f64::EPSILON * d as f64 * largest;
    if second < DEFAULT_UNIQUENESS_RATIO * smallest || second <= floor {
        return Err(Error::NonUniqueSteadyState { smallest, second });
    }
    let raw: DVector<f64> = match method {
        NullspaceMethod::Svd => {
            let v_t = svd.v_t.as_ref().expect("requested V^T");
            v_t.row(k).transpose()
        }
        NullspaceMethod::NormalizedLeastSquares => {
            let mut stacked = RMatrix::zeros(d + 1, d);
            stacked.rows_mut(0, d).copy_from(a);
            stacked.row_mut(d).fill(1.0);
            let mut rhs = DVector::zeros(d + 1);
            rhs[d] = 1.0;
            stacked
                .svd(true, true)
                .solve(&rhs, 0.0)
                .map_err(|e| Error::InvalidSteadyState(e.to_string()))?
        }
    };
    let (populations, clipped) = normalize_populations(raw)?;
    let residual = (a * &populations).lp_norm(1);
    Ok(NessSolution {
        populations,
        residual,
        coherences2: CMatrix::zeros(d, d),
        gibbs_distance: None,
        clipped,
        singular_values: (smallest, second),
    })
}

/// Sign-fixes a null vector, normalizes it to unit sum and clips round-off
/// negatives.
pub fn normalize_populations(mut v: DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let sum = v.sum();
    if !(sum.abs() > 0.0) || !sum.is_finite() {
        return Err(Error::InvalidSteadyState(format!("null vector has sum {sum}")));
    }
    v /= sum;
    let worst = v.min();
    if worst < -NEGATIVITY_TOLERANCE {
        return Err(Error::InvalidSteadyState(format!(
            "population {worst:e} is below -{NEGATIVITY_TOLERANCE:e}"
        )));
    }
    let clipped = worst < 0.0;
    if clipped {
        v.apply(|x| *x = x.max(0.0));
        let s = v.sum();
        v /= s;
    }
    Ok((v, clipped))
}

/// `exp(-beta E) / Z`, shifted by the ground energy for stability.
pub fn gibbs_populations(energies: &DVector<f64>, beta: f64) -> DVector<f64> {
    let e0 = energies.min();
    let w = energies.map(|e| (-beta * (e - e0)).exp());
    let z = w.sum();
    w / z
}

/// Whether every bath shares one inverse temperature (and zero chemical
/// potential), in which case the populations must be thermal.
pub fn common_inverse_temperature(baths: &[BathSpec]) -> Option<f64> {
    let first = baths.first()?;
    baths
        .iter()
        .all(|b| b.inv_temperature == first.inv_temperature && b.chem_potential == 0.0)
        .then_some(first.inv_temperature)
}

/// Builds `diag(p)` as a complex eigenbasis matrix.
pub fn diagonal_state(p: &DVector<f64>) -> CMatrix {
    CMatrix::from_diagonal(&p.map(|x| Complex64::new(x, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{jn_plus_product, jn_product};
    use crate::linalg::{frobenius, hermiticity_residual, random_hermitian, trace};
    use crate::spin_chain::{build_hamiltonian, diagonalize, DEFAULT_GAP_THRESHOLD};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dissipator(chain: ChainSpec, beta_l: f64, beta_r: f64) -> RedfieldDissipator {
        let eigs = diagonalize(&build_hamiltonian(&chain).unwrap(), DEFAULT_GAP_THRESHOLD).unwrap();
        let baths: Vec<BathSpec> = chain
            .attached_sites()
            .into_iter()
            .map(|s| {
                let beta = if s <= chain.n_left { beta_l } else { beta_r };
                BathSpec::new(s, beta, 1.0, 10.0)
            })
            .collect();
        RedfieldDissipator::new(chain, eigs, &baths, &QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn single_qubit_rates() {
        let chain = ChainSpec::new(1, 1.0, 0.0, 0.0, 1, 0).unwrap();
        let dis = dissipator(chain, 0.7, 0.7);
        let a = dis.population_matrix().unwrap();
        let b = BathSpec::new(1, 0.7, 1.0, 10.0);
        // ground (index 0) is spin down; the gap is 2
        let up = jn_product(2.0, &b);
        let down = jn_plus_product(2.0, &b);
        assert_relative_eq!(a[(0, 0)], -up, max_relative = 1e-12);
        assert_relative_eq!(a[(1, 0)], up, max_relative = 1e-12);
        assert_relative_eq!(a[(0, 1)], down, max_relative = 1e-12);
        assert_relative_eq!(a[(1, 1)], -down, max_relative = 1e-12);

        let sol = solve_zeroth_ness(&a, NullspaceMethod::Svd).unwrap();
        let ground = 1.0 / (1.0 + (-2.0 * 0.7f64).exp());
        assert_relative_eq!(sol.populations[0], ground, max_relative = 1e-12);
    }

    #[test]
    fn closed_form_matrix_matches_direct_application() {
        let chain = ChainSpec::new(3, 1.0, 0.02, 0.1, 1, 1).unwrap();
        let dis = dissipator(chain, 0.5, 2.0);
        let a = dis.population_matrix().unwrap();
        for m in 0..dis.dim() {
            let mut p = DVector::zeros(dis.dim());
            p[m] = 1.0;
            let out = dis.apply_to_populations(&p).unwrap();
            for k in 0..dis.dim() {
                assert!((out[(k, k)].re - a[(k, m)]).abs() < 1e-12);
            }
        }
        for j in 0..dis.dim() {
            assert!(a.column(j).sum().abs() < 1e-10);
        }
    }

    #[test]
    fn trace_and_hermiticity_preserved() {
        let chain = ChainSpec::new(2, 1.0, 0.0, 0.3, 1, 1).unwrap();
        let dis = dissipator(chain, 1.0, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rho = random_hermitian(4, &mut rng);
            let out = dis.apply(&rho).unwrap();
            assert!(trace(&out).norm() < 1e-10 * frobenius(&rho).max(1.0));
            assert!(hermiticity_residual(&out) < 1e-10);
        }
    }

    #[test]
    fn equilibrium_is_thermal() {
        let chain = ChainSpec::new(3, 1.0, 0.0, 0.05, 1, 1).unwrap();
        let dis = dissipator(chain, 1.0, 1.0);
        let sol = dis.solve_ness(NullspaceMethod::Svd).unwrap().with_gibbs_distance(&dis.eigs, 1.0);
        assert!(sol.gibbs_distance.unwrap() < 1e-8);
        let lsq = solve_zeroth_ness(&dis.population_matrix().unwrap(), NullspaceMethod::NormalizedLeastSquares).unwrap();
        assert!((&lsq.populations - &sol.populations).amax() < 1e-10);
    }

    #[test]
    fn coherences_are_hermitian_with_zero_diagonal() {
        let chain = ChainSpec::new(3, 1.0, 0.01, 0.2, 1, 1).unwrap();
        let dis = dissipator(chain, 0.5, 4.0);
        let sol = dis.solve_ness(NullspaceMethod::Svd).unwrap();
        assert!(hermiticity_residual(&sol.coherences2) < 1e-12);
        for k in 0..dis.dim() {
            assert_eq!(sol.coherences2[(k, k)], Complex64::new(0.0, 0.0));
        }
        assert!(sol.coherences2.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }

    #[test]
    fn single_qubit_has_no_coherences() {
        let chain = ChainSpec::new(1, 1.0, 0.0, 0.0, 1, 0).unwrap();
        let dis = dissipator(chain, 2.0, 2.0);
        let sol = dis.solve_ness(NullspaceMethod::Svd).unwrap();
        assert!(sol.coherences2.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn non_unique_and_negative_inputs_rejected() {
        let zero = RMatrix::zeros(3, 3);
        assert!(matches!(
            solve_zeroth_ness(&zero, NullspaceMethod::Svd),
            Err(Error::NonUniqueSteadyState { .. })
        ));
        assert!(normalize_populations(DVector::from_vec(vec![1.0, -0.5, 0.2])).is_err());
        let (p, clipped) = normalize_populations(DVector::from_vec(vec![-1e-12, 0.5, 0.5])).unwrap();
        assert!(clipped);
        assert_eq!(p[0], 0.0);
        assert_relative_eq!(p.sum(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn mismatched_bath_sites_rejected() {
        let chain = ChainSpec::new(2, 1.0, 0.0, 0.3, 1, 1).unwrap();
        let eigs = diagonalize(&build_hamiltonian(&chain).unwrap(), DEFAULT_GAP_THRESHOLD).unwrap();
        let baths = [BathSpec::new(1, 1.0, 1.0, 10.0)];
        assert!(RedfieldDissipator::new(chain, eigs, &baths, &QuadratureConfig::default()).is_err());
    }
}
