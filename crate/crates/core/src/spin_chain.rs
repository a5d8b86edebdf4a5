//! Isotropic XXZ qubit chain: Hamiltonian, Pauli site operators, energy
//! eigenbasis and the local operator basis used by the Lindblad family.
//!
//! Site 1 is the most significant tensor factor, and the computational state
//! `|0>` is spin up (`sigma_z = +1`).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigh, hermiticity_residual, identity, kron_all, re, CMatrix};

pub const DEFAULT_MAX_QUBITS: usize = 8;

/// Degeneracy threshold in units of the on-site energy.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_qubits: usize,
    pub onsite_energy: f64,
    pub energy_bias: f64,
    pub coupling: f64,
    pub n_left: usize,
    pub n_right: usize,
}

impl ChainSpec {
    pub fn new(
        n_qubits: usize,
        onsite_energy: f64,
        energy_bias: f64,
        coupling: f64,
        n_left: usize,
        n_right: usize,
    ) -> Result<Self> {
        let spec = ChainSpec {
            n_qubits,
            onsite_energy,
            energy_bias,
            coupling,
            n_left,
            n_right,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Chain built from a left/middle/right geometry.
    pub fn from_geometry(
        n_left: usize,
        n_middle: usize,
        n_right: usize,
        onsite_energy: f64,
        energy_bias: f64,
        coupling: f64,
    ) -> Result<Self> {
        Self::new(
            n_left + n_middle + n_right,
            onsite_energy,
            energy_bias,
            coupling,
            n_left,
            n_right,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidChain("at least one qubit is required".into()));
        }
        if self.n_left + self.n_right > self.n_qubits {
            return Err(Error::InvalidChain(format!(
                "N_L + N_R = {} exceeds N = {}",
                self.n_left + self.n_right,
                self.n_qubits
            )));
        }
        for (name, v) in [
            ("onsite_energy", self.onsite_energy),
            ("energy_bias", self.energy_bias),
            ("coupling", self.coupling),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidChain(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    pub fn n_middle(&self) -> usize {
        self.n_qubits - self.n_left - self.n_right
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn d_left(&self) -> usize {
        1 << self.n_left
    }

    pub fn d_middle(&self) -> usize {
        1 << self.n_middle()
    }

    pub fn d_right(&self) -> usize {
        1 << self.n_right
    }

    /// 1-based indices of the bath-attached sites, left block first.
    pub fn attached_sites(&self) -> Vec<usize> {
        let n = self.n_qubits;
        (1..=self.n_left)
            .chain(n - self.n_right + 1..=n)
            .collect()
    }

    /// On-site field of site `site` (1-based): the first `floor(N/2)` sites
    /// carry `omega0`, the rest `omega0 * (1 + eps0)`.
    pub fn onsite_energy_at(&self, site: usize) -> f64 {
        if site <= self.n_qubits / 2 {
            self.onsite_energy
        } else {
            self.onsite_energy * (1.0 + self.energy_bias)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliKind {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

pub fn pauli(kind: PauliKind) -> CMatrix {
    let z = re(0.0);
    let one = re(1.0);
    match kind {
        PauliKind::X => CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        PauliKind::Y => CMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        PauliKind::Z => CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        PauliKind::Plus => CMatrix::from_row_slice(2, 2, &[z, one, z, z]),
        PauliKind::Minus => CMatrix::from_row_slice(2, 2, &[z, z, one, z]),
    }
}

/// `I x ... x sigma_kind x ... x I` with the Pauli factor on site `site` (1-based).
pub fn site_operator(n_qubits: usize, site: usize, kind: PauliKind) -> Result<CMatrix> {
    if site == 0 || site > n_qubits {
        return Err(Error::SiteOutOfRange { site, n_qubits });
    }
    let id2 = identity(2);
    let sigma = pauli(kind);
    let factors: Vec<&CMatrix> = (1..=n_qubits)
        .map(|l| if l == site { &sigma } else { &id2 })
        .collect();
    Ok(kron_all(factors))
}

pub fn build_hamiltonian(spec: &ChainSpec) -> Result<CMatrix> {
    build_hamiltonian_with_limit(spec, DEFAULT_MAX_QUBITS)
}

pub fn build_hamiltonian_with_limit(spec: &ChainSpec, max_qubits: usize) -> Result<CMatrix> {
    spec.validate()?;
    let n = spec.n_qubits;
    if n > max_qubits {
        return Err(Error::SizeLimit {
            n_qubits: n,
            max_qubits,
        });
    }
    let d = spec.dim();
    let mut h = CMatrix::zeros(d, d);
    for site in 1..=n {
        h += site_operator(n, site, PauliKind::Z)?.scale(spec.onsite_energy_at(site));
    }
    if spec.coupling != 0.0 {
        for site in 1..n {
            for kind in [PauliKind::X, PauliKind::Y, PauliKind::Z] {
                let bond = site_operator(n, site, kind)? * site_operator(n, site + 1, kind)?;
                h += bond.scale(spec.coupling);
            }
        }
    }
    Ok(h)
}

#[derive(Debug, Clone)]
pub struct EnergyEigenbasis {
    /// Ascending eigenvalues.
    pub energies: DVector<f64>,
    /// Columns are the eigenvectors `|E_a>` in the computational basis.
    pub vectors: CMatrix,
    pub min_gap: f64,
    pub degenerate: bool,
    pub gap_threshold: f64,
}

impl EnergyEigenbasis {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `U^dag op U`.
    pub fn to_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * op * &self.vectors
    }

    /// `U op U^dag`.
    pub fn from_eigenbasis(&self, op: &CMatrix) -> CMatrix {
        &self.vectors * op * self.vectors.adjoint()
    }

    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.degenerate {
            Err(Error::Degenerate {
                gap: self.min_gap,
                threshold: self.gap_threshold,
            })
        } else {
            Ok(())
        }
    }

    /// Projector `|E_a><E_a|` in the computational basis.
    pub fn projector(&self, a: usize) -> CMatrix {
        let v = self.vectors.column(a);
        &v * v.adjoint()
    }
}

pub fn diagonalize(h: &CMatrix, gap_threshold: f64) -> Result<EnergyEigenbasis> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "Hamiltonian must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let herm = hermiticity_residual(h);
    if herm > 1e-10 {
        return Err(Error::NotHermitian(herm));
    }
    let (ev, vectors) = hermitian_eigh(h, true).ok_or_else(|| Error::Eigen("zheevd did not converge".into()))?;
    let energies = DVector::from_vec(ev);
    let min_gap = energies
        .as_slice()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Ok(EnergyEigenbasis {
        energies,
        vectors,
        min_gap,
        degenerate: min_gap < gap_threshold,
        gap_threshold,
    })
}

/// Hilbert-Schmidt orthonormal operator basis on a block of qubits.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    pub n_qubits_block: usize,
    pub elements: Vec<CMatrix>,
}

impl OperatorBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of `I / sqrt(2^n)`, always the last element.
    pub fn identity_index(&self) -> usize {
        self.elements.len() - 1
    }

    pub fn block_dim(&self) -> usize {
        1 << self.n_qubits_block
    }
}

/// Single-qubit basis `{-sigma_z/sqrt2, sigma_+, sigma_-, I/sqrt2}`.
pub fn single_qubit_basis() -> [CMatrix; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        pauli(PauliKind::Z).scale(-s),
        pauli(PauliKind::Plus),
        pauli(PauliKind::Minus),
        identity(2).scale(s),
    ]
}

/// All `4^n` tensor products of the single-qubit basis in lexicographic
/// order; the all-identity product lands on the last index.
pub fn operator_basis(n: usize) -> Result<OperatorBasis> {
    if n == 0 {
        return Err(Error::InvalidChain("operator basis needs n >= 1".into()));
    }
    if n > DEFAULT_MAX_QUBITS {
        return Err(Error::SizeLimit {
            n_qubits: n,
            max_qubits: DEFAULT_MAX_QUBITS,
        });
    }
    let single = single_qubit_basis();
    let mut elements = Vec::with_capacity(1 << (2 * n));
    for idx in 0..(1usize << (2 * n)) {
        let factors: Vec<&CMatrix> = (0..n)
            .map(|q| &single[(idx >> (2 * (n - 1 - q))) & 3])
            .collect();
        elements.push(kron_all(factors));
    }
    Ok(OperatorBasis {
        n_qubits_block: n,
        elements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, frobenius, random_hermitian, trace};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(n: usize, w: f64, eps: f64, g: f64) -> ChainSpec {
        ChainSpec::new(n, w, eps, g, 1.min(n), 0).unwrap()
    }

    #[test]
    fn single_qubit_hamiltonian_is_sigma_z() {
        let h = build_hamiltonian(&chain(1, 1.0, 0.0, 0.3)).unwrap();
        assert_eq!(h, pauli(PauliKind::Z));
    }

    #[test]
    fn two_spin_spectrum_and_degeneracy() {
        let h = build_hamiltonian(&chain(2, 1.0, 0.0, 0.5)).unwrap();
        let eigs = diagonalize(&h, DEFAULT_GAP_THRESHOLD).unwrap();
        let expected = [-1.5, -1.5, 0.5, 2.5];
        for (e, x) in eigs.energies.iter().zip(expected) {
            assert_abs_diff_eq!(*e, x, epsilon = 1e-12);
        }
        assert!(eigs.degenerate);
        assert!(eigs.require_nondegenerate().is_err());
    }

    #[test]
    fn diagonalize_pauli_z() {
        let eigs = diagonalize(&pauli(PauliKind::Z), DEFAULT_GAP_THRESHOLD).unwrap();
        assert_abs_diff_eq!(eigs.energies[0], -1.0);
        assert_abs_diff_eq!(eigs.energies[1], 1.0);
        // ground state is spin down, i.e. |1>
        assert_abs_diff_eq!(eigs.vectors[(1, 0)].norm(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eigs.vectors[(0, 1)].norm(), 1.0, epsilon = 1e-14);
        assert!(!eigs.degenerate);
    }

    #[test]
    fn diagonalize_rejects_non_hermitian() {
        let mut m = pauli(PauliKind::X);
        m[(0, 1)] = re(2.0);
        assert!(matches!(diagonalize(&m, 1e-9), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn size_limit_is_enforced() {
        let spec = ChainSpec::new(9, 1.0, 0.0, 0.1, 1, 1).unwrap();
        assert!(matches!(
            build_hamiltonian(&spec),
            Err(Error::SizeLimit { n_qubits: 9, .. })
        ));
        assert!(build_hamiltonian_with_limit(&chain(3, 1.0, 0.0, 0.1), 2).is_err());
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(ChainSpec::new(2, 1.0, 0.0, 0.1, 2, 1).is_err());
        assert!(ChainSpec::new(0, 1.0, 0.0, 0.1, 0, 0).is_err());
    }

    #[test]
    fn site_operators() {
        assert_eq!(site_operator(1, 1, PauliKind::Z).unwrap(), pauli(PauliKind::Z));
        let plus2 = site_operator(2, 2, PauliKind::Plus).unwrap();
        assert_eq!(plus2, identity(2).kronecker(&pauli(PauliKind::Plus)));
        let p = site_operator(3, 1, PauliKind::Plus).unwrap();
        let m = site_operator(3, 1, PauliKind::Minus).unwrap();
        let z = site_operator(3, 1, PauliKind::Z).unwrap();
        assert_abs_diff_eq!(frobenius(&(commutator(&p, &m) - z)), 0.0);
        assert!(site_operator(3, 0, PauliKind::X).is_err());
        assert!(site_operator(3, 4, PauliKind::X).is_err());
    }

    #[test]
    fn sigma_plus_minus_from_xy() {
        let x = pauli(PauliKind::X);
        let y = pauli(PauliKind::Y);
        let plus = (&x + &y * crate::linalg::I).scale(0.5);
        let minus = (&x - &y * crate::linalg::I).scale(0.5);
        assert_eq!(plus, pauli(PauliKind::Plus));
        assert_eq!(minus, pauli(PauliKind::Minus));
    }

    #[test]
    fn single_qubit_operator_basis() {
        let basis = operator_basis(1).unwrap();
        let expected = single_qubit_basis();
        assert_eq!(basis.len(), 4);
        for (a, b) in basis.elements.iter().zip(expected.iter()) {
            assert_eq!(a, b);
        }
        assert_eq!(basis.identity_index(), 3);
        for i in 0..4 {
            for j in 0..4 {
                let ip = trace(&(basis.elements[i].adjoint() * &basis.elements[j]));
                assert_abs_diff_eq!(ip.re, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
                assert_abs_diff_eq!(ip.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn two_qubit_gram_matrix_is_identity() {
        let basis = operator_basis(2).unwrap();
        assert_eq!(basis.len(), 16);
        let last = &basis.elements[basis.identity_index()];
        assert_abs_diff_eq!(frobenius(&(last - identity(4).scale(0.5))), 0.0, epsilon = 1e-15);
        for (i, a) in basis.elements.iter().enumerate() {
            for (j, b) in basis.elements.iter().enumerate() {
                let ip = trace(&(a.adjoint() * b));
                let target = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!((ip - re(target)).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn basis_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=2 {
            let basis = operator_basis(n).unwrap();
            let m = random_hermitian(1 << n, &mut rng);
            let mut rebuilt = CMatrix::zeros(1 << n, 1 << n);
            for f in &basis.elements {
                rebuilt += f * trace(&(f.adjoint() * &m));
            }
            assert!(frobenius(&(rebuilt - &m)) < 1e-10);
        }
    }

    #[test]
    fn bias_assignment_uses_floor_half() {
        let spec = ChainSpec::new(5, 1.0, 0.1, 0.0, 1, 1).unwrap();
        let fields: Vec<f64> = (1..=5).map(|l| spec.onsite_energy_at(l)).collect();
        assert_eq!(fields, vec![1.0, 1.0, 1.1, 1.1, 1.1]);
        let unbiased = ChainSpec { energy_bias: 0.0, ..spec };
        let h0 = build_hamiltonian(&unbiased).unwrap();
        let reference = ChainSpec { energy_bias: 0.0, ..spec };
        assert_eq!(h0, build_hamiltonian(&reference).unwrap());
        // eps0 = 0 gives uniform omega0 on every site
        assert!((1..=5).all(|l| unbiased.onsite_energy_at(l) == 1.0));
    }

    #[test]
    fn attached_sites_follow_geometry() {
        let spec = ChainSpec::from_geometry(2, 2, 2, 1.0, 0.0, 0.01).unwrap();
        assert_eq!(spec.attached_sites(), vec![1, 2, 5, 6]);
        assert_eq!(spec.d_middle(), 4);
        let all_left = ChainSpec::from_geometry(3, 0, 0, 1.0, 0.0, 0.01).unwrap();
        assert_eq!(all_left.attached_sites(), vec![1, 2, 3]);
    }
}
