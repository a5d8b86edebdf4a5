//! Ohmic bosonic baths and the Redfield rate/shift coefficients.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::quadrature::{integrate, QuadResult};
use crate::spin_chain::EnergyEigenbasis;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// 1-based qubit index the bath couples to through sigma_minus.
    pub site: usize,
    pub inv_temperature: f64,
    #[serde(default)]
    pub chem_potential: f64,
    pub coupling: f64,
    pub cutoff: f64,
}

impl BathSpec {
    pub fn new(site: usize, inv_temperature: f64, coupling: f64, cutoff: f64) -> Self {
        Self {
            site,
            inv_temperature,
            chem_potential: 0.0,
            coupling,
            cutoff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidBath(format!("site {}: {what}", self.site)));
        if !(self.inv_temperature.is_finite() && self.inv_temperature > 0.0) {
            return bad("inverse temperature must be positive and finite");
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return bad("coupling must be positive and finite");
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return bad("cutoff frequency must be positive and finite");
        }
        if !self.chem_potential.is_finite() || self.chem_potential > 0.0 {
            return bad("chemical potential must be finite and <= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Integration is truncated at this multiple of the cutoff frequency.
    pub upper_cutoff_multiple: f64,
    /// Adaptive panel budget per integral.
    pub panels: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            upper_cutoff_multiple: 6.0,
            panels: 500,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.upper_cutoff_multiple >= 3.0) {
            return Err(Error::InvalidQuadrature(format!(
                "upper_cutoff_multiple must be >= 3, got {}",
                self.upper_cutoff_multiple
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidQuadrature(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.panels == 0 {
            return Err(Error::InvalidQuadrature("panel budget must be nonzero".into()));
        }
        Ok(())
    }
}

/// `gamma * w * exp(-(w/wc)^2)` for `w > 0`, zero otherwise.
pub fn spectral_density(omega: f64, spec: &BathSpec) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    let x = omega / spec.cutoff;
    spec.coupling * omega * (-x * x).exp()
}

pub fn bose_occupation(omega: f64, spec: &BathSpec) -> Result<f64> {
    let x = spec.inv_temperature * (omega - spec.chem_potential);
    if x == 0.0 {
        return Err(Error::BosePole(omega));
    }
    Ok(1.0 / x.exp_m1())
}

/// `J(w) n(w)`, with the removable point at `w = 0` replaced by its limit.
pub fn jn_product(omega: f64, spec: &BathSpec) -> f64 {
    if omega < 0.0 {
        return 0.0;
    }
    if omega == 0.0 {
        return zero_frequency_limit(spec);
    }
    let x = spec.inv_temperature * (omega - spec.chem_potential);
    spectral_density(omega, spec) / x.exp_m1()
}

/// `exp(beta (w - mu)) J(w) n(w)`, evaluated as `J / (1 - exp(-x))`.
pub fn jn_plus_product(omega: f64, spec: &BathSpec) -> f64 {
    if omega < 0.0 {
        return 0.0;
    }
    if omega == 0.0 {
        return zero_frequency_limit(spec);
    }
    let x = spec.inv_temperature * (omega - spec.chem_potential);
    spectral_density(omega, spec) / -(-x).exp_m1()
}

fn zero_frequency_limit(spec: &BathSpec) -> f64 {
    if spec.chem_potential == 0.0 {
        spec.coupling / spec.inv_temperature
    } else {
        0.0
    }
}

/// Principal value of `int_0^upper f(w) / (w - pole) dw`.
///
/// For an interior pole the integrand is regularised by subtracting `f(pole)`
/// on both sides, which leaves a smooth integrand plus a closed-form log.
pub fn principal_value<F: Fn(f64) -> f64 + Sync>(
    f: F,
    pole: f64,
    upper: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let fail = |r: QuadResult, requested: f64| Error::Quadrature {
        achieved: r.abs_error,
        requested,
        context: String::new(),
    };
    let abs_floor = 1e-300;
    if pole <= 0.0 || pole >= upper {
        let g = |w: f64| f(w) / (w - pole);
        return integrate(g, 0.0, upper, abs_floor, cfg.rel_tol, cfg.panels)
            .map(|r| r.value)
            .map_err(|r| fail(r, cfg.rel_tol * r.value.abs()));
    }
    let f_pole = f(pole);
    let g = |w: f64| {
        let dw = w - pole;
        if dw == 0.0 {
            return 0.0;
        }
        (f(w) - f_pole) / dw
    };
    let log_term = f_pole * ((upper - pole) / pole).ln();
    // The smooth part is small next to the log term when f(pole) dominates, so
    // the absolute target is tied to the scale of both pieces.
    let scale = log_term.abs().max(f_pole.abs());
    let abs_tol = (cfg.rel_tol * scale).max(abs_floor);
    let budget = cfg.panels.div_ceil(2).max(1);
    let left = integrate(g, 0.0, pole, abs_tol / 2.0, cfg.rel_tol, budget);
    let right = integrate(g, pole, upper, abs_tol / 2.0, cfg.rel_tol, budget);
    match (left, right) {
        (Ok(l), Ok(r)) => Ok(l.value + r.value + log_term),
        (Err(l), Ok(r)) | (Ok(r), Err(l)) => {
            let requested = abs_tol.max(cfg.rel_tol * (l.value + r.value + log_term).abs());
            if l.abs_error + r.abs_error <= requested {
                Ok(l.value + r.value + log_term)
            } else {
                Err(fail(QuadResult { abs_error: l.abs_error + r.abs_error, ..l }, requested))
            }
        }
        (Err(l), Err(r)) => Err(fail(
            QuadResult {
                abs_error: l.abs_error + r.abs_error,
                ..l
            },
            abs_tol,
        )),
    }
}

/// Principal-value integral over the bath frequency window `[0, K wc]`.
pub fn principal_value_halfline<F: Fn(f64) -> f64 + Sync>(
    f: F,
    pole: f64,
    cfg: &QuadratureConfig,
    spec: &BathSpec,
) -> Result<f64> {
    principal_value(f, pole, cfg.upper_cutoff_multiple * spec.cutoff, cfg)
}

/// Coefficient tables for one bath, indexed `[(alpha, gamma)]` with gap
/// `E_gamma - E_alpha`.
#[derive(Debug, Clone)]
pub struct CoefficientTables {
    pub c: CMatrix,
    pub d: CMatrix,
}

/// Real part `J n / 2` (resp. `J (n+1) / 2`) at the gap and minus the
/// principal-value shift as imaginary part.
///
/// A zero gap takes the limit value for the real part and a zero shift: the
/// principal value diverges logarithmically there, and such pairs never carry
/// a nonzero sigma_minus matrix element for a magnetization-conserving chain.
pub fn coefficient_pair(gap: f64, spec: &BathSpec, cfg: &QuadratureConfig) -> Result<(Complex64, Complex64)> {
    if gap == 0.0 {
        let r = 0.5 * zero_frequency_limit(spec);
        return Ok((Complex64::new(r, 0.0), Complex64::new(r, 0.0)));
    }
    let re_c = 0.5 * jn_product(gap, spec);
    let re_d = 0.5 * jn_plus_product(gap, spec);
    let im_c = -principal_value_halfline(|w| jn_product(w, spec), gap, cfg, spec)?;
    let im_d = -principal_value_halfline(|w| jn_plus_product(w, spec), gap, cfg, spec)?;
    Ok((Complex64::new(re_c, im_c), Complex64::new(re_d, im_d)))
}

pub fn redfield_coefficients(
    eigs: &EnergyEigenbasis,
    spec: &BathSpec,
    cfg: &QuadratureConfig,
) -> Result<CoefficientTables> {
    spec.validate()?;
    cfg.validate()?;
    let d = eigs.dim();
    let e = &eigs.energies;
    let entries: Vec<(Complex64, Complex64)> = (0..d * d)
        .into_par_iter()
        .map(|idx| {
            let (a, g) = (idx / d, idx % d);
            coefficient_pair(e[g] - e[a], spec, cfg).map_err(|err| annotate(err, spec.site, a, g))
        })
        .collect::<Result<_>>()?;
    let c = CMatrix::from_fn(d, d, |a, g| entries[a * d + g].0);
    let dd = CMatrix::from_fn(d, d, |a, g| entries[a * d + g].1);
    Ok(CoefficientTables { c, d: dd })
}

fn annotate(err: Error, site: usize, alpha: usize, gamma: usize) -> Error {
    match err {
        Error::Quadrature {
            achieved, requested, ..
        } => Error::Quadrature {
            achieved,
            requested,
            context: format!(" for bath at site {site}, (alpha, gamma) = ({alpha}, {gamma})"),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bath(beta: f64) -> BathSpec {
        BathSpec::new(1, beta, 1.0, 10.0)
    }

    #[test]
    fn spectral_density_values() {
        let b = bath(1.0);
        assert_eq!(spectral_density(-1.0, &b), 0.0);
        assert_eq!(spectral_density(0.0, &b), 0.0);
        assert_relative_eq!(spectral_density(10.0, &b), 10.0 * (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn bose_values_and_pole() {
        let b = bath(1.0);
        assert_relative_eq!(bose_occupation(2f64.ln(), &b).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(bose_occupation(1.0, &b).unwrap(), 1.0 / (1f64.exp() - 1.0), max_relative = 1e-14);
        assert_eq!(bose_occupation(1e6, &b).unwrap(), 0.0);
        assert!(matches!(bose_occupation(0.0, &b), Err(Error::BosePole(_))));
    }

    #[test]
    fn products_limits_and_difference() {
        let b = bath(2.0);
        assert_eq!(jn_product(0.0, &b), 0.5);
        assert_eq!(jn_plus_product(0.0, &b), 0.5);
        assert_relative_eq!(jn_product(1e-9, &b), 0.5, max_relative = 1e-8);
        assert_relative_eq!(jn_plus_product(1e-9, &b), 0.5, max_relative = 1e-8);
        for w in [0.01, 0.3, 2.0, 17.0] {
            let diff = jn_plus_product(w, &b) - jn_product(w, &b);
            assert_relative_eq!(diff, spectral_density(w, &b), max_relative = 1e-12);
        }
        assert_eq!(jn_product(-0.5, &b), 0.0);
    }

    #[test]
    fn negative_chemical_potential_has_zero_limit() {
        let mut b = bath(1.0);
        b.chem_potential = -0.5;
        assert_eq!(jn_product(0.0, &b), 0.0);
        b.chem_potential = 0.5;
        assert!(b.validate().is_err());
    }

    #[test]
    fn principal_value_closed_forms() {
        let cfg = QuadratureConfig::default();
        let v = principal_value(|_| 1.0, 5.0, 10.0, &cfg).unwrap();
        assert!(v.abs() < 1e-13);
        let e = std::f64::consts::E;
        let v = principal_value(|_| 1.0, 1.0, 1.0 + e, &cfg).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-13);
        let v = principal_value(|w| w, 2.0, 10.0, &cfg).unwrap();
        assert_relative_eq!(v, 10.0 + 2.0 * 4f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn principal_value_outside_window() {
        let cfg = QuadratureConfig::default();
        // int_0^1 1/(w+1) = ln 2 ; int_0^1 1/(w-3) = ln(2/3)
        assert_relative_eq!(principal_value(|_| 1.0, -1.0, 1.0, &cfg).unwrap(), 2f64.ln(), max_relative = 1e-13);
        assert_relative_eq!(
            principal_value(|_| 1.0, 3.0, 1.0, &cfg).unwrap(),
            (2.0f64 / 3.0).ln(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn detailed_balance_of_real_parts() {
        let cfg = QuadratureConfig::default();
        let b = bath(1.3);
        for gap in [0.02, 0.5, 2.0, 7.5] {
            let (c, d) = coefficient_pair(gap, &b, &cfg).unwrap();
            assert_relative_eq!(d.re, (1.3 * gap).exp() * c.re, max_relative = 1e-12);
            assert_relative_eq!(d.re - c.re, 0.5 * spectral_density(gap, &b), max_relative = 1e-12);
        }
        let (c, d) = coefficient_pair(-2.0, &b, &cfg).unwrap();
        assert_eq!(c.re, 0.0);
        assert_eq!(d.re, 0.0);
        assert!(c.im.is_finite() && d.im.is_finite());
    }
}
