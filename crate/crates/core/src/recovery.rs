//! Recovery of the general coefficients `(mu, nu)` from two solutions.
//!
//! If `Phi` and `Psi` both solve `f_zbar = mu f_z + nu conj(f_z)`, then at
//! every point the pair `(mu, nu)` solves a 2x2 complex-linear system whose
//! determinant is a multiple of the Wronskian `J = Im(Phi_z conj(Psi_z))`.
//! Where `|J|` is above a threshold the system is solved in closed form; the
//! remaining points form the singular set.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beltrami::SolveResult;
use crate::error::{Error, Result};
use crate::field::{ensure_same_grid, ComplexField, GridSpec, RealField};
use crate::wronskian::{interior_median_abs, wronskian};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Default threshold relative to the interior median of `|J|`.
pub const DEFAULT_EPS_REL: f64 = 1e-6;

/// Below this multiple of `sup|Phi_z| sup|Psi_z|` a median `|J|` counts as
/// round-off, and the generators as dependent.
const DEPENDENCE_FLOOR: f64 = 1e-13;

/// Slack added to the expected `k` by [`ellipticity_check`].
pub const ELLIPTICITY_SLACK: f64 = 0.05;

/// Recovered coefficients and the singular set of a generator pair.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub mu_hat: ComplexField,
    pub nu_hat: ComplexField,
    pub wronskian: RealField,
    /// `true` where `|J| <= eps_abs`.
    pub singular_mask: Vec<bool>,
    /// Fraction of the support box outside the singular set.
    pub regular_fraction: f64,
    /// `sup (|mu_hat| + |nu_hat|)` over the regular part of the support box.
    pub sup_ellipticity: f64,
    pub eps_rel: f64,
    pub eps_abs: f64,
}

impl RecoveryResult {
    pub fn spec(&self) -> &GridSpec {
        self.mu_hat.spec()
    }

    /// Support-box indices outside the singular set.
    pub fn regular_interior(&self) -> Vec<usize> {
        self.spec()
            .support_indices()
            .into_iter()
            .filter(|&i| !self.singular_mask[i])
            .collect()
    }

    /// `sup (|mu_hat - mu| + |nu_hat - nu|)` over the regular part of the support box.
    pub fn coefficient_error(&self, mu: &ComplexField, nu: &ComplexField) -> Result<f64> {
        ensure_same_grid(self.spec(), mu.spec())?;
        ensure_same_grid(self.spec(), nu.spec())?;
        Ok(self
            .regular_interior()
            .into_iter()
            .map(|i| {
                (self.mu_hat.values()[i] - mu.values()[i]).norm()
                    + (self.nu_hat.values()[i] - nu.values()[i]).norm()
            })
            .fold(0.0, f64::max))
    }

    /// Singular set as a 0/1 real field, for serialization.
    pub fn singular_field(&self) -> RealField {
        let vals = self
            .singular_mask
            .iter()
            .map(|&s| if s { 1.0 } else { 0.0 })
            .collect();
        RealField::from_values(*self.spec(), vals).expect("finite")
    }

    pub fn summary(&self, pairwise_max_disagreement: Option<f64>) -> RecoverySummary {
        RecoverySummary {
            regular_fraction: self.regular_fraction,
            sup_ellipticity: self.sup_ellipticity,
            eps_rel: self.eps_rel,
            pairwise_max_disagreement,
        }
    }
}

/// JSON summary of a recovery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub regular_fraction: f64,
    pub sup_ellipticity: f64,
    pub eps_rel: f64,
    pub pairwise_max_disagreement: Option<f64>,
}

/// Solves for `(mu, nu)` pointwise from two solutions.
pub fn recover_pair(phi: &SolveResult, psi: &SolveResult, eps_rel: f64) -> Result<RecoveryResult> {
    if !(eps_rel > 0.0 && eps_rel < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eps_rel = {eps_rel} must lie in (0, 1)"
        )));
    }
    let spec = *phi.spec();
    ensure_same_grid(&spec, psi.spec())?;
    let jac = wronskian(phi, psi)?;
    let median = interior_median_abs(&jac);
    let scale = phi.fz().sup() * psi.fz().sup();
    if median <= DEPENDENCE_FLOOR * scale {
        return Err(Error::DependentGenerators);
    }
    let eps_abs = eps_rel * median;
    let n = spec.len();
    let mut mu = vec![ZERO; n];
    let mut nu = vec![ZERO; n];
    let mut singular = vec![false; n];
    for i in 0..n {
        let (pz, pzb) = (phi.fz().values()[i], phi.fzbar().values()[i]);
        let (qz, qzb) = (psi.fz().values()[i], psi.fzbar().values()[i]);
        let j = jac.values()[i];
        if j.abs() > eps_abs {
            let d = 2.0 * j;
            mu[i] = I * (qzb * pz.conj() - qz.conj() * pzb) / d;
            nu[i] = I * (pzb * qz - pz * qzb) / d;
        } else {
            singular[i] = true;
            if pz.norm() > eps_abs.sqrt() {
                mu[i] = pzb / pz;
            }
        }
    }
    let interior = spec.support_indices();
    let regular: Vec<usize> = interior.iter().copied().filter(|&i| !singular[i]).collect();
    let regular_fraction = regular.len() as f64 / interior.len() as f64;
    let sup_ellipticity = regular
        .iter()
        .map(|&i| mu[i].norm() + nu[i].norm())
        .fold(0.0, f64::max);
    Ok(RecoveryResult {
        mu_hat: ComplexField::from_values(spec, mu)?,
        nu_hat: ComplexField::from_values(spec, nu)?,
        wronskian: jac,
        singular_mask: singular,
        regular_fraction,
        sup_ellipticity,
        eps_rel,
        eps_abs,
    })
}

/// Pairwise recoveries of a family of solutions and their disagreement.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    /// `(i, j)` generator indices of each recovery.
    pub pairs: Vec<(usize, usize)>,
    pub recoveries: Vec<RecoveryResult>,
    /// Max over recovery pairs and the joint regular support box of
    /// `|mu_a - mu_b| + |nu_a - nu_b|`.
    pub max_disagreement: f64,
}

impl ConsistencyReport {
    pub fn regular_fractions(&self) -> Vec<f64> {
        self.recoveries.iter().map(|r| r.regular_fraction).collect()
    }
}

pub fn consistency_check(solutions: &[SolveResult], eps_rel: f64) -> Result<ConsistencyReport> {
    if solutions.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "consistency check needs at least 3 solutions, got {}",
            solutions.len()
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..solutions.len())
        .flat_map(|i| ((i + 1)..solutions.len()).map(move |j| (i, j)))
        .collect();
    let recoveries = pairs
        .par_iter()
        .map(|&(i, j)| recover_pair(&solutions[i], &solutions[j], eps_rel))
        .collect::<Result<Vec<_>>>()?;
    let interior = solutions[0].spec().support_indices();
    let mut max_disagreement: f64 = 0.0;
    for (a, ra) in recoveries.iter().enumerate() {
        for rb in &recoveries[a + 1..] {
            for &i in &interior {
                if ra.singular_mask[i] || rb.singular_mask[i] {
                    continue;
                }
                let d = (ra.mu_hat.values()[i] - rb.mu_hat.values()[i]).norm()
                    + (ra.nu_hat.values()[i] - rb.nu_hat.values()[i]).norm();
                max_disagreement = max_disagreement.max(d);
            }
        }
    }
    Ok(ConsistencyReport {
        pairs,
        recoveries,
        max_disagreement,
    })
}

/// Outcome of [`ellipticity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityCheck {
    pub sup: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Passes iff `sup_ellipticity <= k_expected + 0.05`.
pub fn ellipticity_check(result: &RecoveryResult, k_expected: f64) -> EllipticityCheck {
    let bound = k_expected + ELLIPTICITY_SLACK;
    EllipticityCheck {
        sup: result.sup_ellipticity,
        bound,
        pass: result.sup_ellipticity <= bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid() -> GridSpec {
        GridSpec::new(32, 2.0, 1.5).unwrap()
    }

    #[test]
    fn constant_coefficients_are_recovered() {
        let g = grid();
        let (mu, nu) = (c(0.3, 0.0), c(0.0, 0.1));
        let phi = SolveResult::linear(g, c(1.0, 0.0), mu + nu);
        let psi = SolveResult::linear(g, I, I * (mu - nu));
        let r = recover_pair(&phi, &psi, DEFAULT_EPS_REL).unwrap();
        assert!(r
            .wronskian
            .values()
            .iter()
            .all(|&j| (j + 1.0).abs() < 1e-15));
        let err = r
            .coefficient_error(
                &ComplexField::constant(g, mu),
                &ComplexField::constant(g, nu),
            )
            .unwrap();
        assert!(err < 1e-15, "{err}");
        assert_eq!(r.regular_fraction, 1.0);
        let check = ellipticity_check(&r, 0.4);
        assert!(check.pass && (check.sup - 0.4).abs() < 1e-15);
    }

    #[test]
    fn holomorphic_and_dependent_pairs() {
        let g = grid();
        let phi = SolveResult::linear(g, c(1.0, 0.0), ZERO);
        let psi = SolveResult::linear(g, I, ZERO);
        let r = recover_pair(&phi, &psi, DEFAULT_EPS_REL).unwrap();
        assert_eq!(r.mu_hat.sup() + r.nu_hat.sup(), 0.0);
        assert!(ellipticity_check(&r, 0.0).pass);
        let dep = phi.affine_image(2.0, c(5.0, 0.0));
        assert!(matches!(
            recover_pair(&phi, &dep, DEFAULT_EPS_REL),
            Err(Error::DependentGenerators)
        ));
        assert!(recover_pair(&phi, &psi, 0.0).is_err());
    }

    #[test]
    fn consistency_on_linear_triples() {
        let g = grid();
        let (mu, nu) = (c(0.2, 0.1), c(-0.1, 0.15));
        let sols: Vec<SolveResult> = [c(1.0, 0.0), I, c(1.0, 1.0)]
            .iter()
            .map(|&a| SolveResult::linear(g, a, mu * a + nu * a.conj()))
            .collect();
        let rep = consistency_check(&sols, DEFAULT_EPS_REL).unwrap();
        assert_eq!(rep.pairs, vec![(0, 1), (0, 2), (1, 2)]);
        assert!(rep.max_disagreement <= 1e-12);
        assert!(consistency_check(&sols[..2], DEFAULT_EPS_REL).is_err());
    }

    #[test]
    fn summary_serializes() {
        let g = grid();
        let r = recover_pair(
            &SolveResult::linear(g, c(1.0, 0.0), ZERO),
            &SolveResult::linear(g, I, ZERO),
            DEFAULT_EPS_REL,
        )
        .unwrap();
        let json = serde_json::to_string(&r.summary(Some(0.0))).unwrap();
        assert!(json.contains("\"regular_fraction\":1.0"));
        assert!(json.contains("pairwise_max_disagreement"));
    }
}
