//! Null Lagrangians of Beltrami solutions: `Im(f_z)`, the Jacobian, and the
//! Wronskian `J(Phi, Psi) = Im(Phi_z conj(Psi_z))` of two solutions.
//!
//! Also hosts the pointwise form of the factorization `Psi = F o Phi`: the
//! reduced coefficient of `F` and the chain-rule identity relating the
//! Wronskian to `Im(F_w)`, both evaluated in the `z` variable so that no
//! grid inversion of `Phi` is needed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beltrami::SolveResult;
use crate::error::{Error, Result};
use crate::field::{ensure_same_grid, ComplexField, RealField};

/// `Im(f_z)`, `J(z, f)` and optionally `J(f, g)`.
#[derive(Debug, Clone)]
pub struct InvariantFields {
    pub im_fz: RealField,
    pub jacobian: RealField,
    pub wronskian: Option<RealField>,
}

pub fn invariants(f: &SolveResult, g: Option<&SolveResult>) -> Result<InvariantFields> {
    let wronskian = g.map(|g| wronskian(f, g)).transpose()?;
    Ok(InvariantFields {
        im_fz: f.im_fz(),
        jacobian: f.jacobian(),
        wronskian,
    })
}

/// `Im(Phi_z conj(Psi_z))` at every grid point.
pub fn wronskian(phi: &SolveResult, psi: &SolveResult) -> Result<RealField> {
    Ok(phi.fz().zip_map(psi.fz(), |p, q| p * q.conj())?.im())
}

fn interior_abs(field: &RealField) -> Vec<f64> {
    let spec = field.spec();
    spec.support_indices()
        .into_iter()
        .map(|i| field.values()[i].abs())
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Median of `|field|` over the support box.
pub fn interior_median_abs(field: &RealField) -> f64 {
    median(interior_abs(field))
}

/// Fraction of the support box where `|field| <= eps_rel * median |field|`.
///
/// Returns 1 when the median vanishes.
pub fn near_zero_fraction(field: &RealField, eps_rel: f64) -> Result<f64> {
    if !(eps_rel > 0.0 && eps_rel < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eps_rel = {eps_rel} must lie in (0, 1)"
        )));
    }
    let vals = interior_abs(field);
    if vals.is_empty() {
        return Ok(1.0);
    }
    let med = median(vals.clone());
    if med == 0.0 {
        return Ok(1.0);
    }
    let thr = eps_rel * med;
    Ok(vals.iter().filter(|&&v| v <= thr).count() as f64 / vals.len() as f64)
}

/// Fraction of the support box carrying the majority sign of `field`
/// (zeros count against both signs).
pub fn dominant_sign_fraction(field: &RealField) -> f64 {
    let spec = field.spec();
    let idx = spec.support_indices();
    if idx.is_empty() {
        return 0.0;
    }
    let pos = idx.iter().filter(|&&i| field.values()[i] > 0.0).count();
    let neg = idx.iter().filter(|&&i| field.values()[i] < 0.0).count();
    pos.max(neg) as f64 / idx.len() as f64
}

/// Summary statistics written next to invariant fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub min: f64,
    pub max: f64,
    pub median: f64,
    #[serde(rename = "near_zero_fraction@0.1")]
    pub near_zero_1e1: f64,
    #[serde(rename = "near_zero_fraction@0.01")]
    pub near_zero_1e2: f64,
    #[serde(rename = "near_zero_fraction@0.001")]
    pub near_zero_1e3: f64,
}

/// Stats over the support box; `median` is the median of `|field|`.
pub fn field_stats(field: &RealField) -> Result<FieldStats> {
    let spec = field.spec();
    let idx = spec.support_indices();
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in &idx {
        let v = field.values()[i];
        min = min.min(v);
        max = max.max(v);
    }
    Ok(FieldStats {
        min,
        max,
        median: interior_median_abs(field),
        near_zero_1e1: near_zero_fraction(field, 1e-1)?,
        near_zero_1e2: near_zero_fraction(field, 1e-2)?,
        near_zero_1e3: near_zero_fraction(field, 1e-3)?,
    })
}

/// Reduced coefficient of the factor `F` in `Psi = F o Phi`, sampled in `z`:
/// `-2i nu / (1 + |nu|^2 - |mu|^2)`.
pub fn stoilow_lambda(mu: &ComplexField, nu: &ComplexField) -> Result<ComplexField> {
    ensure_same_grid(mu.spec(), nu.spec())?;
    let mut out = Vec::with_capacity(mu.values().len());
    for (&m, &n) in mu.values().iter().zip(nu.values()) {
        if m.norm() + n.norm() >= 1.0 {
            return Err(Error::NotElliptic(format!(
                "|mu| + |nu| = {} >= 1",
                m.norm() + n.norm()
            )));
        }
        let lam = Complex64::new(0.0, -2.0) * n / (1.0 + n.norm_sqr() - m.norm_sqr());
        if lam.norm() >= 1.0 {
            return Err(Error::NotElliptic(format!(
                "|lambda| = {} >= 1",
                lam.norm()
            )));
        }
        out.push(lam);
    }
    ComplexField::from_values(*mu.spec(), out)
}

/// Relative L2 defect over the support box of the chain-rule identity
///
/// `Im(Psi_z conj(Phi_z) - Psi_zbar conj(Phi_zbar)) = (1 - |mu|^2 + |nu|^2) Im(Psi_z conj(Phi_z))`.
pub fn chain_identity_residual(
    phi: &SolveResult,
    psi: &SolveResult,
    mu: &ComplexField,
    nu: &ComplexField,
) -> Result<f64> {
    let spec = *phi.spec();
    ensure_same_grid(&spec, psi.spec())?;
    ensure_same_grid(&spec, mu.spec())?;
    ensure_same_grid(&spec, nu.spec())?;
    if let (Some(a), Some(b)) = (phi.fingerprint(), psi.fingerprint()) {
        if a != b {
            return Err(Error::MismatchedCoefficients);
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in spec.support_indices() {
        let (pz, pzb) = (phi.fz().values()[i], phi.fzbar().values()[i]);
        let (qz, qzb) = (psi.fz().values()[i], psi.fzbar().values()[i]);
        let (m, n) = (mu.values()[i], nu.values()[i]);
        let lhs = (qz * pz.conj() - qzb * pzb.conj()).im;
        let rhs = (1.0 - m.norm_sqr() + n.norm_sqr()) * (qz * pz.conj()).im;
        num += (lhs - rhs).powi(2);
        den += rhs.powi(2).max(lhs.powi(2));
    }
    Ok(if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::{linear_result, LinearCoefficients};
    use crate::field::GridSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid() -> GridSpec {
        GridSpec::new(32, 2.0, 1.5).unwrap()
    }

    #[test]
    fn invariants_of_linear_maps() {
        let g = grid();
        let z = SolveResult::linear(g, c(1.0, 0.0), c(0.0, 0.0));
        let inv = invariants(&z, None).unwrap();
        assert!(inv.im_fz.sup() == 0.0);
        assert!(inv.jacobian.values().iter().all(|&v| v == 1.0));
        assert!(inv.wronskian.is_none());

        let f = SolveResult::linear(g, c(0.0, 1.0), c(0.5, 0.0));
        let inv = invariants(&f, None).unwrap();
        assert!(inv.im_fz.values().iter().all(|&v| v == 1.0));
        assert!(inv
            .jacobian
            .values()
            .iter()
            .all(|&v| (v - 0.75).abs() < 1e-15));

        let inv = invariants(&z, Some(&f)).unwrap();
        let w = inv.wronskian.unwrap();
        assert!(w.values().iter().all(|&v| v == -1.0));
    }

    #[test]
    fn wronskian_is_antisymmetric_and_vanishes_on_dependent_pairs() {
        let g = grid();
        let p = SolveResult::linear(g, c(1.0, 0.3), c(0.2, -0.1));
        let q = SolveResult::linear(g, c(-0.4, 1.0), c(0.1, 0.1));
        let a = wronskian(&p, &q).unwrap();
        let b = wronskian(&q, &p).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| *x == -*y));
        let dep = p.affine_image(2.0, c(5.0, 0.0));
        assert_eq!(wronskian(&p, &dep).unwrap().sup(), 0.0);
    }

    #[test]
    fn near_zero_fraction_conventions() {
        let g = grid();
        assert_eq!(
            near_zero_fraction(&RealField::constant(g, 1.0), 0.1).unwrap(),
            0.0
        );
        assert_eq!(near_zero_fraction(&RealField::zeros(g), 0.1).unwrap(), 1.0);
        assert!(near_zero_fraction(&RealField::zeros(g), 1.5).is_err());
        // half of the box is at 1, the rest decays linearly toward 0
        let f = RealField::from_fn(g, |z| if z.re < 0.0 { 1.0 } else { 1.0 - z.re / 1.5 });
        let fr: Vec<f64> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&e| near_zero_fraction(&f, e).unwrap())
            .collect();
        assert!(fr[0] >= fr[1] && fr[1] >= fr[2]);
    }

    #[test]
    fn stoilow_lambda_values() {
        let g = grid();
        let zero = ComplexField::zeros(g);
        let half = ComplexField::constant(g, c(0.5, 0.0));
        assert!(
            stoilow_lambda(&half.map(|_| c(0.2, 0.1)), &zero)
                .unwrap()
                .sup()
                == 0.0
        );
        let lam = stoilow_lambda(&zero, &half).unwrap();
        assert!(lam
            .values()
            .iter()
            .all(|v| (*v - c(0.0, -0.8)).norm() < 1e-15));
        assert!(matches!(
            stoilow_lambda(&half, &half),
            Err(Error::NotElliptic(_))
        ));
    }

    #[test]
    fn chain_identity_on_linear_pairs() {
        let g = grid();
        let zero = ComplexField::zeros(g);
        let phi = SolveResult::linear(g, c(1.0, 0.0), c(0.0, 0.0));
        let psi = SolveResult::linear(g, c(0.0, 1.0), c(0.0, 0.0));
        assert_eq!(
            chain_identity_residual(&phi, &psi, &zero, &zero).unwrap(),
            0.0
        );

        let coeffs = LinearCoefficients::General {
            mu: c(0.3, 0.0),
            nu: c(0.1, 0.0),
        };
        let phi = linear_result(g, coeffs, c(1.0, 0.0)).unwrap();
        let psi = linear_result(g, coeffs, c(0.0, 1.0)).unwrap();
        assert_eq!(phi.conj_slope(), c(0.4, 0.0));
        assert!((psi.conj_slope() - c(0.0, 0.2)).norm() < 1e-15);
        let mu = ComplexField::constant(g, c(0.3, 0.0));
        let nu = ComplexField::constant(g, c(0.1, 0.0));
        assert!(chain_identity_residual(&phi, &psi, &mu, &nu).unwrap() <= 1e-12);

        let other = LinearCoefficients::General {
            mu: c(0.2, 0.0),
            nu: c(0.1, 0.0),
        };
        let psi2 = linear_result(g, other, c(0.0, 1.0)).unwrap();
        assert!(matches!(
            chain_identity_residual(&phi, &psi2, &mu, &nu),
            Err(Error::MismatchedCoefficients)
        ));
    }
}
