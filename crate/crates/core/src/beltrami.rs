//! Neumann-series solvers for the reduced equation `f_zbar = lambda Im(f_z)`
//! and the general equation `f_zbar = mu f_z + nu conj(f_z)`.
//!
//! Solutions are sought as `f = a z + b zbar + C h` where `C` is the torus
//! Cauchy transform, `a` is the prescribed slope and `b = mean(h)`. Then
//! `f_z = a + S h` and `f_zbar = h`, so the equation becomes the fixed point
//! `h = F(a + S h)` with `F` the pointwise right-hand side. Because `S` is
//! unitary and `|F(w) - F(w')| <= k |w - w'|`, the iteration contracts at
//! rate `k` in L2.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ensure_same_grid, l2_on, norm, ComplexField, GridSpec, NormKind, RealField};
use crate::transforms::Spectral;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Slack allowed when comparing a coefficient supremum against `k`.
const BOUND_SLACK: f64 = 1e-12;

/// Coefficient fields of either equation.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientKind {
    Reduced { lambda: ComplexField },
    General { mu: ComplexField, nu: ComplexField },
}

/// Where the coefficients live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    /// Vanish outside the support box; the padding band is coefficient free.
    Compact,
    /// Spatially constant over the whole torus.
    Uniform,
}

/// Beltrami coefficients with their ellipticity bound `k < 1`.
#[derive(Debug, Clone)]
pub struct BeltramiCoefficients {
    kind: CoefficientKind,
    k: f64,
    support: Support,
}

impl BeltramiCoefficients {
    /// Reduced coefficient `lambda`, required to vanish outside the support box.
    pub fn reduced(lambda: ComplexField, k: f64) -> Result<Self> {
        check_k(k)?;
        let sup = lambda.sup();
        check_bound(sup, k, "sup |lambda|")?;
        check_compact(&lambda)?;
        Ok(Self {
            kind: CoefficientKind::Reduced { lambda },
            k,
            support: Support::Compact,
        })
    }

    /// General coefficients `(mu, nu)`, required to vanish outside the support box.
    pub fn general(mu: ComplexField, nu: ComplexField, k: f64) -> Result<Self> {
        check_k(k)?;
        ensure_same_grid(mu.spec(), nu.spec())?;
        let sup = sup_sum(&mu, &nu);
        check_bound(sup, k, "sup (|mu| + |nu|)")?;
        check_compact(&mu)?;
        check_compact(&nu)?;
        Ok(Self {
            kind: CoefficientKind::General { mu, nu },
            k,
            support: Support::Compact,
        })
    }

    /// Constant `lambda` over the whole torus.
    pub fn uniform_reduced(spec: GridSpec, lambda: Complex64, k: f64) -> Result<Self> {
        check_k(k)?;
        check_bound(lambda.norm(), k, "|lambda|")?;
        Ok(Self {
            kind: CoefficientKind::Reduced {
                lambda: ComplexField::constant(spec, lambda),
            },
            k,
            support: Support::Uniform,
        })
    }

    /// Constant `(mu, nu)` over the whole torus.
    pub fn uniform_general(spec: GridSpec, mu: Complex64, nu: Complex64, k: f64) -> Result<Self> {
        check_k(k)?;
        check_bound(mu.norm() + nu.norm(), k, "|mu| + |nu|")?;
        Ok(Self {
            kind: CoefficientKind::General {
                mu: ComplexField::constant(spec, mu),
                nu: ComplexField::constant(spec, nu),
            },
            k,
            support: Support::Uniform,
        })
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Distortion constant `K = (1 + k) / (1 - k)`.
    pub fn distortion(&self) -> f64 {
        (1.0 + self.k) / (1.0 - self.k)
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn is_reduced(&self) -> bool {
        matches!(self.kind, CoefficientKind::Reduced { .. })
    }

    pub fn spec(&self) -> &GridSpec {
        match &self.kind {
            CoefficientKind::Reduced { lambda } => lambda.spec(),
            CoefficientKind::General { mu, .. } => mu.spec(),
        }
    }

    /// Right-hand side of the equation evaluated on a field of `f_z` values.
    pub fn rhs(&self, fz: &ComplexField) -> Result<ComplexField> {
        match &self.kind {
            CoefficientKind::Reduced { lambda } => lambda.zip_map(fz, |l, w| l * w.im),
            CoefficientKind::General { mu, nu } => {
                ensure_same_grid(mu.spec(), fz.spec())?;
                Ok(ComplexField::from_raw(
                    *fz.spec(),
                    mu.values()
                        .iter()
                        .zip(nu.values())
                        .zip(fz.values())
                        .map(|((&m, &n), &w)| m * w + n * w.conj())
                        .collect(),
                ))
            }
        }
    }

    /// Right-hand side for a constant `f_z`.
    fn rhs_const(&self, a: Complex64) -> ComplexField {
        match &self.kind {
            CoefficientKind::Reduced { lambda } => lambda.map(|l| l * a.im),
            CoefficientKind::General { mu, nu } => mu
                .zip_map(nu, |m, n| m * a + n * a.conj())
                .expect("coefficients share a grid"),
        }
    }

    /// `(mu, nu)` of the equivalent general equation; the reduced equation
    /// `f_zbar = lambda Im(f_z)` has `mu = lambda / 2i` and `nu = -mu`.
    pub fn general_fields(&self) -> (ComplexField, ComplexField) {
        match &self.kind {
            CoefficientKind::Reduced { lambda } => {
                let mu = lambda.map(|l| l / (2.0 * I));
                let nu = mu.map(|m| -m);
                (mu, nu)
            }
            CoefficientKind::General { mu, nu } => (mu.clone(), nu.clone()),
        }
    }

    /// Hash of the coefficient samples; equal fields give equal fingerprints.
    pub fn fingerprint(&self) -> u64 {
        match &self.kind {
            CoefficientKind::Reduced { lambda } => fingerprint_of(0, &[lambda]),
            CoefficientKind::General { mu, nu } => fingerprint_of(1, &[mu, nu]),
        }
    }
}

fn fingerprint_of(tag: u8, fields: &[&ComplexField]) -> u64 {
    let mut hasher = DefaultHasher::new();
    tag.hash(&mut hasher);
    for f in fields {
        f.spec().n().hash(&mut hasher);
        f.spec().half_width().to_bits().hash(&mut hasher);
        for v in f.values() {
            v.re.to_bits().hash(&mut hasher);
            v.im.to_bits().hash(&mut hasher);
        }
    }
    hasher.finish()
}

fn check_k(k: f64) -> Result<()> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::NotElliptic(format!("k = {k} must lie in [0, 1)")));
    }
    Ok(())
}

fn check_bound(sup: f64, k: f64, what: &str) -> Result<()> {
    if sup >= 1.0 {
        return Err(Error::NotElliptic(format!("{what} = {sup} >= 1")));
    }
    if sup > k + BOUND_SLACK {
        return Err(Error::InvalidArgument(format!(
            "{what} = {sup} exceeds the bound k = {k}"
        )));
    }
    Ok(())
}

fn check_compact(field: &ComplexField) -> Result<()> {
    let spec = *field.spec();
    let leak = field
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| !spec.in_support(spec.point_at(*i)))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    if leak > 1e-14 {
        return Err(Error::InvalidArgument(format!(
            "coefficient does not vanish outside the support box (max {leak:e})"
        )));
    }
    Ok(())
}

pub(crate) fn sup_sum(mu: &ComplexField, nu: &ComplexField) -> f64 {
    mu.values()
        .iter()
        .zip(nu.values())
        .map(|(m, n)| m.norm() + n.norm())
        .fold(0.0, f64::max)
}

/// Gaussian bump `amplitude * exp(-30 |z - c|^2 / w^2)` cut off at
/// `|z - c| = w`, where it has decayed below `1e-13`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothBump {
    pub center: Complex64,
    pub width: f64,
    pub amplitude: Complex64,
}

const BUMP_DECAY: f64 = 30.0;

impl SmoothBump {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let s = (z - self.center).norm_sqr() / (self.width * self.width);
        if s >= 1.0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.amplitude * (-BUMP_DECAY * s).exp()
        }
    }

    /// Whether the closed disk of the bump lies inside the support box.
    pub fn fits(&self, spec: &GridSpec) -> bool {
        let r = spec.support_radius();
        self.center.re.abs() + self.width <= r && self.center.im.abs() + self.width <= r
    }
}

/// Sum of bumps sampled on the grid.
pub fn bump_field(spec: GridSpec, bumps: &[SmoothBump]) -> ComplexField {
    ComplexField::from_fn(spec, |z| bumps.iter().map(|b| b.eval(z)).sum())
}

/// A few random bumps placed inside the support box, seeded.
pub fn random_bumps(spec: &GridSpec, seed: u64, count: usize) -> Vec<SmoothBump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = spec.support_radius();
    (0..count)
        .map(|_| {
            let width = rho * rng.gen_range(0.5..0.9);
            let reach = 0.9 * (rho - width);
            let center = Complex64::new(
                rng.gen_range(-1.0..1.0) * reach,
                rng.gen_range(-1.0..1.0) * reach,
            );
            let amplitude = Complex64::from_polar(
                rng.gen_range(0.5..1.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            SmoothBump {
                center,
                width,
                amplitude,
            }
        })
        .collect()
}

/// Random compactly supported reduced coefficient with `sup |lambda| = k`.
pub fn random_reduced(spec: GridSpec, seed: u64, k: f64) -> Result<BeltramiCoefficients> {
    let raw = bump_field(spec, &random_bumps(&spec, seed, 3));
    let scale = k / raw.sup();
    BeltramiCoefficients::reduced(raw.map(|v| v * scale), k)
}

/// Random compactly supported general coefficients with `sup (|mu| + |nu|) = k`.
pub fn random_general(spec: GridSpec, seed: u64, k: f64) -> Result<BeltramiCoefficients> {
    let mu = bump_field(spec, &random_bumps(&spec, seed, 3));
    let nu = bump_field(spec, &random_bumps(&spec, seed ^ 0x9e37_79b9_7f4a_7c15, 3));
    let scale = k / sup_sum(&mu, &nu);
    BeltramiCoefficients::general(mu.map(|v| v * scale), nu.map(|v| v * scale), k)
}

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop when the relative L2 change of `h` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest `k` accepted; above it the solver refuses to run.
    pub max_k: f64,
    /// Apply the 2/3-rule filter to every transform output.
    pub dealias: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 400,
            max_k: 0.95,
            dealias: false,
        }
    }
}

/// A solution `f = a z + b zbar + displacement` with its derivative fields.
#[derive(Debug, Clone)]
pub struct SolveResult {
    displacement: ComplexField,
    slope: Complex64,
    conj_slope: Complex64,
    fz: ComplexField,
    fzbar: ComplexField,
    residual_l2: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
    fingerprint: Option<u64>,
}

/// JSON sidecar written next to the field binaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub slope_re: f64,
    pub slope_im: f64,
    pub conj_slope_re: f64,
    pub conj_slope_im: f64,
    pub residual_l2: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveResult {
    /// Exact affine solution `a z + b zbar`.
    pub fn linear(spec: GridSpec, a: Complex64, b: Complex64) -> Self {
        Self {
            displacement: ComplexField::zeros(spec),
            slope: a,
            conj_slope: b,
            fz: ComplexField::constant(spec, a),
            fzbar: ComplexField::constant(spec, b),
            residual_l2: 0.0,
            iterations: 0,
            converged: true,
            trace: Vec::new(),
            fingerprint: None,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        self.fz.spec()
    }

    /// Periodic part of `f`.
    pub fn displacement(&self) -> &ComplexField {
        &self.displacement
    }

    /// Coefficient `a` of `z`.
    pub fn slope(&self) -> Complex64 {
        self.slope
    }

    /// Coefficient `b` of `zbar`.
    pub fn conj_slope(&self) -> Complex64 {
        self.conj_slope
    }

    pub fn fz(&self) -> &ComplexField {
        &self.fz
    }

    pub fn fzbar(&self) -> &ComplexField {
        &self.fzbar
    }

    /// Relative L2 equation residual, see [`residual`].
    pub fn residual_l2(&self) -> f64 {
        self.residual_l2
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Absolute L2 distance between successive iterates of `h`.
    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn fingerprint(&self) -> Option<u64> {
        self.fingerprint
    }

    /// Samples of the full map `a z + b zbar + displacement`.
    pub fn values(&self) -> ComplexField {
        let spec = *self.spec();
        let (a, b) = (self.slope, self.conj_slope);
        ComplexField::from_raw(
            spec,
            self.displacement
                .values()
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    let z = spec.point_at(i);
                    a * z + b * z.conj() + d
                })
                .collect(),
        )
    }

    /// Gradient `(u_x, u_y)` of `u = Re f`.
    pub fn u_gradient(&self) -> (RealField, RealField) {
        let ux = self
            .fz
            .zip_map(&self.fzbar, |p, q| p + q)
            .expect("same grid")
            .re();
        let uy = self
            .fz
            .zip_map(&self.fzbar, |p, q| I * (p - q))
            .expect("same grid")
            .re();
        (ux, uy)
    }

    pub fn u_y(&self) -> RealField {
        self.u_gradient().1
    }

    /// `Im(f_z)`, the null Lagrangian of the reduced equation.
    pub fn im_fz(&self) -> RealField {
        self.fz.im()
    }

    /// Jacobian `|f_z|^2 - |f_zbar|^2`.
    pub fn jacobian(&self) -> RealField {
        RealField::from_raw(
            *self.spec(),
            self.fz
                .values()
                .iter()
                .zip(self.fzbar.values())
                .map(|(p, q)| p.norm_sqr() - q.norm_sqr())
                .collect(),
        )
    }

    /// Real-linear combination `alpha * self + beta * other`.
    ///
    /// The stored residual of the result is the triangle-inequality bound
    /// from the two inputs; call [`residual`] for the exact value.
    pub fn combine(&self, alpha: f64, other: &SolveResult, beta: f64) -> Result<SolveResult> {
        ensure_same_grid(self.spec(), other.spec())?;
        let (a, b) = (Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0));
        let fz = self.fz.axpby(a, &other.fz, b)?;
        let bound = (alpha.abs() * self.residual_l2 * norm_l2(&self.fz)
            + beta.abs() * other.residual_l2 * norm_l2(&other.fz))
            / norm_l2(&fz).max(f64::MIN_POSITIVE);
        let fingerprint = match (self.fingerprint, other.fingerprint) {
            (Some(x), Some(y)) if x == y => Some(x),
            _ => None,
        };
        Ok(SolveResult {
            displacement: self.displacement.axpby(a, &other.displacement, b)?,
            slope: alpha * self.slope + beta * other.slope,
            conj_slope: alpha * self.conj_slope + beta * other.conj_slope,
            fzbar: self.fzbar.axpby(a, &other.fzbar, b)?,
            fz,
            residual_l2: bound,
            iterations: self.iterations.max(other.iterations),
            converged: self.converged && other.converged,
            trace: Vec::new(),
            fingerprint,
        })
    }

    /// `alpha * self + shift` for real `alpha`.
    pub fn affine_image(&self, alpha: f64, shift: Complex64) -> SolveResult {
        let mut out = self.clone();
        out.displacement = self.displacement.map(|d| alpha * d + shift);
        out.slope = alpha * self.slope;
        out.conj_slope = alpha * self.conj_slope;
        out.fz = self.fz.map(|v| alpha * v);
        out.fzbar = self.fzbar.map(|v| alpha * v);
        out.trace = Vec::new();
        out
    }

    /// Replaces `f_zbar` with `f_zbar + delta`; used to build corrupted inputs.
    pub fn perturb_fzbar(&self, delta: &ComplexField) -> Result<SolveResult> {
        let mut out = self.clone();
        out.fzbar = self.fzbar.zip_map(delta, |p, d| p + d)?;
        out.fingerprint = None;
        Ok(out)
    }

    pub fn summary(&self) -> SolveSummary {
        SolveSummary {
            slope_re: self.slope.re,
            slope_im: self.slope.im,
            conj_slope_re: self.conj_slope.re,
            conj_slope_im: self.conj_slope.im,
            residual_l2: self.residual_l2,
            iterations: self.iterations,
            converged: self.converged,
        }
    }
}

fn norm_l2(f: &ComplexField) -> f64 {
    norm(f, NormKind::L2).unwrap_or(0.0)
}

/// Solves whichever equation `coeffs` describes with `f_z` tending to `slope`.
pub fn solve(
    coeffs: &BeltramiCoefficients,
    slope: Complex64,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    if !(slope.norm() > 0.0) || !slope.is_finite() {
        return Err(Error::InvalidArgument("slope must be nonzero".into()));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument(
            "tol must be positive and max_iter nonzero".into(),
        ));
    }
    if coeffs.k > opts.max_k {
        return Err(Error::NotElliptic(format!(
            "k = {} exceeds the solver limit {}; raise max_k to override",
            coeffs.k, opts.max_k
        )));
    }
    let spec = *coeffs.spec();
    let sp = Spectral::new(spec).with_dealias(opts.dealias);

    let mut h = coeffs.rhs_const(slope);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let fz = sp.beurling(&h).map(|s| slope + s);
        let next = coeffs.rhs(&fz)?;
        let diff = norm_l2(&next.zip_map(&h, |p, q| p - q)?);
        let scale = norm_l2(&next);
        trace.push(diff);
        h = next;
        let change = if scale > 0.0 { diff / scale } else { diff };
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    let conj_slope = h.mean();
    let displacement = sp.cauchy(&h);
    let fz = sp.d_z(&displacement).map(|v| slope + v);
    let fzbar = sp.d_zbar(&displacement).map(|v| conj_slope + v);
    let mut result = SolveResult {
        displacement,
        slope,
        conj_slope,
        fz,
        fzbar,
        residual_l2: 0.0,
        iterations,
        converged,
        trace,
        fingerprint: Some(coeffs.fingerprint()),
    };
    result.residual_l2 = residual(&result, coeffs)?;
    Ok(result)
}

/// Reduced equation `f_zbar = lambda Im(f_z)`.
pub fn solve_reduced(
    coeffs: &BeltramiCoefficients,
    slope: Complex64,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    if !coeffs.is_reduced() {
        return Err(Error::InvalidArgument(
            "solve_reduced needs reduced coefficients".into(),
        ));
    }
    solve(coeffs, slope, opts)
}

/// General equation `f_zbar = mu f_z + nu conj(f_z)`.
pub fn solve_general(
    coeffs: &BeltramiCoefficients,
    slope: Complex64,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    if coeffs.is_reduced() {
        return Err(Error::InvalidArgument(
            "solve_general needs general coefficients".into(),
        ));
    }
    solve(coeffs, slope, opts)
}

/// Pointwise defect `f_zbar - F(f_z)`.
pub fn equation_defect(
    result: &SolveResult,
    coeffs: &BeltramiCoefficients,
) -> Result<ComplexField> {
    ensure_same_grid(result.spec(), coeffs.spec())?;
    let rhs = coeffs.rhs(&result.fz)?;
    result.fzbar.zip_map(&rhs, |p, q| p - q)
}

/// Relative L2 residual over the whole grid: `|f_zbar - F(f_z)|_2` divided by
/// the gradient norm `(|f_z|_2^2 + |f_zbar|_2^2)^(1/2)`.
pub fn residual(result: &SolveResult, coeffs: &BeltramiCoefficients) -> Result<f64> {
    let defect = equation_defect(result, coeffs)?;
    let scale = norm_l2(&result.fz).hypot(norm_l2(&result.fzbar));
    let d = norm_l2(&defect);
    Ok(if scale > 0.0 { d / scale } else { d })
}

/// Relative L2 residual restricted to the flat indices `mask`.
pub fn residual_on(
    result: &SolveResult,
    coeffs: &BeltramiCoefficients,
    mask: &[usize],
) -> Result<f64> {
    let defect = equation_defect(result, coeffs)?;
    let scale = l2_on(&result.fz, mask).hypot(l2_on(&result.fzbar, mask));
    let d = l2_on(&defect, mask);
    Ok(if scale > 0.0 { d / scale } else { d })
}

/// Constant coefficients of an affine solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearCoefficients {
    Reduced { lambda: Complex64 },
    General { mu: Complex64, nu: Complex64 },
}

impl LinearCoefficients {
    /// The `zbar` coefficient `b` that makes `a z + b zbar` a solution.
    pub fn conj_slope(&self, a: Complex64) -> Complex64 {
        match *self {
            Self::Reduced { lambda } => lambda * a.im,
            Self::General { mu, nu } => mu * a + nu * a.conj(),
        }
    }

    fn fingerprint(&self, spec: GridSpec) -> u64 {
        match *self {
            Self::Reduced { lambda } => fingerprint_of(0, &[&ComplexField::constant(spec, lambda)]),
            Self::General { mu, nu } => fingerprint_of(
                1,
                &[
                    &ComplexField::constant(spec, mu),
                    &ComplexField::constant(spec, nu),
                ],
            ),
        }
    }
}

/// Samples of the exact affine solution `a z + b zbar`.
///
/// The result is not periodic and is meant for interior comparisons.
pub fn linear_solution(
    spec: GridSpec,
    coeffs: LinearCoefficients,
    a: Complex64,
) -> Result<ComplexField> {
    let b = checked_conj_slope(coeffs, a)?;
    Ok(ComplexField::from_fn(spec, |z| a * z + b * z.conj()))
}

/// The exact affine solution as a [`SolveResult`].
pub fn linear_result(
    spec: GridSpec,
    coeffs: LinearCoefficients,
    a: Complex64,
) -> Result<SolveResult> {
    let b = checked_conj_slope(coeffs, a)?;
    let mut r = SolveResult::linear(spec, a, b);
    r.fingerprint = Some(coeffs.fingerprint(spec));
    Ok(r)
}

fn checked_conj_slope(coeffs: LinearCoefficients, a: Complex64) -> Result<Complex64> {
    let b = coeffs.conj_slope(a);
    if b.norm() >= a.norm() {
        return Err(Error::DegenerateLinearMap {
            a_abs: a.norm(),
            b_abs: b.norm(),
        });
    }
    Ok(b)
}
