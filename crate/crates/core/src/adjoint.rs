//! Divergence form of the reduced equation and the adjoint equation for `u_y`.
//!
//! Writing `f = u + i v` and `lambda = alpha + i beta`, the real part of a
//! reduced solution solves `div(A grad u) = 0` with
//! `A = [[1, a12], [0, a22]]`, `a12 = 2 alpha / (1 - beta)` and
//! `a22 = (1 + beta) / (1 - beta)`. Its symmetric part `sigma` drives the
//! non-divergence operator `L = d_xx + a12 d_xy + a22 d_yy`, and `u_y` is a
//! weak solution of `L* omega = 0`.
//!
//! Test functions are tensor products of raised cosines with analytic
//! derivatives of every order. The probes measure the empirical constants of
//! the weak reverse Hölder inequality, its higher-exponent variant, and the
//! decay of `int |omega|` on shrinking disks.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beltrami::SolveResult;
use crate::error::{Error, Result};
use crate::field::{disk_integral, ensure_same_grid, ComplexField, DiskMask, GridSpec, RealField};
use crate::transforms::Spectral;

const BOUND_SLACK: f64 = 1e-12;

/// The matrices `A` and `sigma` sampled on the grid.
#[derive(Debug, Clone)]
pub struct EllipticMatrixField {
    pub a12: RealField,
    pub a22: RealField,
    /// Off-diagonal entry of `sigma`, equal to `a12 / 2`.
    pub sigma12: RealField,
    pub sigma22: RealField,
    /// Ellipticity constant `(1 + k) / (1 - k)`.
    pub distortion: f64,
}

/// Eigenvalues `(low, high)` of `[[1, s], [s, d]]`.
fn sym_eigen(s: f64, d: f64) -> (f64, f64) {
    let mean = 0.5 * (1.0 + d);
    let rad = (0.25 * (1.0 - d).powi(2) + s * s).sqrt();
    (mean - rad, mean + rad)
}

/// Builds `A` and `sigma` from the reduced coefficient.
pub fn matrix_from_lambda(lambda: &ComplexField, k: f64) -> Result<EllipticMatrixField> {
    if !(0.0..1.0).contains(&k) {
        return Err(Error::NotElliptic(format!("k = {k} must lie in [0, 1)")));
    }
    let sup = lambda.sup();
    if sup >= 1.0 {
        return Err(Error::NotElliptic(format!("sup |lambda| = {sup} >= 1")));
    }
    if sup > k + BOUND_SLACK {
        return Err(Error::InvalidArgument(format!(
            "sup |lambda| = {sup} exceeds k = {k}"
        )));
    }
    let spec = *lambda.spec();
    let a12 = lambda.map_real(|l| 2.0 * l.re / (1.0 - l.im));
    let a22 = lambda.map_real(|l| (1.0 + l.im) / (1.0 - l.im));
    let sigma12 = a12.map(|v| 0.5 * v);
    let distortion = (1.0 + k) / (1.0 - k);
    let (lo, hi) = (1.0 / distortion - BOUND_SLACK, distortion + BOUND_SLACK);
    for i in 0..spec.len() {
        let (e0, e1) = sym_eigen(sigma12.values()[i], a22.values()[i]);
        if e0 < lo || e1 > hi {
            return Err(Error::NotElliptic(format!(
                "eigenvalues ({e0}, {e1}) of sigma leave [{lo}, {hi}]"
            )));
        }
    }
    Ok(EllipticMatrixField {
        sigma22: a22.clone(),
        a12,
        a22,
        sigma12,
        distortion,
    })
}

impl EllipticMatrixField {
    /// Identity matrix field (`lambda = 0`).
    pub fn identity(spec: GridSpec) -> Self {
        Self {
            a12: RealField::zeros(spec),
            a22: RealField::constant(spec, 1.0),
            sigma12: RealField::zeros(spec),
            sigma22: RealField::constant(spec, 1.0),
            distortion: 1.0,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        self.a12.spec()
    }

    /// Smallest and largest pointwise eigenvalue of `sigma`.
    pub fn eigen_range(&self) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (s, d) in self.sigma12.values().iter().zip(self.sigma22.values()) {
            let (e0, e1) = sym_eigen(*s, *d);
            lo = lo.min(e0);
            hi = hi.max(e1);
        }
        (lo, hi)
    }
}

/// Exponent `m` of the profile `((1 + cos(pi t)) / 2)^m`; the profile is
/// `C^(2m - 1)` across `|t| = 1`.
const PROFILE_POWER: usize = 3;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Cosine coefficients `c_j` with `((1 + cos(pi t)) / 2)^m = sum c_j cos(j pi t)`.
fn profile_coefficients() -> &'static [f64] {
    static COEFFS: OnceLock<Vec<f64>> = OnceLock::new();
    COEFFS.get_or_init(compute_profile_coefficients)
}

fn compute_profile_coefficients() -> Vec<f64> {
    let m = PROFILE_POWER;
    let scale = 0.25f64.powi(m as i32);
    (0..=m)
        .map(|j| {
            let b = binomial(2 * m, m - j);
            if j == 0 {
                scale * b
            } else {
                2.0 * scale * b
            }
        })
        .collect()
}

/// `order`-th derivative of the profile at `t`, zero for `|t| >= 1`.
fn profile(coeffs: &[f64], t: f64, order: usize) -> f64 {
    if t.abs() >= 1.0 {
        return 0.0;
    }
    let shift = order as f64 * PI / 2.0;
    coeffs
        .iter()
        .enumerate()
        .filter(|(j, _)| *j > 0 || order == 0)
        .map(|(j, c)| c * (j as f64 * PI).powi(order as i32) * (j as f64 * PI * t + shift).cos())
        .sum()
}

/// Tensor raised-cosine bump `g((x - cx)/wx) g((y - cy)/wy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorBump {
    pub center: [f64; 2],
    pub width: [f64; 2],
}

impl TensorBump {
    /// Mixed partial `d_x^p d_y^q` of the bump at `z`.
    pub fn derivative(&self, z: Complex64, p: usize, q: usize) -> f64 {
        let coeffs = profile_coefficients();
        let tx = (z.re - self.center[0]) / self.width[0];
        let ty = (z.im - self.center[1]) / self.width[1];
        let gx = profile(coeffs, tx, p) / self.width[0].powi(p as i32);
        if gx == 0.0 {
            return 0.0;
        }
        gx * profile(coeffs, ty, q) / self.width[1].powi(q as i32)
    }

    fn fits(&self, spec: &GridSpec) -> bool {
        let r = spec.support_radius();
        (0..2).all(|i| self.width[i] > 0.0 && self.center[i].abs() + self.width[i] <= r)
    }
}

/// A compactly supported test function with its gradient and Hessian.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub phi: RealField,
    /// `(phi_x, phi_y)`.
    pub grad: (RealField, RealField),
    /// `(phi_xx, phi_xy, phi_yy)`.
    pub hessian: (RealField, RealField, RealField),
    shape: Option<(TensorBump, usize)>,
}

impl TestFunction {
    /// Samples a tensor bump; errors if it leaves the support box.
    pub fn tensor(spec: GridSpec, bump: TensorBump) -> Result<Self> {
        Self::tensor_y_derivative(spec, bump, 0)
    }

    fn tensor_y_derivative(spec: GridSpec, bump: TensorBump, dy: usize) -> Result<Self> {
        if !bump.fits(&spec) {
            return Err(Error::NonCompactTestFunction);
        }
        let sample =
            |p: usize, q: usize| RealField::from_fn(spec, |z| bump.derivative(z, p, q + dy));
        Ok(Self {
            phi: sample(0, 0),
            grad: (sample(1, 0), sample(0, 1)),
            hessian: (sample(2, 0), sample(1, 1), sample(0, 2)),
            shape: Some((bump, dy)),
        })
    }

    /// Wraps precomputed fields; all of them must vanish outside the support box.
    pub fn from_fields(
        phi: RealField,
        grad: (RealField, RealField),
        hessian: (RealField, RealField, RealField),
    ) -> Result<Self> {
        let spec = *phi.spec();
        let fields = [&grad.0, &grad.1, &hessian.0, &hessian.1, &hessian.2];
        for f in fields {
            ensure_same_grid(&spec, f.spec())?;
        }
        for i in 0..spec.len() {
            if spec.in_support(spec.point_at(i)) {
                continue;
            }
            if phi.values()[i] != 0.0 || fields.iter().any(|f| f.values()[i] != 0.0) {
                return Err(Error::NonCompactTestFunction);
            }
        }
        Ok(Self {
            phi,
            grad,
            hessian,
            shape: None,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        self.phi.spec()
    }

    pub fn bump(&self) -> Option<TensorBump> {
        self.shape.map(|(b, _)| b)
    }

    /// The test function `phi_y`, available for analytic tensor bumps.
    pub fn y_derivative(&self) -> Result<Self> {
        match self.shape {
            Some((bump, dy)) => Self::tensor_y_derivative(*self.spec(), bump, dy + 1),
            None => Err(Error::InvalidArgument(
                "y derivative needs an analytic test function".into(),
            )),
        }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &TestFunction, beta: f64) -> Result<Self> {
        let lin = |a: &RealField, b: &RealField| a.zip_map(b, |x, y| alpha * x + beta * y);
        Ok(Self {
            phi: lin(&self.phi, &other.phi)?,
            grad: (
                lin(&self.grad.0, &other.grad.0)?,
                lin(&self.grad.1, &other.grad.1)?,
            ),
            hessian: (
                lin(&self.hessian.0, &other.hessian.0)?,
                lin(&self.hessian.1, &other.hessian.1)?,
                lin(&self.hessian.2, &other.hessian.2)?,
            ),
            shape: None,
        })
    }

    /// `L(phi) = phi_xx + a12 phi_xy + a22 phi_yy`.
    pub fn apply_operator(&self, matrix: &EllipticMatrixField) -> Result<RealField> {
        ensure_same_grid(self.spec(), matrix.spec())?;
        let (xx, xy, yy) = &self.hessian;
        let vals = (0..self.spec().len())
            .map(|i| {
                xx.values()[i]
                    + matrix.a12.values()[i] * xy.values()[i]
                    + matrix.a22.values()[i] * yy.values()[i]
            })
            .collect();
        RealField::from_values(*self.spec(), vals)
    }

    /// Seeded family of `count` tensor bumps inside the support box.
    pub fn family(spec: GridSpec, count: usize, seed: u64) -> Result<Vec<Self>> {
        let r = spec.support_radius();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps: Vec<TensorBump> = (0..count)
            .map(|_| TensorBump {
                center: [
                    rng.gen_range(-0.47..0.47) * r,
                    rng.gen_range(-0.47..0.47) * r,
                ],
                width: [rng.gen_range(0.17..0.4) * r, rng.gen_range(0.17..0.4) * r],
            })
            .collect();
        bumps.into_iter().map(|b| Self::tensor(spec, b)).collect()
    }
}

/// Gradient `(u_x, u_y)` of a real potential.
#[derive(Debug, Clone)]
pub struct RealGradient {
    pub x: RealField,
    pub y: RealField,
}

impl RealGradient {
    pub fn new(x: RealField, y: RealField) -> Result<Self> {
        ensure_same_grid(x.spec(), y.spec())?;
        Ok(Self { x, y })
    }

    /// Gradient of the linear function `gx x + gy y`.
    pub fn constant(spec: GridSpec, gx: f64, gy: f64) -> Self {
        Self {
            x: RealField::constant(spec, gx),
            y: RealField::constant(spec, gy),
        }
    }

    /// Spectral gradient of a periodic field.
    pub fn of_periodic(u: &RealField) -> Self {
        let (x, y) = Spectral::new(*u.spec()).gradient(u);
        Self { x, y }
    }

    /// Gradient of `u = Re f` for a solve result.
    pub fn of_solution(f: &SolveResult) -> Self {
        let (x, y) = f.u_gradient();
        Self { x, y }
    }
}

/// Which weak identity to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeakForm {
    Divergence,
    Adjoint,
}

/// Raw integral of a weak identity and its normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub integral: f64,
    pub scale: f64,
    /// `|integral| / scale`, or `|integral|` when the scale vanishes.
    pub value: f64,
}

impl WeakResidual {
    fn new(integral: f64, scale: f64) -> Self {
        let value = if scale > 0.0 {
            integral.abs() / scale
        } else {
            integral.abs()
        };
        Self {
            integral,
            scale,
            value,
        }
    }
}

fn l2(values: impl Iterator<Item = f64>, cell: f64) -> f64 {
    (values.map(|v| v * v).sum::<f64>() * cell).sqrt()
}

/// `int grad(phi) . A grad(u)`, normalized by `|grad phi|_2 |grad u|_2`.
pub fn divergence_residual(
    grad_u: &RealGradient,
    matrix: &EllipticMatrixField,
    phi: &TestFunction,
) -> Result<WeakResidual> {
    let spec = *phi.spec();
    ensure_same_grid(&spec, grad_u.x.spec())?;
    ensure_same_grid(&spec, matrix.spec())?;
    let (px, py) = (phi.grad.0.values(), phi.grad.1.values());
    let (ux, uy) = (grad_u.x.values(), grad_u.y.values());
    let (a12, a22) = (matrix.a12.values(), matrix.a22.values());
    let cell = spec.cell_area();
    let integral: f64 = (0..spec.len())
        .map(|i| px[i] * (ux[i] + a12[i] * uy[i]) + py[i] * a22[i] * uy[i])
        .sum::<f64>()
        * cell;
    let gphi = l2(px.iter().chain(py).copied(), cell);
    let gu = l2(ux.iter().chain(uy).copied(), cell);
    Ok(WeakResidual::new(integral, gphi * gu))
}

/// `int omega L(phi)`, normalized by `|L(phi)|_2 |omega|_2`.
pub fn adjoint_residual(
    omega: &RealField,
    matrix: &EllipticMatrixField,
    phi: &TestFunction,
) -> Result<WeakResidual> {
    ensure_same_grid(phi.spec(), omega.spec())?;
    let lphi = phi.apply_operator(matrix)?;
    let cell = phi.spec().cell_area();
    let integral: f64 = omega
        .values()
        .iter()
        .zip(lphi.values())
        .map(|(w, l)| w * l)
        .sum::<f64>()
        * cell;
    let scale = l2(lphi.values().iter().copied(), cell) * l2(omega.values().iter().copied(), cell);
    Ok(WeakResidual::new(integral, scale))
}

/// Dispatches on `form`. For the divergence form `field` is a periodic `u`
/// differentiated spectrally; for the adjoint form it is `omega`.
pub fn weak_residual(
    form: WeakForm,
    field: &RealField,
    matrix: &EllipticMatrixField,
    phi: &TestFunction,
) -> Result<WeakResidual> {
    match form {
        WeakForm::Divergence => divergence_residual(&RealGradient::of_periodic(field), matrix, phi),
        WeakForm::Adjoint => adjoint_residual(field, matrix, phi),
    }
}

/// Gap between the adjoint integral for `omega = u_y` and the divergence
/// integral tested against `phi_y`, relative to the adjoint scale.
pub fn transfer_defect(
    grad_u: &RealGradient,
    matrix: &EllipticMatrixField,
    phi: &TestFunction,
) -> Result<f64> {
    let adj = adjoint_residual(&grad_u.y, matrix, phi)?;
    let div = divergence_residual(grad_u, matrix, &phi.y_derivative()?)?;
    let gap = (adj.integral - div.integral).abs();
    Ok(if adj.scale > 0.0 {
        gap / adj.scale
    } else {
        gap
    })
}

/// One row of a reverse Hölder or Gehring table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub center_re: f64,
    pub center_im: f64,
    pub radius: f64,
    /// `(r^-2 int_B |omega|^p)^(1/p)`.
    pub lhs: f64,
    /// `r^-2 int_{2B} |omega|`.
    pub rhs: f64,
    /// `lhs / rhs`, or 0 when `rhs = 0`.
    pub c_hat: f64,
}

/// Table of empirical constants for one exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderTable {
    pub p: f64,
    pub rows: Vec<HolderRow>,
}

/// Largest ratio `max c_hat / min c_hat` accepted as radius stable.
pub const STABILITY_RATIO: f64 = 10.0;

impl HolderTable {
    /// Largest `c_hat`.
    pub fn max_c(&self) -> f64 {
        self.rows.iter().map(|r| r.c_hat).fold(0.0, f64::max)
    }

    /// `max c_hat / min c_hat` over rows with positive `c_hat`; 1 if there are none.
    pub fn spread(&self) -> f64 {
        let pos: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.c_hat)
            .filter(|&c| c > 0.0)
            .collect();
        if pos.is_empty() {
            return 1.0;
        }
        let lo = pos.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = pos.iter().copied().fold(0.0, f64::max);
        hi / lo
    }

    /// Largest per-center ratio of `c_hat` across radii.
    pub fn per_center_spread(&self) -> f64 {
        let mut worst: f64 = 1.0;
        for row in &self.rows {
            let same: Vec<f64> = self
                .rows
                .iter()
                .filter(|r| r.center_re == row.center_re && r.center_im == row.center_im)
                .map(|r| r.c_hat)
                .filter(|&c| c > 0.0)
                .collect();
            if let (Some(lo), Some(hi)) = (
                same.iter().copied().reduce(f64::min),
                same.iter().copied().reduce(f64::max),
            ) {
                worst = worst.max(hi / lo);
            }
        }
        worst
    }

    pub fn radius_stable(&self) -> bool {
        self.spread() <= STABILITY_RATIO
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "center_re,center_im,radius,lhs,rhs,c_hat")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.center_re, r.center_im, r.radius, r.lhs, r.rhs, r.c_hat
            )?;
        }
        Ok(())
    }
}

/// Regular grid of `count x count` centers covering `[-half, half]^2`.
pub fn center_grid(count: usize, half: f64) -> Vec<Complex64> {
    let coord = |i: usize| {
        if count == 1 {
            0.0
        } else {
            -half + 2.0 * half * i as f64 / (count - 1) as f64
        }
    };
    (0..count)
        .flat_map(|j| (0..count).map(move |m| Complex64::new(coord(j), coord(m))))
        .collect()
}

fn check_doubled_disk(spec: &GridSpec, c: Complex64, r: f64) -> Result<()> {
    let rho = spec.support_radius();
    if !(r > 0.0) || c.re.abs() + 2.0 * r > rho || c.im.abs() + 2.0 * r > rho {
        return Err(Error::DiskOutOfBounds {
            re: c.re,
            im: c.im,
            radius: 2.0 * r,
        });
    }
    Ok(())
}

/// Empirical constants of `(r^-2 int_B |omega|^p)^(1/p) <= (c / r^2) int_{2B} |omega|`.
/// Rows are sorted by radius, then by center order.
pub fn gehring_probe(
    omega: &RealField,
    p: f64,
    centers: &[Complex64],
    radii: &[f64],
) -> Result<HolderTable> {
    if !(2.0..=8.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "p = {p} must lie in [2, 8]"
        )));
    }
    let spec = *omega.spec();
    let mut radii = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    let mut jobs = Vec::new();
    for &r in &radii {
        for &c in centers {
            check_doubled_disk(&spec, c, r)?;
            jobs.push((c, r));
        }
    }
    let rows = jobs
        .into_par_iter()
        .map(|(c, r)| {
            let inner = disk_integral(omega, &DiskMask::new(spec, c, r)?, p)?;
            let outer = disk_integral(omega, &DiskMask::new(spec, c, 2.0 * r)?, 1.0)?;
            let lhs = (inner / (r * r)).powf(1.0 / p);
            let rhs = outer / (r * r);
            let c_hat = if rhs > 0.0 { lhs / rhs } else { 0.0 };
            Ok(HolderRow {
                center_re: c.re,
                center_im: c.im,
                radius: r,
                lhs,
                rhs,
                c_hat,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HolderTable { p, rows })
}

/// The `p = 2` case of [`gehring_probe`].
pub fn reverse_holder_probe(
    omega: &RealField,
    centers: &[Complex64],
    radii: &[f64],
) -> Result<HolderTable> {
    gehring_probe(omega, 2.0, centers, radii)
}

/// Gehring tables for several exponents and the largest radius-stable one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GehringScan {
    pub tables: Vec<HolderTable>,
    pub largest_stable_p: Option<f64>,
}

pub fn gehring_scan(
    omega: &RealField,
    p_list: &[f64],
    centers: &[Complex64],
    radii: &[f64],
) -> Result<GehringScan> {
    let tables = p_list
        .iter()
        .map(|&p| gehring_probe(omega, p, centers, radii))
        .collect::<Result<Vec<_>>>()?;
    let largest_stable_p = tables
        .iter()
        .filter(|t| t.radius_stable())
        .map(|t| t.p)
        .reduce(f64::max);
    Ok(GehringScan {
        tables,
        largest_stable_p,
    })
}

/// One radius of a decay probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub radius: f64,
    pub mass: f64,
    /// Slope of `log mass` against `log r` between this radius and the
    /// previous one (the first row repeats the second).
    pub log_slope_running: f64,
}

/// Masses `int_{D(z0, r)} |omega|` and the fitted order of vanishing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProbe {
    pub center_re: f64,
    pub center_im: f64,
    pub rows: Vec<DecayRow>,
    /// Least-squares slope of `log mass` against `log r`; infinite when every
    /// mass vanishes.
    pub order: f64,
    /// Target order `N`.
    pub target: u32,
}

impl DecayProbe {
    /// Whether the fitted order exceeds `N`.
    pub fn exceeds_target(&self) -> bool {
        self.order > self.target as f64
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "radius,mass,log_slope_running")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.radius, r.mass, r.log_slope_running)?;
        }
        Ok(())
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `radii` count geometric values from `r_max` down to `r_max / span`.
pub fn geometric_radii(r_max: f64, span: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| r_max * span.powf(-(i as f64) / (count - 1).max(1) as f64))
        .collect()
}

pub fn zero_decay_probe(
    omega: &RealField,
    z0: Complex64,
    radii: &[f64],
    target: u32,
) -> Result<DecayProbe> {
    if radii.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "decay probe needs at least 3 radii, got {}",
            radii.len()
        )));
    }
    if target == 0 {
        return Err(Error::InvalidArgument(
            "target order must be positive".into(),
        ));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("radii must decrease".into()));
    }
    let spec = *omega.spec();
    for &r in radii {
        let rho = spec.support_radius();
        if !(r > 0.0) || z0.re.abs() + r > rho || z0.im.abs() + r > rho {
            return Err(Error::DiskOutOfBounds {
                re: z0.re,
                im: z0.im,
                radius: r,
            });
        }
    }
    let masses = radii
        .par_iter()
        .map(|&r| disk_integral(omega, &DiskMask::new(spec, z0, r)?, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(f64, f64)> = radii
        .iter()
        .zip(&masses)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&r, &m)| (r.ln(), m.ln()))
        .collect();
    let order = if pairs.len() < 2 {
        f64::INFINITY
    } else {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        fit_slope(&x, &y)
    };
    let local = |i: usize| {
        let (m0, m1) = (masses[i - 1], masses[i]);
        if m0 > 0.0 && m1 > 0.0 {
            (m1 / m0).ln() / (radii[i] / radii[i - 1]).ln()
        } else {
            f64::INFINITY
        }
    };
    let rows = (0..radii.len())
        .map(|i| DecayRow {
            radius: radii[i],
            mass: masses[i],
            log_slope_running: local(i.max(1)),
        })
        .collect();
    Ok(DecayProbe {
        center_re: z0.re,
        center_im: z0.im,
        rows,
        order,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matrix_examples() {
        let g = GridSpec::new(16, 2.0, 1.5).unwrap();
        let m = matrix_from_lambda(&ComplexField::zeros(g), 0.0).unwrap();
        assert!(m.a12.sup() == 0.0 && m.a22.values().iter().all(|&v| v == 1.0));
        let m = matrix_from_lambda(&ComplexField::constant(g, c(0.0, 0.5)), 0.5).unwrap();
        assert!(m.a12.sup() == 0.0 && m.a22.values().iter().all(|&v| (v - 3.0).abs() < 1e-15));
        let (lo, hi) = m.eigen_range();
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 3.0).abs() < 1e-15);
        let m = matrix_from_lambda(&ComplexField::constant(g, c(0.5, 0.0)), 0.5).unwrap();
        assert!(m.a12.values().iter().all(|&v| v == 1.0));
        assert!(m.a22.values().iter().all(|&v| v == 1.0));
        assert!(matches!(
            matrix_from_lambda(&ComplexField::constant(g, c(0.0, 1.0)), 0.9),
            Err(Error::NotElliptic(_))
        ));
    }

    #[test]
    fn profile_matches_closed_form() {
        let coeffs = profile_coefficients();
        for &t in &[-0.9, -0.3, 0.0, 0.45, 0.99] {
            let g: f64 = ((1.0 + (PI * t).cos()) / 2.0).powi(PROFILE_POWER as i32);
            assert!((profile(coeffs, t, 0) - g).abs() < 1e-15);
            let h = 1e-5;
            let fd = (profile(coeffs, t + h, 1) - profile(coeffs, t - h, 1)) / (2.0 * h);
            assert!((profile(coeffs, t, 2) - fd).abs() < 1e-6 * (1.0 + fd.abs()));
        }
        for order in 0..2 * PROFILE_POWER {
            assert!(profile(coeffs, 1.0 - 1e-12, order).abs() < 1e-6);
        }
    }

    #[test]
    fn non_compact_test_functions_are_rejected() {
        let g = GridSpec::new(32, 2.0, 1.5).unwrap();
        let bad = TensorBump {
            center: [1.2, 0.0],
            width: [0.5, 0.5],
        };
        assert!(matches!(
            TestFunction::tensor(g, bad),
            Err(Error::NonCompactTestFunction)
        ));
        let one = RealField::constant(g, 1.0);
        let zero = RealField::zeros(g);
        assert!(matches!(
            TestFunction::from_fields(
                one,
                (zero.clone(), zero.clone()),
                (zero.clone(), zero.clone(), zero)
            ),
            Err(Error::NonCompactTestFunction)
        ));
    }

    #[test]
    fn constant_field_constants() {
        let g = GridSpec::new(256, 2.0, 1.5).unwrap();
        let one = RealField::constant(g, 1.0);
        let t = reverse_holder_probe(&one, &[c(0.0, 0.0), c(0.3, -0.2)], &[0.1, 0.3]).unwrap();
        let exact = 1.0 / (4.0 * PI.sqrt());
        for row in &t.rows {
            assert!((row.c_hat - exact).abs() < 0.01 * exact, "{row:?}");
        }
        let t = gehring_probe(&one, 4.0, &[c(0.0, 0.0)], &[0.2]).unwrap();
        let exact = PI.powf(0.25) / (4.0 * PI);
        assert!((t.rows[0].c_hat - exact).abs() < 0.01 * exact);

        let zero = RealField::zeros(g);
        let t = reverse_holder_probe(&zero, &[c(0.0, 0.0)], &[0.2]).unwrap();
        assert_eq!(
            (t.rows[0].lhs, t.rows[0].rhs, t.rows[0].c_hat),
            (0.0, 0.0, 0.0)
        );
        assert!(matches!(
            reverse_holder_probe(&one, &[c(1.0, 0.0)], &[0.4]),
            Err(Error::DiskOutOfBounds { .. })
        ));
    }

    #[test]
    fn decay_probe_conventions() {
        let g = GridSpec::new(128, 2.0, 1.5).unwrap();
        let radii = geometric_radii(0.5, 4.0, 4);
        let p = zero_decay_probe(&RealField::zeros(g), c(0.0, 0.0), &radii, 3).unwrap();
        assert!(p.order.is_infinite() && p.rows.iter().all(|r| r.mass == 0.0));
        assert!(zero_decay_probe(&RealField::zeros(g), c(0.0, 0.0), &radii[..2], 3).is_err());
        let mut csv = Vec::new();
        p.write_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv)
            .unwrap()
            .starts_with("radius,mass,log_slope_running\n"));
    }

    #[test]
    fn center_grid_layout() {
        let cs = center_grid(5, 0.5);
        assert_eq!(cs.len(), 25);
        assert_eq!(cs[0], c(-0.5, -0.5));
        assert_eq!(cs[24], c(0.5, 0.5));
    }
}
