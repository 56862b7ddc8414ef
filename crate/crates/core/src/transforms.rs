//! Fourier-multiplier realizations of `d/dz`, `d/dzbar`, the Cauchy transform
//! and the Beurling transform on the periodic grid.
//!
//! Synthesis convention: `f(x, y) = n^-2 sum F(xi) exp(+i (x xi1 + y xi2))`,
//! with `xi_j in (pi / L) {-n/2, ..., n/2 - 1}`. Writing `zeta = xi1 + i xi2`
//! the multipliers are
//!
//! | operator  | multiplier          |
//! |-----------|---------------------|
//! | `d_z`     | `(i/2) conj(zeta)`  |
//! | `d_zbar`  | `(i/2) zeta`        |
//! | Cauchy    | `2 / (i zeta)`      |
//! | Beurling  | `conj(zeta) / zeta` |
//!
//! Derivatives drop the Nyquist row and column. The Cauchy and Beurling
//! transforms send the mean mode to zero.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::field::{ComplexField, GridSpec, RealField};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Signed integer wavenumber of FFT index `j`.
fn wavenumber(j: usize, n: usize) -> isize {
    if j < n / 2 {
        j as isize
    } else {
        j as isize - n as isize
    }
}

/// Fourier dual of a [`GridSpec`]: `zeta = xi1 + i xi2` in FFT ordering.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    spec: GridSpec,
    zeta: Vec<Complex64>,
}

impl FrequencyGrid {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.n();
        let scale = std::f64::consts::PI / spec.half_width();
        let mut zeta = Vec::with_capacity(spec.len());
        for j in 0..n {
            let xi1 = scale * wavenumber(j, n) as f64;
            for m in 0..n {
                let xi2 = scale * wavenumber(m, n) as f64;
                zeta.push(Complex64::new(xi1, xi2));
            }
        }
        Self { spec, zeta }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn zeta(&self) -> &[Complex64] {
        &self.zeta
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        let n = self.spec.n();
        idx / n == n / 2 || idx % n == n / 2
    }

    /// Largest absolute integer wavenumber of either axis at `idx`.
    pub fn max_wavenumber(&self, idx: usize) -> usize {
        let n = self.spec.n();
        wavenumber(idx / n, n)
            .unsigned_abs()
            .max(wavenumber(idx % n, n).unsigned_abs())
    }
}

/// Diagonal operators available on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Dz,
    Dzbar,
    Dx,
    Dy,
    Cauchy,
    Beurling,
}

impl Operator {
    fn multiplier(self, zeta: Complex64, nyquist: bool) -> Complex64 {
        let derivative = matches!(self, Self::Dz | Self::Dzbar | Self::Dx | Self::Dy);
        if derivative && nyquist {
            return ZERO;
        }
        match self {
            Self::Dz => 0.5 * I * zeta.conj(),
            Self::Dzbar => 0.5 * I * zeta,
            Self::Dx => I * zeta.re,
            Self::Dy => I * zeta.im,
            Self::Cauchy if zeta == ZERO => ZERO,
            Self::Cauchy => 2.0 / (I * zeta),
            Self::Beurling if zeta == ZERO => ZERO,
            Self::Beurling => zeta.conj() / zeta,
        }
    }
}

/// FFT plans and frequency table for one grid.
///
/// Methods take `&self` and allocate their own scratch, so one instance can
/// be shared across threads.
#[derive(Clone)]
pub struct Spectral {
    freq: FrequencyGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    dealias: bool,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("spec", self.freq.spec())
            .field("dealias", &self.dealias)
            .finish()
    }
}

impl Spectral {
    pub fn new(spec: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(spec.n());
        let inverse = planner.plan_fft_inverse(spec.n());
        Self {
            freq: FrequencyGrid::new(spec),
            forward,
            inverse,
            dealias: false,
        }
    }

    /// Enables the 2/3-rule filter on every operator output.
    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn spec(&self) -> &GridSpec {
        self.freq.spec()
    }

    pub fn frequencies(&self) -> &FrequencyGrid {
        &self.freq
    }

    fn fft2(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.spec().n();
        let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
    }

    /// Forward transform (analysis, no scaling).
    pub fn analyze(&self, field: &ComplexField) -> Vec<Complex64> {
        let mut data = field.values().to_vec();
        self.fft2(&mut data, &self.forward);
        data
    }

    /// Inverse transform (synthesis, scaled by `1 / n^2`).
    pub fn synthesize(&self, mut coeffs: Vec<Complex64>) -> ComplexField {
        self.fft2(&mut coeffs, &self.inverse);
        let scale = 1.0 / self.spec().len() as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        ComplexField::from_raw(*self.spec(), coeffs)
    }

    fn keep(&self, idx: usize) -> bool {
        !self.dealias || 3 * self.freq.max_wavenumber(idx) <= self.spec().n()
    }

    /// Multiplies the spectrum of `field` by the multiplier of `op`.
    pub fn apply(&self, op: Operator, field: &ComplexField) -> ComplexField {
        assert_eq!(field.spec(), self.spec(), "field on a different grid");
        let mut coeffs = self.analyze(field);
        for (idx, c) in coeffs.iter_mut().enumerate() {
            *c = if self.keep(idx) {
                *c * op.multiplier(self.freq.zeta[idx], self.freq.is_nyquist(idx))
            } else {
                ZERO
            };
        }
        self.synthesize(coeffs)
    }

    pub fn d_z(&self, field: &ComplexField) -> ComplexField {
        self.apply(Operator::Dz, field)
    }

    pub fn d_zbar(&self, field: &ComplexField) -> ComplexField {
        self.apply(Operator::Dzbar, field)
    }

    pub fn cauchy(&self, field: &ComplexField) -> ComplexField {
        self.apply(Operator::Cauchy, field)
    }

    pub fn beurling(&self, field: &ComplexField) -> ComplexField {
        self.apply(Operator::Beurling, field)
    }

    /// Spectral gradient `(d/dx, d/dy)` of a real periodic field.
    pub fn gradient(&self, field: &RealField) -> (RealField, RealField) {
        let mut coeffs = self.analyze(&field.to_complex());
        let mut cy = coeffs.clone();
        for (idx, (cx, cy)) in coeffs.iter_mut().zip(cy.iter_mut()).enumerate() {
            let zeta = self.freq.zeta[idx];
            let nyq = self.freq.is_nyquist(idx);
            let keep = self.keep(idx);
            *cx = if keep {
                *cx * Operator::Dx.multiplier(zeta, nyq)
            } else {
                ZERO
            };
            *cy = if keep {
                *cy * Operator::Dy.multiplier(zeta, nyq)
            } else {
                ZERO
            };
        }
        (self.synthesize(coeffs).re(), self.synthesize(cy).re())
    }

    /// Zeroes modes above the 2/3 cutoff.
    pub fn filter(&self, field: &ComplexField) -> ComplexField {
        let mut coeffs = self.analyze(field);
        let n = self.spec().n();
        for (idx, c) in coeffs.iter_mut().enumerate() {
            if 3 * self.freq.max_wavenumber(idx) > n {
                *c = ZERO;
            }
        }
        self.synthesize(coeffs)
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for j in 0..n {
        for m in (j + 1)..n {
            data.swap(j * n + m, m * n + j);
        }
    }
}

pub fn d_z(field: &ComplexField) -> ComplexField {
    Spectral::new(*field.spec()).d_z(field)
}

pub fn d_zbar(field: &ComplexField) -> ComplexField {
    Spectral::new(*field.spec()).d_zbar(field)
}

/// Torus Cauchy transform: inverts `d_zbar` on mean-zero fields.
pub fn cauchy(field: &ComplexField) -> ComplexField {
    Spectral::new(*field.spec()).cauchy(field)
}

/// Torus Beurling transform, `d_z` composed with the Cauchy transform.
pub fn beurling(field: &ComplexField) -> ComplexField {
    Spectral::new(*field.spec()).beurling(field)
}

/// Random mean-zero field whose spectrum is supported on wavenumbers
/// `1 <= |k|_inf <= max_mode`, with standard normal-ish coefficients.
pub fn random_band_limited(spec: GridSpec, seed: u64, max_mode: usize) -> ComplexField {
    let n = spec.n();
    let max_mode = max_mode.min(n / 2 - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sp = Spectral::new(spec);
    let mut coeffs = vec![ZERO; spec.len()];
    for j in 0..n {
        for m in 0..n {
            let (kj, km) = (wavenumber(j, n), wavenumber(m, n));
            let kmax = kj.unsigned_abs().max(km.unsigned_abs());
            if kmax == 0 || kmax > max_mode || j == n / 2 || m == n / 2 {
                continue;
            }
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            coeffs[j * n + m] = Complex64::new(re, im) * spec.len() as f64;
        }
    }
    sp.synthesize(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{norm, NormKind};
    use std::f64::consts::PI;

    fn torus() -> GridSpec {
        GridSpec::new(64, PI, 2.0).unwrap()
    }

    fn rel_l2(a: &ComplexField, b: &ComplexField) -> f64 {
        let d = a
            .axpby(Complex64::new(1.0, 0.0), b, Complex64::new(-1.0, 0.0))
            .unwrap();
        norm(&d, NormKind::L2).unwrap() / norm(b, NormKind::L2).unwrap()
    }

    #[test]
    fn frequency_grid_layout() {
        let fg = FrequencyGrid::new(torus());
        assert_eq!(fg.zeta()[0], ZERO);
        assert_eq!(fg.zeta()[1], Complex64::new(0.0, 1.0));
        assert_eq!(fg.zeta()[64], Complex64::new(1.0, 0.0));
        assert!(fg.is_nyquist(32));
        assert!(fg.is_nyquist(32 * 64 + 5));
        assert!(!fg.is_nyquist(31));
    }

    #[test]
    fn eigenfunctions() {
        let g = torus();
        let ex = ComplexField::from_fn(g, |z| (I * z.re).exp());
        let ey = ComplexField::from_fn(g, |z| (I * z.im).exp());
        let half_i = 0.5 * I;
        assert!(rel_l2(&d_z(&ex), &ex.map(|v| half_i * v)) < 1e-13);
        assert!(rel_l2(&d_zbar(&ex), &ex.map(|v| half_i * v)) < 1e-13);
        assert!(rel_l2(&cauchy(&ex), &ex.map(|v| (2.0 / I) * v)) < 1e-13);
        assert!(rel_l2(&d_zbar(&cauchy(&ex)), &ex) < 1e-13);
        assert!(rel_l2(&beurling(&ex), &ex) < 1e-13);
        assert!(rel_l2(&beurling(&ey), &ey.map(|v| -v)) < 1e-13);
    }

    #[test]
    fn constants_are_annihilated() {
        let c = ComplexField::constant(torus(), Complex64::new(2.0, -1.0));
        for out in [d_z(&c), d_zbar(&c), cauchy(&c), beurling(&c)] {
            assert!(out.sup() < 1e-14);
        }
    }

    #[test]
    fn derivatives_of_windowed_linear_maps_match_finite_differences() {
        // w(z) = exp(-|z|^2) z̄ is smooth and effectively periodic on [-6, 6)^2.
        let g = GridSpec::new(256, 6.0, 4.0).unwrap();
        // the oracle samples the analytic function off-grid with a small step
        let h = 1e-2;
        let win = |z: Complex64| (-z.norm_sqr()).exp();
        let f_bar = |z: Complex64| win(z) * z.conj();
        let f_lin = |z: Complex64| win(z) * z;
        // centered fourth-order differences of the analytic function
        let fd = |f: &dyn Fn(Complex64) -> Complex64, z: Complex64, dir: Complex64| {
            (-f(z + 2.0 * h * dir) + 8.0 * f(z + h * dir) - 8.0 * f(z - h * dir)
                + f(z - 2.0 * h * dir))
                / (12.0 * h)
        };
        let dz_fd = |f: &dyn Fn(Complex64) -> Complex64, z: Complex64| {
            0.5 * (fd(f, z, Complex64::new(1.0, 0.0)) - I * fd(f, z, I))
        };
        let dzb_fd = |f: &dyn Fn(Complex64) -> Complex64, z: Complex64| {
            0.5 * (fd(f, z, Complex64::new(1.0, 0.0)) + I * fd(f, z, I))
        };
        let fb = ComplexField::from_fn(g, f_bar);
        let fl = ComplexField::from_fn(g, f_lin);
        let sp_dz = d_z(&fb);
        let sp_dzb = d_zbar(&fl);
        let mut err: f64 = 0.0;
        for idx in g.box_indices(0.5) {
            let z = g.point_at(idx);
            err = err.max((sp_dz.values()[idx] - dz_fd(&f_bar, z)).norm());
            err = err.max((sp_dzb.values()[idx] - dzb_fd(&f_lin, z)).norm());
        }
        assert!(err < 1e-6, "max deviation {err}");
    }

    #[test]
    fn dealias_filter_removes_high_modes() {
        let g = GridSpec::new(32, PI, 2.0).unwrap();
        let high = ComplexField::from_fn(g, |z| (I * 14.0 * z.re).exp());
        let low = ComplexField::from_fn(g, |z| (I * 3.0 * z.im).exp());
        let sp = Spectral::new(g).with_dealias(true);
        assert!(sp.filter(&high).sup() < 1e-13);
        assert!(rel_l2(&sp.filter(&low), &low) < 1e-13);
        assert!(sp.d_z(&high).sup() < 1e-13);
    }

    #[test]
    fn gradient_of_trig_field() {
        let g = torus();
        let f = RealField::from_fn(g, |z| (2.0 * z.re).sin() * z.im.cos());
        let (gx, gy) = Spectral::new(g).gradient(&f);
        let ex = RealField::from_fn(g, |z| 2.0 * (2.0 * z.re).cos() * z.im.cos());
        let ey = RealField::from_fn(g, |z| -(2.0 * z.re).sin() * z.im.sin());
        let dx = gx.zip_map(&ex, |a, b| a - b).unwrap().sup();
        let dy = gy.zip_map(&ey, |a, b| a - b).unwrap().sup();
        assert!(dx < 1e-12 && dy < 1e-12);
    }

    #[test]
    fn band_limited_fields_have_zero_mean() {
        let f = random_band_limited(torus(), 3, 8);
        assert!(f.mean().norm() < 1e-13);
        assert!(f.sup() > 0.1);
    }
}
