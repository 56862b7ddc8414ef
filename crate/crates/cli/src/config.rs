//! JSON run configuration and its validation.

use std::fs;
use std::path::{Path, PathBuf};

use beltrami_core::beltrami::{
    bump_field, random_general, random_reduced, BeltramiCoefficients, SmoothBump, SolveOptions,
};
use beltrami_core::{ComplexField, GridSpec};
use clap::ValueEnum;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Current config schema version.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Recover,
    Wronskian,
    AdjointProbe,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Recover => "recover",
            Self::Wronskian => "wronskian",
            Self::AdjointProbe => "adjoint-probe",
            Self::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexValue {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl ComplexValue {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn get(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
    pub support_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: ComplexValue,
    pub width: f64,
    pub amplitude: ComplexValue,
}

/// One coefficient field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSource {
    /// Constant over the whole torus.
    Const {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Bump(BumpConfig),
    Bumps {
        bumps: Vec<BumpConfig>,
    },
    /// Complex field binary written by this tool.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientsConfig {
    Reduced {
        k: f64,
        lambda: CoefficientSource,
    },
    General {
        k: f64,
        mu: CoefficientSource,
        nu: CoefficientSource,
    },
    /// Seeded random bumps scaled to `sup |lambda| = k`.
    RandomReduced {
        k: f64,
    },
    /// Seeded random bumps scaled to `sup (|mu| + |nu|) = k`.
    RandomGeneral {
        k: f64,
    },
}

impl CoefficientsConfig {
    pub fn k(&self) -> f64 {
        match self {
            Self::Reduced { k, .. }
            | Self::General { k, .. }
            | Self::RandomReduced { k }
            | Self::RandomGeneral { k } => *k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub max_k: f64,
    pub slopes: Vec<ComplexValue>,
    /// Hard bound on each relative equation residual.
    pub residual_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        Self {
            tol: o.tol,
            max_iter: o.max_iter,
            max_k: o.max_k,
            slopes: vec![
                ComplexValue::new(1.0, 0.0),
                ComplexValue::new(0.0, 1.0),
                ComplexValue::new(1.0, 1.0),
            ],
            residual_threshold: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            max_k: self.max_k,
            ..SolveOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterGrid {
    pub count: usize,
    pub half: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Explicit disk centers; when absent `center_grid` is used.
    pub centers: Option<Vec<ComplexValue>>,
    pub center_grid: CenterGrid,
    pub radii: Vec<f64>,
    pub p_list: Vec<f64>,
    pub decay_center: ComplexValue,
    /// Decreasing radii of the decay probe.
    pub decay_radii: Vec<f64>,
    /// Target vanishing order `N`.
    #[serde(rename = "N")]
    pub order: u32,
    /// Slope of the reduced solution whose `u_y` is probed.
    pub slope: ComplexValue,
    pub test_functions: usize,
    pub divergence_threshold: f64,
    pub adjoint_threshold: f64,
    /// Bound on the transfer defect at `n = 512`; coarser grids get `(512/n)^2` times more room.
    pub transfer_threshold: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            centers: None,
            center_grid: CenterGrid {
                count: 5,
                half: 0.5,
            },
            radii: vec![0.1, 0.2, 0.4],
            p_list: vec![2.2, 2.5, 3.0, 4.0],
            decay_center: ComplexValue::new(0.05, -0.05),
            decay_radii: beltrami_core::adjoint::geometric_radii(0.4, 10.0, 6),
            order: 3,
            slope: ComplexValue::new(0.0, 1.0),
            test_functions: 20,
            divergence_threshold: 1e-4,
            adjoint_threshold: 1e-3,
            transfer_threshold: 1e-5,
        }
    }
}

impl ProbeConfig {
    pub fn transfer_threshold_at(&self, n: usize) -> f64 {
        let coarse = (512.0 / n as f64).max(1.0);
        self.transfer_threshold * coarse * coarse
    }

    pub fn centers(&self) -> Vec<Complex64> {
        match &self.centers {
            Some(cs) => cs.iter().map(|c| c.get()).collect(),
            None => {
                beltrami_core::adjoint::center_grid(self.center_grid.count, self.center_grid.half)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryConfig {
    pub eps_rel: f64,
    /// Hard bound on the recovered coefficient error and pairwise disagreement.
    pub error_threshold: f64,
    pub min_regular_fraction: f64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            eps_rel: beltrami_core::recovery::DEFAULT_EPS_REL,
            error_threshold: 1e-2,
            min_regular_fraction: 0.999,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub command: Option<Command>,
    pub grid: GridConfig,
    pub coefficients: CoefficientsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub probes: ProbeConfig,
    #[serde(default)]
    pub recovery: RecoveryConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// A config checked against every module precondition.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: RunConfig,
    pub spec: GridSpec,
    pub coeffs: BeltramiCoefficients,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    /// Validates ranges and builds the grid and coefficients. Relative
    /// coefficient file paths resolve against `base`.
    pub fn validate(self, command: Command, base: &Path) -> Result<Validated, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(c) = self.command {
            if c != command {
                return Err(bad(format!(
                    "config is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )));
            }
        }
        let g = &self.grid;
        let spec =
            GridSpec::new(g.n, g.half_width, g.support_radius).map_err(|e| bad(e.to_string()))?;
        self.check_solver()?;
        let coeffs = self.build_coefficients(spec, base)?;
        let needs_pair = matches!(
            command,
            Command::Recover | Command::Wronskian | Command::Verify
        );
        if needs_pair && self.solver.slopes.len() < 2 {
            return Err(bad("at least two slopes are needed"));
        }
        if command == Command::AdjointProbe && !coeffs.is_reduced() {
            return Err(bad("adjoint-probe needs reduced coefficients"));
        }
        if matches!(command, Command::AdjointProbe | Command::Verify) && coeffs.is_reduced() {
            self.check_probes(&spec)?;
        }
        if matches!(command, Command::Recover | Command::Verify) {
            let r = &self.recovery;
            if !(r.eps_rel > 0.0 && r.eps_rel < 1.0) {
                return Err(bad("recovery.eps_rel must lie in (0, 1)"));
            }
        }
        Ok(Validated {
            config: self,
            spec,
            coeffs,
        })
    }

    fn check_solver(&self) -> Result<(), CliError> {
        let s = &self.solver;
        if !(s.tol > 0.0) || s.max_iter == 0 {
            return Err(bad(
                "solver.tol must be positive and solver.max_iter nonzero",
            ));
        }
        if !(s.max_k > 0.0 && s.max_k < 1.0) {
            return Err(bad("solver.max_k must lie in (0, 1)"));
        }
        let k = self.coefficients.k();
        if !(0.0..1.0).contains(&k) {
            return Err(bad(format!("coefficients.k = {k} must lie in [0, 1)")));
        }
        if k > s.max_k {
            return Err(bad(format!(
                "coefficients.k = {k} exceeds solver.max_k = {}",
                s.max_k
            )));
        }
        if s.slopes.is_empty() || s.slopes.iter().any(|a| !(a.get().norm() > 0.0)) {
            return Err(bad("solver.slopes must be nonempty and nonzero"));
        }
        Ok(())
    }

    fn check_probes(&self, spec: &GridSpec) -> Result<(), CliError> {
        let p = &self.probes;
        let rho = spec.support_radius();
        if p.radii.is_empty() || p.radii.iter().any(|&r| !(r > 0.0)) {
            return Err(bad("probes.radii must be positive"));
        }
        for c in p.centers() {
            for &r in &p.radii {
                if c.re.abs() + 2.0 * r > rho || c.im.abs() + 2.0 * r > rho {
                    return Err(bad(format!(
                        "doubled disk at ({}, {}) with radius {} leaves the support box",
                        c.re, c.im, r
                    )));
                }
            }
        }
        if p.p_list.iter().any(|&q| !(q > 2.0 && q <= 8.0)) {
            return Err(bad("probes.p_list entries must lie in (2, 8]"));
        }
        if p.decay_radii.len() < 3 || p.decay_radii.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(bad("probes.decay_radii needs at least 3 decreasing radii"));
        }
        let z0 = p.decay_center;
        if p.decay_radii
            .iter()
            .any(|&r| !(r > 0.0) || z0.re.abs() + r > rho || z0.im.abs() + r > rho)
        {
            return Err(bad(
                "decay disks must be positive and inside the support box",
            ));
        }
        if p.order == 0 {
            return Err(bad("probes.N must be positive"));
        }
        if p.test_functions == 0 {
            return Err(bad("probes.test_functions must be positive"));
        }
        if !(p.slope.get().norm() > 0.0) {
            return Err(bad("probes.slope must be nonzero"));
        }
        Ok(())
    }

    fn build_coefficients(
        &self,
        spec: GridSpec,
        base: &Path,
    ) -> Result<BeltramiCoefficients, CliError> {
        let core = |e: beltrami_core::Error| bad(format!("coefficients: {e}"));
        match &self.coefficients {
            CoefficientsConfig::Reduced { k, lambda } => match lambda {
                CoefficientSource::Const { re, im } => {
                    BeltramiCoefficients::uniform_reduced(spec, Complex64::new(*re, *im), *k)
                        .map_err(core)
                }
                other => {
                    BeltramiCoefficients::reduced(sample(other, spec, base)?, *k).map_err(core)
                }
            },
            CoefficientsConfig::General { k, mu, nu } => match (mu, nu) {
                (
                    CoefficientSource::Const { re: a, im: b },
                    CoefficientSource::Const { re: c, im: d },
                ) => BeltramiCoefficients::uniform_general(
                    spec,
                    Complex64::new(*a, *b),
                    Complex64::new(*c, *d),
                    *k,
                )
                .map_err(core),
                (CoefficientSource::Const { .. }, _) | (_, CoefficientSource::Const { .. }) => Err(
                    bad("mu and nu must both be constant or both compactly supported"),
                ),
                (m, n) => BeltramiCoefficients::general(
                    sample(m, spec, base)?,
                    sample(n, spec, base)?,
                    *k,
                )
                .map_err(core),
            },
            CoefficientsConfig::RandomReduced { k } => {
                random_reduced(spec, self.seed, *k).map_err(core)
            }
            CoefficientsConfig::RandomGeneral { k } => {
                random_general(spec, self.seed, *k).map_err(core)
            }
        }
    }
}

fn to_bump(b: &BumpConfig) -> Result<SmoothBump, CliError> {
    if !(b.width > 0.0) {
        return Err(bad("bump width must be positive"));
    }
    Ok(SmoothBump {
        center: b.center.get(),
        width: b.width,
        amplitude: b.amplitude.get(),
    })
}

fn sample(src: &CoefficientSource, spec: GridSpec, base: &Path) -> Result<ComplexField, CliError> {
    match src {
        CoefficientSource::Const { .. } => {
            unreachable!("constants are handled as uniform coefficients")
        }
        CoefficientSource::Bump(b) => Ok(bump_field(spec, &[to_bump(b)?])),
        CoefficientSource::Bumps { bumps } => {
            let bs = bumps.iter().map(to_bump).collect::<Result<Vec<_>, _>>()?;
            Ok(bump_field(spec, &bs))
        }
        CoefficientSource::File { path } => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                base.join(path)
            };
            let bytes =
                fs::read(&full).map_err(|e| bad(format!("cannot read {}: {e}", full.display())))?;
            ComplexField::decode(&bytes, spec).map_err(|e| bad(format!("{}: {e}", full.display())))
        }
    }
}
