//! Command orchestration. All files are written from this module.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use beltrami_core::adjoint::{
    adjoint_residual, divergence_residual, gehring_scan, matrix_from_lambda, reverse_holder_probe,
    transfer_defect, zero_decay_probe, RealGradient, TestFunction,
};
use beltrami_core::beltrami::{solve, BeltramiCoefficients, CoefficientKind, SolveResult};
use beltrami_core::field::{norm, NormKind};
use beltrami_core::recovery::{consistency_check, ellipticity_check, recover_pair};
use beltrami_core::transforms::{random_band_limited, Spectral};
use beltrami_core::wronskian::{
    chain_identity_residual, dominant_sign_fraction, field_stats, near_zero_fraction,
    stoilow_lambda, wronskian, FieldStats,
};
use beltrami_core::{ComplexField, GridSpec, RealField};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, Validated};
use crate::error::{CliError, EXIT_INVARIANT, EXIT_NONCONVERGENCE, EXIT_PASS};
use crate::report::{write_json, Check, Manifest, Summary, Timing};

/// Result of a run: its exit code and summary.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: Summary,
}

struct Runner<'a> {
    v: &'a Validated,
    out: PathBuf,
    checks: Vec<Check>,
    timings: Vec<Timing>,
    files: Vec<PathBuf>,
    converged: bool,
}

#[derive(Serialize)]
struct SolutionStats {
    slope_re: f64,
    slope_im: f64,
    im_fz: FieldStats,
    jacobian: FieldStats,
}

#[derive(Serialize)]
struct InvariantReport {
    solutions: Vec<SolutionStats>,
    wronskian: FieldStats,
}

impl<'a> Runner<'a> {
    fn timed<T>(
        &mut self,
        stage: &str,
        f: impl FnOnce(&mut Self) -> Result<T, CliError>,
    ) -> Result<T, CliError> {
        let start = Instant::now();
        let out = f(self)?;
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(PathBuf::from(name));
        self.out.join(name)
    }

    fn write_complex(&mut self, name: &str, f: &ComplexField) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(p, f.encode())?;
        Ok(())
    }

    fn write_real(&mut self, name: &str, f: &RealField) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(p, f.encode())?;
        Ok(())
    }

    fn write_csv(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut Vec<u8>) -> beltrami_core::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        let p = self.path(name);
        fs::write(p, buf)?;
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let p = self.path(name);
        write_json(&p, value)?;
        Ok(())
    }

    fn spec(&self) -> GridSpec {
        self.v.spec
    }

    fn coeffs(&self) -> &BeltramiCoefficients {
        &self.v.coeffs
    }

    fn transforms(&mut self) -> Result<(), CliError> {
        let spec = self.spec();
        let sp = Spectral::new(spec);
        let h = random_band_limited(spec, self.v.config.seed, spec.n() / 8);
        let nh = norm(&h, NormKind::L2)?;
        let s = sp.beurling(&h);
        let ch = sp.cauchy(&h);
        let inv = sp.d_zbar(&ch).zip_map(&h, |a, b| a - b)?;
        let fac = sp.d_z(&ch).zip_map(&s, |a, b| a - b)?;
        self.checks.push(Check::at_most(
            "transforms",
            "beurling_isometry_defect",
            (norm(&s, NormKind::L2)? / nh - 1.0).abs(),
            1e-12,
        ));
        self.checks.push(Check::at_most(
            "transforms",
            "cauchy_inverse_defect",
            norm(&inv, NormKind::L2)? / nh,
            1e-10,
        ));
        self.checks.push(Check::at_most(
            "transforms",
            "beurling_factorization_defect",
            norm(&fac, NormKind::L2)? / nh,
            1e-10,
        ));
        Ok(())
    }

    fn solve_all(&mut self) -> Result<Vec<SolveResult>, CliError> {
        let opts = self.v.config.solver.options();
        let slopes: Vec<Complex64> = self
            .v
            .config
            .solver
            .slopes
            .iter()
            .map(|s| s.get())
            .collect();
        let coeffs = self.coeffs();
        let sols = slopes
            .par_iter()
            .map(|&a| solve(coeffs, a, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        let k = coeffs.k();
        let bound = if k > 0.0 {
            (opts.tol.ln() / k.ln()).ceil() + 10.0
        } else {
            11.0
        };
        let threshold = self.v.config.solver.residual_threshold;
        for (i, s) in sols.iter().enumerate() {
            self.converged &= s.converged();
            self.checks.push(Check::at_most(
                "beltrami",
                format!("solve_{i}.residual"),
                s.residual_l2(),
                threshold,
            ));
            self.checks.push(Check::at_most(
                "beltrami",
                format!("solve_{i}.iterations"),
                s.iterations() as f64,
                bound,
            ));
            self.write_complex(&format!("solve_{i}_fz.bin"), s.fz())?;
            self.write_complex(&format!("solve_{i}_fzbar.bin"), s.fzbar())?;
            self.write_complex(&format!("solve_{i}_displacement.bin"), s.displacement())?;
        }
        let summaries: Vec<_> = sols.iter().map(|s| s.summary()).collect();
        self.write_json("solve.json", &summaries)?;
        Ok(sols)
    }

    fn wronskian(&mut self, sols: &[SolveResult]) -> Result<(), CliError> {
        let (phi, psi) = (&sols[0], &sols[1]);
        let mut solutions = Vec::new();
        for (i, s) in sols.iter().enumerate() {
            let im = s.im_fz();
            let jac = s.jacobian();
            let fz_sup = s.fz().sup();
            let jmin = jac.values().iter().copied().fold(f64::INFINITY, f64::min);
            self.checks.push(Check::at_least(
                "wronskian",
                format!("solve_{i}.jacobian_min_relative"),
                jmin / (fz_sup * fz_sup),
                -1e-8,
            ));
            let fr: Vec<f64> = [1e-1, 1e-2, 1e-3]
                .iter()
                .map(|&e| near_zero_fraction(&im, e))
                .collect::<Result<_, _>>()?;
            let trend = (fr[0] - fr[1]).min(fr[1] - fr[2]);
            self.checks.push(
                Check::at_least(
                    "wronskian",
                    format!("solve_{i}.im_fz_near_zero_trend"),
                    trend,
                    0.0,
                )
                .soft(),
            );
            self.write_real(&format!("solve_{i}_im_fz.bin"), &im)?;
            self.write_real(&format!("solve_{i}_jacobian.bin"), &jac)?;
            solutions.push(SolutionStats {
                slope_re: s.slope().re,
                slope_im: s.slope().im,
                im_fz: field_stats(&im)?,
                jacobian: field_stats(&jac)?,
            });
        }
        let j = wronskian(phi, psi)?;
        let j_rev = wronskian(psi, phi)?;
        let anti = j.zip_map(&j_rev, |a, b| a + b)?.sup();
        self.checks.push(Check::at_most(
            "wronskian",
            "antisymmetry_defect",
            anti,
            0.0,
        ));
        self.checks.push(Check::at_most(
            "wronskian",
            "near_zero_fraction@0.001",
            near_zero_fraction(&j, 1e-3)?,
            0.005,
        ));
        self.checks.push(Check::at_least(
            "wronskian",
            "dominant_sign_fraction",
            dominant_sign_fraction(&j),
            0.99,
        ));
        let dep = phi.affine_image(2.0, Complex64::new(5.0, 0.0));
        self.checks.push(Check::at_most(
            "wronskian",
            "dependent_pair_sup",
            wronskian(phi, &dep)?.sup(),
            1e-10,
        ));
        let (mu, nu) = self.coeffs().general_fields();
        let chain = chain_identity_residual(phi, psi, &mu, &nu)?;
        let tol = self.v.config.solver.tol;
        self.checks.push(Check::at_most(
            "wronskian",
            "chain_identity_residual",
            chain,
            10.0 * tol,
        ));
        let lam = stoilow_lambda(&mu, &nu)?;
        self.checks.push(Check::at_most(
            "wronskian",
            "stoilow_lambda_sup",
            lam.sup(),
            1.0,
        ));
        self.write_real("wronskian.bin", &j)?;
        let report = InvariantReport {
            solutions,
            wronskian: field_stats(&j)?,
        };
        self.write_json("invariants.json", &report)?;
        Ok(())
    }

    fn recover(&mut self, sols: &[SolveResult]) -> Result<(), CliError> {
        let rc = self.v.config.recovery.clone();
        let r = recover_pair(&sols[0], &sols[1], rc.eps_rel)?;
        let (mu, nu) = self.coeffs().general_fields();
        self.checks.push(Check::at_most(
            "recovery",
            "coefficient_error",
            r.coefficient_error(&mu, &nu)?,
            rc.error_threshold,
        ));
        self.checks.push(Check::at_least(
            "recovery",
            "regular_fraction",
            r.regular_fraction,
            rc.min_regular_fraction,
        ));
        let ell = ellipticity_check(&r, self.coeffs().k());
        self.checks.push(Check::at_most(
            "recovery",
            "sup_ellipticity",
            ell.sup,
            ell.bound,
        ));
        let disagreement = if sols.len() >= 3 {
            let rep = consistency_check(sols, rc.eps_rel)?;
            self.checks.push(Check::at_most(
                "recovery",
                "pairwise_max_disagreement",
                rep.max_disagreement,
                rc.error_threshold,
            ));
            Some(rep.max_disagreement)
        } else {
            None
        };
        self.write_complex("mu_hat.bin", &r.mu_hat)?;
        self.write_complex("nu_hat.bin", &r.nu_hat)?;
        self.write_real("recovery_wronskian.bin", &r.wronskian)?;
        self.write_real("singular_mask.bin", &r.singular_field())?;
        self.write_json("recovery.json", &r.summary(disagreement))?;
        Ok(())
    }

    fn adjoint(&mut self, sols: &[SolveResult]) -> Result<(), CliError> {
        let cfg = self.v.config.clone();
        let p = &cfg.probes;
        let lambda = match self.coeffs().kind() {
            CoefficientKind::Reduced { lambda } => lambda.clone(),
            CoefficientKind::General { .. } => return Ok(()),
        };
        let k = self.coeffs().k();
        let slope = p.slope.get();
        let f = match sols.iter().find(|s| s.slope() == slope) {
            Some(s) => s.clone(),
            None => {
                let s = solve(self.coeffs(), slope, &cfg.solver.options())?;
                self.converged &= s.converged();
                s
            }
        };
        let matrix = matrix_from_lambda(&lambda, k)?;
        let (lo, hi) = matrix.eigen_range();
        let kk = matrix.distortion;
        self.checks.push(Check::at_least(
            "adjoint",
            "sigma_eigen_min_times_K",
            lo * kk,
            1.0 - 1e-12,
        ));
        self.checks.push(Check::at_most(
            "adjoint",
            "sigma_eigen_max_over_K",
            hi / kk,
            1.0 + 1e-12,
        ));

        let grad = RealGradient::of_solution(&f);
        let family = TestFunction::family(self.spec(), p.test_functions, cfg.seed)?;
        let rows = family
            .par_iter()
            .map(|phi| {
                Ok((
                    divergence_residual(&grad, &matrix, phi)?.value,
                    adjoint_residual(&grad.y, &matrix, phi)?.value,
                    transfer_defect(&grad, &matrix, phi)?,
                ))
            })
            .collect::<beltrami_core::Result<Vec<_>>>()?;
        let max = |sel: fn(&(f64, f64, f64)) -> f64| rows.iter().map(sel).fold(0.0, f64::max);
        self.checks.push(Check::at_most(
            "adjoint",
            "divergence_residual_max",
            max(|r| r.0),
            p.divergence_threshold,
        ));
        self.checks.push(Check::at_most(
            "adjoint",
            "adjoint_residual_max",
            max(|r| r.1),
            p.adjoint_threshold,
        ));
        let transfer = p.transfer_threshold_at(self.spec().n());
        self.checks.push(Check::at_most(
            "adjoint",
            "transfer_defect_max",
            max(|r| r.2),
            transfer,
        ));

        let omega = f.u_y();
        let centers = p.centers();
        let rh = reverse_holder_probe(&omega, &centers, &p.radii)?;
        self.checks.push(Check::at_most(
            "adjoint",
            "reverse_holder_spread",
            rh.spread(),
            beltrami_core::adjoint::STABILITY_RATIO,
        ));
        self.checks.push(Check::report(
            "adjoint",
            "reverse_holder_max_c_hat",
            rh.max_c(),
        ));
        self.write_csv("reverse_holder.csv", |w| rh.write_csv(w))?;
        if !p.p_list.is_empty() {
            let scan = gehring_scan(&omega, &p.p_list, &centers, &p.radii)?;
            for t in &scan.tables {
                self.write_csv(&format!("gehring_p{}.csv", t.p), |w| t.write_csv(w))?;
            }
            self.checks.push(Check::at_least(
                "adjoint",
                "gehring_largest_stable_p",
                scan.largest_stable_p.unwrap_or(0.0),
                2.2,
            ));
        }
        let decay = zero_decay_probe(&omega, p.decay_center.get(), &p.decay_radii, p.order)?;
        self.checks
            .push(Check::at_most("adjoint", "decay_order", decay.order, p.order as f64).soft());
        self.write_csv("decay.csv", |w| decay.write_csv(w))?;
        self.write_real("omega.bin", &omega)?;
        Ok(())
    }
}

/// Runs `command` and writes every artifact to `out`.
pub fn run(command: Command, v: &Validated, out: &Path) -> Result<Outcome, CliError> {
    fs::create_dir_all(out)?;
    let mut r = Runner {
        v,
        out: out.to_path_buf(),
        checks: Vec::new(),
        timings: Vec::new(),
        files: Vec::new(),
        converged: true,
    };
    match command {
        Command::Solve => {
            r.timed("solve", |r| r.solve_all())?;
        }
        Command::Recover => {
            let sols = r.timed("solve", |r| r.solve_all())?;
            r.timed("recover", |r| r.recover(&sols))?;
        }
        Command::Wronskian => {
            let sols = r.timed("solve", |r| r.solve_all())?;
            r.timed("wronskian", |r| r.wronskian(&sols))?;
        }
        Command::AdjointProbe => {
            r.timed("adjoint", |r| r.adjoint(&[]))?;
        }
        Command::Verify => {
            r.timed("transforms", |r| r.transforms())?;
            let sols = r.timed("solve", |r| r.solve_all())?;
            r.timed("wronskian", |r| r.wronskian(&sols))?;
            r.timed("recover", |r| r.recover(&sols))?;
            r.timed("adjoint", |r| r.adjoint(&sols))?;
        }
    }
    let summary = Summary::new(
        command,
        v.config.seed,
        std::mem::take(&mut r.checks),
        r.converged,
    );
    r.write_json("summary.json", &summary)?;
    r.files.push(PathBuf::from("manifest.json"));
    let manifest = Manifest {
        command: command.name(),
        config: v.config.clone(),
        versions: Manifest::versions(),
        threads: rayon::current_num_threads(),
        timings: r.timings,
        files: r.files,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    let exit_code = if !summary.converged {
        EXIT_NONCONVERGENCE
    } else if summary.all_hard_pass {
        EXIT_PASS
    } else {
        EXIT_INVARIANT
    };
    Ok(Outcome { exit_code, summary })
}
