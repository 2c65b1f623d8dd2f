//! Command-line front end: solve/verify/family/ray/ckmc/cone/geodesic.
//!
//! Every subcommand emits a single machine-readable report (see
//! [`ahsolve::report`]): JSON by default, CSV or both via `--emit`. The exit
//! status is 0 when all checks pass, 1 when a check fails (the failing
//! residuals are named on stderr), and 2 on configuration or solver errors.
//!
//! Determinism: the same command line and `--seed` produce byte-identical
//! reports outside the `timing` field. `AHSOLVE_THREADS` caps parallelism
//! (the current implementation is single-threaded; the value is recorded in
//! the report so runs remain comparable).

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;

use ahsolve::cone::{
    determinant_identities, dust_residual, level_surface_report, monge_ampere_potential,
    thomas_coefficients, ConeGrid,
};
use ahsolve::differential::{Coeff, KDifferential};
use ahsolve::family::{magnetic_geodesic, SphereFamily, TorusFamily};
use ahsolve::grid::{LatticeTorus, SphereChart, Surface};
use ahsolve::metric::{ConformalMetric, OneForm};
use ahsolve::report::{Emit, Report};
use ahsolve::solver::{
    ckmc_bracket, ray_solve, solve_ckmc, solve_newton, OperatorSpec, OperatorTerm,
};
use ahsolve::structure::AHStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Normalize {
    /// Rescale reported metrics to the flat-chart volume.
    FixVolume,
    /// Keep the distinguished (constant-uR) gauge unchanged (default).
    FixUr,
}

#[derive(Debug, Args)]
struct Common {
    /// Torus grid resolution per side.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Solver / check tolerance (per-command default when omitted).
    #[arg(long)]
    tol: Option<f64>,
    /// Output path stem (extension replaced per format); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format(s).
    #[arg(long, value_enum, default_value_t = Emit::Json)]
    emit: Emit,
    /// RNG seed for randomized sweeps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Metric normalization for reported output.
    #[arg(long, value_enum, default_value_t = Normalize::FixUr)]
    normalize: Normalize,
}

#[derive(Debug, Parser)]
#[command(
    name = "ahsolve",
    about = "Einstein structures on surfaces: solvers, closed-form families, and residual suites"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Solve the conformal-factor equation on a torus background.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Use a flat-torus background chart (the only supported backend).
        #[arg(long)]
        torus: bool,
        /// Constant curvature target (must be negative).
        #[arg(long, allow_hyphen_values = true)]
        kappa: f64,
        /// Constant |B|² of the cubic torsion term.
        #[arg(long = "B-norm2")]
        b_norm2: Option<f64>,
        /// Amplitude a of a background conformal factor e^{a cos x}.
        #[arg(long, default_value_t = 0.0)]
        background_cos: f64,
    },
    /// Check the Einstein residual suite of a structure file.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Path to a structure JSON file (torus charts).
        #[arg(long)]
        structure: PathBuf,
    },
    /// Closed-form one-parameter families and their invariants.
    Family {
        #[command(flatten)]
        common: Common,
        #[command(subcommand)]
        which: FamilyCmd,
    },
    /// Solve along a torsion ray e^{3t}B and certify monotonicity bounds.
    Ray {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true, default_value_t = -2.0)]
        kappa: f64,
        #[arg(long = "B-norm2", default_value_t = 8.0)]
        b_norm2: f64,
        /// Comma-separated list of ray parameters t ≥ 0.
        #[arg(long, default_value = "0,0.5,1,2")]
        t_list: String,
    },
    /// Solve the constant-mean-curvature-type equation with ±ε torsion terms.
    Ckmc {
        #[command(flatten)]
        common: Common,
        /// Constant c in the curvature target 2c.
        #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
        c: f64,
        /// Sign ε ∈ {+1, −1}.
        #[arg(long, allow_hyphen_values = true, default_value_t = 1)]
        eps: i32,
        /// Constant |B|² of the cubic differential term.
        #[arg(long = "B-norm2")]
        b_norm2: Option<f64>,
        /// Constant |H|² of the degree −1 differential term.
        #[arg(long = "H-norm2")]
        h_norm2: Option<f64>,
    },
    /// Cone-metric identity suite over an exact torus base.
    Cone {
        #[command(flatten)]
        common: Common,
        /// Constant |B|² of the exact base (uR = −¼|B|²).
        #[arg(long = "B-norm2", default_value_t = 8.0)]
        b_norm2: f64,
        /// Fiber sample range start:end:step.
        #[arg(long, default_value = "-0.2:0.2:0.1", allow_hyphen_values = true)]
        t: String,
        /// Domain parameter C of the one-variable potential.
        #[arg(long, default_value_t = 2.0)]
        c_param: f64,
    },
    /// Integrate a magnetic geodesic on the sphere family.
    Geodesic {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true, default_value_t = 3.0)]
        kappa: f64,
        /// Starting radius (1 = the equator).
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        /// Number of chart revolutions to integrate.
        #[arg(long, default_value_t = 1.0)]
        revolutions: f64,
        /// Scale applied to the magnetic forcing term.
        #[arg(long, default_value_t = 1.0)]
        mu_scale: f64,
    },
}

#[derive(Debug, Subcommand)]
enum FamilyCmd {
    /// Genus-0 family parametrized by κ > −4.
    Sphere {
        #[arg(long, allow_hyphen_values = true)]
        kappa: f64,
        /// Also build the grid structure and run the residual suite.
        #[arg(long)]
        verify: bool,
    },
    /// Genus-1 family parametrized by κ < −4.
    Torus {
        #[arg(long, allow_hyphen_values = true)]
        kappa: f64,
        #[arg(long)]
        verify: bool,
    },
}

type AnyError = Box<dyn std::error::Error>;

fn torus_surface(n: usize) -> Result<Surface, AnyError> {
    Ok(Surface::Torus(LatticeTorus::square(
        2.0 * std::f64::consts::PI,
        n,
    )?))
}

/// Constant-coefficient differential of degree k with |B|²_flat = n2.
fn constant_differential(surface: Surface, degree: i32, n2: f64) -> Result<KDifferential, AnyError> {
    if degree == 3 {
        return Ok(KDifferential::constant_cubic(surface, n2)?);
    }
    // |B|²_flat = 2^{k+1}|c|² for k > 0 and 2^{1+k}|c|² for k < 0.
    let factor = 2f64.powi(degree + 1);
    let c = (n2 / factor).sqrt();
    Ok(KDifferential::realize(
        degree,
        Coeff::Constant(Complex64::new(c, 0.0)),
        surface,
    )?)
}

fn new_report(common: &Common, label: &str) -> Report {
    let normalization = match common.normalize {
        Normalize::FixVolume => "fix-volume",
        Normalize::FixUr => "fix-ur",
    };
    let mut r = Report::new(label, common.seed, normalization);
    r.set_config("grid", common.grid);
    if let Some(tol) = common.tol {
        r.set_config("tol", tol);
    }
    if let Ok(threads) = std::env::var("AHSOLVE_THREADS") {
        r.set_config("threads", threads);
    }
    r
}

fn phi_stats(phi: &[f64]) -> (f64, f64) {
    let mean = phi.iter().sum::<f64>() / phi.len() as f64;
    let dev = phi.iter().map(|v| (v - mean).abs()).fold(0.0f64, f64::max);
    (mean, dev)
}

fn run_solve(
    common: &Common,
    torus: bool,
    kappa: f64,
    b_norm2: Option<f64>,
    background_cos: f64,
) -> Result<Report, AnyError> {
    if !torus {
        return Err("only --torus backgrounds are supported by the solver".into());
    }
    let tol = common.tol.unwrap_or(1e-12);
    let mut report = new_report(common, "solve");
    report.set_config("kappa", kappa);
    let surface = torus_surface(common.grid)?;
    let log_factor: Vec<f64> = (0..surface.len())
        .map(|i| background_cos * surface.point(i)[0].cos())
        .collect();
    let metric = ConformalMetric::new(surface.clone(), ahsolve::metric::Base::FlatTorus, log_factor)?;
    let mut terms = Vec::new();
    if let Some(n2) = b_norm2 {
        report.set_config("B_norm2", n2);
        let b = constant_differential(surface.clone(), 3, n2)?;
        terms.push(OperatorTerm::from_differential(&b, 1.0));
    }
    let spec = OperatorSpec::constant_curvature(metric, kappa, terms)?;
    let phi0 = vec![0.0; surface.len()];
    let mut solved = solve_newton(&spec, &phi0, tol)?;

    if common.normalize == Normalize::FixVolume {
        // Shift φ so that e^φ h has the flat-chart volume.
        let target = spec.background.surface.integrate_flat(&vec![1.0; surface.len()]);
        let lam = spec.background.total_lambda();
        let vol_field: Vec<f64> = solved
            .phi
            .iter()
            .zip(&lam)
            .map(|(p, l)| p.exp() * l)
            .collect();
        let vol = spec.background.surface.integrate_flat(&vol_field);
        let shift = (vol / target).ln();
        for p in &mut solved.phi {
            *p -= shift;
        }
        report.add_value("volume_shift", shift);
    }

    let (mean, dev) = phi_stats(&solved.phi);
    report.add_value("phi_mean", mean);
    report.add_value("phi_max_dev", dev);
    report.add_value("iterations", solved.iterations as f64);
    let residual = *solved.residual_history.last().unwrap_or(&f64::NAN);
    report.add_check("newton_residual", residual, tol.max(1e-10));
    if let Some(cert) = &solved.bound_certificate {
        report.add_value("factor_lower_bound", cert.lower);
        report.add_value("factor_upper_bound", cert.upper);
        report.add_check("bound_violation", cert.max_violation.max(0.0), 1e-10);
    }
    Ok(report)
}

/// On-disk structure description: a torus chart, an optional conformal
/// factor, an optional cubic differential (constant or sampled complex
/// coefficient), and an optional one-form.
#[derive(Debug, Deserialize)]
struct StructureFile {
    surface: SurfaceSpec,
    #[serde(default)]
    log_factor: Option<FieldSpec>,
    #[serde(default)]
    b: Option<CoeffSpec>,
    #[serde(default)]
    gamma: Option<GammaSpec>,
}

#[derive(Debug, Deserialize)]
struct SurfaceSpec {
    kind: String,
    side: f64,
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FieldSpec {
    Constant(f64),
    Samples(Vec<f64>),
}

impl FieldSpec {
    fn realize(&self, len: usize) -> Result<Vec<f64>, AnyError> {
        match self {
            FieldSpec::Constant(v) => Ok(vec![*v; len]),
            FieldSpec::Samples(s) if s.len() == len => Ok(s.clone()),
            FieldSpec::Samples(s) => {
                Err(format!("field has {} samples, grid needs {len}", s.len()).into())
            }
        }
    }
}

#[derive(Debug, Deserialize)]
struct CoeffSpec {
    #[serde(default = "default_degree")]
    degree: i32,
    re: FieldSpec,
    im: FieldSpec,
}

fn default_degree() -> i32 {
    3
}

#[derive(Debug, Deserialize)]
struct GammaSpec {
    x: Vec<f64>,
    y: Vec<f64>,
}

fn load_structure(path: &std::path::Path) -> Result<AHStructure, AnyError> {
    let text = std::fs::read_to_string(path)?;
    let file: StructureFile = serde_json::from_str(&text)?;
    if file.surface.kind != "torus" {
        return Err(format!(
            "unsupported surface kind {:?}; structure files describe torus charts",
            file.surface.kind
        )
        .into());
    }
    let surface = Surface::Torus(LatticeTorus::square(file.surface.side, file.surface.n)?);
    let len = surface.len();
    let log_factor = match &file.log_factor {
        Some(f) => f.realize(len)?,
        None => vec![0.0; len],
    };
    let metric = ConformalMetric::new(surface.clone(), ahsolve::metric::Base::FlatTorus, log_factor)?;
    let b = match &file.b {
        None => None,
        Some(spec) => {
            let re = spec.re.realize(len)?;
            let im = spec.im.realize(len)?;
            let samples: Vec<Complex64> = re
                .iter()
                .zip(&im)
                .map(|(r, i)| Complex64::new(*r, *i))
                .collect();
            Some(KDifferential::realize(
                spec.degree,
                Coeff::Samples(samples),
                surface.clone(),
            )?)
        }
    };
    let gamma = match &file.gamma {
        None => None,
        Some(g) => Some(OneForm {
            comp_x: FieldSpec::Samples(g.x.clone()).realize(len)?,
            comp_y: FieldSpec::Samples(g.y.clone()).realize(len)?,
        }),
    };
    Ok(AHStructure::new(metric, b, gamma)?)
}

fn run_verify(common: &Common, path: &std::path::Path) -> Result<Report, AnyError> {
    let tol = common.tol.unwrap_or(1e-5);
    let mut report = new_report(common, "verify");
    report.set_config("structure", path.display().to_string());
    let s = load_structure(path)?;
    let r = s.einstein_residuals()?;
    report.add_check("div_b", r.div_b, tol);
    report.add_check("b_gamma", r.b_gamma, tol);
    report.add_check("killing", r.killing, tol);
    report.add_check("const_defect", r.const_defect, tol);
    if let Ok(v) = s.vortex_identity(1) {
        report.add_value("kappa", v.kappa);
        report.add_value("nu", v.nu);
        report.add_check("vortex_defect", v.defect, tol.max(1e-6));
    }
    Ok(report)
}

fn run_family(common: &Common, which: &FamilyCmd) -> Result<Report, AnyError> {
    match which {
        FamilyCmd::Sphere { kappa, verify } => {
            let mut report = new_report(common, "family sphere");
            report.set_config("kappa", kappa);
            let fam = SphereFamily::new(*kappa);
            report.add_value("nu", fam.nu());
            report.add_value("theta", fam.theta());
            report.add_value("volume", fam.volume());
            let (l_h, l_dual) = fam.equator_lengths();
            report.add_value("equator_length", l_h);
            report.add_value("dual_equator_length", l_dual);
            let nu_quadrature = kappa * fam.volume_quadrature();
            report.add_value("nu_quadrature", nu_quadrature);
            if fam.nu().abs() > 1e-12 {
                report.add_check(
                    "nu_quadrature_rel_error",
                    (nu_quadrature - fam.nu()) / fam.nu(),
                    1e-6,
                );
            }
            let theta = fam.theta();
            let nu_theta = 16.0 * std::f64::consts::PI * theta / (2.0 * theta).tan();
            report.add_check("nu_theta_defect", nu_theta - fam.nu(), 1e-10);
            if *verify {
                let s = fam.structure(SphereChart::default_chart())?;
                let r = s.einstein_residuals()?;
                let tol = common.tol.unwrap_or(1e-5);
                report.add_check("div_b", r.div_b, tol);
                report.add_check("killing", r.killing, tol);
                report.add_check("const_defect", r.const_defect, tol);
                let v = s.vortex_identity(0)?;
                report.add_value("nu_grid", v.nu);
                report.add_check("vortex_defect", v.defect, 1e-4);
                let weyl = s.vortex_residual()?;
                report.add_check("weyl_vortex_residual", weyl, 1e-6);
            }
            Ok(report)
        }
        FamilyCmd::Torus { kappa, verify } => {
            let mut report = new_report(common, "family torus");
            report.set_config("kappa", kappa);
            let fam = TorusFamily::new(*kappa)?;
            report.add_value("nu", fam.nu());
            report.add_value("volume", fam.volume());
            let p = fam.eval(0.0);
            report.add_value("h_coeff_min", p.h_coeff);
            report.add_value("sr_min", p.sr);
            if *verify {
                let s = fam.structure(common.grid)?;
                let r = s.einstein_residuals()?;
                let tol = common.tol.unwrap_or(1e-10);
                report.add_check("div_b", r.div_b, tol);
                report.add_check("killing", r.killing, tol);
                report.add_check("const_defect", r.const_defect, tol);
                let v = s.vortex_identity(1)?;
                report.add_value("nu_grid", v.nu);
                report.add_check("nu_defect", v.nu - fam.nu(), 1e-8);
                report.add_check("vortex_defect", v.defect, 1e-8);
            }
            Ok(report)
        }
    }
}

fn run_ray(common: &Common, kappa: f64, b_norm2: f64, t_list: &str) -> Result<Report, AnyError> {
    let tol = common.tol.unwrap_or(1e-12);
    let mut report = new_report(common, "ray");
    report.set_config("kappa", kappa);
    report.set_config("B_norm2", b_norm2);
    let ts: Vec<f64> = t_list
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()?;
    let surface = torus_surface(common.grid)?;
    let b = constant_differential(surface.clone(), 3, b_norm2)?;
    let (solves, cert) = ray_solve(ConformalMetric::flat(surface), &b, kappa, &ts, tol)?;
    for (i, s) in solves.iter().enumerate() {
        let (mean, dev) = phi_stats(&s.phi);
        report.add_value(format!("phi_mean_{i}"), mean);
        report.add_value(format!("phi_max_dev_{i}"), dev);
        report.add_value(format!("rescaled_volume_{i}"), cert.rescaled_volumes[i]);
    }
    report.add_value("monotonicity_slack", cert.monotonicity_slack);
    report.add_value("lipschitz_slack", cert.lipschitz_slack);
    report.add_value("envelope_lower_slack", cert.envelope_lower_slack);
    report.add_value("envelope_upper_slack", cert.envelope_upper_slack);
    for (name, slack) in [
        ("monotonicity_violation", cert.monotonicity_slack),
        ("lipschitz_violation", cert.lipschitz_slack),
        ("envelope_lower_violation", cert.envelope_lower_slack),
        ("envelope_upper_violation", cert.envelope_upper_slack),
    ] {
        report.add_check(name, (-slack).max(0.0), 1e-9);
    }
    Ok(report)
}

fn run_ckmc(
    common: &Common,
    c: f64,
    eps: i32,
    b_norm2: Option<f64>,
    h_norm2: Option<f64>,
) -> Result<Report, AnyError> {
    let tol = common.tol.unwrap_or(1e-12);
    let mut report = new_report(common, "ckmc");
    report.set_config("c", c);
    report.set_config("eps", eps);
    let surface = torus_surface(common.grid)?;
    let b = match b_norm2 {
        Some(n2) => {
            report.set_config("B_norm2", n2);
            Some(constant_differential(surface.clone(), 3, n2)?)
        }
        None => None,
    };
    let h = match h_norm2 {
        Some(n2) => {
            report.set_config("H_norm2", n2);
            Some(constant_differential(surface.clone(), -1, n2)?)
        }
        None => None,
    };
    let solved = solve_ckmc(
        ConformalMetric::flat(surface),
        c,
        eps,
        h.as_ref(),
        b.as_ref(),
        tol,
    )?;
    let (mean, dev) = phi_stats(&solved.phi);
    report.add_value("phi_mean", mean);
    report.add_value("phi_max_dev", dev);
    report.add_check(
        "newton_residual",
        *solved.residual_history.last().unwrap_or(&f64::NAN),
        tol.max(1e-10),
    );
    if let Some(n2) = b_norm2 {
        if h_norm2.is_none() {
            match ckmc_bracket(n2) {
                Ok((lo, hi)) => {
                    report.add_value("bracket_lower", lo);
                    report.add_value("bracket_upper", hi);
                }
                Err(e) => report.set_config("bracket", e.to_string()),
            }
        }
    }
    Ok(report)
}

fn parse_range(spec: &str) -> Result<Vec<f64>, AnyError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("range must be start:end:step, got {spec:?}").into());
    }
    let (start, end, step) = (
        parts[0].parse::<f64>()?,
        parts[1].parse::<f64>()?,
        parts[2].parse::<f64>()?,
    );
    if !(step > 0.0 && end >= start) {
        return Err(format!("need start ≤ end and step > 0 in {spec:?}").into());
    }
    let count = ((end - start) / step).round() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}

fn run_cone(common: &Common, b_norm2: f64, t_spec: &str, c_param: f64) -> Result<Report, AnyError> {
    let mut report = new_report(common, "cone");
    report.set_config("B_norm2", b_norm2);
    report.set_config("C", c_param);
    let surface = torus_surface(common.grid.min(32))?;
    let b = constant_differential(surface.clone(), 3, b_norm2)?;
    let base = AHStructure::new(ConformalMetric::flat(surface), Some(b), None)?;
    let ts = parse_range(t_spec)?;
    let grid = ConeGrid::new(base, ts)?;
    report.add_value("ur", grid.ur);

    let conn = thomas_coefficients(&grid.base)?;
    report.add_check("connection_curvature", conn.flatness_residual(), 1e-8);
    report.add_check("hessian_defect", conn.hessian_defect(&grid), 1e-8);

    let d = determinant_identities(&grid);
    report.add_check("detg_defect", d.detg_defect, 1e-10);
    report.add_check("detf_defect", d.detf_defect, 1e-10);

    let taus: Vec<f64> = grid.t_samples.iter().map(|t| grid.f_potential(*t)).collect();
    let mut sorted = taus.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ma = monge_ampere_potential(c_param, &sorted)?;
    report.add_check("monge_ampere_defect", ma.det_defect, 1e-8);

    let dust = dust_residual(&grid, 1e-2, common.seed);
    report.add_value("dust_trivial", if dust.trivial { 1.0 } else { 0.0 });
    report.add_check("dust_residual", dust.residual, 1e-5);
    report.add_check("energy_condition_violation", (-dust.energy_min).max(0.0), 1e-6);

    let levels = level_surface_report(&grid, 1e-2);
    report.add_check("umbilicity", levels.umbilicity, 1e-6);
    report.add_check("f_geodesy", levels.geodesy, 1e-8);
    report.add_check("radial_parallel_defect", levels.radial_parallel_defect, 1e-8);
    Ok(report)
}

fn run_geodesic(
    common: &Common,
    kappa: f64,
    rho: f64,
    revolutions: f64,
    mu_scale: f64,
) -> Result<Report, AnyError> {
    let mut report = new_report(common, "geodesic");
    report.set_config("kappa", kappa);
    report.set_config("rho", rho);
    report.set_config("mu_scale", mu_scale);
    let fam = SphereFamily::new(kappa);
    let dt = 2.0 * std::f64::consts::PI / 2e4;
    let traj = magnetic_geodesic(
        |x, y| fam.eval((x * x + y * y).sqrt()).h_coeff,
        |x, y| fam.grad_log_lambda(x, y),
        |x, y| fam.eval((x * x + y * y).sqrt()).f,
        [rho, 0.0],
        [0.0, rho],
        revolutions * 2.0 * std::f64::consts::PI,
        dt,
        mu_scale,
    )?;
    let radial_dev = traj
        .positions
        .iter()
        .map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - rho).abs())
        .fold(0.0f64, f64::max);
    report.add_value("energy_drift", traj.max_energy_drift());
    report.add_check("radial_deviation", radial_dev, 1e-8);
    report.add_check("energy_drift_check", traj.max_energy_drift(), 1e-10);
    if mu_scale == 1.0 {
        // Orbits of the dual Killing field have geodesic curvature −¼|γ|⁻¹f.
        let p = fam.eval(rho);
        let expected = if p.gamma_norm2 > 0.0 {
            -0.25 * p.f / p.gamma_norm2.sqrt()
        } else {
            0.0
        };
        report.add_value("expected_geo_curvature", expected);
        let worst = traj
            .geo_curvature
            .iter()
            .map(|k| (k - expected).abs())
            .fold(0.0f64, f64::max);
        report.add_check("geo_curvature_deviation", worst, 1e-6);
    }
    Ok(report)
}

fn dispatch(cmd: &Cmd) -> (Result<Report, AnyError>, Common) {
    match cmd {
        Cmd::Solve {
            common,
            torus,
            kappa,
            b_norm2,
            background_cos,
        } => (
            run_solve(common, *torus, *kappa, *b_norm2, *background_cos),
            clone_common(common),
        ),
        Cmd::Verify { common, structure } => (run_verify(common, structure), clone_common(common)),
        Cmd::Family { common, which } => (run_family(common, which), clone_common(common)),
        Cmd::Ray {
            common,
            kappa,
            b_norm2,
            t_list,
        } => (
            run_ray(common, *kappa, *b_norm2, t_list),
            clone_common(common),
        ),
        Cmd::Ckmc {
            common,
            c,
            eps,
            b_norm2,
            h_norm2,
        } => (
            run_ckmc(common, *c, *eps, *b_norm2, *h_norm2),
            clone_common(common),
        ),
        Cmd::Cone {
            common,
            b_norm2,
            t,
            c_param,
        } => (
            run_cone(common, *b_norm2, t, *c_param),
            clone_common(common),
        ),
        Cmd::Geodesic {
            common,
            kappa,
            rho,
            revolutions,
            mu_scale,
        } => (
            run_geodesic(common, *kappa, *rho, *revolutions, *mu_scale),
            clone_common(common),
        ),
    }
}

fn clone_common(c: &Common) -> Common {
    Common {
        grid: c.grid,
        tol: c.tol,
        out: c.out.clone(),
        emit: c.emit,
        seed: c.seed,
        normalize: c.normalize,
    }
}

fn main() {
    let cli = Cli::parse();
    let start = Instant::now();
    let (result, common) = dispatch(&cli.cmd);
    match result {
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
        Ok(mut report) => {
            report.timing.wall_seconds = start.elapsed().as_secs_f64();
            if let Err(e) = report.emit(common.out.as_deref(), common.emit) {
                eprintln!("error writing report: {e}");
                std::process::exit(2);
            }
            if !report.passed {
                eprintln!("FAILED checks: {}", report.failures().join(", "));
                std::process::exit(1);
            }
        }
    }
}
