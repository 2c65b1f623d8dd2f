//! The semilinear conformal-factor operator and its solvers.
//!
//! The central object is the operator
//!
//! ```text
//! W(φ) = Δ_h φ − sR_h + F e^φ + Σ_terms w · 2^{1−k} e^{(1−k)φ} |B|²_h,
//! ```
//!
//! acting on a log conformal factor φ over a background metric h. Each term
//! carries a signed weight w (the plain Einstein case uses w = 1; the
//! immersion variant below uses ε-dependent weights) and the degree-k norm
//! |B|²_h = λ^{−k}|B|²_flat of a k-differential. Solving W(φ) = 0 produces
//! the metric e^φ h with the prescribed curvature data.
//!
//! Conventions:
//! - Solvers run on torus charts only, where the flat Laplacian is spectral
//!   and linearizations are solved by preconditioned conjugate gradients.
//!   `apply`/`scaling_residual` work on any chart.
//! - Each term stores |B|²_flat as a *field*, so rescalings
//!   B ↦ e^{(1−k)λ/2} B with non-constant λ act pointwise.
//! - The Newton linearization is Δ_h + c(φ) with
//!   c = F e^φ + Σ w (1−k) 2^{1−k} e^{(1−k)φ}|B|²_h; when c ≡ 0 the operator
//!   has no φ-dependence and no isolated solution exists, which is reported
//!   as a singular linearization rather than masked.

use crate::differential::KDifferential;
use crate::grid::{GridError, Surface};
use crate::metric::{max_abs, ConformalMetric};

/// Errors from operator assembly and the solvers.
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("term degree {got} does not match the differential's degree {want}")]
    DegreeMismatch { got: i32, want: i32 },
    #[error("solvers require a torus background (spectral linear solves)")]
    TorusOnly,
    #[error(
        "singular linearization at iteration {iteration}: the operator has no \
         φ-dependence (zeroth-order derivative vanishes identically), so no \
         solution exists"
    )]
    SingularLinearization { iteration: usize },
    #[error("Newton divergence: residual {residual:.3e} after {iterations} iterations")]
    Divergence { iterations: usize, residual: f64 },
    #[error("inner linear solve stalled with residual {residual:.3e}")]
    LinearSolveFailed { residual: f64 },
    #[error(
        "invalid bracket: W({side}) = {value:.6e} at grid point {index} violates \
         the {kind} requirement"
    )]
    InvalidBracket {
        side: f64,
        kind: &'static str,
        index: usize,
        value: f64,
    },
    #[error(
        "automatic bracket unavailable: background scalar curvature must be \
         everywhere negative (max sR = {max_scalar_curvature:.6e})"
    )]
    AutoBracketUnavailable { max_scalar_curvature: f64 },
    #[error("monotone iteration requires F < 0 everywhere (max F = {0:.6e})")]
    IndefiniteCurvatureTarget(f64),
    #[error("invalid solver data: {0}")]
    InvalidData(String),
    #[error("no sub/supersolution pair exists: max|B|² = {0:.6e} exceeds 8/27")]
    NoBracket(f64),
}

/// One weighted nonlinear term w · 2^{1−k} e^{(1−k)φ} |B|²_h.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorTerm {
    /// Degree k of the underlying differential.
    pub degree: i32,
    /// Signed weight w.
    pub weight: f64,
    /// |B|²_flat samples; kept as a field so pointwise rescalings apply.
    pub norm2_flat: Vec<f64>,
}

impl OperatorTerm {
    /// Term built from a realized k-differential with the given weight.
    pub fn from_differential(b: &KDifferential, weight: f64) -> Self {
        Self {
            degree: b.degree,
            weight,
            norm2_flat: b.norm2_flat(),
        }
    }
}

/// The operator data (background metric, curvature-target field F, terms).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub background: ConformalMetric,
    /// Curvature-target scalar field F (a constant κ in the classical case).
    pub f_term: Vec<f64>,
    pub terms: Vec<OperatorTerm>,
}

impl OperatorSpec {
    pub fn new(
        background: ConformalMetric,
        f_term: Vec<f64>,
        terms: Vec<OperatorTerm>,
    ) -> Result<Self, SolverError> {
        background.surface.check_len(&f_term)?;
        for t in &terms {
            background.surface.check_len(&t.norm2_flat)?;
        }
        Ok(Self {
            background,
            f_term,
            terms,
        })
    }

    /// Convenience constructor with constant curvature target κ.
    pub fn constant_curvature(
        background: ConformalMetric,
        kappa: f64,
        terms: Vec<OperatorTerm>,
    ) -> Result<Self, SolverError> {
        let n = background.surface.len();
        Self::new(background, vec![kappa; n], terms)
    }

    fn surface(&self) -> &Surface {
        &self.background.surface
    }

    /// Zeroth-order part g(φ) = −sR + F e^φ + Σ w 2^{1−k} e^{(1−k)φ}|B|²_h,
    /// given precomputed λ and sR of the background.
    fn zeroth(&self, phi: &[f64], lam: &[f64], sr: &[f64]) -> Vec<f64> {
        let n = phi.len();
        let mut out: Vec<f64> = (0..n)
            .map(|i| -sr[i] + self.f_term[i] * phi[i].exp())
            .collect();
        for t in &self.terms {
            let pre = t.weight * 2f64.powi(1 - t.degree);
            for i in 0..n {
                let bn2_h = t.norm2_flat[i] * lam[i].powi(-t.degree);
                out[i] += pre * (((1 - t.degree) as f64) * phi[i]).exp() * bn2_h;
            }
        }
        out
    }

    /// ∂g/∂φ pointwise: F e^φ + Σ w (1−k) 2^{1−k} e^{(1−k)φ}|B|²_h.
    fn zeroth_derivative(&self, phi: &[f64], lam: &[f64]) -> Vec<f64> {
        let n = phi.len();
        let mut out: Vec<f64> = (0..n).map(|i| self.f_term[i] * phi[i].exp()).collect();
        for t in &self.terms {
            let pre = t.weight * ((1 - t.degree) as f64) * 2f64.powi(1 - t.degree);
            for i in 0..n {
                let bn2_h = t.norm2_flat[i] * lam[i].powi(-t.degree);
                out[i] += pre * (((1 - t.degree) as f64) * phi[i]).exp() * bn2_h;
            }
        }
        out
    }

    /// Evaluate W(φ).
    pub fn apply(&self, phi: &[f64]) -> Result<Vec<f64>, SolverError> {
        self.surface().check_len(phi)?;
        let lam = self.background.total_lambda();
        let sr = self.background.scalar_curvature();
        let lap = self.background.laplacian(phi)?;
        let g = self.zeroth(phi, &lam, &sr);
        Ok(lap.iter().zip(&g).map(|(l, v)| l + v).collect())
    }

    /// Max-norm defect of the rescaling covariance
    ///
    /// ```text
    /// e^μ · W(e^μ h, e^λ F, e^{(1−k)λ/2} B)(φ − μ − λ)
    ///     = W(h, F, B)(φ) − Δ_h λ.
    /// ```
    ///
    /// Zero (to discretization error) certifies that the implementation
    /// transforms correctly under conformal change of background and
    /// rescaling of the curvature target.
    pub fn scaling_residual(
        &self,
        phi: &[f64],
        mu: &[f64],
        lam_scale: &[f64],
    ) -> Result<f64, SolverError> {
        let surf = self.surface();
        surf.check_len(phi)?;
        surf.check_len(mu)?;
        surf.check_len(lam_scale)?;
        let n = phi.len();

        let scaled_background = self.background.rescaled(mu)?;
        let scaled_f: Vec<f64> = (0..n)
            .map(|i| lam_scale[i].exp() * self.f_term[i])
            .collect();
        let scaled_terms: Vec<OperatorTerm> = self
            .terms
            .iter()
            .map(|t| OperatorTerm {
                degree: t.degree,
                weight: t.weight,
                norm2_flat: (0..n)
                    .map(|i| (((1 - t.degree) as f64) * lam_scale[i]).exp() * t.norm2_flat[i])
                    .collect(),
            })
            .collect();
        let scaled = OperatorSpec::new(scaled_background, scaled_f, scaled_terms)?;

        let shifted_phi: Vec<f64> = (0..n).map(|i| phi[i] - mu[i] - lam_scale[i]).collect();
        let lhs_raw = scaled.apply(&shifted_phi)?;
        let rhs_w = self.apply(phi)?;
        let lap_lam = self.background.laplacian(lam_scale)?;

        let defect: Vec<f64> = (0..n)
            .map(|i| mu[i].exp() * lhs_raw[i] - rhs_w[i] + lap_lam[i])
            .collect();
        Ok(max_abs(&defect))
    }
}

/// Outcome of a solve: solution, convergence trace, and certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub phi: Vec<f64>,
    /// Max-norm residual after each iteration (index 0 = initial guess).
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// Constant sub/supersolution pair (c−, c+) when one was used.
    pub bracket: Option<(f64, f64)>,
    /// A-priori bounds on the conformal factor e^φ, when available.
    pub bound_certificate: Option<BoundCertificate>,
}

/// A-priori pointwise bounds lower ≤ e^φ ≤ upper for the solved factor,
/// derived from the extremes of the data: with K = max F < 0 and κ̄ = min F,
///
/// ```text
/// lower = max(0, max sR / κ̄),
/// upper = min sR / K + (2^{1−k} max(w·|B|²_h) / |K|)^{1/k},
/// ```
///
/// the upper value being the certified root bound for
/// r^k − a r^{k−1} − b (see [`positive_root_bound`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCertificate {
    pub lower: f64,
    pub upper: f64,
    /// max over the grid of max(lower − e^φ, e^φ − upper); ≤ 0 when the
    /// bounds hold.
    pub max_violation: f64,
}

/// Root of r^p − a r^{p−1} − b (p ≥ 1, a > 0 allowed to be 0, b > 0) by
/// bisection, together with the certified enclosure [a, a + b^{1/p}].
pub fn positive_root_bound(p: u32, a: f64, b: f64) -> (f64, f64, f64) {
    assert!(p >= 1, "degree must be at least 1");
    assert!(a >= 0.0 && b > 0.0, "need a ≥ 0, b > 0, got a={a}, b={b}");
    let g = |r: f64| r.powi(p as i32) - a * r.powi(p as i32 - 1) - b;
    let (mut lo, mut hi) = (a, a + b.powf(1.0 / p as f64));
    debug_assert!(g(lo) < 0.0 && g(hi) >= -1e-12 * (1.0 + b));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), a, a + b.powf(1.0 / p as f64))
}

/// Evaluate the a-priori factor bounds for a spec, when its data supports
/// them: max F < 0 and exactly one term, with positive weight and degree ≥ 2.
fn factor_bounds(spec: &OperatorSpec) -> Option<(f64, f64)> {
    let f_max = spec.f_term.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let f_min = spec.f_term.iter().cloned().fold(f64::INFINITY, f64::min);
    if f_max >= 0.0 {
        return None;
    }
    let sr = spec.background.scalar_curvature();
    let sr_max = sr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sr_min = sr.iter().cloned().fold(f64::INFINITY, f64::min);
    let lower = (sr_max / f_min).max(0.0);
    match spec.terms.as_slice() {
        [] => {
            // Pure prescribed-curvature problem: e^φ ≤ min sR / K.
            let upper = sr_min / f_max;
            (upper > 0.0).then_some((lower, upper))
        }
        [t] if t.weight > 0.0 && t.degree >= 2 => {
            let lam = spec.background.total_lambda();
            let m_eff = t
                .norm2_flat
                .iter()
                .zip(&lam)
                .map(|(n2, l)| t.weight * n2 * l.powi(-t.degree))
                .fold(0.0f64, f64::max);
            let a = (sr_min / f_max).max(0.0);
            let b = 2f64.powi(1 - t.degree) * m_eff / f_max.abs();
            if b <= 0.0 {
                return (a > 0.0).then_some((lower, a));
            }
            Some((lower, a + b.powf(1.0 / t.degree as f64)))
        }
        _ => None,
    }
}

fn certificate_for(spec: &OperatorSpec, phi: &[f64]) -> Option<BoundCertificate> {
    let (lower, upper) = factor_bounds(spec)?;
    let max_violation = phi
        .iter()
        .map(|p| {
            let e = p.exp();
            (lower - e).max(e - upper)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Some(BoundCertificate {
        lower,
        upper,
        max_violation,
    })
}

/// Solve (Δ_flat + q) u = rhs on a torus by preconditioned conjugate
/// gradients on the positive form −Δ_flat − q (requires q ≤ 0, q ≢ 0
/// for definiteness). Preconditioner: the constant-shift inverse
/// (−Δ_flat + m̄)⁻¹ with m̄ the mean of −q.
fn solve_linear(surface: &Surface, q: &[f64], rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = rhs.len();
    let b: Vec<f64> = rhs.iter().map(|v| -v).collect();
    let mbar = (-q.iter().sum::<f64>() / n as f64).max(1e-12);
    let apply_a = |u: &[f64]| -> Vec<f64> {
        let lap = surface.laplacian_flat(u);
        (0..n).map(|i| -lap[i] - q[i] * u[i]).collect()
    };
    let precond =
        |r: &[f64]| -> Result<Vec<f64>, SolverError> { Ok(surface.helmholtz_flat_inverse(mbar, r)?) };

    let dot = |a: &[f64], c: &[f64]| -> f64 { a.iter().zip(c).map(|(x, y)| x * y).sum() };
    let tol = 1e-13 * max_abs(&b).max(1.0);

    let mut x = vec![0.0; n];
    let mut r = b;
    if max_abs(&r) <= tol {
        return Ok(x);
    }
    let mut z = precond(&r)?;
    let mut p = z.clone();
    let mut rho = dot(&r, &z);
    for _ in 0..2000 {
        let ap = apply_a(&p);
        let alpha = rho / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if max_abs(&r) <= tol {
            return Ok(x);
        }
        z = precond(&r)?;
        let rho_next = dot(&r, &z);
        let beta = rho_next / rho;
        rho = rho_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::LinearSolveFailed {
        residual: max_abs(&r),
    })
}

/// Damped Newton iteration for W(φ) = 0 on a torus background.
///
/// The Fréchet derivative of W at φ in direction δ is Δ_h δ + c δ with
/// c = ∂g/∂φ; the Newton step solves (Δ_flat + λc) δ = −λ W(φ) spectrally
/// and backtracks (halving, up to 30 times) on the residual max-norm.
/// Deterministic given (spec, φ0, tol).
pub fn solve_newton(
    spec: &OperatorSpec,
    phi0: &[f64],
    tol: f64,
) -> Result<SolveReport, SolverError> {
    let surf = spec.surface();
    if !matches!(surf, Surface::Torus(_)) {
        return Err(SolverError::TorusOnly);
    }
    surf.check_len(phi0)?;
    let n = phi0.len();
    let lam = spec.background.total_lambda();
    let sr = spec.background.scalar_curvature();

    let mut phi = phi0.to_vec();
    let mut history = Vec::new();
    let eval = |phi: &[f64]| -> Result<(Vec<f64>, f64), SolverError> {
        let lap = spec.background.laplacian(phi)?;
        let g = spec.zeroth(phi, &lam, &sr);
        let w: Vec<f64> = (0..n).map(|i| lap[i] + g[i]).collect();
        let r = max_abs(&w);
        Ok((w, r))
    };

    let (mut w, mut res) = eval(&phi)?;
    history.push(res);
    let max_iter = 60;
    for it in 0..max_iter {
        if res <= tol {
            let cert = certificate_for(spec, &phi);
            return Ok(SolveReport {
                phi,
                residual_history: history,
                iterations: it,
                bracket: None,
                bound_certificate: cert,
            });
        }
        let c = spec.zeroth_derivative(&phi, &lam);
        let q: Vec<f64> = (0..n).map(|i| lam[i] * c[i]).collect();
        if max_abs(&q) == 0.0 {
            return Err(SolverError::SingularLinearization { iteration: it });
        }
        let rhs: Vec<f64> = (0..n).map(|i| -lam[i] * w[i]).collect();
        let delta = solve_linear(surf, &q, &rhs)?;

        // Backtracking line search on the residual max-norm.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let cand: Vec<f64> = (0..n).map(|i| phi[i] + step * delta[i]).collect();
            let (wc, rc) = eval(&cand)?;
            if rc < res {
                phi = cand;
                w = wc;
                res = rc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        history.push(res);
        if !accepted {
            return Err(SolverError::Divergence {
                iterations: it + 1,
                residual: res,
            });
        }
    }
    if res <= tol {
        let cert = certificate_for(spec, &phi);
        return Ok(SolveReport {
            phi,
            residual_history: history,
            iterations: max_iter,
            bracket: None,
            bound_certificate: cert,
        });
    }
    Err(SolverError::Divergence {
        iterations: max_iter,
        residual: res,
    })
}

/// Construct the automatic constant bracket (c−, c+) from the data extremes:
/// c− = log(max sR / min F) and c+ = log r₁ with r₁ the smallest certified
/// root of r^k − a r^{k−1} − b (a = min sR / max F,
/// b = 2^{1−k} max|B|²_h / |max F|). Requires max sR < 0, max F < 0, and at
/// most one term (of positive weight).
pub fn auto_bracket(spec: &OperatorSpec) -> Result<(f64, f64), SolverError> {
    let sr = spec.background.scalar_curvature();
    let sr_max = sr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sr_min = sr.iter().cloned().fold(f64::INFINITY, f64::min);
    if sr_max >= 0.0 {
        return Err(SolverError::AutoBracketUnavailable {
            max_scalar_curvature: sr_max,
        });
    }
    let f_max = spec.f_term.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let f_min = spec.f_term.iter().cloned().fold(f64::INFINITY, f64::min);
    if f_max >= 0.0 {
        return Err(SolverError::IndefiniteCurvatureTarget(f_max));
    }
    let c_minus = (sr_max / f_min).ln();
    let a = sr_min / f_max;
    let c_plus = match spec.terms.as_slice() {
        [] => a.ln(),
        [t] if t.weight >= 0.0 && t.degree >= 2 => {
            let lam = spec.background.total_lambda();
            let m_eff = t
                .norm2_flat
                .iter()
                .zip(&lam)
                .map(|(n2, l)| t.weight * n2 * l.powi(-t.degree))
                .fold(0.0f64, f64::max);
            let b = 2f64.powi(1 - t.degree) * m_eff / f_max.abs();
            if b == 0.0 {
                a.ln()
            } else {
                positive_root_bound(t.degree as u32, a, b).0.ln()
            }
        }
        _ => {
            return Err(SolverError::InvalidData(
                "automatic bracket supports at most one nonnegative-weight term of degree ≥ 2"
                    .into(),
            ))
        }
    };
    Ok((c_minus, c_plus))
}

/// Monotone sub/supersolution iteration for W(φ) = 0 on a torus background.
///
/// Given constants c− ≤ c+ with W(c−) ≥ 0 ≥ W(c+) pointwise (validated, with
/// the offending grid point reported on failure), iterates
///
/// ```text
/// (Δ_h − M) φ_{n+1} = −g(φ_n) − M φ_n,   M ≥ sup |∂g/∂φ| on [c−, c+],
/// ```
///
/// starting from the supersolution c+. Every iterate stays in [c−, c+] and
/// the sequence decreases to the unique solution.
pub fn solve_monotone(
    spec: &OperatorSpec,
    bracket: Option<(f64, f64)>,
    tol: f64,
) -> Result<SolveReport, SolverError> {
    let surf = spec.surface();
    if !matches!(surf, Surface::Torus(_)) {
        return Err(SolverError::TorusOnly);
    }
    let n = surf.len();
    let f_max = spec.f_term.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if f_max >= 0.0 {
        return Err(SolverError::IndefiniteCurvatureTarget(f_max));
    }
    let (c_minus, c_plus) = match bracket {
        Some(b) => b,
        None => auto_bracket(spec)?,
    };
    if c_minus > c_plus {
        return Err(SolverError::InvalidData(format!(
            "bracket is reversed: {c_minus} > {c_plus}"
        )));
    }

    // Validate the bracket pointwise: W(c−) ≥ 0 ≥ W(c+).
    let slack = 1e-11;
    let w_minus = spec.apply(&vec![c_minus; n])?;
    if let Some((idx, &v)) = w_minus
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
    {
        if v < -slack {
            return Err(SolverError::InvalidBracket {
                side: c_minus,
                kind: "subsolution (W ≥ 0)",
                index: idx,
                value: v,
            });
        }
    }
    let w_plus = spec.apply(&vec![c_plus; n])?;
    if let Some((idx, &v)) = w_plus.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
        if v > slack {
            return Err(SolverError::InvalidBracket {
                side: c_plus,
                kind: "supersolution (W ≤ 0)",
                index: idx,
                value: v,
            });
        }
    }

    let lam = spec.background.total_lambda();
    let sr = spec.background.scalar_curvature();
    // Dominating constant: each summand of ∂g/∂φ is monotone in φ, so its
    // sup over [c−, c+] is attained at an endpoint.
    let d_lo = spec.zeroth_derivative(&vec![c_minus; n], &lam);
    let d_hi = spec.zeroth_derivative(&vec![c_plus; n], &lam);
    let m_dom = d_lo
        .iter()
        .chain(d_hi.iter())
        .map(|v| v.abs())
        .fold(0.0f64, f64::max)
        .max(1e-8);

    let q: Vec<f64> = lam.iter().map(|l| -l * m_dom).collect();
    let mut phi = vec![c_plus; n];
    let mut history = Vec::new();
    let max_iter = 20000;
    for it in 0..max_iter {
        let lap = spec.background.laplacian(&phi)?;
        let g = spec.zeroth(&phi, &lam, &sr);
        let w: Vec<f64> = (0..n).map(|i| lap[i] + g[i]).collect();
        let res = max_abs(&w);
        history.push(res);
        if res <= tol {
            let cert = certificate_for(spec, &phi);
            return Ok(SolveReport {
                phi,
                residual_history: history,
                iterations: it,
                bracket: Some((c_minus, c_plus)),
                bound_certificate: cert,
            });
        }
        // (Δ_flat − λM) φ_next = λ(−g(φ) − M φ)
        let rhs: Vec<f64> = (0..n).map(|i| lam[i] * (-g[i] - m_dom * phi[i])).collect();
        phi = solve_linear(surf, &q, &rhs)?;
    }
    Err(SolverError::Divergence {
        iterations: max_iter,
        residual: *history.last().unwrap(),
    })
}

/// Solve the conformal-factor equation for constant-mean-curvature-type
/// Lagrangian immersion data,
///
/// ```text
/// Δ_h φ − sR_h + 2c e^φ − (ε/4) e^{2φ}|H|²_h + ε e^{−2φ}|B|²_h = 0,
/// ```
///
/// with ε = ±1, a degree −1 field H, and a cubic B, by damped Newton from
/// φ₀ = 0. In generic-weight form the H-term has (k, w) = (−1, −ε/16) and
/// the B-term (k, w) = (3, 4ε).
pub fn solve_ckmc(
    background: ConformalMetric,
    c: f64,
    eps: i32,
    h_field: Option<&KDifferential>,
    b_field: Option<&KDifferential>,
    tol: f64,
) -> Result<SolveReport, SolverError> {
    if eps != 1 && eps != -1 {
        return Err(SolverError::InvalidData(format!(
            "ε must be ±1, got {eps}"
        )));
    }
    let mut terms = Vec::new();
    if let Some(h) = h_field {
        if h.degree != -1 {
            return Err(SolverError::DegreeMismatch {
                got: h.degree,
                want: -1,
            });
        }
        terms.push(OperatorTerm::from_differential(h, -(eps as f64) / 16.0));
    }
    if let Some(b) = b_field {
        if b.degree != 3 {
            return Err(SolverError::DegreeMismatch {
                got: b.degree,
                want: 3,
            });
        }
        terms.push(OperatorTerm::from_differential(b, 4.0 * eps as f64));
    }
    let n = background.surface.len();
    let phi0 = vec![0.0; n];
    let spec = OperatorSpec::constant_curvature(background, 2.0 * c, terms)?;
    solve_newton(&spec, &phi0, tol)
}

/// Constant sub/supersolution pair for the ε = −1 immersion equation over a
/// scalar-curvature −2 background with c = −1: the constant 0 is a
/// supersolution, and log r₁ a subsolution, where r₁ is the smallest positive
/// zero of r³ − r² + ½·max|B|². The pair exists iff max|B|² ≤ 8/27, and then
/// r₁ ≤ 2/3.
pub fn ckmc_bracket(max_b_norm2: f64) -> Result<(f64, f64), SolverError> {
    if max_b_norm2 <= 0.0 {
        return Err(SolverError::InvalidData(format!(
            "need max|B|² > 0, got {max_b_norm2}"
        )));
    }
    if max_b_norm2 > 8.0 / 27.0 {
        return Err(SolverError::NoBracket(max_b_norm2));
    }
    // p(r) = r³ − r² + ½ max|B|² decreases from p(0) > 0 to its local
    // minimum at r = 2/3; bisect on that branch.
    let p = |r: f64| r * r * r - r * r + 0.5 * max_b_norm2;
    let (mut lo, mut hi) = (0.0f64, 2.0 / 3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r1 = 0.5 * (lo + hi);
    Ok((r1.ln(), 0.0))
}

/// Certificates recorded along a ray of solves φ_t of
/// W(h, F, e^{kt}B)(φ_t) = 0 for increasing t.
#[derive(Debug, Clone, PartialEq)]
pub struct RayCertificate {
    pub t_values: Vec<f64>,
    /// min over consecutive pairs and grid points of φ_{t₂} − φ_{t₁}
    /// (monotonicity; expected ≥ 0).
    pub monotonicity_slack: f64,
    /// min over pairs of 2|t₂ − t₁| − max|φ_{t₂} − φ_{t₁}| (Lipschitz bound).
    pub lipschitz_slack: f64,
    /// min over t and grid of φ_t − max{0, 2t + (1/3)log|B|²_h − log 2}.
    pub envelope_lower_slack: f64,
    /// min over t and grid of 2t − φ_t.
    pub envelope_upper_slack: f64,
    /// Volumes of the rescaled metrics e^{−2t} e^{φ_t} h.
    pub rescaled_volumes: Vec<f64>,
}

/// Solve the ray W(h, κ, e^{3t}B)(φ_t) = 0 for each t in `t_list`
/// (sorted, t ≥ 0), warm-starting each solve from the previous solution,
/// and evaluate monotonicity/Lipschitz/envelope certificates.
pub fn ray_solve(
    background: ConformalMetric,
    b_field: &KDifferential,
    kappa: f64,
    t_list: &[f64],
    tol: f64,
) -> Result<(Vec<SolveReport>, RayCertificate), SolverError> {
    let n = background.surface.len();
    let base_norm2 = b_field.norm2_flat();
    if max_abs(&base_norm2) == 0.0 {
        return Err(SolverError::InvalidData(
            "ray deformation needs a nonzero differential".into(),
        ));
    }
    if t_list.windows(2).any(|w| w[0] > w[1]) || t_list.first().is_some_and(|&t| t < 0.0) {
        return Err(SolverError::InvalidData(
            "t_list must be sorted with t ≥ 0".into(),
        ));
    }
    let k = b_field.degree;
    let lam = background.total_lambda();

    let mut reports: Vec<SolveReport> = Vec::new();
    let mut warm = vec![0.0; n];
    for &t in t_list {
        let scaled = OperatorTerm {
            degree: k,
            weight: 1.0,
            norm2_flat: base_norm2
                .iter()
                .map(|v| (2.0 * k as f64 * t).exp() * v)
                .collect(),
        };
        let spec =
            OperatorSpec::constant_curvature(background.clone(), kappa, vec![scaled])?;
        let report = solve_newton(&spec, &warm, tol)?;
        warm = report.phi.clone();
        reports.push(report);
    }

    // Certificates.
    let mut mono = f64::INFINITY;
    let mut lips = f64::INFINITY;
    for w in reports.windows(2).zip(t_list.windows(2)) {
        let ((r1, r2), (t1, t2)) = ((&w.0[0], &w.0[1]), (w.1[0], w.1[1]));
        let diff: Vec<f64> = (0..n).map(|i| r2.phi[i] - r1.phi[i]).collect();
        mono = mono.min(diff.iter().cloned().fold(f64::INFINITY, f64::min));
        lips = lips.min(2.0 * (t2 - t1).abs() - max_abs(&diff));
    }
    if reports.len() < 2 {
        mono = 0.0;
        lips = 0.0;
    }
    let mut env_lo = f64::INFINITY;
    let mut env_hi = f64::INFINITY;
    let mut volumes = Vec::new();
    for (r, &t) in reports.iter().zip(t_list) {
        for i in 0..n {
            let bn2_h = base_norm2[i] * lam[i].powi(-k);
            let lower = if bn2_h > 0.0 {
                (2.0 * t + bn2_h.ln() / 3.0 - 2f64.ln()).max(0.0)
            } else {
                0.0
            };
            env_lo = env_lo.min(r.phi[i] - lower);
            env_hi = env_hi.min(2.0 * t - r.phi[i]);
        }
        let density: Vec<f64> = (0..n).map(|i| lam[i] * (r.phi[i] - 2.0 * t).exp()).collect();
        volumes.push(background.surface.integrate_flat(&density));
    }
    let cert = RayCertificate {
        t_values: t_list.to_vec(),
        monotonicity_slack: mono,
        lipschitz_slack: lips,
        envelope_lower_slack: env_lo,
        envelope_upper_slack: env_hi,
        rescaled_volumes: volumes,
    };
    Ok((reports, cert))
}
