//! Closed-form Einstein–Weyl families on the sphere and torus, the
//! magnetic-geodesic integrator, and the curvature-flow consistency check.
//!
//! The sphere family is a one-parameter (κ) rotationally symmetric metric on
//! the chart ρ = |z|,
//!
//! ```text
//! h = h_coeff(ρ)(dx² + dy²),   h_coeff = 8 / (√(κ²+16)(1 + μρ² + ρ⁴)),
//! μ = 2κ/√(κ²+16),             γ = h_coeff (x dy − y dx),
//! ```
//!
//! and the torus family (normalized branch c = −4, κ < −4) lives on a π×π
//! lattice in coordinates (s, r):
//!
//! ```text
//! h = h_coeff(s)(ds² + dr²),   h_coeff = 4 / (√(κ²−16)cos 2s − κ),
//! γ = h_coeff dr.
//! ```
//!
//! Both satisfy the Weyl-case Einstein equations with vortex constant
//! uR − 4|γ|² = κ, and the closed forms here serve as oracles for every
//! grid-level residual in the crate.
//!
//! Conventions:
//! - The Faraday function sign follows F = −dγ, 2F = f·ω with
//!   ω = λ dx∧dy: on the sphere f = −4(1−ρ⁴)/(1+μρ²+ρ⁴), on the torus
//!   f = 4√(κ²−16) sin 2s / (√(κ²−16)cos 2s − κ).
//! - Magnetic geodesics solve D_σ̇ σ̇ = A(σ̇) with A(v) = ¼f (v_y, −v_x)
//!   (the half-exterior-derivative convention for the magnetic two-form; a
//!   scale factor is exposed for other conventions).
//! - The curvature flow ∂_t h = −sR_h · h is realized inside each family by
//!   κ(t) = −4 cot 4t on t ∈ (−π/4, 0) (sphere) and κ(t) = −4 coth 4t on
//!   t > 0 (torus).

use crate::grid::{GridError, LatticeTorus, SphereChart, Surface};
use crate::metric::{ConformalMetric, OneForm};
use crate::structure::{AHStructure, StructureError};

/// Errors from family construction and trajectory integration.
#[derive(Debug, thiserror::Error)]
pub enum FamilyError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("torus family needs κ < −4, got {0}")]
    KappaOutOfRange(f64),
    #[error("flow time {t} outside the branch domain ({lo}, {hi})")]
    BranchDomain { t: f64, lo: f64, hi: f64 },
    #[error("θ must lie in (0, π/2), got {0}")]
    BadTheta(f64),
    #[error("trajectory became non-finite at step {0}")]
    NonFiniteState(usize),
    #[error("time step and horizon must be positive, got dt={dt}, T={total}")]
    BadTimeStep { dt: f64, total: f64 },
}

/// Closed-form data of the sphere family at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    /// Conformal factor of h against dx² + dy².
    pub h_coeff: f64,
    /// Scalar curvature sR.
    pub sr: f64,
    /// Faraday function f.
    pub f: f64,
    /// |γ|²_h = ρ² h_coeff.
    pub gamma_norm2: f64,
    /// Coefficient of γ = γ_coeff (x dy − y dx).
    pub gamma_coeff: f64,
}

/// Closed-form data of the torus family at one s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusPoint {
    pub h_coeff: f64,
    pub sr: f64,
    pub f: f64,
    /// |γ|²_h = h_coeff.
    pub gamma_norm2: f64,
}

/// τ(z) = z(π/2 − arctan z); a diffeomorphism of ℝ onto (−∞, 1).
pub fn tau(z: f64) -> f64 {
    z * (std::f64::consts::FRAC_PI_2 - z.atan())
}

/// Vortex parameter of the sphere family: ν = 8π τ(κ/4).
pub fn nu_from_kappa(kappa: f64) -> f64 {
    8.0 * std::f64::consts::PI * tau(kappa / 4.0)
}

/// Convert the angle parameter θ ∈ (0, π/2) to (κ, ν) via κ = 4 cot 2θ and
/// ν = 16π θ cot 2θ.
pub fn theta_conversions(theta: f64) -> Result<(f64, f64), FamilyError> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(FamilyError::BadTheta(theta));
    }
    let cot2 = (2.0 * theta).cos() / (2.0 * theta).sin();
    Ok((4.0 * cot2, 16.0 * std::f64::consts::PI * theta * cot2))
}

/// The rotationally symmetric Einstein–Weyl metric on the sphere with
/// parameter κ = min sR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFamily {
    pub kappa: f64,
}

impl SphereFamily {
    pub fn new(kappa: f64) -> Self {
        Self { kappa }
    }

    /// √(κ² + 16) = max sR.
    pub fn radical(&self) -> f64 {
        (self.kappa * self.kappa + 16.0).sqrt()
    }

    /// μ = 2κ/√(κ²+16) ∈ (−2, 2).
    pub fn mu(&self) -> f64 {
        2.0 * self.kappa / self.radical()
    }

    /// θ ∈ (0, π/2) with κ = 4 cot 2θ.
    pub fn theta(&self) -> f64 {
        0.5 * f64::atan2(4.0, self.kappa)
    }

    /// Vortex parameter ν = 8π τ(κ/4).
    pub fn nu(&self) -> f64 {
        nu_from_kappa(self.kappa)
    }

    fn denom(&self, rho2: f64) -> f64 {
        1.0 + self.mu() * rho2 + rho2 * rho2
    }

    /// Evaluate the closed forms at radius ρ ≥ 0.
    pub fn eval(&self, rho: f64) -> SpherePoint {
        let rho2 = rho * rho;
        let d = self.denom(rho2);
        let r = self.radical();
        let h_coeff = 8.0 / (r * d);
        SpherePoint {
            h_coeff,
            sr: self.kappa + 32.0 * rho2 / (r * d),
            f: -4.0 * (1.0 - rho2 * rho2) / d,
            gamma_norm2: rho2 * h_coeff,
            gamma_coeff: h_coeff,
        }
    }

    /// Total volume 2π(π/2 − arctan(κ/4)).
    pub fn volume(&self) -> f64 {
        2.0 * std::f64::consts::PI
            * (std::f64::consts::FRAC_PI_2 - (self.kappa / 4.0).atan())
    }

    /// Independent volume oracle: radial quadrature
    /// ∫ h_coeff · 2πρ dρ = 2π ∫ h_coeff(e^s) e^{2s} ds (composite Simpson).
    pub fn volume_quadrature(&self) -> f64 {
        let (s_lim, n) = (18.0, 4000usize); // n intervals, even
        let hstep = 2.0 * s_lim / n as f64;
        let integrand = |s: f64| {
            let rho = s.exp();
            self.eval(rho).h_coeff * (2.0 * s).exp()
        };
        let mut sum = integrand(-s_lim) + integrand(s_lim);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * integrand(-s_lim + i as f64 * hstep);
        }
        2.0 * std::f64::consts::PI * sum * hstep / 3.0
    }

    /// Lengths of the equator ρ = 1 in h and in the dual metric ĥ:
    /// L_h = π(√(κ²+16) − κ)^{1/2},
    /// L_ĥ = 2√2 π (κ²+16)^{1/4} (√(κ²+16) + κ)^{−1/2}.
    pub fn equator_lengths(&self) -> (f64, f64) {
        let r = self.radical();
        let pi = std::f64::consts::PI;
        let l_h = pi * (r - self.kappa).sqrt();
        let l_dual = 2.0 * 2f64.sqrt() * pi * r.sqrt() * (r + self.kappa).powf(-0.5);
        (l_h, l_dual)
    }

    /// Realize the family on a sphere chart as an AH structure
    /// (Weyl type: γ = h_coeff (x dy − y dx), no cubic torsion).
    pub fn structure(&self, chart: SphereChart) -> Result<AHStructure, FamilyError> {
        let surface = Surface::Sphere(chart);
        let n = surface.len();
        let mut lambda = vec![0.0; n];
        let mut gx = vec![0.0; n];
        let mut gy = vec![0.0; n];
        for i in 0..n {
            let [x, y] = surface.point(i);
            let p = self.eval((x * x + y * y).sqrt());
            lambda[i] = p.h_coeff;
            gx[i] = -y * p.gamma_coeff;
            gy[i] = x * p.gamma_coeff;
        }
        let metric = ConformalMetric::from_total_lambda(surface, &lambda)?;
        Ok(AHStructure::new(
            metric,
            None,
            Some(OneForm {
                comp_x: gx,
                comp_y: gy,
            }),
        )?)
    }

    /// ∇ log h_coeff in chart coordinates (for the geodesic integrator).
    pub fn grad_log_lambda(&self, x: f64, y: f64) -> [f64; 2] {
        let rho2 = x * x + y * y;
        let d = self.denom(rho2);
        let slope = -2.0 * (self.mu() + 2.0 * rho2) / d;
        [slope * x, slope * y]
    }
}

/// The Einstein–Weyl metric on the torus with parameter κ < −4
/// (normalized branch, s-period π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusFamily {
    pub kappa: f64,
}

impl TorusFamily {
    pub fn new(kappa: f64) -> Result<Self, FamilyError> {
        if !(kappa < -4.0) {
            return Err(FamilyError::KappaOutOfRange(kappa));
        }
        Ok(Self { kappa })
    }

    /// √(κ² − 16) = max sR.
    pub fn radical(&self) -> f64 {
        (self.kappa * self.kappa - 16.0).sqrt()
    }

    /// Evaluate the closed forms at coordinate s.
    pub fn eval(&self, s: f64) -> TorusPoint {
        let q = self.radical();
        let d = q * (2.0 * s).cos() - self.kappa;
        let h_coeff = 4.0 / d;
        TorusPoint {
            h_coeff,
            sr: q * (self.kappa * (2.0 * s).cos() - q) / d,
            f: 4.0 * q * (2.0 * s).sin() / d,
            gamma_norm2: h_coeff,
        }
    }

    /// Total volume of the π×π fundamental domain: π².
    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * std::f64::consts::PI
    }

    /// Vortex parameter ν = κ · vol = κπ².
    pub fn nu(&self) -> f64 {
        self.kappa * self.volume()
    }

    /// Realize the family on an n×n grid over the π×π fundamental domain
    /// (s along x, r along y; γ = h_coeff dr).
    pub fn structure(&self, n: usize) -> Result<AHStructure, FamilyError> {
        let surface = Surface::Torus(LatticeTorus::square(std::f64::consts::PI, n)?);
        let len = surface.len();
        let mut lambda = vec![0.0; len];
        let mut gy = vec![0.0; len];
        for i in 0..len {
            let [s, _] = surface.point(i);
            let p = self.eval(s);
            lambda[i] = p.h_coeff;
            gy[i] = p.h_coeff;
        }
        let metric = ConformalMetric::from_total_lambda(surface, &lambda)?;
        Ok(AHStructure::new(
            metric,
            None,
            Some(OneForm {
                comp_x: vec![0.0; len],
                comp_y: gy,
            }),
        )?)
    }

    /// ∇ log h_coeff in chart coordinates (x is the s coordinate).
    pub fn grad_log_lambda(&self, x: f64, _y: f64) -> [f64; 2] {
        let q = self.radical();
        let d = q * (2.0 * x).cos() - self.kappa;
        [2.0 * q * (2.0 * x).sin() / d, 0.0]
    }
}

// ---------------------------------------------------------------------------
// Curvature flow
// ---------------------------------------------------------------------------

/// Branch of the curvature flow ∂_t h = −sR_h h realized inside a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowBranch {
    /// κ(t) = −4 cot 4t on t ∈ (−π/4, 0); solves κ̇ = κ² + 16.
    Sphere,
    /// κ(t) = −4 coth 4t on t > 0; solves κ̇ = κ² − 16 and keeps κ < −4.
    Torus,
}

/// The flow parameter κ(t) on the given branch.
pub fn flow_kappa(branch: FlowBranch, t: f64) -> Result<f64, FamilyError> {
    match branch {
        FlowBranch::Sphere => {
            let lo = -std::f64::consts::FRAC_PI_4;
            if !(t > lo && t < 0.0) {
                return Err(FamilyError::BranchDomain { t, lo, hi: 0.0 });
            }
            Ok(-4.0 / (4.0 * t).tan())
        }
        FlowBranch::Torus => {
            if !(t > 0.0) {
                return Err(FamilyError::BranchDomain {
                    t,
                    lo: 0.0,
                    hi: f64::INFINITY,
                });
            }
            Ok(-4.0 / (4.0 * t).tanh())
        }
    }
}

/// Max-norm, over the branch's natural sample points, of the flow defect
/// (h(t+δ) − h(t−δ))/(2δ) + sR_{h(t)} · h(t), with the time derivative by
/// centered differences (O(δ²) accurate).
pub fn ricci_flow_residual(branch: FlowBranch, t: f64, delta: f64) -> Result<f64, FamilyError> {
    let k_mid = flow_kappa(branch, t)?;
    let k_plus = flow_kappa(branch, t + delta)?;
    let k_minus = flow_kappa(branch, t - delta)?;
    let mut worst = 0.0f64;
    match branch {
        FlowBranch::Sphere => {
            let (fm, fp, f0) = (
                SphereFamily::new(k_minus),
                SphereFamily::new(k_plus),
                SphereFamily::new(k_mid),
            );
            for i in 0..=40 {
                let rho = 0.075 * i as f64; // samples across [0, 3]
                let dh = (fp.eval(rho).h_coeff - fm.eval(rho).h_coeff) / (2.0 * delta);
                let p = f0.eval(rho);
                worst = worst.max((dh + p.sr * p.h_coeff).abs());
            }
        }
        FlowBranch::Torus => {
            let (fm, fp, f0) = (
                TorusFamily::new(k_minus)?,
                TorusFamily::new(k_plus)?,
                TorusFamily::new(k_mid)?,
            );
            for i in 0..=40 {
                let s = std::f64::consts::PI * i as f64 / 40.0;
                let dh = (fp.eval(s).h_coeff - fm.eval(s).h_coeff) / (2.0 * delta);
                let p = f0.eval(s);
                worst = worst.max((dh + p.sr * p.h_coeff).abs());
            }
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Magnetic geodesics
// ---------------------------------------------------------------------------

/// Result of integrating D_σ̇ σ̇ = A(σ̇).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<[f64; 2]>,
    pub velocities: Vec<[f64; 2]>,
    /// Kinetic energy |σ̇|²_h along the curve (conserved by the flow).
    pub energy: Vec<f64>,
    /// Geodesic curvature measured from the trajectory itself (centered
    /// differences of the velocity plus the connection terms), not from the
    /// forcing term — an independent check of D_σ̇ σ̇ ⊥ σ̇.
    pub geo_curvature: Vec<f64>,
}

impl Trajectory {
    /// Max relative drift of |σ̇|²_h from its initial value.
    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy
            .iter()
            .map(|e| (e - e0).abs() / e0.abs().max(1e-300))
            .fold(0.0, f64::max)
    }
}

/// Integrate the magnetic geodesic equation D_σ̇ σ̇ = A(σ̇) on a conformal
/// metric λ(dx²+dy²) given by closed forms, with
/// A(v) = ¼ f · (v_y, −v_x) · mu_scale. Classical 4th-order Runge–Kutta
/// with fixed step dt.
pub fn magnetic_geodesic(
    lambda: impl Fn(f64, f64) -> f64,
    grad_log_lambda: impl Fn(f64, f64) -> [f64; 2],
    faraday: impl Fn(f64, f64) -> f64,
    start: [f64; 2],
    v0: [f64; 2],
    total_time: f64,
    dt: f64,
    mu_scale: f64,
) -> Result<Trajectory, FamilyError> {
    if !(dt > 0.0 && total_time > 0.0) {
        return Err(FamilyError::BadTimeStep {
            dt,
            total: total_time,
        });
    }
    let steps = (total_time / dt).round() as usize;

    // State (x, y, vx, vy); acceleration = −Γ(v,v) + A(v) with the conformal
    // connection terms −((∇u·v)v − ½|v|²∇u), u = log λ.
    let accel = |x: f64, y: f64, vx: f64, vy: f64| -> [f64; 4] {
        let [ux, uy] = grad_log_lambda(x, y);
        let udotv = ux * vx + uy * vy;
        let v2 = vx * vx + vy * vy;
        let f = faraday(x, y) * mu_scale;
        [
            vx,
            vy,
            -(udotv * vx - 0.5 * v2 * ux) + 0.25 * f * vy,
            -(udotv * vy - 0.5 * v2 * uy) - 0.25 * f * vx,
        ]
    };

    let mut state = [start[0], start[1], v0[0], v0[1]];
    let mut times = Vec::with_capacity(steps + 1);
    let mut positions = Vec::with_capacity(steps + 1);
    let mut velocities = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        if !state.iter().all(|v| v.is_finite()) {
            return Err(FamilyError::NonFiniteState(step));
        }
        times.push(step as f64 * dt);
        positions.push([state[0], state[1]]);
        velocities.push([state[2], state[3]]);
        if step == steps {
            break;
        }
        let k1 = accel(state[0], state[1], state[2], state[3]);
        let k2 = accel(
            state[0] + 0.5 * dt * k1[0],
            state[1] + 0.5 * dt * k1[1],
            state[2] + 0.5 * dt * k1[2],
            state[3] + 0.5 * dt * k1[3],
        );
        let k3 = accel(
            state[0] + 0.5 * dt * k2[0],
            state[1] + 0.5 * dt * k2[1],
            state[2] + 0.5 * dt * k2[2],
            state[3] + 0.5 * dt * k2[3],
        );
        let k4 = accel(
            state[0] + dt * k3[0],
            state[1] + dt * k3[1],
            state[2] + dt * k3[2],
            state[3] + dt * k3[3],
        );
        for i in 0..4 {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    let n = positions.len();
    let energy: Vec<f64> = (0..n)
        .map(|i| {
            let [x, y] = positions[i];
            let [vx, vy] = velocities[i];
            lambda(x, y) * (vx * vx + vy * vy)
        })
        .collect();

    // Measured geodesic curvature: κ_geo = ⟨D_σ̇σ̇, n̂⟩_h / |σ̇|²_h with
    // n̂ = Jσ̇/|σ̇|, Jv = (−v_y, v_x); in the flat chart this reduces to
    // (a·Jv)/(√λ |v|³) with a = σ̈ + Γ(σ̇,σ̇) from centered differences.
    let mut geo_curvature = vec![0.0; n];
    for i in 1..n.saturating_sub(1) {
        let [x, y] = positions[i];
        let [vx, vy] = velocities[i];
        let ax_fd = (velocities[i + 1][0] - velocities[i - 1][0]) / (2.0 * dt);
        let ay_fd = (velocities[i + 1][1] - velocities[i - 1][1]) / (2.0 * dt);
        let [ux, uy] = grad_log_lambda(x, y);
        let udotv = ux * vx + uy * vy;
        let v2 = vx * vx + vy * vy;
        let ax = ax_fd + udotv * vx - 0.5 * v2 * ux;
        let ay = ay_fd + udotv * vy - 0.5 * v2 * uy;
        let cross = -ax * vy + ay * vx; // a · Jv
        geo_curvature[i] = cross / (lambda(x, y).sqrt() * v2.powf(1.5));
    }
    if n >= 3 {
        geo_curvature[0] = geo_curvature[1];
        geo_curvature[n - 1] = geo_curvature[n - 2];
    }

    Ok(Trajectory {
        times,
        positions,
        velocities,
        energy,
        geo_curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::max_abs;
    use std::f64::consts::PI;

    #[test]
    fn sphere_eval_pinned_values() {
        let f0 = SphereFamily::new(0.0);
        let p = f0.eval(1.0);
        assert!((p.sr - 4.0).abs() < 1e-14, "κ=0, ρ=1: sR = 4, got {}", p.sr);
        assert!(p.f.abs() < 1e-14, "f vanishes on the equator");
        assert!((p.h_coeff - 1.0).abs() < 1e-14, "h_coeff = 1 at the equator");

        let p0 = f0.eval(0.0);
        assert!(p0.sr.abs() < 1e-14, "κ=0, ρ=0: sR = 0");
        assert!(
            (p0.f * p0.f - 16.0).abs() < 1e-12,
            "κ=0, ρ=0: f² = 16, got {}",
            p0.f * p0.f
        );

        let f3 = SphereFamily::new(3.0);
        assert!(
            (f3.eval(1.0).sr - 5.0).abs() < 1e-14,
            "κ=3, ρ=1: sR = √(κ²+16) = 5"
        );
    }

    #[test]
    fn sphere_constant_identities_close() {
        for kappa in [-8.0, 0.0, 3.0, 8.0] {
            let fam = SphereFamily::new(kappa);
            let target = kappa * kappa + 16.0;
            for i in 0..60 {
                let rho = 0.05 + 0.25 * i as f64;
                let p = fam.eval(rho);
                // δγ = 0 for the rotational γ, so uR = sR here.
                let vortex = p.sr - 4.0 * p.gamma_norm2 - kappa;
                assert!(
                    vortex.abs() < 1e-12,
                    "uR − 4|γ|² = κ must hold, defect {vortex} at κ={kappa}, ρ={rho}"
                );
                let inv = p.sr * p.sr + p.f * p.f - target;
                assert!(
                    inv.abs() < 1e-10,
                    "sR² + f² = κ² + 16 must hold, defect {inv} at κ={kappa}, ρ={rho}"
                );
            }
        }
    }

    #[test]
    fn sphere_inversion_symmetry() {
        let fam = SphereFamily::new(3.0);
        for i in 1..40 {
            let rho = 0.1 * i as f64;
            let p = fam.eval(rho);
            let q = fam.eval(1.0 / rho);
            let pulled = q.h_coeff / rho.powi(4);
            assert!(
                (pulled - p.h_coeff).abs() < 1e-12 * p.h_coeff,
                "h is invariant under ρ → 1/ρ with the chart Jacobian"
            );
            assert!((q.sr - p.sr).abs() < 1e-10, "sR is inversion-invariant");
            assert!((q.f + p.f).abs() < 1e-10, "f is inversion-odd");
        }
    }

    #[test]
    fn tau_and_vortex_parameter() {
        assert_eq!(tau(0.0), 0.0, "τ(0) = 0");
        assert!(nu_from_kappa(0.0).abs() < 1e-14, "ν(0) = 0");
        let nu3 = nu_from_kappa(3.0);
        assert!(
            (nu3 - 17.479).abs() < 1e-3,
            "ν(3) ≈ 17.479, got {nu3}"
        );
        // Large-κ limit: ν → 8π from below, monotonically.
        let mut prev = f64::NEG_INFINITY;
        for kappa in [0.0, 1.0, 10.0, 100.0, 1e4, 1e6] {
            let nu = nu_from_kappa(kappa);
            assert!(nu > prev && nu < 8.0 * PI, "ν increases toward 8π");
            prev = nu;
        }
        assert!(
            8.0 * PI - nu_from_kappa(1e8) < 1e-6,
            "ν approaches 8π as κ → ∞"
        );

        // θ cross-check: κ(θ) and ν(θ) agree with the κ route.
        let fam = SphereFamily::new(3.0);
        let (kap, nu) = theta_conversions(fam.theta()).expect("theta in range");
        assert!((kap - 3.0).abs() < 1e-12, "θ ↔ κ round-trips, got {kap}");
        assert!(
            (nu - nu3).abs() < 1e-12,
            "ν(θ) = 16πθcot2θ matches 8πτ(κ/4): {nu} vs {nu3}"
        );
    }

    #[test]
    fn sphere_volume_formula_and_quadrature() {
        assert!(
            (SphereFamily::new(0.0).volume() - PI * PI).abs() < 1e-12,
            "κ=0 volume is π²"
        );
        assert!(
            SphereFamily::new(100.0).volume() < SphereFamily::new(0.0).volume()
                && SphereFamily::new(0.0).volume() < SphereFamily::new(-100.0).volume(),
            "volume decreases with κ"
        );
        let fam = SphereFamily::new(3.0);
        let (v, q) = (fam.volume(), fam.volume_quadrature());
        assert!(
            ((v - q) / v).abs() < 1e-8,
            "radial quadrature must confirm the closed form: {v} vs {q}"
        );
    }

    #[test]
    fn equator_lengths_pinned_and_related() {
        let (lh, ld) = SphereFamily::new(3.0).equator_lengths();
        assert!((lh - PI * 2f64.sqrt()).abs() < 1e-12, "κ=3: L_h = π√2");
        assert!((ld - PI * 5f64.sqrt()).abs() < 1e-12, "κ=3: L_ĥ = π√5");
        let (lh0, ld0) = SphereFamily::new(0.0).equator_lengths();
        assert!((lh0 - 2.0 * PI).abs() < 1e-12, "κ=0: L_h = 2π");
        assert!(
            (ld0 - 2.0 * 2f64.sqrt() * PI).abs() < 1e-12,
            "κ=0: L_ĥ = 2√2π"
        );
        for kappa in [-2.0, 0.0, 3.0, 7.5] {
            let fam = SphereFamily::new(kappa);
            let (a, b) = fam.equator_lengths();
            let ratio = 2.0 * 2f64.sqrt() * fam.radical().sqrt() / 4.0;
            assert!(
                (b / a - ratio).abs() < 1e-12,
                "L_ĥ/L_h = 2√2(κ²+16)^{{1/4}}/4 at κ={kappa}"
            );
        }

        // Arc-length oracle: the equator is the circle ρ = 1, so
        // L_h = 2π √h_coeff(1).
        let fam = SphereFamily::new(3.0);
        let oracle = 2.0 * PI * fam.eval(1.0).h_coeff.sqrt();
        assert!(
            (fam.equator_lengths().0 - oracle).abs() < 1e-12,
            "closed form matches the direct arc length"
        );
    }

    #[test]
    fn torus_eval_pinned_values() {
        assert!(
            matches!(TorusFamily::new(-4.0), Err(FamilyError::KappaOutOfRange(_))),
            "κ = −4 is the degenerate flat case"
        );
        let fam = TorusFamily::new(-5.0).expect("valid");
        let p0 = fam.eval(0.0);
        assert!((p0.h_coeff - 0.5).abs() < 1e-14, "κ=−5, s=0: h_coeff = ½");
        assert!((p0.sr + 3.0).abs() < 1e-14, "κ=−5, s=0: sR = −3");
        let p1 = fam.eval(PI / 2.0);
        assert!((p1.h_coeff - 2.0).abs() < 1e-14, "κ=−5, s=π/2: h_coeff = 2");
        assert!((p1.sr - 3.0).abs() < 1e-14, "κ=−5, s=π/2: sR = 3");

        for i in 0..100 {
            let s = 0.031 * i as f64;
            let p = fam.eval(s);
            assert!(
                (p.sr * p.sr + p.f * p.f - 9.0).abs() < 1e-10,
                "sR² + f² = κ² − 16 everywhere, defect at s={s}"
            );
            assert!(
                (p.sr - 4.0 * p.gamma_norm2 - fam.kappa).abs() < 1e-12,
                "uR − 4|γ|² = κ on the torus family"
            );
        }
    }

    #[test]
    fn torus_grid_structure_is_einstein() {
        let fam = TorusFamily::new(-5.0).expect("valid");
        let s = fam.structure(64).expect("structure");
        let r = s.einstein_residuals().expect("residuals");
        assert!(
            r.max() < 1e-10,
            "spectral torus residuals must be tiny: {r:?}"
        );
        let v = s.vortex_identity(1).expect("identity");
        assert!(
            (v.nu - fam.nu()).abs() < 1e-8,
            "ν = κπ²: {} vs {}",
            v.nu,
            fam.nu()
        );
        assert!(v.defect.abs() < 1e-8, "vortex identity closes: {}", v.defect);
        assert!(v.nu < 0.0, "torus instances have ν < 0");

        let inv = s.complex_scalar_invariant().expect("invariant");
        assert!(
            (inv.value - 9.0).abs() < 1e-8 && inv.spread < 1e-8,
            "uR² + f² = 9 on the κ=−5 torus, got {inv:?}"
        );
    }

    #[test]
    fn sphere_grid_structure_is_einstein() {
        let fam = SphereFamily::new(3.0);
        let s = fam
            .structure(SphereChart::default_chart())
            .expect("structure");
        let r = s.einstein_residuals().expect("residuals");
        assert!(
            r.max() < 1e-5,
            "FD sphere residuals within tolerance: {r:?}"
        );
        let v = s.vortex_identity(0).expect("identity");
        assert!(
            ((v.nu - fam.nu()) / fam.nu()).abs() < 1e-6,
            "quadrature ν matches 8πτ(κ/4): {} vs {}",
            v.nu,
            fam.nu()
        );
        assert!(v.nu < 8.0 * PI, "sphere instances have ν < 8π");

        // FD scalar curvature against the closed form.
        let q = s.metric.scalar_curvature();
        let n = s.metric.surface.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            let [x, y] = s.metric.surface.point(i);
            let exact = fam.eval((x * x + y * y).sqrt()).sr;
            worst = worst.max((q[i] - exact).abs());
        }
        assert!(worst < 1e-5, "FD sR matches the closed form, worst {worst}");

        // uR stays constant along the flow of γ♯.
        let quantities = s.curvature_quantities().expect("quantities");
        let drift = s
            .derivative_along_gamma(&quantities.ur)
            .expect("directional derivative");
        assert!(drift < 1e-6, "uR is constant along γ♯, drift {drift}");
    }

    #[test]
    fn flow_parameterizations_solve_their_equations() {
        // κ̇ = κ² + 16 (sphere), κ̇ = κ² − 16 (torus), by centered FD in t.
        let d = 1e-6;
        let t = -0.1;
        let k = flow_kappa(FlowBranch::Sphere, t).expect("in domain");
        let kdot = (flow_kappa(FlowBranch::Sphere, t + d).unwrap()
            - flow_kappa(FlowBranch::Sphere, t - d).unwrap())
            / (2.0 * d);
        assert!(
            (kdot - (k * k + 16.0)).abs() < 1e-4 * (k * k + 16.0),
            "sphere branch satisfies its parameter equation"
        );
        let t = 0.5;
        let k = flow_kappa(FlowBranch::Torus, t).expect("in domain");
        let kdot = (flow_kappa(FlowBranch::Torus, t + d).unwrap()
            - flow_kappa(FlowBranch::Torus, t - d).unwrap())
            / (2.0 * d);
        assert!(
            (kdot - (k * k - 16.0)).abs() < 1e-4 * (k * k - 16.0).abs(),
            "torus branch satisfies its parameter equation"
        );
        assert!(k < -4.0, "torus branch stays in the family domain");
        assert!(
            matches!(
                flow_kappa(FlowBranch::Sphere, 0.1),
                Err(FamilyError::BranchDomain { .. })
            ),
            "out-of-domain times are rejected"
        );
    }

    #[test]
    fn flow_residual_is_small_and_second_order() {
        // κ = 0 happens at t = −π/8 on the sphere branch.
        let t_sphere = -PI / 8.0;
        let r = ricci_flow_residual(FlowBranch::Sphere, t_sphere, 1e-4).expect("residual");
        assert!(r < 1e-6, "sphere flow residual ≤ 1e−6, got {r}");
        let r_torus = ricci_flow_residual(FlowBranch::Torus, 0.5, 1e-4).expect("residual");
        assert!(r_torus < 1e-6, "torus flow residual ≤ 1e−6, got {r_torus}");

        // Centered differences: defect scales like δ².
        let r1 = ricci_flow_residual(FlowBranch::Sphere, t_sphere, 1e-2).expect("residual");
        let r2 = ricci_flow_residual(FlowBranch::Sphere, t_sphere, 1e-3).expect("residual");
        let ratio = r1 / r2;
        assert!(
            (50.0..200.0).contains(&ratio),
            "δ-refinement by 10 must shrink the defect ~100×, got {ratio}"
        );
    }

    #[test]
    fn equator_magnetic_geodesic_stays_on_the_equator() {
        let fam = SphereFamily::new(3.0);
        let dt = 2.0 * PI / 2e4; // ≥ 10⁴ steps per revolution at unit chart speed
        let traj = magnetic_geodesic(
            |x, y| fam.eval((x * x + y * y).sqrt()).h_coeff,
            |x, y| fam.grad_log_lambda(x, y),
            |x, y| fam.eval((x * x + y * y).sqrt()).f,
            [1.0, 0.0],
            [0.0, 1.0], // γ♯ at (1, 0)
            2.0 * PI,
            dt,
            1.0,
        )
        .expect("trajectory");
        let radial_dev = traj
            .positions
            .iter()
            .map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs())
            .fold(0.0f64, f64::max);
        assert!(
            radial_dev < 1e-8,
            "the equator is a magnetic geodesic, deviation {radial_dev}"
        );
        assert!(
            traj.max_energy_drift() < 1e-10,
            "kinetic energy is conserved, drift {}",
            traj.max_energy_drift()
        );
        let kmax = max_abs(&traj.geo_curvature);
        assert!(
            kmax < 1e-6,
            "f = 0 on the equator, so the geodesic curvature vanishes, got {kmax}"
        );
    }

    #[test]
    fn off_equator_orbit_has_the_predicted_curvature() {
        let fam = SphereFamily::new(3.0);
        let rho = 0.5;
        let dt = 2.0 * PI / 2e4;
        let traj = magnetic_geodesic(
            |x, y| fam.eval((x * x + y * y).sqrt()).h_coeff,
            |x, y| fam.grad_log_lambda(x, y),
            |x, y| fam.eval((x * x + y * y).sqrt()).f,
            [rho, 0.0],
            [0.0, rho], // γ♯ at (ρ, 0)
            2.0 * PI,
            dt,
            1.0,
        )
        .expect("trajectory");
        let radial_dev = traj
            .positions
            .iter()
            .map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - rho).abs())
            .fold(0.0f64, f64::max);
        assert!(
            radial_dev < 1e-8,
            "γ♯ integral curves are circles, deviation {radial_dev}"
        );
        let p = fam.eval(rho);
        let expected = -0.25 * p.f / p.gamma_norm2.sqrt();
        let worst = traj
            .geo_curvature
            .iter()
            .map(|k| (k - expected).abs())
            .fold(0.0f64, f64::max);
        assert!(
            worst < 1e-6,
            "κ_geo = −¼|γ|⁻¹f along the orbit: worst dev {worst} from {expected}"
        );
    }

    #[test]
    fn zero_faraday_gives_an_ordinary_geodesic() {
        // With κ = 0 the equator is an honest geodesic of the metric.
        let fam = SphereFamily::new(0.0);
        let dt = 2.0 * PI / 2e4;
        let traj = magnetic_geodesic(
            |x, y| fam.eval((x * x + y * y).sqrt()).h_coeff,
            |x, y| fam.grad_log_lambda(x, y),
            |_, _| 0.0,
            [1.0, 0.0],
            [0.0, 1.0],
            2.0 * PI,
            dt,
            1.0,
        )
        .expect("trajectory");
        assert!(
            traj.max_energy_drift() < 1e-10,
            "geodesic flow conserves energy, drift {}",
            traj.max_energy_drift()
        );
        let radial_dev = traj
            .positions
            .iter()
            .map(|p| ((p[0] * p[0] + p[1] * p[1]).sqrt() - 1.0).abs())
            .fold(0.0f64, f64::max);
        assert!(
            radial_dev < 1e-8,
            "the κ=0 equator is totally geodesic, deviation {radial_dev}"
        );
    }
}
