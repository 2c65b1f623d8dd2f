//! AH structures and their Einstein/vortex residual suites.
//!
//! An AH structure is assembled from its distinguished (Gauduchon)
//! representative metric h, an optional cubic torsion differential B
//! (degree 3, lowered by h), and an optional Faraday primitive one-form γ.
//! Einstein candidates carry at most one of {B, γ}: a nonzero B with γ = 0 is
//! the *exact* case, a nonzero γ with B = 0 the *Weyl* case.
//!
//! Everything here is evaluated as a residual: the curvature quantities are
//! computed from the stored data, and each identity an Einstein structure
//! must satisfy is returned as a max-norm defect, so that closed-form inputs
//! certify the implementation and perturbed inputs are loudly rejected.
//!
//! Conventions:
//! - The weighted curvature is uR = sR − ¼|B|²_h − 2δγ.
//! - The Faraday two-form is F = −dγ, and the Faraday function f is its
//!   density against the volume form: 2F = f·ω with ω = λ dx∧dy, which on
//!   the flat chart reads f = −2(∂_x γ_y − ∂_y γ_x)/λ.
//! - The trace-free Einstein tensor is contracted as
//!   4E_ij = D_p β_ij^p − 2 γ_p β_ij^p with β the torsion raised by h.

use crate::differential::{contract_vector, DifferentialError, KDifferential};
use crate::grid::GridError;
use crate::metric::{ConformalMetric, OneForm};

/// Errors from structure assembly and residual evaluation.
#[derive(Debug, thiserror::Error)]
pub enum StructureError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Differential(#[from] DifferentialError),
    #[error("cubic torsion must have degree 3, got {0}")]
    NotCubic(i32),
    #[error("residual is defined only for a pure case, but both B and γ are nonzero")]
    MixedStructure,
    #[error(
        "uR − 4|γ|² is not constant (relative spread {relative_spread:.3e} \
         exceeds {tolerance:.0e}); the structure is not Einstein"
    )]
    NotEinstein {
        relative_spread: f64,
        tolerance: f64,
    },
    #[error("genus must be 0 or 1 on the available charts, got {0}")]
    BadGenus(u32),
}

/// An AH structure in its distinguished-metric presentation.
#[derive(Debug, Clone, PartialEq)]
pub struct AHStructure {
    pub metric: ConformalMetric,
    /// Cubic torsion, lowered by the metric (degree 3), if nonzero.
    pub b: Option<KDifferential>,
    /// Faraday primitive one-form of the distinguished metric, if nonzero.
    pub gamma: Option<OneForm>,
}

/// Pointwise curvature data of a structure.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureQuantities {
    /// Scalar curvature sR of the metric.
    pub sr: Vec<f64>,
    /// Weighted curvature uR = sR − ¼|B|² − 2δγ.
    pub ur: Vec<f64>,
    /// Faraday function f (2F = f·ω, F = −dγ).
    pub f: Vec<f64>,
    /// |B|²_h.
    pub b_norm2: Vec<f64>,
    /// |γ|²_h.
    pub gamma_norm2: Vec<f64>,
}

/// Max-norm defects of the Einstein equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EinsteinResiduals {
    /// |4E|_h = |D_p β_ij^p − 2 γ_p β_ij^p|_h (pure divergence when γ = 0).
    pub div_b: f64,
    /// max |B|²_h |γ|_h (the two torsion channels must not coexist).
    pub b_gamma: f64,
    /// Killing defect |ℒ_{γ♯} h|_h of the Faraday primitive.
    pub killing: f64,
    /// |d(uR − 4|γ|²)|_h (the vortex constant must not drift).
    pub const_defect: f64,
}

impl EinsteinResiduals {
    pub fn max(&self) -> f64 {
        self.div_b
            .max(self.b_gamma)
            .max(self.killing)
            .max(self.const_defect)
    }
}

/// The vortex parameter and its integral identity defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexIdentity {
    /// The constant κ = uR − 4|γ|² (volume-weighted mean).
    pub kappa: f64,
    /// ν = κ · vol(M).
    pub nu: f64,
    /// 8π(1−g) − ¼‖B‖² − 4‖γ‖² − ν.
    pub defect: f64,
    /// Slack of the bound ν ≤ 8π(1−g); nonnegative when the bound holds.
    pub bound_slack: f64,
    /// Relative spread of uR − 4|γ|² around κ.
    pub relative_spread: f64,
}

/// Mean and spread of the conformally invariant combination uR² + f².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexScalarInvariant {
    /// Volume-weighted mean of uR² + f².
    pub value: f64,
    /// Max deviation of uR² + f² from the mean.
    pub spread: f64,
    /// (max uR)², which the invariant must equal for Einstein structures.
    pub max_ur_squared: f64,
}

impl AHStructure {
    pub fn new(
        metric: ConformalMetric,
        b: Option<KDifferential>,
        gamma: Option<OneForm>,
    ) -> Result<Self, StructureError> {
        if let Some(bd) = &b {
            if bd.degree != 3 {
                return Err(StructureError::NotCubic(bd.degree));
            }
            if bd.surface != metric.surface {
                return Err(GridError::SurfaceMismatch.into());
            }
        }
        if let Some(g) = &gamma {
            metric.surface.check_len(&g.comp_x)?;
            metric.surface.check_len(&g.comp_y)?;
        }
        Ok(Self { metric, b, gamma })
    }

    /// Structure with neither torsion channel (a plain conformal metric).
    pub fn plain(metric: ConformalMetric) -> Self {
        Self {
            metric,
            b: None,
            gamma: None,
        }
    }

    fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.metric.surface.len()]
    }

    /// Faraday function f: 2F = f·ω with F = −dγ.
    pub fn faraday_function(&self) -> Vec<f64> {
        match &self.gamma {
            None => self.zeros(),
            Some(g) => {
                let lam = self.metric.total_lambda();
                let gyx = self.metric.surface.dx(&g.comp_y);
                let gxy = self.metric.surface.dy(&g.comp_x);
                (0..lam.len())
                    .map(|i| -2.0 * (gyx[i] - gxy[i]) / lam[i])
                    .collect()
            }
        }
    }

    /// All pointwise curvature quantities of the structure.
    pub fn curvature_quantities(&self) -> Result<CurvatureQuantities, StructureError> {
        let sr = self.metric.scalar_curvature();
        let b_norm2 = match &self.b {
            Some(b) => b.norm2(&self.metric),
            None => self.zeros(),
        };
        let (gamma_norm2, delta_gamma) = match &self.gamma {
            Some(g) => (
                self.metric.one_form_norm2(g),
                self.metric.codifferential(g),
            ),
            None => (self.zeros(), self.zeros()),
        };
        let ur: Vec<f64> = (0..sr.len())
            .map(|i| sr[i] - 0.25 * b_norm2[i] - 2.0 * delta_gamma[i])
            .collect();
        Ok(CurvatureQuantities {
            sr,
            ur,
            f: self.faraday_function(),
            b_norm2,
            gamma_norm2,
        })
    }

    /// Max-norm residuals of the Einstein equations.
    pub fn einstein_residuals(&self) -> Result<EinsteinResiduals, StructureError> {
        let n = self.metric.surface.len();
        let lam = self.metric.total_lambda();

        let div_b = match &self.b {
            None => 0.0,
            Some(b) => {
                // Components of div_h B = 2 Re(d dz²) with d the divergence
                // coefficient: D[0] = 2 Re d, D[1] = −2 Im d.
                let d = b.divergence_coeff(&self.metric)?;
                let mut r0: Vec<f64> = d.iter().map(|v| 2.0 * v.re).collect();
                let mut r1: Vec<f64> = d.iter().map(|v| -2.0 * v.im).collect();
                if let Some(g) = &self.gamma {
                    // γ♯ components λ⁻¹ γ; 4E = div B − 2 ι(γ♯)B.
                    let gx: Vec<f64> = (0..n).map(|i| g.comp_x[i] / lam[i]).collect();
                    let gy: Vec<f64> = (0..n).map(|i| g.comp_y[i] / lam[i]).collect();
                    let contracted = contract_vector(&b.components(), &gx, &gy);
                    for i in 0..n {
                        r0[i] -= 2.0 * contracted[0][i];
                        r1[i] -= 2.0 * contracted[1][i];
                    }
                }
                // h-norm of a trace-free symmetric 2-tensor (a, b, −a):
                // |T|²_h = 2λ⁻²(a² + b²).
                let norm: Vec<f64> = (0..n)
                    .map(|i| (2.0 * (r0[i] * r0[i] + r1[i] * r1[i])).sqrt() / lam[i])
                    .collect();
                self.metric.surface.sup_interior(&norm)
            }
        };

        let b_gamma = match (&self.b, &self.gamma) {
            (Some(b), Some(g)) => {
                let bn2 = b.norm2(&self.metric);
                let gn2 = self.metric.one_form_norm2(g);
                let prod: Vec<f64> = (0..n).map(|i| bn2[i] * gn2[i].sqrt()).collect();
                self.metric.surface.sup_interior(&prod)
            }
            _ => 0.0,
        };

        let killing = match &self.gamma {
            Some(g) => {
                let lie = self.metric.lie_derivative_metric(g).norm(&self.metric);
                self.metric.surface.sup_interior(&lie)
            }
            None => 0.0,
        };

        let q = self.curvature_quantities()?;
        let u: Vec<f64> = (0..n).map(|i| q.ur[i] - 4.0 * q.gamma_norm2[i]).collect();
        let ux = self.metric.surface.dx(&u);
        let uy = self.metric.surface.dy(&u);
        let grad_norm: Vec<f64> = (0..n)
            .map(|i| ((ux[i] * ux[i] + uy[i] * uy[i]) / lam[i]).sqrt())
            .collect();
        let const_defect = self.metric.surface.sup_interior(&grad_norm);

        Ok(EinsteinResiduals {
            div_b,
            b_gamma,
            killing,
            const_defect,
        })
    }

    /// The vortex parameter ν and the defect of its integral identity
    /// 8π(1−g) = ¼‖B‖² + 4‖γ‖² + ν.
    pub fn vortex_identity(&self, genus: u32) -> Result<VortexIdentity, StructureError> {
        if genus > 1 {
            return Err(StructureError::BadGenus(genus));
        }
        let q = self.curvature_quantities()?;
        let n = q.ur.len();
        let u: Vec<f64> = (0..n).map(|i| q.ur[i] - 4.0 * q.gamma_norm2[i]).collect();
        let kappa = self.metric.mean(&u)?;
        let dev: Vec<f64> = u.iter().map(|v| v - kappa).collect();
        let spread = self.metric.surface.sup_interior(&dev);
        let relative_spread = spread / kappa.abs().max(1.0);
        let tolerance = 1e-4;
        if relative_spread > tolerance {
            return Err(StructureError::NotEinstein {
                relative_spread,
                tolerance,
            });
        }
        let vol = self.metric.volume();
        let nu = kappa * vol;
        let b_l2 = self.metric.integrate(&q.b_norm2)?;
        let g_l2 = self.metric.integrate(&q.gamma_norm2)?;
        let euler_part = 8.0 * std::f64::consts::PI * (1.0 - genus as f64);
        Ok(VortexIdentity {
            kappa,
            nu,
            defect: euler_part - 0.25 * b_l2 - 4.0 * g_l2 - nu,
            bound_slack: euler_part - nu,
            relative_spread,
        })
    }

    /// Max-norm residual of the Abelian vortex equation satisfied by the
    /// structure's holomorphic sections: −(q/2)·sR + sign(q)·½|s|² − ½τ,
    /// with (q, |s|², τ) = (3, ¾|B|², −3·mean uR) in the exact case and
    /// (−1, 4|γ|², mean(uR − 4|γ|²)) in the Weyl case. A structure with
    /// neither channel is treated as exact with s = 0.
    pub fn vortex_residual(&self) -> Result<f64, StructureError> {
        let q = self.curvature_quantities()?;
        let n = q.sr.len();
        let (power, s_norm2, tau): (f64, Vec<f64>, f64) = match (&self.b, &self.gamma) {
            (Some(_), Some(_)) => return Err(StructureError::MixedStructure),
            (_, None) => {
                let s2: Vec<f64> = q.b_norm2.iter().map(|v| 0.75 * v).collect();
                let tau = -3.0 * self.metric.mean(&q.ur)?;
                (3.0, s2, tau)
            }
            (None, Some(_)) => {
                let s2: Vec<f64> = q.gamma_norm2.iter().map(|v| 4.0 * v).collect();
                let u: Vec<f64> = (0..n).map(|i| q.ur[i] - 4.0 * q.gamma_norm2[i]).collect();
                let tau = self.metric.mean(&u)?;
                (-1.0, s2, tau)
            }
        };
        let res: Vec<f64> = (0..n)
            .map(|i| {
                -(power / 2.0) * q.sr[i] + power.signum() * 0.5 * s_norm2[i] - 0.5 * tau
            })
            .collect();
        Ok(self.metric.surface.sup_interior(&res))
    }

    /// Mean and spread of uR² + f² (constant for Einstein structures, and
    /// equal to (max uR)² on the sphere).
    pub fn complex_scalar_invariant(&self) -> Result<ComplexScalarInvariant, StructureError> {
        let q = self.curvature_quantities()?;
        let n = q.ur.len();
        let inv: Vec<f64> = (0..n).map(|i| q.ur[i] * q.ur[i] + q.f[i] * q.f[i]).collect();
        let value = self.metric.mean(&inv)?;
        let dev: Vec<f64> = inv.iter().map(|v| v - value).collect();
        let spread = self.metric.surface.sup_interior(&dev);
        let max_ur = q.ur.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(ComplexScalarInvariant {
            value,
            spread,
            max_ur_squared: max_ur * max_ur,
        })
    }

    /// Directional derivative of a field along γ♯ (max-norm). Einstein–Weyl
    /// structures keep uR constant along the flow of γ♯.
    pub fn derivative_along_gamma(&self, field: &[f64]) -> Result<f64, StructureError> {
        let g = match &self.gamma {
            Some(g) => g,
            None => return Ok(0.0),
        };
        self.metric.surface.check_len(field)?;
        let lam = self.metric.total_lambda();
        let fx = self.metric.surface.dx(field);
        let fy = self.metric.surface.dy(field);
        let deriv: Vec<f64> = (0..field.len())
            .map(|i| (g.comp_x[i] * fx[i] + g.comp_y[i] * fy[i]) / lam[i])
            .collect();
        Ok(self.metric.surface.sup_interior(&deriv))
    }
}
