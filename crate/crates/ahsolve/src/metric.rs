//! Conformal metrics h = λ · (flat chart metric) and their calculus.
//!
//! Every metric in the crate is stored as a base (flat torus, or the round
//! sphere of scalar curvature 2 and volume 4π in the stereographic chart)
//! times e^φ. The total conformal factor relative to the flat chart metric is
//! λ = λ_base · e^φ, and all operators reduce to flat-chart calculus:
//!
//! - Δ_h f = λ⁻¹ Δ_flat f
//! - sR_h = λ⁻¹ (sR_base λ_base − Δ_flat φ)
//! - dvol_h = λ dx dy
//! - Christoffel symbols from u = log λ.
//!
//! Tensor components are always stored in the flat chart coordinate frame;
//! norms and traces insert the appropriate powers of λ.

use crate::grid::{GridError, Surface};

/// Background representative of the conformal class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    /// λ_base = 1, sR_base = 0. Only valid on a torus chart.
    FlatTorus,
    /// λ_base = 4/(1+ρ²)², sR_base = 2, volume 4π. Only valid on a sphere chart.
    RoundSphere,
}

/// A metric e^φ · base on a discrete surface.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalMetric {
    pub surface: Surface,
    pub base: Base,
    /// log conformal factor φ relative to the base
    pub log_factor: Vec<f64>,
}

/// A one-form field by flat-chart components (α_x, α_y).
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm {
    pub comp_x: Vec<f64>,
    pub comp_y: Vec<f64>,
}

impl ConformalMetric {
    pub fn new(surface: Surface, base: Base, log_factor: Vec<f64>) -> Result<Self, GridError> {
        surface.check_len(&log_factor)?;
        match (&surface, base) {
            (Surface::Torus(_), Base::FlatTorus) | (Surface::Sphere(_), Base::RoundSphere) => {}
            _ => return Err(GridError::SurfaceMismatch),
        }
        Ok(Self {
            surface,
            base,
            log_factor,
        })
    }

    pub fn flat(surface: Surface) -> Self {
        let n = surface.len();
        Self::new(surface, Base::FlatTorus, vec![0.0; n]).expect("flat torus metric is valid")
    }

    pub fn round(surface: Surface) -> Self {
        let n = surface.len();
        Self::new(surface, Base::RoundSphere, vec![0.0; n]).expect("round sphere metric is valid")
    }

    /// Build directly from a total conformal factor λ relative to the flat
    /// chart metric.
    pub fn from_total_lambda(surface: Surface, lambda: &[f64]) -> Result<Self, GridError> {
        surface.check_len(lambda)?;
        let base = match &surface {
            Surface::Torus(_) => Base::FlatTorus,
            Surface::Sphere(_) => Base::RoundSphere,
        };
        let base_l = base_lambda(&surface, base);
        let phi: Vec<f64> = lambda
            .iter()
            .zip(&base_l)
            .map(|(l, b)| (l / b).ln())
            .collect();
        Self::new(surface, base, phi)
    }

    /// Total conformal factor λ = λ_base e^φ relative to the flat chart metric.
    pub fn total_lambda(&self) -> Vec<f64> {
        let base_l = base_lambda(&self.surface, self.base);
        base_l
            .iter()
            .zip(&self.log_factor)
            .map(|(b, p)| b * p.exp())
            .collect()
    }

    /// Rescale by a further conformal factor: returns e^ψ · self.
    pub fn rescaled(&self, psi: &[f64]) -> Result<Self, GridError> {
        self.surface.check_len(psi)?;
        let phi = self
            .log_factor
            .iter()
            .zip(psi)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.surface.clone(), self.base, phi)
    }

    /// Metric Laplacian Δ_h f = λ⁻¹ Δ_flat f.
    pub fn laplacian(&self, f: &[f64]) -> Result<Vec<f64>, GridError> {
        self.surface.check_len(f)?;
        let lf = self.surface.laplacian_flat(f);
        let lam = self.total_lambda();
        Ok(lf.iter().zip(&lam).map(|(v, l)| v / l).collect())
    }

    /// Scalar curvature sR_h = λ⁻¹ (sR_base λ_base − Δ_flat φ).
    ///
    /// The base contribution is inserted analytically (0 for the flat torus,
    /// 2·λ_round for the round sphere), so discretization error enters only
    /// through derivatives of the log factor φ.
    pub fn scalar_curvature(&self) -> Vec<f64> {
        let lam = self.total_lambda();
        let lphi = self.surface.laplacian_flat(&self.log_factor);
        match self.base {
            Base::FlatTorus => lphi
                .iter()
                .zip(&lam)
                .map(|(lp, l)| -lp / l)
                .collect(),
            Base::RoundSphere => {
                let base_l = base_lambda(&self.surface, self.base);
                lphi.iter()
                    .zip(&lam)
                    .zip(&base_l)
                    .map(|((lp, l), bl)| (2.0 * bl - lp) / l)
                    .collect()
            }
        }
    }

    /// ∫ f dvol_h.
    pub fn integrate(&self, f: &[f64]) -> Result<f64, GridError> {
        self.surface.check_len(f)?;
        let lam = self.total_lambda();
        let weighted: Vec<f64> = f.iter().zip(&lam).map(|(v, l)| v * l).collect();
        Ok(self.surface.integrate_flat(&weighted))
    }

    pub fn volume(&self) -> f64 {
        let one = vec![1.0; self.surface.len()];
        self.integrate(&one).expect("constant field has matching length")
    }

    /// Volume-weighted mean of a scalar field.
    pub fn mean(&self, f: &[f64]) -> Result<f64, GridError> {
        Ok(self.integrate(f)? / self.volume())
    }

    /// ∫ sR dvol − 4πχ(M); vanishes to quadrature tolerance on closed surfaces.
    pub fn gauss_bonnet_defect(&self, genus: u32) -> Result<f64, GridError> {
        if genus > 1 {
            return Err(GridError::SurfaceMismatch);
        }
        let sr = self.scalar_curvature();
        let total = self.integrate(&sr)?;
        let chi = 2.0 - 2.0 * genus as f64;
        Ok(total - 4.0 * std::f64::consts::PI * chi)
    }

    /// Hodge star on one-forms for the standard orientation dx ∧ dy:
    /// (⋆α)_x = −α_y, (⋆α)_y = α_x (conformally invariant, pointwise algebra).
    pub fn hodge_star(&self, alpha: &OneForm) -> OneForm {
        OneForm {
            comp_x: alpha.comp_y.iter().map(|v| -v).collect(),
            comp_y: alpha.comp_x.clone(),
        }
    }

    /// |α|²_h = λ⁻¹ (α_x² + α_y²) pointwise.
    pub fn one_form_norm2(&self, alpha: &OneForm) -> Vec<f64> {
        let lam = self.total_lambda();
        alpha
            .comp_x
            .iter()
            .zip(&alpha.comp_y)
            .zip(&lam)
            .map(|((x, y), l)| (x * x + y * y) / l)
            .collect()
    }

    /// Co-differential δα = −λ⁻¹ (∂_x α_x + ∂_y α_y).
    pub fn codifferential(&self, alpha: &OneForm) -> Vec<f64> {
        let dx = self.surface.dx(&alpha.comp_x);
        let dy = self.surface.dy(&alpha.comp_y);
        let lam = self.total_lambda();
        dx.iter()
            .zip(&dy)
            .zip(&lam)
            .map(|((a, b), l)| -(a + b) / l)
            .collect()
    }

    /// Christoffel symbols of h = λ·flat from u = log λ. Returns the six
    /// independent values per node as (Γ^x_xx, Γ^x_xy, Γ^x_yy, Γ^y_xx,
    /// Γ^y_xy, Γ^y_yy); note Γ^x_xx = u_x/2 = Γ^y_xy, Γ^x_xy = u_y/2,
    /// Γ^x_yy = −u_x/2, Γ^y_xx = −u_y/2.
    pub fn christoffels(&self) -> Christoffels {
        let lam = self.total_lambda();
        let u: Vec<f64> = lam.iter().map(|l| l.ln()).collect();
        let ux = self.surface.dx(&u);
        let uy = self.surface.dy(&u);
        Christoffels { ux, uy }
    }

    /// Symmetrized covariant derivative residual of a one-form:
    /// max over the grid of the h-norm of K_ij = 2 D_(i γ_j).
    pub fn killing_residual(&self, gamma: &OneForm) -> f64 {
        let k = self.lie_derivative_metric(gamma);
        let lam = self.total_lambda();
        let mut worst: f64 = 0.0;
        for i in 0..lam.len() {
            let n2 = (k.xx[i] * k.xx[i] + 2.0 * k.xy[i] * k.xy[i] + k.yy[i] * k.yy[i])
                / (lam[i] * lam[i]);
            worst = worst.max(n2.sqrt());
        }
        worst
    }

    /// (ℒ_{γ♯} h)_ij = 2 D_(i γ_j) by flat-chart components.
    pub fn lie_derivative_metric(&self, gamma: &OneForm) -> SymTensor2 {
        let ch = self.christoffels();
        let gxx = self.surface.dx(&gamma.comp_x);
        let gxy = self.surface.dy(&gamma.comp_x);
        let gyx = self.surface.dx(&gamma.comp_y);
        let gyy = self.surface.dy(&gamma.comp_y);
        let n = gxx.len();
        let mut xx = vec![0.0; n];
        let mut xy = vec![0.0; n];
        let mut yy = vec![0.0; n];
        for i in 0..n {
            let (ux2, uy2) = (ch.ux[i] / 2.0, ch.uy[i] / 2.0);
            let (gx, gy) = (gamma.comp_x[i], gamma.comp_y[i]);
            // D_x γ_x = ∂_x γ_x − Γ^x_xx γ_x − Γ^y_xx γ_y
            let dxx = gxx[i] - ux2 * gx + uy2 * gy;
            // D_x γ_y = ∂_x γ_y − Γ^x_xy γ_x − Γ^y_xy γ_y
            let dxy = gyx[i] - uy2 * gx - ux2 * gy;
            // D_y γ_x = ∂_y γ_x − Γ^x_yx γ_x − Γ^y_yx γ_y
            let dyx = gxy[i] - uy2 * gx - ux2 * gy;
            // D_y γ_y = ∂_y γ_y − Γ^x_yy γ_x − Γ^y_yy γ_y
            let dyy = gyy[i] + ux2 * gx - uy2 * gy;
            xx[i] = 2.0 * dxx;
            xy[i] = dxy + dyx;
            yy[i] = 2.0 * dyy;
        }
        SymTensor2 { xx, xy, yy }
    }
}

/// Christoffel data of a conformal metric: the two derivatives of u = log λ
/// (all six symbols are ±u_x/2, ±u_y/2).
pub struct Christoffels {
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

/// Symmetric 2-tensor field by flat-chart components.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor2 {
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yy: Vec<f64>,
}

impl SymTensor2 {
    /// Pointwise h-norm |T|_h = λ⁻¹ √(T_xx² + 2T_xy² + T_yy²).
    pub fn norm(&self, m: &ConformalMetric) -> Vec<f64> {
        let lam = m.total_lambda();
        (0..self.xx.len())
            .map(|i| {
                (self.xx[i] * self.xx[i] + 2.0 * self.xy[i] * self.xy[i]
                    + self.yy[i] * self.yy[i])
                    .sqrt()
                    / lam[i]
            })
            .collect()
    }
}

/// λ_base relative to the flat chart metric.
pub fn base_lambda(surface: &Surface, base: Base) -> Vec<f64> {
    match base {
        Base::FlatTorus => vec![1.0; surface.len()],
        Base::RoundSphere => surface.sample(|x, y| {
            let q = 1.0 + x * x + y * y;
            4.0 / (q * q)
        }),
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
