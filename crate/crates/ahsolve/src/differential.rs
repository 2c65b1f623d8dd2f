//! Real parts of holomorphic k-differentials as trace-free symmetric tensors.
//!
//! A degree-k object (k > 0 covariant, k < 0 contravariant) is stored by its
//! complex coefficient c, with realized components B = 2 Re(c · dz^k)
//! (covariant) or B = 2 Re(c · ∂_z^{|k|}) (contravariant). Components are
//! indexed by the number of y-slots m = 0..|k|; trace-freeness is the exact
//! relation B[m+2] = −B[m].
//!
//! Norm dictionary (full contraction with h and h⁻¹ throughout):
//!   |B|²_h = λ^{−k} · 2^{k+1}|c|²  (covariant; λ^{|k|} · 2^{1−|k|}|c|²
//!   contravariant), and the Hermitian norm of the (k,0) part is
//!   |σ|² = |B|²/2.
//!
//! The covariant divergence of a trace-free symmetric tensor under a
//! conformal metric h = λ·flat has the closed complex form
//!   div_h B = 2 Re( 2λ⁻¹ ∂_z̄ c · dz^{k−1} ),
//! which this module uses directly (no Christoffel contractions, hence no
//! spurious cancellation error); a Christoffel-based evaluation is kept as a
//! cross-check in the tests.

use num_complex::Complex64;

use crate::grid::{GridError, Surface};
use crate::metric::{max_abs, ConformalMetric};

/// Binomial coefficient for component multiplicities.
pub fn binom(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Coefficient specification of a k-differential.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeff {
    /// σ = c · dz^k with constant c (the only option on the torus)
    Constant(Complex64),
    /// σ = p(z) · dz^k with polynomial p (sphere chart)
    Polynomial(Vec<Complex64>),
    /// arbitrary sampled coefficient field (perturbations, tests)
    Samples(Vec<Complex64>),
}

#[derive(Debug, thiserror::Error)]
pub enum DifferentialError {
    #[error("degree must be nonzero")]
    ZeroDegree,
    #[error("nonconstant coefficients are not allowed on the torus")]
    NonConstantOnTorus,
    #[error("operation requires degree k > 1, got {0}")]
    DegreeTooLow(i32),
    #[error("cone angle requires beta/k > -1 (beta = {0}, k = {1})")]
    BadConeOrder(i64, i64),
    #[error("differential vanishes on too much of the grid ({0} of {1} nodes below threshold)")]
    TooManyZeros(usize, usize),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Degree-k symmetric trace-free tensor given as the real part of a
/// (locally) holomorphic k-differential.
#[derive(Debug, Clone, PartialEq)]
pub struct KDifferential {
    pub degree: i32,
    pub coeff: Coeff,
    pub surface: Surface,
}

impl KDifferential {
    /// Realize B = 2 Re(coeff · dz^k) on the surface.
    pub fn realize(degree: i32, coeff: Coeff, surface: Surface) -> Result<Self, DifferentialError> {
        if degree == 0 {
            return Err(DifferentialError::ZeroDegree);
        }
        if matches!(surface, Surface::Torus(_)) && matches!(coeff, Coeff::Polynomial(_)) {
            return Err(DifferentialError::NonConstantOnTorus);
        }
        if let Coeff::Samples(s) = &coeff {
            if s.len() != surface.len() {
                return Err(GridError::SizeMismatch {
                    got: s.len(),
                    want: surface.len(),
                }
                .into());
            }
        }
        Ok(Self {
            degree,
            coeff,
            surface,
        })
    }

    /// Constant cubic on a torus with the requested flat-metric norm
    /// |B|²_flat = n2 (real positive coefficient c = √(n2/16)).
    pub fn constant_cubic(surface: Surface, n2: f64) -> Result<Self, DifferentialError> {
        let c = (n2 / 16.0).sqrt();
        Self::realize(3, Coeff::Constant(Complex64::new(c, 0.0)), surface)
    }

    pub fn rank(&self) -> usize {
        self.degree.unsigned_abs() as usize
    }

    /// Coefficient samples over the grid.
    pub fn coeff_samples(&self) -> Vec<Complex64> {
        match &self.coeff {
            Coeff::Constant(c) => vec![*c; self.surface.len()],
            Coeff::Samples(s) => s.clone(),
            Coeff::Polynomial(p) => (0..self.surface.len())
                .map(|idx| {
                    let [x, y] = self.surface.point(idx);
                    let z = Complex64::new(x, y);
                    // Horner evaluation, ascending powers in storage
                    p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
                })
                .collect(),
        }
    }

    /// Realized component arrays B[m], m = number of y-slots (0..=|k|).
    ///
    /// Covariant: B[m] = 2 Re(c · i^m); contravariant:
    /// B[m] = 2^{1−|k|} Re(c · (−i)^m).
    pub fn components(&self) -> Vec<Vec<f64>> {
        let k = self.rank();
        let c = self.coeff_samples();
        let (unit, scale) = if self.degree > 0 {
            (Complex64::new(0.0, 1.0), 2.0)
        } else {
            (Complex64::new(0.0, -1.0), 2.0 / (1u64 << k) as f64)
        };
        (0..=k)
            .map(|m| {
                let im = unit.powu(m as u32);
                c.iter().map(|v| scale * (v * im).re).collect()
            })
            .collect()
    }

    /// |B|² with respect to the flat chart metric.
    pub fn norm2_flat(&self) -> Vec<f64> {
        let k = self.degree;
        let factor = if k > 0 {
            2f64.powi(k + 1)
        } else {
            2f64.powi(1 + k) // 2^{1−|k|}
        };
        self.coeff_samples()
            .iter()
            .map(|c| factor * c.norm_sqr())
            .collect()
    }

    /// |B|²_h = λ^{−k} |B|²_flat (signed k: contravariant slots raise λ).
    pub fn norm2(&self, m: &ConformalMetric) -> Vec<f64> {
        let lam = m.total_lambda();
        self.norm2_flat()
            .iter()
            .zip(&lam)
            .map(|(n, l)| n * l.powi(-self.degree))
            .collect()
    }

    /// The induced complex structure acting on realized tensors: 𝕁B = 2 Re(i c dz^k).
    /// 𝕁(𝕁B) = −B exactly.
    pub fn jay(&self) -> Self {
        let i = Complex64::new(0.0, 1.0);
        let coeff = match &self.coeff {
            Coeff::Constant(c) => Coeff::Constant(i * c),
            Coeff::Polynomial(p) => Coeff::Polynomial(p.iter().map(|a| i * a).collect()),
            Coeff::Samples(s) => Coeff::Samples(s.iter().map(|a| i * a).collect()),
        };
        Self {
            degree: self.degree,
            coeff,
            surface: self.surface.clone(),
        }
    }

    /// Coefficient of div_h B as a (k−1)-differential: d = 2λ⁻¹ ∂_z̄ c.
    pub fn divergence_coeff(&self, m: &ConformalMetric) -> Result<Vec<Complex64>, DifferentialError> {
        if self.surface != m.surface {
            return Err(GridError::SurfaceMismatch.into());
        }
        let c = self.coeff_samples();
        let re: Vec<f64> = c.iter().map(|v| v.re).collect();
        let im: Vec<f64> = c.iter().map(|v| v.im).collect();
        let rx = self.surface.dx(&re);
        let ry = self.surface.dy(&re);
        let ix = self.surface.dx(&im);
        let iy = self.surface.dy(&im);
        let lam = m.total_lambda();
        // ∂_z̄ c = ½(∂_x + i ∂_y)(re + i·im)
        Ok((0..c.len())
            .map(|n| {
                let dzbar = Complex64::new(rx[n] - iy[n], ix[n] + ry[n]) * 0.5;
                2.0 * dzbar / lam[n]
            })
            .collect())
    }

    /// Pointwise h-norm of div_h B: |div B|_h = 2^{k/2} λ^{−(k−1)/2} √2 |d| / √2 …
    /// computed as √(2 |d|² (2/λ)^{k−1}).
    pub fn divergence_norm(&self, m: &ConformalMetric) -> Result<Vec<f64>, DifferentialError> {
        let d = self.divergence_coeff(m)?;
        let lam = m.total_lambda();
        let k = self.degree;
        Ok(d.iter()
            .zip(&lam)
            .map(|(v, l)| (2.0 * v.norm_sqr() * (2.0 / l).powi(k - 1)).sqrt())
            .collect())
    }

    /// Max-norm of div_h B: near zero certifies B is the real part of a
    /// holomorphic differential in m's conformal class (trace-free Codazzi ⇔
    /// divergence-free). Requires k > 1.
    pub fn codazzi_residual(&self, m: &ConformalMetric) -> Result<f64, DifferentialError> {
        if self.degree <= 1 {
            return Err(DifferentialError::DegreeTooLow(self.degree));
        }
        Ok(max_abs(&self.divergence_norm(m)?))
    }

    /// Residuals of the two curvature identities satisfied by holomorphic
    /// differentials: for σ holomorphic and any h in the conformal class,
    ///   Δ_h|σ|² = 2|Dσ|²_h + k·sR_h·|σ|²   and   Δ_h log|σ|² = k·sR_h
    /// (the latter on the set where σ does not vanish).
    ///
    /// The first residual is reported relative to the local magnitude of the
    /// identity's terms (chart-local differentials on the sphere grow without
    /// bound in ρ, so an absolute max-norm would be dominated by the chart
    /// corner); the second is scale-free as stated.
    pub fn weitzenbock_residual(
        &self,
        m: &ConformalMetric,
    ) -> Result<(f64, f64), DifferentialError> {
        if self.degree < 0 {
            return Err(DifferentialError::DegreeTooLow(self.degree));
        }
        let sigma2: Vec<f64> = self.norm2(m).iter().map(|v| v / 2.0).collect();
        let k = self.degree as f64;
        let sr = m.scalar_curvature();
        let lap = m.laplacian(&sigma2)?;
        let dsig2 = self.covariant_derivative_norm2(m)?;
        let mut r1: f64 = 0.0;
        for i in 0..sigma2.len() {
            let terms = [lap[i], -dsig2[i], -k * sr[i] * sigma2[i]];
            let scale = terms.iter().map(|t| t.abs()).fold(1.0_f64, f64::max);
            r1 = r1.max((lap[i] - dsig2[i] - k * sr[i] * sigma2[i]).abs() / scale);
        }
        // admissible set: |σ|² above a fixed fraction of its max
        let eps = 1e-6 * sigma2.iter().cloned().fold(0.0_f64, f64::max);
        let logs: Vec<f64> = sigma2.iter().map(|v| v.max(1e-300).ln()).collect();
        let laplog = m.laplacian(&logs)?;
        let mut r2: f64 = 0.0;
        for i in 0..sigma2.len() {
            if sigma2[i] > eps {
                r2 = r2.max((laplog[i] - k * sr[i]).abs());
            }
        }
        Ok((r1, r2))
    }

    /// 2|Dσ|²_h = |DB|²_h: squared h-norm of the full covariant derivative,
    /// doubled Hermitian convention as for |σ|² = |B|²/2.
    fn covariant_derivative_norm2(&self, m: &ConformalMetric) -> Result<Vec<f64>, DifferentialError> {
        if self.surface != m.surface {
            return Err(GridError::SurfaceMismatch.into());
        }
        let k = self.rank();
        let db = covariant_derivative(&self.components(), m);
        let lam = m.total_lambda();
        let n = self.surface.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for p in 0..2 {
                for mm in 0..=k {
                    let v = db[p][mm][i];
                    acc += binom(k, mm) * v * v;
                }
            }
            // one derivative slot plus k covariant tensor slots: λ^{−(k+1)}
            out[i] = acc * lam[i].powi(-(k as i32) - 1);
        }
        Ok(out)
    }

    /// The metric ŝ = |σ|^{2/k}_m · m (flat away from the zeros of σ) and the
    /// max-norm of its scalar curvature over the admissible set
    /// {|σ|² > 1e−6 · max |σ|²}.
    pub fn singular_flat_metric(
        &self,
        m: &ConformalMetric,
    ) -> Result<(ConformalMetric, f64), DifferentialError> {
        let sigma2: Vec<f64> = self.norm2(m).iter().map(|v| v / 2.0).collect();
        let top = sigma2.iter().cloned().fold(0.0_f64, f64::max);
        // Genuine vanishing (zeros of σ are discrete, so only a thin
        // neighborhood may drop this far below the max) is an error when it
        // covers a macroscopic part of the grid; the ε-mask below merely
        // limits where the flatness defect is evaluated.
        let n_zero = sigma2.iter().filter(|&&v| v <= 1e-12 * top).count();
        if top == 0.0 || n_zero * 10 > sigma2.len() {
            return Err(DifferentialError::TooManyZeros(n_zero, sigma2.len()));
        }
        let eps = 1e-6 * top;
        let k = self.degree as f64;
        let psi: Vec<f64> = sigma2.iter().map(|v| v.max(1e-300).ln() / k).collect();
        let hat = m.rescaled(&psi)?;
        let sr = hat.scalar_curvature();
        let defect = sigma2
            .iter()
            .zip(&sr)
            .filter(|(s, _)| **s > eps)
            .map(|(_, r)| r.abs())
            .fold(0.0_f64, f64::max);
        Ok((hat, defect))
    }
}

/// Full covariant derivative of a covariant symmetric k-tensor given by its
/// y-multiplicity components under a conformal metric. Returns
/// out[p][m] = D_p T_{(m y-slots)}, p ∈ {x, y}.
///
/// With u = log λ, a = u_x/2, b = u_y/2, the conformal Christoffel symbols
/// are Γ^x_xx = Γ^y_xy = a, Γ^x_xy = Γ^y_yy = b, Γ^x_yy = −a, Γ^y_xx = −b;
/// each of the k − m x-slots contributes −(Γ^x_{px} T[m] + Γ^y_{px} T[m+1])
/// and each of the m y-slots −(Γ^x_{py} T[m−1] + Γ^y_{py} T[m]).
pub fn covariant_derivative(comps: &[Vec<f64>], m: &ConformalMetric) -> [Vec<Vec<f64>>; 2] {
    let k = comps.len() - 1;
    let ch = m.christoffels();
    let n = m.surface.len();
    let dxs: Vec<Vec<f64>> = comps.iter().map(|c| m.surface.dx(c)).collect();
    let dys: Vec<Vec<f64>> = comps.iter().map(|c| m.surface.dy(c)).collect();
    let mut out = [
        vec![vec![0.0; n]; k + 1],
        vec![vec![0.0; n]; k + 1],
    ];
    for i in 0..n {
        let a = ch.ux[i] / 2.0;
        let b = ch.uy[i] / 2.0;
        for mm in 0..=k {
            let cm = comps[mm][i];
            let c_up = if mm < k { comps[mm + 1][i] } else { 0.0 };
            let c_dn = if mm > 0 { comps[mm - 1][i] } else { 0.0 };
            let nx = (k - mm) as f64; // number of x-slots
            let ny = mm as f64;
            out[0][mm][i] = dxs[mm][i] - nx * (a * cm - b * c_up) - ny * (b * c_dn + a * cm);
            out[1][mm][i] = dys[mm][i] - nx * (b * cm + a * c_up) - ny * (-a * c_dn + b * cm);
        }
    }
    out
}

/// Contraction ι(X)B of a vector field (contravariant components X^x, X^y)
/// into the first slot of a covariant symmetric tensor: returns the
/// component arrays of the resulting (k−1)-tensor.
pub fn contract_vector(comps: &[Vec<f64>], xx: &[f64], xy: &[f64]) -> Vec<Vec<f64>> {
    let k = comps.len() - 1;
    let n = comps[0].len();
    (0..k)
        .map(|mm| {
            (0..n)
                .map(|i| xx[i] * comps[mm][i] + xy[i] * comps[mm + 1][i])
                .collect()
        })
        .collect()
}

/// Cone angle 2π(β/k + 1) of a zero of order β of a k-differential.
pub fn cone_angle(k: i64, beta: i64) -> Result<f64, DifferentialError> {
    if k == 0 {
        return Err(DifferentialError::ZeroDegree);
    }
    let ratio = beta as f64 / k as f64;
    if ratio <= -1.0 {
        return Err(DifferentialError::BadConeOrder(beta, k));
    }
    Ok(std::f64::consts::TAU * (ratio + 1.0))
}
