//! Cone metrics over exact negative-curvature Einstein structures.
//!
//! Over an exact Einstein structure (constant uR < 0, no Faraday primitive)
//! on a surface M, the 3-manifold M × ℝ carries a distinguished flat affine
//! connection ∇̂ together with two Hessian metrics built from the weighted
//! curvature:
//! - a Lorentzian metric g = ṽ(dt² + (uR/2)h) with ṽ = (uR/2)^{−2/3}e^{2t},
//! - a Riemannian metric f = 3dt² − (3uR/2)h,
//! both written in the cone coordinates (x, y, t), where t is the fiber
//! log-coordinate (the dilation field is 𝕏 = ∂_t) and h = λ(dx² + dy²) is
//! the distinguished surface metric. The potential of f is
//! F = −3t + log|uR/2|, so f = Hess_∇̂ F exactly.
//!
//! Every claimed identity is rendered as a residual:
//! - flatness of ∇̂ and the normalization ∇̂𝕏 = Id,
//! - det g = Ψ² with Ψ the parallel volume pinned at t = 0,
//!   and det f = 27e^{2F}Ψ²,
//! - the one-variable Monge–Ampère potential Ψ_C and its determinant
//!   identity 27Ψ′²(Ψ′ + 3Ψ″)e^{2F} = 1,
//! - the Einstein tensor of g equals the dust stress tensor
//!   (|B|²_h / (4|uR|)) dt ⊗ dt,
//! - the t-level surfaces are g-umbilic and f-totally-geodesic.
//!
//! Conventions: index order is (x, y, t) = (0, 1, 2); cube roots of negative
//! reals use the real branch throughout; 3-D curvature is computed by
//! spectral/FD derivatives on the spatial chart and 4th-order centered
//! differences in t (default spacing 1e−2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::differential::DifferentialError;
use crate::grid::{GridError, Surface};
use crate::structure::{AHStructure, StructureError};

/// Errors from cone construction and residual evaluation.
#[derive(Debug, thiserror::Error)]
pub enum ConeError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Differential(#[from] DifferentialError),
    #[error("cone base must be exact (no Faraday primitive one-form)")]
    NotExact,
    #[error("cone base must have constant uR, spread {spread:.3e}")]
    NonConstantCurvature { spread: f64 },
    #[error("cone base must have uR < 0, got uR = {ur:.6}")]
    NonNegativeCurvature { ur: f64 },
    #[error("fiber sample list must be nonempty, finite, and sorted")]
    BadTimeGrid,
    #[error("potential parameter must be positive, got C = {0:.6}")]
    BadParameter(f64),
    #[error(
        "potential argument {f_value:.6} is outside the domain F > {bound:.6}"
    )]
    DomainViolation { f_value: f64, bound: f64 },
}

/// Symmetric 3×3 entry order: (xx, xy, yy, xt, yt, tt).
const SYM_IDX: [[usize; 3]; 3] = [[0, 1, 3], [1, 2, 4], [3, 4, 5]];

fn sym_to_mat(e: [f64; 6]) -> [[f64; 3]; 3] {
    [
        [e[0], e[1], e[3]],
        [e[1], e[2], e[4]],
        [e[3], e[4], e[5]],
    ]
}

fn mat_det(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn mat_inverse(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = mat_det(m);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            // Adjugate: cofactor of (j, i).
            let mut sub = [[0.0; 2]; 2];
            let (mut r, mut c);
            r = 0;
            for p in 0..3 {
                if p == j {
                    continue;
                }
                c = 0;
                for q in 0..3 {
                    if q == i {
                        continue;
                    }
                    sub[r][c] = m[p][q];
                    c += 1;
                }
                r += 1;
            }
            let cof = sub[0][0] * sub[1][1] - sub[0][1] * sub[1][0];
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            inv[i][j] = sign * cof / det;
        }
    }
    inv
}

/// Eigenvalues of a symmetric 3×3 matrix (ascending), by the trigonometric
/// closed form for the characteristic cubic.
pub fn sym3_eigenvalues(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut d = [m[0][0], m[1][1], m[2][2]];
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return d;
    }
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let r = (mat_det(&b) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut d = [e1, e2, e3];
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d
}

/// Validate an exact constant-negative-curvature base and return
/// (uR, |B|²_h field, λ field).
fn exact_base_data(base: &AHStructure) -> Result<(f64, Vec<f64>, Vec<f64>), ConeError> {
    if base.gamma.is_some() {
        return Err(ConeError::NotExact);
    }
    let q = base.curvature_quantities()?;
    let ur_mean = base.metric.mean(&q.ur)?;
    let dev: Vec<f64> = q.ur.iter().map(|v| v - ur_mean).collect();
    let spread = base.metric.surface.sup_interior(&dev);
    if spread > 1e-6 * ur_mean.abs().max(1.0) {
        return Err(ConeError::NonConstantCurvature { spread });
    }
    if ur_mean >= 0.0 {
        return Err(ConeError::NonNegativeCurvature { ur: ur_mean });
    }
    let b_norm2 = match &base.b {
        Some(b) => b.norm2(&base.metric),
        None => vec![0.0; base.metric.surface.len()],
    };
    Ok((ur_mean, b_norm2, base.metric.total_lambda()))
}

/// The cone over an exact Einstein base: the base structure, the constant
/// weighted curvature, and the fiber log-coordinate samples.
#[derive(Debug, Clone)]
pub struct ConeGrid {
    pub base: AHStructure,
    pub t_samples: Vec<f64>,
    /// The constant weighted curvature uR < 0 of the base.
    pub ur: f64,
    /// |B|²_h of the base torsion (zero field when B = 0).
    pub b_norm2: Vec<f64>,
}

impl ConeGrid {
    pub fn new(base: AHStructure, t_samples: Vec<f64>) -> Result<Self, ConeError> {
        if t_samples.is_empty()
            || t_samples.iter().any(|t| !t.is_finite())
            || t_samples.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(ConeError::BadTimeGrid);
        }
        let (ur, b_norm2, _) = exact_base_data(&base)?;
        Ok(Self {
            base,
            t_samples,
            ur,
            b_norm2,
        })
    }

    fn surface(&self) -> &Surface {
        &self.base.metric.surface
    }

    /// Cone-coordinate entries (xx, xy, yy, xt, yt, tt) of the Lorentzian
    /// metric g = ṽ(dt² + (uR/2)h) at fiber coordinate t.
    pub fn g_entries(&self, t: f64) -> [Vec<f64>; 6] {
        let lam = self.base.metric.total_lambda();
        let half = self.ur / 2.0;
        let vtil = (2.0 * t).exp() / (half.cbrt() * half.cbrt());
        let n = lam.len();
        let spatial: Vec<f64> = lam.iter().map(|l| vtil * half * l).collect();
        [
            spatial.clone(),
            vec![0.0; n],
            spatial,
            vec![0.0; n],
            vec![0.0; n],
            vec![vtil; n],
        ]
    }

    /// Cone-coordinate entries of the Riemannian metric f = 3dt² − (3uR/2)h.
    pub fn f_entries(&self, t: f64) -> [Vec<f64>; 6] {
        let _ = t; // f is independent of the fiber coordinate.
        let lam = self.base.metric.total_lambda();
        let n = lam.len();
        let spatial: Vec<f64> = lam.iter().map(|l| -1.5 * self.ur * l).collect();
        [
            spatial.clone(),
            vec![0.0; n],
            spatial,
            vec![0.0; n],
            vec![0.0; n],
            vec![3.0; n],
        ]
    }

    /// Potential of f: F = −3t + log|uR/2| (constant on each t-level).
    pub fn f_potential(&self, t: f64) -> f64 {
        -3.0 * t + (self.ur / 2.0).abs().ln()
    }
}

/// One sampled point of the cone metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeMetricSample {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    /// Lorentzian metric in cone coordinates (x, y, t).
    pub g: [[f64; 3]; 3],
    /// Riemannian Hessian metric in cone coordinates.
    pub f: [[f64; 3]; 3],
    /// Potential value F at the sample.
    pub f_value: f64,
}

impl ConeMetricSample {
    /// (positive, negative) eigenvalue counts of g; a valid sample has (1, 2).
    pub fn g_signature(&self) -> (usize, usize) {
        let ev = sym3_eigenvalues(&self.g);
        let pos = ev.iter().filter(|v| **v > 0.0).count();
        let neg = ev.iter().filter(|v| **v < 0.0).count();
        (pos, neg)
    }

    /// Whether f is positive definite at the sample.
    pub fn f_positive(&self) -> bool {
        sym3_eigenvalues(&self.f)[0] > 0.0
    }
}

/// Sample both cone metrics over the full (spatial × fiber) grid.
pub fn cone_metrics(grid: &ConeGrid) -> Vec<ConeMetricSample> {
    let surface = grid.surface();
    let n = surface.len();
    let mut out = Vec::with_capacity(n * grid.t_samples.len());
    for &t in &grid.t_samples {
        let ge = grid.g_entries(t);
        let fe = grid.f_entries(t);
        let fv = grid.f_potential(t);
        for idx in 0..n {
            let [x, y] = surface.point(idx);
            let g = sym_to_mat([ge[0][idx], ge[1][idx], ge[2][idx], ge[3][idx], ge[4][idx], ge[5][idx]]);
            let f = sym_to_mat([fe[0][idx], fe[1][idx], fe[2][idx], fe[3][idx], fe[4][idx], fe[5][idx]]);
            out.push(ConeMetricSample {
                x,
                y,
                t,
                g,
                f,
                f_value: fv,
            });
        }
    }
    out
}

/// The flat affine connection of the cone, tabulated over the spatial grid.
///
/// Coefficient layout, with indices (x, y, t) and Γ^I_{JK} symmetric in JK:
/// - `spatial[k]` holds Γ^k_{ij} as (xx, xy, yy) fields — the Levi-Civita
///   symbols of h corrected by −½ the raised cubic torsion,
/// - `p` holds Γ^t_{ij} = −(uR/2)h_ij as (xx, xy, yy) fields,
/// - Γ^k_{it} = δ^k_i, Γ^t_{tt} = 1, and all other coefficients vanish.
#[derive(Debug, Clone)]
pub struct ThomasConnection {
    pub surface: Surface,
    pub spatial: [[Vec<f64>; 3]; 2],
    pub p: [Vec<f64>; 3],
}

/// Build the flat cone connection of an exact Einstein structure.
pub fn thomas_coefficients(base: &AHStructure) -> Result<ThomasConnection, ConeError> {
    let (ur, _, lam) = exact_base_data(base)?;
    let n = lam.len();
    let ch = base.metric.christoffels();

    // Levi-Civita symbols of h = λ(dx² + dy²) from u = log λ:
    // Γ^x = (ux/2, uy/2, −ux/2), Γ^y = (−uy/2, ux/2, uy/2) on (xx, xy, yy).
    let mut sx = [
        ch.ux.iter().map(|v| v / 2.0).collect::<Vec<f64>>(),
        ch.uy.iter().map(|v| v / 2.0).collect::<Vec<f64>>(),
        ch.ux.iter().map(|v| -v / 2.0).collect::<Vec<f64>>(),
    ];
    let mut sy = [
        ch.uy.iter().map(|v| -v / 2.0).collect::<Vec<f64>>(),
        ch.ux.iter().map(|v| v / 2.0).collect::<Vec<f64>>(),
        ch.uy.iter().map(|v| v / 2.0).collect::<Vec<f64>>(),
    ];

    // Torsion correction −½β with β_ij^k = λ^{−1}B_ijk on the flat chart.
    if let Some(b) = &base.b {
        let comps = b.components(); // B[m], m = number of y-slots, 0..=3.
        for i in 0..n {
            let l = lam[i];
            // (xx, xy, yy) slots pick B with 0, 1, 2 y-indices plus the
            // upper index: x upper adds none, y upper adds one.
            sx[0][i] -= 0.5 * comps[0][i] / l;
            sx[1][i] -= 0.5 * comps[1][i] / l;
            sx[2][i] -= 0.5 * comps[2][i] / l;
            sy[0][i] -= 0.5 * comps[1][i] / l;
            sy[1][i] -= 0.5 * comps[2][i] / l;
            sy[2][i] -= 0.5 * comps[3][i] / l;
        }
    }

    let p = [
        lam.iter().map(|l| -ur / 2.0 * l).collect::<Vec<f64>>(),
        vec![0.0; n],
        lam.iter().map(|l| -ur / 2.0 * l).collect::<Vec<f64>>(),
    ];
    Ok(ThomasConnection {
        surface: base.metric.surface.clone(),
        spatial: [sx, sy],
        p,
    })
}

impl ThomasConnection {
    /// Full coefficient table Γ^I_{JK} (symmetric slot order (xx, xy, yy,
    /// xt, yt, tt)) as constant-in-t fields over the spatial grid.
    fn table(&self) -> [[Vec<f64>; 6]; 3] {
        let n = self.surface.len();
        let zero = || vec![0.0; n];
        let one = vec![1.0; n];
        [
            // Γ^x: spatial block, then Γ^x_{xt} = 1, Γ^x_{yt} = 0, Γ^x_{tt} = 0.
            [
                self.spatial[0][0].clone(),
                self.spatial[0][1].clone(),
                self.spatial[0][2].clone(),
                one.clone(),
                zero(),
                zero(),
            ],
            // Γ^y: spatial block, Γ^y_{xt} = 0, Γ^y_{yt} = 1, Γ^y_{tt} = 0.
            [
                self.spatial[1][0].clone(),
                self.spatial[1][1].clone(),
                self.spatial[1][2].clone(),
                zero(),
                one.clone(),
                zero(),
            ],
            // Γ^t: the p block, Γ^t_{it} = 0, Γ^t_{tt} = 1.
            [
                self.p[0].clone(),
                self.p[1].clone(),
                self.p[2].clone(),
                zero(),
                zero(),
                one,
            ],
        ]
    }

    /// Max-norm of the full curvature R^I_{JKL} of the cone connection;
    /// the connection of an Einstein exact base must be flat.
    ///
    /// All coefficients are independent of t, so only spatial derivatives
    /// enter; the quadratic terms are evaluated pointwise.
    pub fn flatness_residual(&self) -> f64 {
        let gam = self.table();
        let n = self.surface.len();
        // Spatial derivatives of every coefficient field.
        let dgam: [Vec<[Vec<f64>; 6]>; 2] = [
            gam.iter()
                .map(|row| {
                    [
                        self.surface.dx(&row[0]),
                        self.surface.dx(&row[1]),
                        self.surface.dx(&row[2]),
                        self.surface.dx(&row[3]),
                        self.surface.dx(&row[4]),
                        self.surface.dx(&row[5]),
                    ]
                })
                .collect(),
            gam.iter()
                .map(|row| {
                    [
                        self.surface.dy(&row[0]),
                        self.surface.dy(&row[1]),
                        self.surface.dy(&row[2]),
                        self.surface.dy(&row[3]),
                        self.surface.dy(&row[4]),
                        self.surface.dy(&row[5]),
                    ]
                })
                .collect(),
        ];
        let deriv = |dir: usize, i: usize, jk: usize, idx: usize| -> f64 {
            if dir == 2 {
                0.0 // t-independent coefficients
            } else {
                dgam[dir][i][jk][idx]
            }
        };
        let mut res = vec![0.0f64; n];
        for idx in 0..n {
            let g = |i: usize, j: usize, k: usize| gam[i][SYM_IDX[j][k]][idx];
            for i in 0..3 {
                for j in 0..3 {
                    for (k, l) in [(0usize, 1usize), (0, 2), (1, 2)] {
                        // R^i_{j k l} = ∂_k Γ^i_{lj} − ∂_l Γ^i_{kj}
                        //             + Γ^i_{kp}Γ^p_{lj} − Γ^i_{lp}Γ^p_{kj}
                        let mut r = deriv(k, i, SYM_IDX[l][j], idx)
                            - deriv(l, i, SYM_IDX[k][j], idx);
                        for p in 0..3 {
                            r += g(i, k, p) * g(p, l, j) - g(i, l, p) * g(p, k, j);
                        }
                        res[idx] = res[idx].max(r.abs());
                    }
                }
            }
        }
        self.surface.sup_interior(&res)
    }

    /// Max-norm of ∇̂𝕏 − Id with 𝕏 = ∂_t (zero by construction: the mixed
    /// coefficients are Γ^k_{it} = δ^k_i, Γ^t_{tt} = 1, rest zero).
    pub fn radial_normalization_defect(&self) -> f64 {
        let gam = self.table();
        let n = self.surface.len();
        let mut worst = 0.0f64;
        for idx in 0..n {
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((gam[i][SYM_IDX[j][2]][idx] - want).abs());
                }
            }
        }
        worst
    }

    /// Max-norm of f − Hess_∇̂ F over the cone grid, with the Hessian taken
    /// by spectral/FD derivatives of the potential field.
    pub fn hessian_defect(&self, grid: &ConeGrid) -> f64 {
        let surface = grid.surface();
        let n = surface.len();
        // F = −3t + log|uR/2| as a field: spatially constant, linear in t.
        let f0 = vec![(grid.ur / 2.0f64).abs().ln(); n];
        let dxs = surface.dx(&f0);
        let dys = surface.dy(&f0);
        let dxx = surface.dx(&dxs);
        let dxy = surface.dy(&dxs);
        let dyy = surface.dy(&dys);
        let gam = self.table();
        let mut res = vec![0.0f64; n];
        for &t in &grid.t_samples {
            let fe = grid.f_entries(t);
            for idx in 0..n {
                let df = [dxs[idx], dys[idx], -3.0];
                let d2 = [
                    [dxx[idx], dxy[idx], 0.0],
                    [dxy[idx], dyy[idx], 0.0],
                    [0.0, 0.0, 0.0],
                ];
                for j in 0..3 {
                    for k in j..3 {
                        let mut hess = d2[j][k];
                        for i in 0..3 {
                            hess -= gam[i][SYM_IDX[j][k]][idx] * df[i];
                        }
                        let d = (hess - fe[SYM_IDX[j][k]][idx]).abs();
                        res[idx] = res[idx].max(d);
                    }
                }
            }
        }
        surface.sup_interior(&res)
    }
}

/// Determinant identity defects of the cone metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantDefects {
    /// max |det g − Ψ²|, with Ψ pinned by det g = Ψ² at t = 0 and carried
    /// along the fiber with weight 3 (Ψ = Ψ₀ e^{3t}).
    pub detg_defect: f64,
    /// max |det f − 27 e^{2F} Ψ²|.
    pub detf_defect: f64,
}

/// Check det g = Ψ² and det f = 27e^{2F}Ψ² by direct 3×3 determinants.
pub fn determinant_identities(grid: &ConeGrid) -> DeterminantDefects {
    let n = grid.surface().len();
    let g0 = grid.g_entries(0.0);
    let psi0_sq: Vec<f64> = (0..n)
        .map(|idx| {
            mat_det(&sym_to_mat([
                g0[0][idx], g0[1][idx], g0[2][idx], g0[3][idx], g0[4][idx], g0[5][idx],
            ]))
        })
        .collect();
    let mut dg = 0.0f64;
    let mut df = 0.0f64;
    for &t in &grid.t_samples {
        let ge = grid.g_entries(t);
        let fe = grid.f_entries(t);
        let psi_sq_scale = (6.0 * t).exp();
        let e2f = (2.0 * grid.f_potential(t)).exp();
        for idx in 0..n {
            let detg = mat_det(&sym_to_mat([
                ge[0][idx], ge[1][idx], ge[2][idx], ge[3][idx], ge[4][idx], ge[5][idx],
            ]));
            let detf = mat_det(&sym_to_mat([
                fe[0][idx], fe[1][idx], fe[2][idx], fe[3][idx], fe[4][idx], fe[5][idx],
            ]));
            let psi_sq = psi0_sq[idx] * psi_sq_scale;
            dg = dg.max((detg - psi_sq).abs());
            df = df.max((detf - 27.0 * e2f * psi_sq).abs());
        }
    }
    DeterminantDefects {
        detg_defect: dg,
        detf_defect: df,
    }
}

/// Max-norm of the directional derivatives of det g / Ψ² (the parallel-volume
/// identity makes the ratio constant ≡ 1).
pub fn parallel_volume_defect(grid: &ConeGrid, fd_dt: f64) -> f64 {
    let surface = grid.surface();
    let n = surface.len();
    let g0 = grid.g_entries(0.0);
    let psi0_sq: Vec<f64> = (0..n)
        .map(|idx| {
            mat_det(&sym_to_mat([
                g0[0][idx], g0[1][idx], g0[2][idx], g0[3][idx], g0[4][idx], g0[5][idx],
            ]))
        })
        .collect();
    let ratio_at = |t: f64| -> Vec<f64> {
        let ge = grid.g_entries(t);
        (0..n)
            .map(|idx| {
                mat_det(&sym_to_mat([
                    ge[0][idx], ge[1][idx], ge[2][idx], ge[3][idx], ge[4][idx], ge[5][idx],
                ])) / (psi0_sq[idx] * (6.0 * t).exp())
            })
            .collect()
    };
    let mut worst = 0.0f64;
    for &t in &grid.t_samples {
        let levels: Vec<Vec<f64>> = (-2..=2).map(|j| ratio_at(t + j as f64 * fd_dt)).collect();
        let r = &levels[2];
        let rx = surface.dx(r);
        let ry = surface.dy(r);
        let rt: Vec<f64> = (0..n)
            .map(|idx| {
                (levels[0][idx] - 8.0 * levels[1][idx] + 8.0 * levels[3][idx] - levels[4][idx])
                    / (12.0 * fd_dt)
            })
            .collect();
        worst = worst
            .max(surface.sup_interior(&rx))
            .max(surface.sup_interior(&ry))
            .max(surface.sup_interior(&rt));
    }
    worst
}

/// One-variable Monge–Ampère potential data on the ray domain F > −log C.
#[derive(Debug, Clone, PartialEq)]
pub struct MongeAmpere {
    pub c: f64,
    pub taus: Vec<f64>,
    /// Ψ(τ) = ∫_{e^{−τ/3}}^{C^{1/3}} (C − r³)^{1/3} dr.
    pub psi: Vec<f64>,
    /// Ψ′(τ) = (1/3)e^{−τ/3}(C − e^{−τ})^{1/3} (closed form).
    pub psi_prime: Vec<f64>,
    /// max |27Ψ′²(Ψ′ + 3Ψ″)e^{2τ} − 1| with Ψ″ by centered differences on Ψ′.
    pub det_defect: f64,
}

fn psi_prime_closed(c: f64, tau: f64) -> f64 {
    (-tau / 3.0).exp() * (c - (-tau).exp()).cbrt() / 3.0
}

/// Evaluate the potential Ψ, its derivative, and the determinant-identity
/// defect at the given arguments τ (the values of the Hessian potential F).
pub fn monge_ampere_potential(c: f64, taus: &[f64]) -> Result<MongeAmpere, ConeError> {
    if !(c > 0.0) {
        return Err(ConeError::BadParameter(c));
    }
    let bound = -c.ln();
    for &tau in taus {
        if !tau.is_finite() || tau <= bound {
            return Err(ConeError::DomainViolation {
                f_value: tau,
                bound,
            });
        }
    }
    // Substituting w = (C − r³)^{1/3} removes the endpoint branch point:
    // Ψ(τ) = ∫_0^{W₀} w³ (C − w³)^{−2/3} dw with W₀ = (C − e^{−τ})^{1/3},
    // a smooth integrand since C − w³ ≥ e^{−τ} > 0 on [0, W₀].
    let psi_quad = |tau: f64| -> f64 {
        let w0 = (c - (-tau).exp()).cbrt();
        let m = 2000usize; // Simpson interval pairs
        let hstep = w0 / (2 * m) as f64;
        let integrand = |w: f64| w.powi(3) * (c - w.powi(3)).powf(-2.0 / 3.0);
        let mut acc = integrand(0.0) + integrand(w0);
        for j in 1..(2 * m) {
            let w = j as f64 * hstep;
            acc += if j % 2 == 1 { 4.0 } else { 2.0 } * integrand(w);
        }
        acc * hstep / 3.0
    };
    let psi: Vec<f64> = taus.iter().map(|&t| psi_quad(t)).collect();
    let psi_prime: Vec<f64> = taus.iter().map(|&t| psi_prime_closed(c, t)).collect();
    let mut det_defect = 0.0f64;
    let delta = 1e-5;
    for (i, &tau) in taus.iter().enumerate() {
        let psi_second =
            (psi_prime_closed(c, tau + delta) - psi_prime_closed(c, tau - delta)) / (2.0 * delta);
        let combo = psi_prime[i] + 3.0 * psi_second;
        det_defect = det_defect
            .max((27.0 * psi_prime[i] * psi_prime[i] * combo * (2.0 * tau).exp() - 1.0).abs());
    }
    Ok(MongeAmpere {
        c,
        taus: taus.to_vec(),
        psi,
        psi_prime,
        det_defect,
    })
}

/// 4th-order centered first derivative from five equispaced samples.
fn fd5(levels: &[f64; 5], h: f64) -> f64 {
    (levels[0] - 8.0 * levels[1] + 8.0 * levels[3] - levels[4]) / (12.0 * h)
}

/// Christoffel symbols of a metric sampled as entry fields, at one t-level:
/// ch[i][m] = Γ^i_{jk} with m = SYM_IDX[j][k], given the entry fields and
/// their three coordinate derivatives.
fn christoffels3(
    n: usize,
    g: &[Vec<f64>; 6],
    dg: &[[Vec<f64>; 6]; 3],
) -> [[Vec<f64>; 6]; 3] {
    let mut ch: [[Vec<f64>; 6]; 3] =
        std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; n]));
    for idx in 0..n {
        let gm = sym_to_mat([
            g[0][idx], g[1][idx], g[2][idx], g[3][idx], g[4][idx], g[5][idx],
        ]);
        let ginv = mat_inverse(&gm);
        let d = |dir: usize, a: usize, b: usize| dg[dir][SYM_IDX[a][b]][idx];
        for i in 0..3 {
            for j in 0..3 {
                for k in j..3 {
                    let mut v = 0.0;
                    for l in 0..3 {
                        v += ginv[i][l] * (d(j, l, k) + d(k, l, j) - d(l, j, k));
                    }
                    ch[i][SYM_IDX[j][k]][idx] = 0.5 * v;
                }
            }
        }
    }
    ch
}

/// Ricci tensor of a t-parametrized metric at fiber coordinate t0, by
/// spectral spatial derivatives and 4th-order centered t-differences.
/// `entries(t)` returns the six metric entry fields at a t-level.
fn fd_ricci(
    surface: &Surface,
    entries: &dyn Fn(f64) -> [Vec<f64>; 6],
    t0: f64,
    fd_dt: f64,
) -> [Vec<f64>; 6] {
    let n = surface.len();
    // Metric at nine levels j = −4..4, Christoffels at the middle five.
    let g_levels: Vec<[Vec<f64>; 6]> = (-4..=4)
        .map(|j| entries(t0 + j as f64 * fd_dt))
        .collect();
    let ch_levels: Vec<[[Vec<f64>; 6]; 3]> = (2..=6)
        .map(|c| {
            let g = &g_levels[c];
            let mut dg: [[Vec<f64>; 6]; 3] =
                std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; n]));
            for m in 0..6 {
                dg[0][m] = surface.dx(&g[m]);
                dg[1][m] = surface.dy(&g[m]);
                for idx in 0..n {
                    dg[2][m][idx] = fd5(
                        &[
                            g_levels[c - 2][m][idx],
                            g_levels[c - 1][m][idx],
                            g_levels[c][m][idx],
                            g_levels[c + 1][m][idx],
                            g_levels[c + 2][m][idx],
                        ],
                        fd_dt,
                    );
                }
            }
            christoffels3(n, g, &dg)
        })
        .collect();

    // Derivatives of the center-level Christoffels.
    let ch = &ch_levels[2];
    let mut dch: [[[Vec<f64>; 6]; 3]; 3] =
        std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; n])));
    for i in 0..3 {
        for m in 0..6 {
            dch[0][i][m] = surface.dx(&ch[i][m]);
            dch[1][i][m] = surface.dy(&ch[i][m]);
            for idx in 0..n {
                dch[2][i][m][idx] = fd5(
                    &[
                        ch_levels[0][i][m][idx],
                        ch_levels[1][i][m][idx],
                        ch_levels[2][i][m][idx],
                        ch_levels[3][i][m][idx],
                        ch_levels[4][i][m][idx],
                    ],
                    fd_dt,
                );
            }
        }
    }

    // Ric_{jk} = ∂_i Γ^i_{jk} − ∂_j Γ^i_{ik} + Γ^i_{ip}Γ^p_{jk} − Γ^i_{jp}Γ^p_{ik}.
    let mut ric: [Vec<f64>; 6] = std::array::from_fn(|_| vec![0.0; n]);
    for idx in 0..n {
        let gam = |i: usize, a: usize, b: usize| ch[i][SYM_IDX[a][b]][idx];
        for j in 0..3 {
            for k in j..3 {
                let mut v = 0.0;
                for i in 0..3 {
                    v += dch[i][i][SYM_IDX[j][k]][idx] - dch[j][i][SYM_IDX[i][k]][idx];
                    for p in 0..3 {
                        v += gam(i, i, p) * gam(p, j, k) - gam(i, j, p) * gam(p, i, k);
                    }
                }
                ric[SYM_IDX[j][k]][idx] = v;
            }
        }
    }
    ric
}

/// Dust-equation check of the Lorentzian cone metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DustReport {
    /// max |Ein(g) − (|B|²_h / (4|uR|)) dt ⊗ dt| over samples.
    pub residual: f64,
    /// True when B = 0 (the cone is flat and the check is vacuous).
    pub trivial: bool,
    /// min of Ein(U, U) over seeded random vectors U (the weak energy
    /// condition demands this be nonnegative up to discretization error).
    pub energy_min: f64,
}

/// Verify that the Einstein tensor of g equals the dust stress tensor with
/// density |B|²_h/(4|uR|) and velocity normal to the t-levels.
pub fn dust_residual(grid: &ConeGrid, fd_dt: f64, seed: u64) -> DustReport {
    let surface = grid.surface();
    let n = surface.len();
    let trivial = grid.base.b.is_none();
    let mut res = vec![0.0f64; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut energy_min = f64::INFINITY;
    for &t0 in &grid.t_samples {
        let ric = fd_ricci(surface, &|t| grid.g_entries(t), t0, fd_dt);
        let ge = grid.g_entries(t0);
        let mut ein_fields: [Vec<f64>; 6] = std::array::from_fn(|_| vec![0.0; n]);
        for idx in 0..n {
            let gm = sym_to_mat([
                ge[0][idx], ge[1][idx], ge[2][idx], ge[3][idx], ge[4][idx], ge[5][idx],
            ]);
            let ginv = mat_inverse(&gm);
            let rm = sym_to_mat([
                ric[0][idx], ric[1][idx], ric[2][idx], ric[3][idx], ric[4][idx], ric[5][idx],
            ]);
            let mut scal = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    scal += ginv[a][b] * rm[a][b];
                }
            }
            let density = grid.b_norm2[idx] / (4.0 * grid.ur.abs());
            for j in 0..3 {
                for k in j..3 {
                    let ein = rm[j][k] - 0.5 * scal * gm[j][k];
                    ein_fields[SYM_IDX[j][k]][idx] = ein;
                    let target = if j == 2 && k == 2 { density } else { 0.0 };
                    res[idx] = res[idx].max((ein - target).abs());
                }
            }
        }
        // Weak energy condition on the measured Einstein tensor.
        for _ in 0..100 {
            let idx = rng.gen_range(0..n);
            let u = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let em = sym_to_mat([
                ein_fields[0][idx],
                ein_fields[1][idx],
                ein_fields[2][idx],
                ein_fields[3][idx],
                ein_fields[4][idx],
                ein_fields[5][idx],
            ]);
            let mut val = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    val += em[a][b] * u[a] * u[b];
                }
            }
            energy_min = energy_min.min(val);
        }
    }
    DustReport {
        residual: surface.sup_interior(&res),
        trivial,
        energy_min,
    }
}

/// Level-surface shape data of the cone metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSurfaceReport {
    /// max |II − (H/2)·induced g| of the t-levels in g (umbilicity).
    pub umbilicity: f64,
    /// max spread of the g-mean-curvature H over each level.
    pub mean_curvature_spread: f64,
    /// max |second fundamental form| of the t-levels in f (total geodesy).
    pub geodesy: f64,
    /// max |f(∂_t, ∂_t) − 3|.
    pub radial_f_norm_defect: f64,
    /// max |∇^f ∂_t| component-wise (the scaled radial field is f-parallel).
    pub radial_parallel_defect: f64,
}

/// Check that t-levels are g-umbilic with constant mean curvature and
/// f-totally-geodesic, and that the radial field is f-unit (up to √3) and
/// f-parallel. Fiber derivatives use 4th-order centered differences.
pub fn level_surface_report(grid: &ConeGrid, fd_dt: f64) -> LevelSurfaceReport {
    let surface = grid.surface();
    let n = surface.len();
    let mut umb = vec![0.0f64; n];
    let mut geo = vec![0.0f64; n];
    let mut fnorm = 0.0f64;
    let mut par = vec![0.0f64; n];
    let mut hspread = 0.0f64;
    for &t0 in &grid.t_samples {
        let g_levels: Vec<[Vec<f64>; 6]> = (-2..=2)
            .map(|j| grid.g_entries(t0 + j as f64 * fd_dt))
            .collect();
        let f_levels: Vec<[Vec<f64>; 6]> = (-2..=2)
            .map(|j| grid.f_entries(t0 + j as f64 * fd_dt))
            .collect();
        let ge = &g_levels[2];
        let fe = &f_levels[2];

        // Second fundamental form of t = const in g: with g_it = 0 and unit
        // normal N = ∂_t/√g_tt, II_ij = ∂_t g_ij / (2√g_tt).
        let mut h_values = Vec::with_capacity(n);
        for idx in 0..n {
            let root = ge[5][idx].sqrt();
            let dt_g: [f64; 3] = [0, 1, 2].map(|m| {
                fd5(
                    &[
                        g_levels[0][m][idx],
                        g_levels[1][m][idx],
                        g_levels[2][m][idx],
                        g_levels[3][m][idx],
                        g_levels[4][m][idx],
                    ],
                    fd_dt,
                )
            });
            let ii = [
                dt_g[0] / (2.0 * root),
                dt_g[1] / (2.0 * root),
                dt_g[2] / (2.0 * root),
            ];
            // Induced metric is the (negative definite) spatial block; its
            // inverse traces II to the mean curvature.
            let (gxx, gxy, gyy) = (ge[0][idx], ge[1][idx], ge[2][idx]);
            let det = gxx * gyy - gxy * gxy;
            let h = (gyy * ii[0] - 2.0 * gxy * ii[1] + gxx * ii[2]) / det;
            h_values.push(h);
            umb[idx] = umb[idx]
                .max((ii[0] - 0.5 * h * gxx).abs())
                .max((ii[1] - 0.5 * h * gxy).abs())
                .max((ii[2] - 0.5 * h * gyy).abs());

            // f-second fundamental form: ∂_t f_ij / (2√f_tt).
            let froot = fe[5][idx].sqrt();
            for m in 0..3 {
                let dtf = fd5(
                    &[
                        f_levels[0][m][idx],
                        f_levels[1][m][idx],
                        f_levels[2][m][idx],
                        f_levels[3][m][idx],
                        f_levels[4][m][idx],
                    ],
                    fd_dt,
                );
                geo[idx] = geo[idx].max((dtf / (2.0 * froot)).abs());
            }
            fnorm = fnorm.max((fe[5][idx] - 3.0).abs());
        }
        let h_mean = h_values.iter().sum::<f64>() / n as f64;
        let h_dev: Vec<f64> = h_values.iter().map(|v| v - h_mean).collect();
        hspread = hspread.max(surface.sup_interior(&h_dev));

        // ∇^f ∂_t: the Christoffel column Γ(f)^I_{Jt} from FD Christoffels.
        let mut dfm: [[Vec<f64>; 6]; 3] =
            std::array::from_fn(|_| std::array::from_fn(|_| vec![0.0; n]));
        for m in 0..6 {
            dfm[0][m] = surface.dx(&fe[m]);
            dfm[1][m] = surface.dy(&fe[m]);
            for idx in 0..n {
                dfm[2][m][idx] = fd5(
                    &[
                        f_levels[0][m][idx],
                        f_levels[1][m][idx],
                        f_levels[2][m][idx],
                        f_levels[3][m][idx],
                        f_levels[4][m][idx],
                    ],
                    fd_dt,
                );
            }
        }
        let chf = christoffels3(n, fe, &dfm);
        for idx in 0..n {
            for i in 0..3 {
                for j in 0..3 {
                    par[idx] = par[idx].max(chf[i][SYM_IDX[j][2]][idx].abs());
                }
            }
        }
    }
    LevelSurfaceReport {
        umbilicity: surface.sup_interior(&umb),
        mean_curvature_spread: hspread,
        geodesy: surface.sup_interior(&geo),
        radial_f_norm_defect: fnorm,
        radial_parallel_defect: surface.sup_interior(&par),
    }
}
