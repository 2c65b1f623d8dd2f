//! Randomized property tests for the algebraic identities and solver
//! contracts. Case counts are kept low because each case carries a full
//! grid computation; the identities themselves are exact, so failures are
//! structural rather than statistical.

use num_complex::Complex64;
use proptest::prelude::*;

use ahsolve::differential::{binom, contract_vector, Coeff, KDifferential};
use ahsolve::grid::{LatticeTorus, Surface};
use ahsolve::metric::{max_abs, ConformalMetric, OneForm};
use ahsolve::solver::{
    ckmc_bracket, positive_root_bound, ray_solve, solve_monotone, solve_newton, OperatorSpec,
    OperatorTerm,
};

const PI: f64 = std::f64::consts::PI;

fn torus(n: usize) -> Surface {
    Surface::Torus(LatticeTorus::square(2.0 * PI, n).expect("valid torus"))
}

/// Low-frequency trig field a·cos(x+p) + b·sin(y+q) + c·cos(x+y).
fn trig(s: &Surface, a: f64, b: f64, c: f64, p: f64, q: f64) -> Vec<f64> {
    s.sample(|x, y| a * (x + p).cos() + b * (y + q).sin() + c * (x + y).cos())
}

fn trig_params() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (
        -0.5..0.5f64,
        -0.5..0.5f64,
        -0.5..0.5f64,
        0.0..2.0 * PI,
        0.0..2.0 * PI,
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// The Hodge star on one-forms squares to −id, for any conformal metric.
    #[test]
    fn hodge_star_twice_negates(t1 in trig_params(), t2 in trig_params(), t3 in trig_params()) {
        let s = torus(16);
        let m = ConformalMetric::flat(s.clone())
            .rescaled(&trig(&s, t3.0, t3.1, t3.2, t3.3, t3.4))
            .expect("rescale");
        let alpha = OneForm {
            comp_x: trig(&s, t1.0, t1.1, t1.2, t1.3, t1.4),
            comp_y: trig(&s, t2.0, t2.1, t2.2, t2.3, t2.4),
        };
        let twice = m.hodge_star(&m.hodge_star(&alpha));
        for i in 0..s.len() {
            prop_assert!((twice.comp_x[i] + alpha.comp_x[i]).abs() < 1e-13);
            prop_assert!((twice.comp_y[i] + alpha.comp_y[i]).abs() < 1e-13);
        }
    }

    /// The rotation operator on k-differentials squares to −id and preserves
    /// the flat norm.
    #[test]
    fn jay_twice_negates(degree in 1i32..5, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        prop_assume!(re * re + im * im > 1e-4);
        let s = torus(16);
        let d = KDifferential::realize(degree, Coeff::Constant(Complex64::new(re, im)), s)
            .expect("differential");
        let twice = d.jay().jay();
        let (c, cj) = (d.components(), twice.components());
        for m in 0..c.len() {
            for i in 0..c[m].len() {
                prop_assert!((cj[m][i] + c[m][i]).abs() < 1e-12);
            }
        }
        let (n0, n1) = (d.norm2_flat()[0], d.jay().norm2_flat()[0]);
        prop_assert!((n0 - n1).abs() < 1e-12 * n0.max(1.0));
    }

    /// 2|ι(X)B|²_h = |X|²_h |B|²_h pointwise for cubic B, any vector field X,
    /// and any conformal metric h.
    #[test]
    fn contraction_norm_identity(
        re in -1.5..1.5f64,
        im in -1.5..1.5f64,
        tx in trig_params(),
        ty in trig_params(),
        tm in trig_params(),
    ) {
        prop_assume!(re * re + im * im > 1e-4);
        let s = torus(16);
        let m = ConformalMetric::flat(s.clone())
            .rescaled(&trig(&s, tm.0, tm.1, tm.2, tm.3, tm.4))
            .expect("rescale");
        let d = KDifferential::realize(3, Coeff::Constant(Complex64::new(re, im)), s.clone())
            .expect("differential");
        let comps = d.components();
        let xx = trig(&s, tx.0, tx.1, tx.2, tx.3, tx.4);
        let xy = trig(&s, ty.0, ty.1, ty.2, ty.3, ty.4);
        let contracted = contract_vector(&comps, &xx, &xy);
        let lam = m.total_lambda();
        let b2 = d.norm2(&m);
        for i in 0..s.len() {
            let mut c2 = 0.0;
            for mm in 0..contracted.len() {
                c2 += binom(2, mm) * contracted[mm][i] * contracted[mm][i];
            }
            let iota2 = c2 / lam[i].powi(2);
            let x2 = lam[i] * (xx[i] * xx[i] + xy[i] * xy[i]);
            prop_assert!((2.0 * iota2 - x2 * b2[i]).abs() < 1e-9 * (1.0 + x2 * b2[i].abs()));
        }
    }

    /// The Laplacian of any smooth field integrates to zero against the
    /// metric area element (discrete divergence theorem).
    #[test]
    fn laplacian_integrates_to_zero(tf in trig_params(), tm in trig_params()) {
        let s = torus(32);
        let m = ConformalMetric::flat(s.clone())
            .rescaled(&trig(&s, tm.0, tm.1, tm.2, tm.3, tm.4))
            .expect("rescale");
        let f = trig(&s, tf.0, tf.1, tf.2, tf.3, tf.4);
        let lap = m.laplacian(&f).expect("laplacian");
        let total = m.integrate(&lap).expect("integral");
        prop_assert!(total.abs() < 1e-10, "∫ Δf dA = {total}");
    }

    /// Scalar curvature transforms as sR_{e^ψ h} = e^{−ψ}(sR_h − Δ_h ψ).
    #[test]
    fn curvature_conformal_covariance(tm in trig_params(), tp in trig_params()) {
        let s = torus(32);
        let m = ConformalMetric::flat(s.clone())
            .rescaled(&trig(&s, tm.0, tm.1, tm.2, tm.3, tm.4))
            .expect("rescale");
        let psi = trig(&s, tp.0, tp.1, tp.2, tp.3, tp.4);
        let rescaled = m.rescaled(&psi).expect("rescale");
        let sr0 = m.scalar_curvature();
        let sr1 = rescaled.scalar_curvature();
        let lap_psi = m.laplacian(&psi).expect("laplacian");
        let defect: Vec<f64> = (0..s.len())
            .map(|i| sr1[i] - (-psi[i]).exp() * (sr0[i] - lap_psi[i]))
            .collect();
        prop_assert!(max_abs(&defect) < 1e-8, "covariance defect {}", max_abs(&defect));
    }

    /// Newton and monotone iteration converge to the same solution, and the
    /// a-priori factor bounds hold with negligible slack.
    #[test]
    fn solvers_agree(kappa in -2.5..-1.5f64, b_norm2 in 2.0..6.0f64, tm in trig_params()) {
        let s = torus(32);
        let m = ConformalMetric::flat(s.clone())
            .rescaled(&trig(&s, 0.1 * tm.0, 0.1 * tm.1, 0.1 * tm.2, tm.3, tm.4))
            .expect("rescale");
        let b = KDifferential::constant_cubic(s.clone(), b_norm2).expect("cubic");
        let spec = OperatorSpec::constant_curvature(
            m,
            kappa,
            vec![OperatorTerm::from_differential(&b, 1.0)],
        )
        .expect("spec");
        let newton = solve_newton(&spec, &vec![0.0; s.len()], 1e-12).expect("newton");
        // Constant bracket valid for all data in the ranges above: W(−1.1)
        // is dominated by the positive e^{−2φ} torsion term, W(0.5) by the
        // negative κe^φ term. The automatic bracket needs strictly negative
        // background curvature, which a rescaled flat torus cannot provide
        // everywhere; a wider bracket also inflates the dominating constant
        // of the iteration and stalls its convergence.
        let monotone = solve_monotone(&spec, Some((-1.1, 0.5)), 1e-12).expect("monotone");
        let gap: Vec<f64> = newton
            .phi
            .iter()
            .zip(&monotone.phi)
            .map(|(a, b)| a - b)
            .collect();
        prop_assert!(max_abs(&gap) < 1e-10, "solver gap {}", max_abs(&gap));
        let cert = newton.bound_certificate.expect("bounds available for this data");
        prop_assert!(cert.max_violation <= 1e-9, "bound violation {}", cert.max_violation);
    }

    /// Rescaling the background by e^{μ₀} and the data by e^{λ₀} (constants)
    /// shifts the solution by exactly −μ₀ − λ₀.
    #[test]
    fn solution_shifts_under_homothety(mu0 in -0.5..0.5f64, lam0 in -0.5..0.5f64) {
        let s = torus(32);
        let n = s.len();
        let b = KDifferential::constant_cubic(s.clone(), 4.0).expect("cubic");
        let term = OperatorTerm::from_differential(&b, 1.0);
        let spec = OperatorSpec::constant_curvature(
            ConformalMetric::flat(s.clone()),
            -2.0,
            vec![term.clone()],
        )
        .expect("spec");
        let base = solve_newton(&spec, &vec![0.0; n], 1e-12).expect("base solve");

        let scaled_background = ConformalMetric::flat(s.clone())
            .rescaled(&vec![mu0; n])
            .expect("rescale");
        let scaled_term = OperatorTerm {
            degree: term.degree,
            weight: term.weight,
            norm2_flat: term
                .norm2_flat
                .iter()
                .map(|v| ((1 - term.degree) as f64 * lam0).exp() * v)
                .collect(),
        };
        let scaled = OperatorSpec::constant_curvature(
            scaled_background,
            -2.0 * lam0.exp(),
            vec![scaled_term],
        )
        .expect("scaled spec");
        let solved = solve_newton(&scaled, &vec![0.0; n], 1e-12).expect("scaled solve");
        let gap: Vec<f64> = (0..n)
            .map(|i| solved.phi[i] - (base.phi[i] - mu0 - lam0))
            .collect();
        prop_assert!(max_abs(&gap) < 1e-8, "homothety shift defect {}", max_abs(&gap));
    }

    /// The certified enclosure of the positive root of r^p − a r^{p−1} − b
    /// contains an actual root.
    #[test]
    fn root_bound_certificate(p in 1u32..6, a in 0.0..3.0f64, b in 0.1..5.0f64) {
        let (root, lower, upper) = positive_root_bound(p, a, b);
        prop_assert!(lower <= root && root <= upper, "root {root} escapes [{lower}, {upper}]");
        let g = root.powi(p as i32) - a * root.powi(p as i32 - 1) - b;
        prop_assert!(g.abs() < 1e-9 * (1.0 + b), "root residual {g}");
    }

    /// For 0 < P ≤ 8/27 the CKMC bracket endpoints are log r₁ and 0, with r₁
    /// the smallest positive root of r³ − r² + P/2 and r₁ ≤ 2/3; beyond the
    /// threshold no bracket exists.
    #[test]
    fn ckmc_bracket_arithmetic(p in 0.005..(8.0 / 27.0)) {
        let (lo, hi) = ckmc_bracket(p).expect("bracket in range");
        let r1 = lo.exp();
        prop_assert!((r1.powi(3) - r1 * r1 + 0.5 * p).abs() < 1e-10);
        prop_assert!(r1 <= 2.0 / 3.0 + 1e-12);
        prop_assert!(hi == 0.0);
        prop_assert!(ckmc_bracket(8.0 / 27.0 + p).is_err());
    }

    /// The two envelope bounds together force the ray to start exactly at
    /// an exact structure (pointwise |B|²_h = −4κ = 8). That start is only
    /// determined up to homothety: all four certificate slacks stay
    /// nonnegative for any constant rescaling of the base, and the rescaled
    /// volumes are independent of t.
    #[test]
    fn ray_certificates_for_homothetic_bases(mu0 in -1.0..1.0f64) {
        let s = torus(16);
        let n = s.len();
        let background = ConformalMetric::flat(s.clone())
            .rescaled(&vec![mu0; n])
            .expect("rescale");
        // |B|²_h = |B|²_flat e^{−3μ₀} = 8 keeps the base exact.
        let b = KDifferential::constant_cubic(s, 8.0 * (3.0 * mu0).exp())
            .expect("cubic");
        let (_, cert) = ray_solve(background, &b, -2.0, &[0.0, 0.4, 1.1], 1e-12)
            .expect("ray solve");
        let slack = cert
            .monotonicity_slack
            .min(cert.lipschitz_slack)
            .min(cert.envelope_lower_slack)
            .min(cert.envelope_upper_slack);
        prop_assert!(slack >= -1e-9, "certificate slack {slack}");
        let v0 = cert.rescaled_volumes[0];
        for v in &cert.rescaled_volumes {
            prop_assert!((v - v0).abs() < 1e-8 * v0, "rescaled volume drifts: {v} vs {v0}");
        }
    }

    /// For spatially modulated torsion the envelopes no longer apply and the
    /// 2-Lipschitz constant degrades (the maximum principle only gives
    /// |∂φ/∂t| < 3 pointwise), but monotonicity in t and a 3-Lipschitz
    /// bound still hold.
    #[test]
    fn ray_monotone_lipschitz_for_modulated_torsion(
        b_norm2 in 4.0..20.0f64,
        wobble in 0.0..0.2f64,
    ) {
        let s = torus(16);
        let c0 = (b_norm2 / 16.0).sqrt();
        let samples: Vec<Complex64> = (0..s.len())
            .map(|i| Complex64::new(c0 * (1.0 + wobble * s.point(i)[0].cos()), 0.0))
            .collect();
        let b = KDifferential::realize(3, Coeff::Samples(samples), s.clone())
            .expect("differential");
        let (_, cert) = ray_solve(
            ConformalMetric::flat(s),
            &b,
            -2.0,
            &[0.0, 0.4, 1.1],
            1e-12,
        )
        .expect("ray solve");
        prop_assert!(cert.monotonicity_slack >= -1e-9, "monotonicity {}", cert.monotonicity_slack);
        // lipschitz_slack measures against the constant-torsion constant 2;
        // the general pointwise bound is 3, i.e. slack ≥ −(t₂ − t₁).
        prop_assert!(cert.lipschitz_slack >= -0.7 - 1e-9, "Lipschitz {}", cert.lipschitz_slack);
    }
}
