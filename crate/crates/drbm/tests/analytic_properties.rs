//! Properties of the transforms, the harmonic functions and the Green
//! density asymptotics on the reference models.

use drbm::acceptance::{p0, p1, p1_mirror, p3};
use drbm::compensation::{product_exponent, valid_window, Harmonic, Transforms};
use drbm::greens::{Greens, QuadratureSpec};
use drbm::model::NormalizedModel;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};

fn reference_models() -> [(&'static str, NormalizedModel); 4] {
    [("P0", p0()), ("P1", p1()), ("P1'", p1_mirror()), ("P3", p3())]
}

#[test]
fn laplace_transform_decay_bound() {
    let z0 = (1.0, 1.0);
    for (name, m) in reference_models() {
        let tr = Transforms::new(m, z0);
        let at_zero = tr.phi2_complex(Complex64::from(0.0)).unwrap().re();
        for p in [0.5, 1.0, 2.0] {
            let v = tr.phi2_complex(Complex64::from(-p)).unwrap().re();
            let bound = (-p * (z0.0 + z0.1)).exp() * at_zero;
            assert!(v > 0.0 && v <= bound, "{name}: phi2(-{p}) = {v} exceeds {bound}");
        }
    }
}

/// The parameter form at `s` and the complex-variable form at `x(zeta s)`
/// describe the same value.
#[test]
fn parameter_form_is_zeta_invariant() {
    for (name, m) in reference_models() {
        let tr = Transforms::new(m, (1.0, 1.0));
        let (lo, hi) = valid_window(&m);
        for k in 1..8 {
            let s = lo + (hi - lo) * k as f64 / 8.0;
            let direct = tr.phi2_param(s).unwrap().value;
            let reflected = tr.phi2_complex(Complex64::from(m.x_of_s(m.zeta(s)))).unwrap().value;
            assert!(
                (direct - reflected).norm() <= 1e-9 * direct.norm().max(1.0),
                "{name}: phi2 at s = {s} and x(zeta s) differ: {direct} vs {reflected}"
            );
        }
    }
}

#[test]
fn partial_sums_of_harmonic_functions_are_positive() {
    for (name, m) in reference_models() {
        let cd = m.critical_points();
        let h = Harmonic::new(m);
        for j in 1..4 {
            let alpha = cd.alpha_star + (cd.alpha_star2 - cd.alpha_star) * j as f64 / 4.0;
            for n in 0..12 {
                let t = h.truncated(alpha, n).unwrap();
                for i in 0..=6 {
                    for k in 0..=6 {
                        let z = (0.5 * i as f64, 0.5 * k as f64);
                        let v = t.value(z);
                        assert!(v > 0.0, "{name}: partial sum N = {n} at alpha = {alpha}, z = {z:?} is {v}");
                    }
                }
            }
        }
    }
}

/// `d/dalpha h_alpha(z0)` at `alpha = 0` equals `-(1 + mu2) A / 2`, where
/// `phi2(x) - phi2(x_max) ~ A sqrt(2 (x_max - x))` at the branch point.
#[test]
fn boundary_derivative_matches_branch_point_coefficient() {
    let m = p0();
    let z0 = (1.0, 1.0);
    let tr = Transforms::new(m, z0);
    // On the parabola sqrt(2 (x_max - x(s))) = s_max - s, so A is minus the
    // s-derivative at s_max; one-sided three-point stencil.
    let step = 1e-3;
    let f = |t: f64| tr.phi2_series(m.s_max() - t).unwrap().re();
    let a = (-2.5 * f(step) + 4.0 * f(2.0 * step) - 1.5 * f(3.0 * step)) / step;
    let dh = Harmonic::new(m).h_alpha(z0, 0.0).unwrap().value;
    let predicted = -(1.0 + m.mu2) * a / 2.0;
    assert!((dh - predicted).abs() < 1e-4 * dh.abs(), "dh = {dh}, -(1 + mu2) A / 2 = {predicted}");
}

#[test]
fn decay_rate_shape() {
    for (name, m) in reference_models() {
        let gr = Greens::new(m);
        let cd = m.critical_points();
        assert!(gr.decay_rate(cd.alpha_mu).unwrap().abs() < 1e-14, "{name}");
        let n = 2000;
        let mut prev = gr.decay_rate(0.0).unwrap();
        for k in 1..=n {
            let alpha = FRAC_PI_2 * k as f64 / n as f64;
            let rho = gr.decay_rate(alpha).unwrap();
            assert!(rho >= 0.0, "{name}: rho({alpha}) = {rho}");
            assert!((rho - prev).abs() < 2e-3, "{name}: jump at {alpha}: {prev} -> {rho}");
            if alpha < cd.alpha_star {
                let frozen = alpha.cos() * cd.x_star + alpha.sin() * cd.y_star;
                assert!((rho - frozen).abs() < 1e-14, "{name}: frozen form at {alpha}");
            }
            if alpha > cd.alpha_star2 {
                let frozen = alpha.cos() * cd.x_star2 + alpha.sin() * cd.y_star2;
                assert!((rho - frozen).abs() < 1e-14, "{name}: frozen form at {alpha}");
            }
            prev = rho;
        }
    }
}

/// `|log g(r e_alpha) - log g_asymptotic(r)|` decreases over `r = 6..12`.
#[test]
fn asymptotic_consistency() {
    let z0 = (1.0, 1.0);
    for (name, m) in reference_models() {
        let gr = Greens::new(m);
        for alpha in [FRAC_PI_6, FRAC_PI_3] {
            let asym = gr.asymptotic_g(z0, alpha).unwrap();
            let gaps: Vec<f64> = [6.0, 8.0, 10.0, 12.0]
                .iter()
                .map(|&r| {
                    let (a, b) = (r * alpha.cos(), r * alpha.sin());
                    let spec = QuadratureSpec::auto(&m, z0, a, b).unwrap();
                    let g = gr.green_numeric(z0, a, b, &spec).unwrap().value;
                    (g.ln() - asym.value_at(r).ln()).abs()
                })
                .collect();
            for w in gaps.windows(2) {
                assert!(w[1] < w[0], "{name} alpha = {alpha}: log gaps {gaps:?}");
            }
        }
    }
}

fn model() -> impl Strategy<Value = NormalizedModel> {
    (0.05f64..0.95, -0.95f64..3.0, -0.95f64..3.0)
        .prop_filter("existence needs |r1 r2| < 1", |(_, r1, r2)| (r1 * r2).abs() < 0.98)
        .prop_map(|(mu1, r1, r2)| NormalizedModel::new(mu1, r1, r2).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compensation_products_decay(m in model()) {
        prop_assert!(product_exponent(&m) < 0.0);
    }

    /// The functional equation on the two arcs where both transforms are
    /// given by the parameter forms: `Y-` (t > mu2) and `X-` (t < -mu1).
    #[test]
    fn functional_equation_on_random_models(m in model(), u in 0.05f64..2.0, upper in any::<bool>()) {
        let tr = Transforms::new(m, (0.7, 1.3));
        let t = if upper { m.mu2 + u } else { -m.mu1 - u };
        let (s2, s1) = if upper { (m.zeta(t), t) } else { (t, m.eta(t)) };
        let f2 = tr.phi2_param(s2).unwrap().value;
        let f1 = tr.phi1_param(s1).unwrap().value;
        let res = Complex64::from(m.gamma1_s(t)) * f1 + Complex64::from(m.gamma2_s(t)) * f2 + m.exp_s(t, tr.z0);
        let scale = f1.norm() + f2.norm() + 1.0;
        prop_assert!(res.norm() <= 1e-10 * scale, "residual {} at t = {t}", res.norm());
    }
}
