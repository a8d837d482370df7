use proptest::prelude::*;

use yamabe_core::classifier::claim2_root;
use yamabe_core::geometry::{scalar_curvature_direct, scalar_curvature_warped};
use yamabe_core::integrator::{integrate, Direction, IntegrationOptions};
use yamabe_core::ode::{
    eq1_residual, eq2_residual, rho_second, rho_third, scale_transform, SolitonParams, SolitonState,
};

fn params() -> impl Strategy<Value = SolitonParams> {
    (3u32..=7, -4.0f64..-0.1, -4.0f64..4.0)
        .prop_map(|(n, lambda, rbar)| SolitonParams::expanding(n, lambda, rbar).unwrap())
}

fn state() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..20.0, -5.0f64..5.0)
}

proptest! {
    #[test]
    fn derived_second_derivative_solves_the_equation(p in params(), (rho, drho) in state()) {
        let dd = rho_second(&p, rho, drho).unwrap();
        let res = eq1_residual(&p, rho, drho, dd).unwrap();
        prop_assert!(res.relative() <= 1e-12, "{res:?}");
    }

    #[test]
    fn derived_third_derivative_solves_the_derivative(p in params(), (rho, drho) in state()) {
        let dd = rho_second(&p, rho, drho).unwrap();
        let ddd = rho_third(&p, rho, drho, dd).unwrap();
        let res = eq2_residual(&p, rho, drho, dd, ddd).unwrap();
        prop_assert!(res.relative() <= 1e-12, "{res:?}");
    }

    #[test]
    fn curvature_routes_agree_on_the_equation(p in params(), (rho, drho) in state()) {
        let dd = rho_second(&p, rho, drho).unwrap();
        let warped = scalar_curvature_warped(&p, rho, drho, dd).unwrap();
        let direct = scalar_curvature_direct(drho, p.lambda());
        let scale = 1.0 + direct.abs() + p.rbar().abs() / (rho * rho);
        prop_assert!((warped - direct).abs() <= 1e-12 * scale * (1.0 + drho * drho));
    }

    #[test]
    fn root_of_the_flat_equation(p in params(), extra in 0.01f64..5.0) {
        prop_assume!(p.rbar() <= 0.0);
        let rho = p.asymptote().unwrap() + extra;
        let x = claim2_root(&p, rho);
        prop_assert!(x > 0.0);
        let res = eq1_residual(&p, rho, x, 0.0).unwrap();
        prop_assert!(res.relative() <= 1e-12, "{res:?}");
    }

    #[test]
    fn scaling_multiplies_residuals_by_b4(
        p in params(),
        (rho, drho) in state(),
        dd in -3.0f64..3.0,
        b in 0.25f64..4.0,
    ) {
        let s = SolitonState::new(0.7, rho, drho);
        let (q, t) = scale_transform(&p, &s, b).unwrap();
        let before = eq1_residual(&p, rho, drho, dd).unwrap();
        let after = eq1_residual(&q, t.rho, t.drho, b * b * b * dd).unwrap();
        prop_assert!((after.value - b.powi(4) * before.value).abs() <= 1e-12 * after.scale);
        prop_assert_eq!(t.r, 0.7 / b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn samples_lie_on_the_equation(p in params(), rho in 0.5f64..3.0, drho in -1.0f64..1.0) {
        let opts = IntegrationOptions::default().with_r_span(3.0);
        let tr = integrate(&p, SolitonState::new(0.0, rho, drho), Direction::Both, &opts).unwrap();
        prop_assert!(!tr.is_empty());
        for w in tr.samples().windows(2) {
            prop_assert!(w[0].r < w[1].r);
        }
        for s in tr.samples() {
            let res = eq1_residual(&p, s.rho, s.drho, s.ddrho).unwrap();
            prop_assert!(res.relative() <= 1e-12);
        }
    }
}
