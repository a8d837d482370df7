use yamabe_core::classifier::{classify, verify_r_greater_lambda, Branch, DEFAULT_TOL};
use yamabe_core::geometry::{make_constant_example, reconstruct};
use yamabe_core::integrator::{integrate, sphere_tip_initialize, Direction, Termination, TIP_R0};
use yamabe_core::ode::SolitonParams;
use yamabe_core::separatrix::{separatrix, AsymptoticEnd};
use yamabe_core::suites::{run_named, Suite};

fn p(n: u32, lambda: f64, rbar: f64) -> SolitonParams {
    SolitonParams::expanding(n, lambda, rbar).unwrap()
}

#[test]
fn constant_example_is_trivial() {
    let tr = make_constant_example(3, -1.0, -1.0, 10.0).unwrap();
    let c = classify(&tr, DEFAULT_TOL).unwrap();
    assert_eq!(c.branch, Branch::Trivial);
    assert_eq!(c.asymptote_c, Some(1.0));
}

#[test]
fn line_from_the_saddle() {
    let params = p(4, -1.0, -1.0);
    let tr = separatrix(&params, 2.0, AsymptoticEnd::Backward, &Default::default()).unwrap();
    assert_eq!(tr.termination_bwd(), Termination::Converged);
    let c = classify(&tr, DEFAULT_TOL).unwrap();
    assert_eq!(c.branch, Branch::LineRGreaterLambda, "{}", c.details);
    let report = verify_r_greater_lambda(&tr, DEFAULT_TOL).unwrap();
    assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());

    for g in reconstruct(&tr, 0.0, 0.0).unwrap() {
        assert!(g.r_direct > -1.0 && g.r_direct < 0.0);
        assert!((g.r_direct - g.r_warped).abs() <= 1e-8);
    }
}

#[test]
fn tip_is_a_half_line() {
    let params = p(3, -1.0, 2.0);
    let init = sphere_tip_initialize(&params, TIP_R0).unwrap();
    let tr = integrate(&params, init, Direction::Both, &Default::default()).unwrap();
    assert_eq!(tr.termination_bwd(), Termination::RhoZero);
    let c = classify(&tr, DEFAULT_TOL).unwrap();
    assert_eq!(c.branch, Branch::RotationallySymmetricHalfLine);
}

#[test]
fn every_suite_passes() {
    for s in Suite::ALL {
        let report = run_named(s.name(), &Default::default()).unwrap();
        assert!(
            report.passed(),
            "{}: {:?}",
            s.name(),
            report.failures().collect::<Vec<_>>()
        );
    }
}
