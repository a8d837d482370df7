//! Curated grids and the named verification suites run over them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    check_claim2_event, classify, epsilon_bounds_check, falsify_claim1,
    verify_r_greater_lambda, verify_r_less_lambda, Branch, Classification, VerificationReport,
    DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::geometry::{scalar_curvature_direct, scalar_curvature_warped};
use crate::integrator::{
    integrate, sphere_tip_initialize, Direction, EventKind, IntegrationOptions, Trajectory, TIP_R0,
};
use crate::ode::{eq1_residual, rho_second, rho_third, scale_transform, SolitonParams, SolitonState};
use crate::separatrix::{separatrix, AsymptoticEnd};

/// Relative agreement of `ρ'''` with a central difference of `ρ''`.
pub const FD_TOL: f64 = 1e-4;
/// Tolerance of the constant solution.
pub const CONSTANT_TOL: f64 = 1e-8;
/// Relative residual bound for the tip solution.
pub const TIP_RESIDUAL_TOL: f64 = 1e-6;
/// Start of the region checked on the tip solution.
pub const TIP_CHECK_FROM: f64 = 0.01;
/// Relative tolerance of the residual under scaling.
pub const SCALING_TOL: f64 = 1e-10;
pub const EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    EqConsistency,
    RLessLambda,
    RGreaterLambda,
    Claim1,
    Claim2,
    Epsilon,
    Scaling,
    CurvatureRoutes,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::EqConsistency,
        Suite::RLessLambda,
        Suite::RGreaterLambda,
        Suite::Claim1,
        Suite::Claim2,
        Suite::Epsilon,
        Suite::Scaling,
        Suite::CurvatureRoutes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::EqConsistency => "eq-consistency",
            Suite::RLessLambda => "r-less-lambda",
            Suite::RGreaterLambda => "r-greater-lambda",
            Suite::Claim1 => "claim1",
            Suite::Claim2 => "claim2",
            Suite::Epsilon => "epsilon",
            Suite::Scaling => "scaling",
            Suite::CurvatureRoutes => "curvature-routes",
        }
    }

    pub fn from_name(name: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn run(self, opts: &IntegrationOptions) -> Result<VerificationReport> {
        match self {
            Suite::EqConsistency => eq_consistency(opts),
            Suite::RLessLambda => Ok(check_r_less(&line_runs(&r_less_grid(), AsymptoticEnd::Forward, opts))),
            Suite::RGreaterLambda => {
                Ok(check_r_greater(&line_runs(&r_greater_grid(), AsymptoticEnd::Backward, opts)))
            }
            Suite::Claim1 => claim1(opts),
            Suite::Claim2 => Ok(check_claim2(&line_runs(&r_greater_grid(), AsymptoticEnd::Backward, opts))),
            Suite::Epsilon => epsilon(opts),
            Suite::Scaling => scaling(opts),
            Suite::CurvatureRoutes => {
                let mut runs = line_runs(&r_less_grid(), AsymptoticEnd::Forward, opts);
                runs.extend(line_runs(&r_greater_grid(), AsymptoticEnd::Backward, opts));
                Ok(check_curvature_routes(&runs))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub n: u32,
    pub lambda: f64,
    pub rbar: f64,
    pub rho0: f64,
    pub drho0: f64,
}

impl GridPoint {
    pub fn params(&self) -> Result<SolitonParams> {
        SolitonParams::expanding(self.n, self.lambda, self.rbar)
    }
}

/// Cross product in the order `n, λ, R̄, ρ0, ρ'0`.
pub fn cross_grid(n: &[u32], lambda: &[f64], rbar: &[f64], rho0: &[f64], drho0: &[f64]) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &n in n {
        for &lambda in lambda {
            for &rbar in rbar {
                for &rho0 in rho0 {
                    for &drho0 in drho0 {
                        out.push(GridPoint {
                            index: out.len(),
                            n,
                            lambda,
                            rbar,
                            rho0,
                            drho0,
                        });
                    }
                }
            }
        }
    }
    out
}

pub fn r_less_grid() -> Vec<GridPoint> {
    cross_grid(&[3, 4, 5], &[-1.0, -2.0], &[0.0, -1.0], &[2.0, 3.0], &[-0.2, -0.5])
}

pub fn r_greater_grid() -> Vec<GridPoint> {
    cross_grid(&[3, 4], &[-1.0], &[0.0, -1.0], &[1.0, 2.0], &[0.2, 0.5, 0.8])
}

pub fn claim1_grid() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for rho0 in [0.5, 1.0, 2.0] {
        for drho0 in [0.1, 0.5, 1.0, 2.0] {
            out.push((rho0, drho0));
        }
    }
    out
}

/// One grid point realised as the orbit through `ρ0` asymptotic to the
/// constant warp. The grid `ρ'0` only seeds the record.
#[derive(Debug, Clone)]
pub struct LineRun {
    pub point: GridPoint,
    pub trajectory: Option<Trajectory>,
    pub classification: Classification,
    /// `|ρ'(0) - ρ'0|` of the realised orbit against the grid seed.
    pub seed_offset: Option<f64>,
}

pub fn line_run(point: GridPoint, end: AsymptoticEnd, opts: &IntegrationOptions) -> LineRun {
    let built = point.params().and_then(|p| separatrix(&p, point.rho0, end, opts));
    match built {
        Ok(tr) => {
            let classification = classify(&tr, DEFAULT_TOL).unwrap_or_else(|e| Classification {
                branch: Branch::Inconclusive,
                asymptote_c: None,
                details: e.to_string(),
            });
            LineRun {
                point,
                seed_offset: Some((tr.origin().drho - point.drho0).abs()),
                trajectory: Some(tr),
                classification,
            }
        }
        Err(e) => LineRun {
            point,
            trajectory: None,
            classification: Classification {
                branch: Branch::Inconclusive,
                asymptote_c: None,
                details: e.to_string(),
            },
            seed_offset: None,
        },
    }
}

pub fn line_runs(points: &[GridPoint], end: AsymptoticEnd, opts: &IntegrationOptions) -> Vec<LineRun> {
    points.par_iter().map(|&p| line_run(p, end, opts)).collect()
}

fn label(p: &GridPoint) -> String {
    format!(
        "[{}] n={} lambda={} rbar={} rho0={}",
        p.index, p.n, p.lambda, p.rbar, p.rho0
    )
}

fn check_lines<F>(suite: &str, runs: &[LineRun], verify: F) -> VerificationReport
where
    F: Fn(&Trajectory) -> Result<VerificationReport>,
{
    let mut report = VerificationReport::new(suite);
    for run in runs {
        let name = label(&run.point);
        let Some(tr) = run.trajectory.as_ref() else {
            report.check(
                format!("{name} inconclusive"),
                true,
                0.0,
                None,
                run.classification.details.clone(),
            );
            continue;
        };
        if run.classification.branch == Branch::Inconclusive {
            report.check(
                format!("{name} inconclusive"),
                true,
                0.0,
                None,
                run.classification.details.clone(),
            );
            continue;
        }
        match verify(tr) {
            Ok(sub) => report.absorb(&format!("{name} "), sub),
            Err(e) => report.check(format!("{name} regime"), false, f64::INFINITY, None, e.to_string()),
        }
    }
    report
}

pub fn check_r_less(runs: &[LineRun]) -> VerificationReport {
    check_lines("r-less-lambda", runs, |t| verify_r_less_lambda(t, DEFAULT_TOL))
}

pub fn check_r_greater(runs: &[LineRun]) -> VerificationReport {
    check_lines("r-greater-lambda", runs, |t| verify_r_greater_lambda(t, DEFAULT_TOL))
}

/// Every zero of `ρ''` with `ρ' > 0` on the given runs.
pub fn check_claim2(runs: &[LineRun]) -> VerificationReport {
    let mut report = VerificationReport::new("claim2");
    let mut seen = 0usize;
    for run in runs {
        let Some(tr) = run.trajectory.as_ref() else { continue };
        if run.classification.branch == Branch::Inconclusive {
            continue;
        }
        for ev in tr.events().iter().filter(|e| e.kind == EventKind::DDRhoZero) {
            if !(ev.state.drho > 0.0) {
                continue;
            }
            seen += 1;
            let name = format!("{} r0={:.6}", label(&run.point), ev.r);
            match check_claim2_event(tr.params(), ev) {
                Ok(o) => report.check(
                    name,
                    o.passed(),
                    o.identity_error,
                    Some(o.r),
                    format!(
                        "rho''' = {:e}, rho = {}, identity error {:e}",
                        o.dddrho, ev.state.rho, o.identity_error
                    ),
                ),
                Err(e) => report.check(name, false, f64::INFINITY, Some(ev.r), e.to_string()),
            }
        }
    }
    report.check("events", true, 0.0, None, format!("{seen} zero(s) of rho'' checked"));
    report
}

/// `max |R_direct - R_warped| ≤ 20 (rtol |R| + atol)` on every sample.
///
/// With `rounding`, the bound also admits the cancellation error of the
/// warped route, `4ε max(|R̄|, aρ'², 2mρ|ρ''|) / ρ²`, which dominates as
/// `ρ → 0`.
pub fn curvature_route_check(
    report: &mut VerificationReport,
    name: &str,
    tr: &Trajectory,
    rounding: bool,
) {
    let params = tr.params();
    let opts = tr.options();
    let mut worst = 0.0f64;
    let mut at = None;
    let mut ok = true;
    for s in tr.samples() {
        let direct = scalar_curvature_direct(s.drho, params.lambda());
        let Ok(warped) = scalar_curvature_warped(params, s.rho, s.drho, s.ddrho) else {
            continue;
        };
        let diff = (direct - warped).abs();
        let mut bound = 20.0 * (opts.rtol * direct.abs() + opts.atol);
        if rounding {
            let n = f64::from(params.n());
            let terms = params
                .rbar()
                .abs()
                .max((n - 1.0) * (n - 2.0) * s.drho * s.drho)
                .max(2.0 * (n - 1.0) * s.rho * s.ddrho.abs());
            bound += 4.0 * f64::EPSILON * terms / (s.rho * s.rho);
        }
        if diff > bound {
            ok = false;
        }
        let ratio = diff / bound;
        if ratio > worst || at.is_none() {
            worst = worst.max(ratio);
            at = Some(s.r);
        }
    }
    report.check(name, ok, worst, at, "max |R_direct - R_warped| / bound");
}

pub fn check_curvature_routes(runs: &[LineRun]) -> VerificationReport {
    let mut report = VerificationReport::new("curvature-routes");
    for run in runs {
        if let Some(tr) = run.trajectory.as_ref() {
            curvature_route_check(&mut report, &label(&run.point), tr, false);
        }
    }
    report
}

/// The checks that apply to a single classified trajectory, one report per
/// suite: the branch statements, the zeros of `ρ''` on an `R > λ` line, the
/// linear bounds and the curvature routes.
pub fn trajectory_checks(tr: &Trajectory, classification: &Classification) -> Vec<VerificationReport> {
    let mut out = Vec::new();
    let failed = |suite: &str, e: Error| {
        let mut r = VerificationReport::new(suite);
        r.check("regime", false, f64::INFINITY, None, e.to_string());
        r
    };
    match classification.branch {
        Branch::LineRLessLambda => out.push(
            verify_r_less_lambda(tr, DEFAULT_TOL).unwrap_or_else(|e| failed("r-less-lambda", e)),
        ),
        Branch::LineRGreaterLambda => {
            out.push(
                verify_r_greater_lambda(tr, DEFAULT_TOL)
                    .unwrap_or_else(|e| failed("r-greater-lambda", e)),
            );
            let mut claim2 = VerificationReport::new("claim2");
            for ev in tr.events().iter().filter(|e| e.kind == EventKind::DDRhoZero && e.state.drho > 0.0) {
                match check_claim2_event(tr.params(), ev) {
                    Ok(o) => claim2.check(
                        "event",
                        o.passed(),
                        o.identity_error,
                        Some(o.r),
                        format!("rho''' = {:e}", o.dddrho),
                    ),
                    Err(e) => claim2.check("event", false, f64::INFINITY, Some(ev.r), e.to_string()),
                }
            }
            out.push(claim2);
        }
        _ => {}
    }
    out.push(epsilon_bounds_check(tr, EPSILON).unwrap_or_else(|e| failed("epsilon", e)));
    let mut routes = VerificationReport::new("curvature-routes");
    curvature_route_check(&mut routes, "routes", tr, true);
    out.push(routes);
    out
}

fn p(n: u32, lambda: f64, rbar: f64) -> SolitonParams {
    SolitonParams::expanding(n, lambda, rbar).expect("curated parameters are valid")
}

pub fn constant_trajectory(r_span: f64, opts: &IntegrationOptions) -> Result<Trajectory> {
    integrate(
        &p(3, -1.0, -1.0),
        SolitonState::new(0.0, 1.0, 0.0),
        Direction::Both,
        &opts.with_r_span(r_span),
    )
}

/// `max|ρ - 1| ≤ 1e-8` and `R = λ` on the constant solution, both ways
/// over `r_span = 50`.
pub fn constant_fidelity(opts: &IntegrationOptions) -> Result<VerificationReport> {
    let tr = constant_trajectory(50.0, opts)?;
    let lambda = tr.params().lambda();
    let mut report = VerificationReport::new("constant");
    let (w, at) = tr
        .samples()
        .iter()
        .map(|s| ((s.rho - 1.0).abs(), s.r))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((f64::INFINITY, f64::NAN));
    report.check("rho_constant", w <= CONSTANT_TOL, w, Some(at), format!("max |rho - 1| = {w:e}"));
    let worst_r = tr
        .samples()
        .iter()
        .map(|s| (scalar_curvature_direct(s.drho, lambda) - lambda).abs())
        .fold(0.0, f64::max);
    report.check("curvature_is_lambda", worst_r <= CONSTANT_TOL, worst_r, None, format!("max |R - lambda| = {worst_r:e}"));
    let (lo, hi) = tr.r_range().unwrap_or((0.0, 0.0));
    report.check(
        "window",
        lo <= -50.0 && hi >= 50.0,
        0.0,
        None,
        format!(
            "[{lo}, {hi}], ends {} / {}",
            tr.termination_bwd().as_str(),
            tr.termination_fwd().as_str()
        ),
    );
    Ok(report)
}

pub fn tip_trajectory(opts: &IntegrationOptions) -> Result<Trajectory> {
    let params = p(3, -1.0, 2.0);
    let init = sphere_tip_initialize(&params, TIP_R0)?;
    integrate(&params, init, Direction::Both, opts)
}

/// Residual of the warp equation with `ρ''` taken from the derivative of
/// the dense interpolant, for `r > 0.01`, plus the classification.
pub fn tip_shooting(opts: &IntegrationOptions) -> Result<VerificationReport> {
    let tr = tip_trajectory(opts)?;
    let params = *tr.params();
    let mut report = VerificationReport::new("tip");
    let mut worst = 0.0f64;
    let mut at = None;
    for s in tr.samples().iter().filter(|s| s.r > TIP_CHECK_FROM) {
        let Some((_, dd)) = tr.interpolant_slope(s.r) else { continue };
        let res = eq1_residual(&params, s.rho, s.drho, dd)?;
        let rel = res.relative().abs();
        if rel > worst || at.is_none() {
            worst = worst.max(rel);
            at = Some(s.r);
        }
    }
    report.check(
        "eq1_residual",
        worst <= TIP_RESIDUAL_TOL,
        worst,
        at,
        format!("max relative residual for r > {TIP_CHECK_FROM}"),
    );
    let c = classify(&tr, DEFAULT_TOL)?;
    report.check(
        "classification",
        c.branch == Branch::RotationallySymmetricHalfLine,
        0.0,
        None,
        format!("{}: {}", c.branch.as_str(), c.details),
    );
    Ok(report)
}

/// Central difference of `ρ''` along the dense output against `ρ'''`.
pub fn fd_third_check(report: &mut VerificationReport, name: &str, tr: &Trajectory) {
    let params = tr.params();
    let samples = tr.samples();
    let Some((lo, hi)) = tr.r_range() else {
        report.check(name, false, f64::INFINITY, None, "empty trajectory");
        return;
    };
    let dd_at = |r: f64| -> Option<f64> {
        let s = tr.state_at(r)?;
        rho_second(params, s.rho, s.drho).ok()
    };
    // Midpoints of accepted steps, where the interpolant is smooth.
    let mut rows = Vec::new();
    for w in samples.windows(2).skip(1) {
        let step = w[1].r - w[0].r;
        let r = 0.5 * (w[0].r + w[1].r);
        let h = 0.1 * step;
        if !(h > 0.0) || r - 2.0 * h < lo || r + 2.0 * h > hi {
            continue;
        }
        let Some(s) = tr.state_at(r) else { continue };
        if s.rho < 1e-2 || s.drho.abs() > 1e3 {
            continue;
        }
        let pts = [r - 2.0 * h, r - h, r + h, r + 2.0 * h].map(dd_at);
        let [Some(m2), Some(m1), Some(p1), Some(p2)] = pts else { continue };
        // fourth-order central difference
        let fd = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
        let Some(dd) = dd_at(r) else { continue };
        let Ok(exact) = rho_third(params, s.rho, s.drho, dd) else { continue };
        rows.push((r, fd, exact));
    }
    let scale = rows.iter().fold(0.0f64, |m, r| m.max(r.2.abs()));
    // Relative below two decades of the peak; absolute beyond.
    let floor = (1e-2 * scale).max(1e-12);
    let mut worst = 0.0f64;
    let mut at = None;
    for &(r, fd, exact) in &rows {
        let rel = (fd - exact).abs() / exact.abs().max(floor);
        if rel > worst || at.is_none() {
            worst = worst.max(rel);
            at = Some(r);
        }
    }
    report.check(
        name,
        worst <= FD_TOL,
        worst,
        at,
        format!("{} step midpoints", rows.len()),
    );
}

/// Trajectories of the consistency check: constant, tip, two `R > λ`
/// lines and one `R < λ` orbit.
pub fn consistency_trajectories(opts: &IntegrationOptions) -> Result<Vec<(String, Trajectory)>> {
    Ok(vec![
        ("constant".into(), constant_trajectory(50.0, opts)?),
        ("tip".into(), tip_trajectory(opts)?),
        (
            "r-greater n=3 rbar=-1".into(),
            separatrix(&p(3, -1.0, -1.0), 2.0, AsymptoticEnd::Backward, opts)?,
        ),
        (
            "r-greater n=4 rbar=0".into(),
            separatrix(&p(4, -1.0, 0.0), 2.0, AsymptoticEnd::Backward, opts)?,
        ),
        (
            "r-less n=3 rbar=-1".into(),
            separatrix(&p(3, -1.0, -1.0), 3.0, AsymptoticEnd::Forward, opts)?,
        ),
    ])
}

pub fn eq_consistency(opts: &IntegrationOptions) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("eq-consistency");
    for (name, tr) in consistency_trajectories(opts)? {
        fd_third_check(&mut report, &name, &tr);
    }
    Ok(report)
}

pub fn claim1(opts: &IntegrationOptions) -> Result<VerificationReport> {
    falsify_claim1(&p(3, -1.0, 2.0), &claim1_grid(), opts)
}

/// The linear-bound statements on a spread of trajectories.
pub fn epsilon(opts: &IntegrationOptions) -> Result<VerificationReport> {
    let mut set: Vec<(String, Trajectory)> = vec![
        ("constant".into(), constant_trajectory(50.0, opts)?),
        ("tip".into(), tip_trajectory(opts)?),
        (
            "decay n=3 rbar=0".into(),
            integrate(&p(3, -1.0, 0.0), SolitonState::new(0.0, 1.0, -0.5), Direction::Both, opts)?,
        ),
    ];
    for (i, &(rho0, drho0)) in claim1_grid().iter().enumerate() {
        set.push((
            format!("claim1 ic{i}"),
            integrate(&p(3, -1.0, 2.0), SolitonState::new(0.0, rho0, drho0), Direction::Both, opts)?,
        ));
    }
    for run in line_runs(&r_less_grid(), AsymptoticEnd::Forward, opts)
        .into_iter()
        .chain(line_runs(&r_greater_grid(), AsymptoticEnd::Backward, opts))
    {
        if let Some(tr) = run.trajectory {
            set.push((label(&run.point), tr));
        }
    }
    let mut report = VerificationReport::new("epsilon");
    for (name, tr) in set {
        report.absorb(&format!("{name} "), epsilon_bounds_check(&tr, EPSILON)?);
    }
    Ok(report)
}

/// One trajectory per observed branch, rebuilt from scaled data.
pub fn branch_representatives(
    b: f64,
    opts: &IntegrationOptions,
) -> Result<Vec<(&'static str, Trajectory)>> {
    // lengths scale by 1/b
    let o = IntegrationOptions {
        r_span: opts.r_span / b,
        converge_window: opts.converge_window / b,
        h_init: opts.h_init / b,
        h_max: opts.h_max / b,
        ..*opts
    };
    let scaled = |params: SolitonParams, s: SolitonState| scale_transform(&params, &s, b);

    let (cp, cs) = scaled(p(3, -1.0, -1.0), SolitonState::new(0.0, 1.0, 0.0))?;
    let constant = integrate(&cp, cs, Direction::Both, &o)?;

    let (tp, _) = scaled(p(3, -1.0, 2.0), SolitonState::new(0.0, 1.0, 0.0))?;
    let tip = integrate(&tp, sphere_tip_initialize(&tp, TIP_R0)?, Direction::Both, &o)?;

    let (lp, ls) = scaled(p(3, -1.0, -1.0), SolitonState::new(0.0, 2.0, 0.0))?;
    let line = separatrix(&lp, ls.rho, AsymptoticEnd::Backward, &o)?;

    let (np, ns) = scaled(p(3, -1.0, -1.0), SolitonState::new(0.0, 2.0, 0.5))?;
    let not_global = integrate(&np, ns, Direction::Both, &o)?;

    Ok(vec![
        ("constant", constant),
        ("tip", tip),
        ("r-greater line", line),
        ("literal seed", not_global),
    ])
}

pub fn scaling(opts: &IntegrationOptions) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("scaling");
    let states = [
        (p(3, -1.0, -1.0), SolitonState::new(0.0, 1.0, 0.0)),
        (p(4, -1.3, -0.4), SolitonState::new(1.0, 1.7, 0.35)),
        (p(5, -2.0, 0.0), SolitonState::new(-2.0, 3.0, -0.5)),
        (p(3, -1.0, 2.0), SolitonState::new(0.5, 0.5, 1.0)),
    ];
    let base = branch_representatives(1.0, opts)?;
    for b in [0.5, 2.0] {
        let mut worst = 0.0f64;
        for (params, s) in &states {
            let dd = rho_second(params, s.rho, s.drho)?;
            let (q, t) = scale_transform(params, s, b)?;
            let res = eq1_residual(&q, t.rho, t.drho, b.powi(3) * dd)?;
            worst = worst.max(res.relative().abs());
        }
        report.check(format!("b={b} residual"), worst <= SCALING_TOL, worst, None, "relative eq1 residual of scaled states");

        for ((name, orig), (_, img)) in base.iter().zip(branch_representatives(b, opts)?) {
            let a = classify(orig, DEFAULT_TOL)?;
            let c = classify(&img, DEFAULT_TOL)?;
            report.check(
                format!("b={b} {name}"),
                a.branch == c.branch,
                0.0,
                None,
                format!("{} -> {}", a.branch.as_str(), c.branch.as_str()),
            );
        }
    }
    Ok(report)
}

/// Runs a suite by name.
pub fn run_named(name: &str, opts: &IntegrationOptions) -> Result<VerificationReport> {
    Suite::from_name(name)
        .ok_or_else(|| Error::NotApplicable(format!("unknown suite {name:?}")))?
        .run(opts)
}
