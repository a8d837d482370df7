//! Which branch of the expanding-soliton taxonomy a trajectory realises,
//! and sample-level checks of the sign and limit statements for each
//! branch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{
    integrate, Direction, Event, EventKind, IntegrationOptions, Sample, Termination, Trajectory,
};
use crate::ode::{rho_third, SolitonParams, SolitonState};

/// `max|ρ'|` below which a trajectory counts as constant.
pub const TRIVIAL_EPS: f64 = 1e-9;

/// Default tolerance for tip slopes and limits.
pub const DEFAULT_TOL: f64 = 1e-3;

/// Relative tolerance of the quadratic-root identity at `ρ'' = 0`.
pub const CLAIM2_IDENTITY_TOL: f64 = 1e-8;

/// Upper bound on `r_span` in [`falsify_claim1`].
pub const CLAIM1_SPAN_CAP: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Trivial,
    RotationallySymmetricHalfLine,
    LineRLessLambda,
    LineRGreaterLambda,
    NotGlobal,
    Inconclusive,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Trivial => "Trivial",
            Branch::RotationallySymmetricHalfLine => "RotationallySymmetricHalfLine",
            Branch::LineRLessLambda => "LineRLessLambda",
            Branch::LineRGreaterLambda => "LineRGreaterLambda",
            Branch::NotGlobal => "NotGlobal",
            Branch::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub branch: Branch,
    pub asymptote_c: Option<f64>,
    pub details: String,
}

impl Classification {
    fn new(branch: Branch, details: impl Into<String>) -> Self {
        Classification {
            branch,
            asymptote_c: None,
            details: details.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub worst_residual: f64,
    pub at_r: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(suite: impl Into<String>) -> Self {
        VerificationReport {
            suite: suite.into(),
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Adds a check; a repeated name overwrites nothing and is suffixed.
    pub fn push(&mut self, mut check: Check) {
        let base = check.name.clone();
        let mut k = 2;
        while self.checks.iter().any(|c| c.name == check.name) {
            check.name = format!("{base}#{k}");
            k += 1;
        }
        self.checks.push(check);
    }

    pub fn check(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        worst_residual: f64,
        at_r: Option<f64>,
        detail: impl Into<String>,
    ) {
        self.push(Check {
            name: name.into(),
            passed,
            worst_residual,
            at_r,
            detail: detail.into(),
        });
    }

    /// Appends all checks of `other`, prefixing their names.
    pub fn absorb(&mut self, prefix: &str, other: VerificationReport) {
        for mut c in other.checks {
            c.name = format!("{prefix}{}", c.name);
            self.push(c);
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn require_expanding(params: &SolitonParams) -> Result<()> {
    if params.is_expanding() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "classification needs lambda < 0, got {}",
            params.lambda()
        )))
    }
}

fn tip_slope(params: &SolitonParams) -> Option<f64> {
    (params.rbar() > 0.0).then(|| (params.rbar() / params.a()).sqrt())
}

/// Level of `ρ` at which a tip's slope is read. Below it the smooth tip is
/// unstable toward `r = 0`: generic solutions behave like `r^{2/n}` there.
pub const TIP_PROBE: f64 = 1e-3;

fn probe_slope(traj: &Trajectory, forward: bool) -> Option<f64> {
    let e = traj.terminal_event(forward).filter(|e| e.kind == EventKind::RhoZero)?;
    let probe = traj
        .samples()
        .iter()
        .filter(|s| s.rho >= TIP_PROBE)
        .min_by(|a, b| (a.r - e.r).abs().total_cmp(&(b.r - e.r).abs()))
        .map(|s| s.drho);
    Some(probe.unwrap_or(e.state.drho))
}

fn is_smooth_tip(traj: &Trajectory, forward: bool, tol: f64) -> bool {
    match (probe_slope(traj, forward), tip_slope(traj.params())) {
        (Some(d), Some(s)) => (d.abs() - s).abs() <= tol * s.max(1.0),
        _ => false,
    }
}

/// Assigns one branch to a two-sided trajectory.
///
/// Line branches need the end approaching the constant warp to have
/// `Converged`; a short window gives `Inconclusive`.
pub fn classify(traj: &Trajectory, tol: f64) -> Result<Classification> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if traj.termination_fwd() == Termination::NotIntegrated
        || traj.termination_bwd() == Termination::NotIntegrated
    {
        return Err(Error::OneSided);
    }
    let params = traj.params();
    require_expanding(params)?;

    let (fwd, bwd) = (traj.termination_fwd(), traj.termination_bwd());
    if fwd.is_failure() || bwd.is_failure() {
        return Ok(Classification::new(
            Branch::Inconclusive,
            format!("integration failed (forward {}, backward {})", fwd.as_str(), bwd.as_str()),
        ));
    }

    let samples = traj.samples();
    let max_slope = samples.iter().fold(0.0f64, |m, s| m.max(s.drho.abs()));
    let blowup = fwd == Termination::Blowup || bwd == Termination::Blowup;
    let zero_fwd = fwd == Termination::RhoZero;
    let zero_bwd = bwd == Termination::RhoZero;

    if max_slope <= TRIVIAL_EPS && !blowup && !zero_fwd && !zero_bwd {
        let mut c = Classification::new(Branch::Trivial, format!("max |rho'| = {max_slope:e}"));
        c.asymptote_c = Some(samples[0].rho);
        return Ok(c);
    }
    if blowup {
        return Ok(Classification::new(
            Branch::NotGlobal,
            format!("blow-up (forward {}, backward {})", fwd.as_str(), bwd.as_str()),
        ));
    }
    if zero_fwd && zero_bwd {
        return Ok(Classification::new(
            Branch::NotGlobal,
            "rho reaches zero in both directions",
        ));
    }
    if zero_fwd || zero_bwd {
        let ev = traj.terminal_event(zero_fwd);
        let other = if zero_fwd { bwd } else { fwd };
        if !is_smooth_tip(traj, zero_fwd, tol) {
            let slope = probe_slope(traj, zero_fwd).unwrap_or(f64::NAN);
            return Ok(Classification::new(
                Branch::NotGlobal,
                format!("rho reaches zero with slope {slope}, not a smooth tip"),
            ));
        }
        if matches!(other, Termination::WindowEnd | Termination::Converged) {
            let r = ev.map_or(f64::NAN, |e| e.r);
            return Ok(Classification::new(
                Branch::RotationallySymmetricHalfLine,
                format!("smooth tip at r = {r}"),
            ));
        }
        return Ok(Classification::new(Branch::Inconclusive, "tip with undetermined far end"));
    }

    let increasing = samples.iter().all(|s| s.drho > 0.0);
    let decreasing = samples.iter().all(|s| s.drho < 0.0);
    let line = if increasing {
        Some((Branch::LineRGreaterLambda, false))
    } else if decreasing {
        Some((Branch::LineRLessLambda, true))
    } else {
        None
    };
    let Some((branch, forward)) = line else {
        return Ok(Classification::new(
            Branch::Inconclusive,
            "rho' changes sign inside the window",
        ));
    };
    let Some(c) = traj.asymptote(forward) else {
        let side = if forward { "forward" } else { "backward" };
        return Ok(Classification::new(
            Branch::Inconclusive,
            format!("no {side} limit inside the window"),
        ));
    };
    let mismatch = (params.lambda() * c * c - params.rbar()).abs();
    if mismatch > tol * params.rbar().abs().max(1.0) {
        return Ok(Classification::new(
            Branch::Inconclusive,
            format!("limit {c} violates lambda c^2 = rbar by {mismatch:e}"),
        ));
    }
    Ok(Classification {
        branch,
        asymptote_c: Some(c),
        details: format!("limit {c}"),
    })
}

fn limit_check(
    report: &mut VerificationReport,
    traj: &Trajectory,
    params: &SolitonParams,
    forward: bool,
    tol: f64,
) {
    let side = if forward { "forward" } else { "backward" };
    let target = params.asymptote().unwrap_or(f64::NAN);
    let name = format!("{side}_limit");
    match traj.asymptote(forward) {
        Some(c) => {
            let err = (c - target).abs();
            let at = traj.terminal_event(forward).map(|e| e.r);
            report.check(name, err <= tol, err, at, format!("limit {c}, expected {target}"));
        }
        None => report.check(
            name,
            false,
            f64::INFINITY,
            None,
            format!("{side} run ended {}", if forward {
                traj.termination_fwd().as_str()
            } else {
                traj.termination_bwd().as_str()
            }),
        ),
    }
}

fn rbar_check(report: &mut VerificationReport, params: &SolitonParams) {
    let rbar = params.rbar();
    report.check("rbar_nonpositive", rbar <= 0.0, rbar.max(0.0), None, format!("rbar = {rbar}"));
}

fn worst_by<F>(samples: &[Sample], f: F) -> Option<(f64, f64)>
where
    F: Fn(&Sample) -> f64,
{
    samples
        .iter()
        .map(|s| (f(s), s.r))
        .max_by(|a, b| a.0.total_cmp(&b.0))
}

/// Checks of the `R < λ` line statements on a trajectory with `ρ' < 0`.
pub fn verify_r_less_lambda(traj: &Trajectory, tol: f64) -> Result<VerificationReport> {
    let params = traj.params();
    require_expanding(params)?;
    let samples = traj.samples();
    if samples.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if let Some(s) = samples.iter().find(|s| !(s.drho < 0.0)) {
        return Err(Error::WrongRegime {
            expected: "R < lambda",
            detail: format!("rho' = {} at r = {}", s.drho, s.r),
        });
    }
    let mut report = VerificationReport::new("r-less-lambda");

    // Violation measured as -ρ''.
    let (w, at) = worst_by(samples, |s| -s.ddrho).unwrap();
    report.check("rho_second_positive", w < 0.0, w.max(0.0), Some(at), format!("min rho'' = {}", -w));
    rbar_check(&mut report, params);
    limit_check(&mut report, traj, params, true, tol);

    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for pair in samples.windows(2) {
        let drop = pair[0].drho - pair[1].drho;
        if drop > worst {
            worst = drop;
            at = Some(pair[1].r);
        }
    }
    report.check(
        "drho_increasing",
        worst < 0.0 || samples.len() < 2,
        worst.max(0.0),
        at,
        format!("largest step decrease {worst:e}"),
    );
    Ok(report)
}

/// Checks of the `R > λ` line statements on a trajectory with `ρ' > 0`.
pub fn verify_r_greater_lambda(traj: &Trajectory, tol: f64) -> Result<VerificationReport> {
    let params = traj.params();
    require_expanding(params)?;
    let samples = traj.samples();
    if samples.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if let Some(s) = samples.iter().find(|s| !(s.drho > 0.0)) {
        return Err(Error::WrongRegime {
            expected: "R > lambda",
            detail: format!("rho' = {} at r = {}", s.drho, s.r),
        });
    }
    let lambda = params.lambda();
    let opts = traj.options();
    let mut report = VerificationReport::new("r-greater-lambda");

    let (w, at) = worst_by(samples, |s| (s.drho + lambda).max(-s.drho)).unwrap();
    report.check(
        "curvature_between_lambda_and_zero",
        w < 0.0,
        w.max(0.0),
        Some(at),
        "0 < rho' < -lambda",
    );

    let (w, at) = worst_by(samples, |s| -s.ddrho).unwrap();
    report.check("rho_second_nonnegative", w <= 0.0, w.max(0.0), Some(at), format!("min rho'' = {}", -w));

    // Longest run of numerically vanishing ρ'' outside a converged tail.
    let calm = |s: &Sample| s.drho.abs() < opts.converge_eps && s.ddrho.abs() < opts.converge_eps;
    let flat = |s: &Sample| {
        let scale = params.a() * s.drho * s.drho
            + s.rho * s.rho * (s.drho.abs() + lambda.abs())
            + params.rbar().abs();
        let local = scale / (2.0 * params.m() * s.rho);
        s.ddrho.abs() < opts.root_tol * local
    };
    let converged_bwd = traj.termination_bwd() == Termination::Converged;
    let converged_fwd = traj.termination_fwd() == Termination::Converged;
    let mut longest = 0.0f64;
    let mut longest_at = None;
    let mut run_start: Option<f64> = None;
    for s in samples {
        let in_tail = (converged_bwd || converged_fwd) && calm(s);
        if flat(s) && !in_tail {
            let start = *run_start.get_or_insert(s.r);
            if s.r - start > longest {
                longest = s.r - start;
                longest_at = Some(start);
            }
        } else {
            run_start = None;
        }
    }
    report.check(
        "no_flat_interval",
        longest < opts.converge_window,
        longest,
        longest_at,
        format!("longest flat run {longest}"),
    );

    limit_check(&mut report, traj, params, false, tol);
    rbar_check(&mut report, params);
    Ok(report)
}

/// Outcome of the checks at a zero of `ρ''` on an `R > λ` trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Claim2Outcome {
    pub r: f64,
    pub dddrho: f64,
    pub dddrho_positive: bool,
    pub rho_above_sqrt: bool,
    /// Relative deviation of `ρ'` from the quadratic root.
    pub identity_error: f64,
    pub identity_holds: bool,
}

impl Claim2Outcome {
    pub fn passed(&self) -> bool {
        self.dddrho_positive && self.rho_above_sqrt && self.identity_holds
    }
}

/// `ρ'` solving `(n-1)(n-2)ρ'² + ρ²ρ' + λρ² = R̄` with the `+` root.
pub fn claim2_root(params: &SolitonParams, rho: f64) -> f64 {
    let a = params.a();
    let rho2 = rho * rho;
    let disc = rho2 * rho2 + 4.0 * a * (params.rbar() - params.lambda() * rho2);
    (-rho2 + disc.sqrt()) / (2.0 * a)
}

/// At a zero `r₀` of `ρ''` with `ρ' > 0`, `λ < 0` and `R̄ ≤ 0`: checks
/// `ρ'''(r₀) > 0`, `ρ(r₀) > √(R̄/λ)` and that `ρ'(r₀)` is the positive root
/// of the warp equation with `ρ'' = 0`.
pub fn check_claim2_event(params: &SolitonParams, event: &Event) -> Result<Claim2Outcome> {
    if event.kind != EventKind::DDRhoZero {
        return Err(Error::WrongEventKind(event.kind));
    }
    check_claim2_state(params, &event.state, event.ddrho)
}

pub(crate) fn check_claim2_state(
    params: &SolitonParams,
    s: &SolitonState,
    ddrho: f64,
) -> Result<Claim2Outcome> {
    if !params.is_expanding() || params.rbar() > 0.0 {
        return Err(Error::HypothesisNotMet(format!(
            "needs lambda < 0 and rbar <= 0, got lambda = {}, rbar = {}",
            params.lambda(),
            params.rbar()
        )));
    }
    if !(s.drho > 0.0) {
        return Err(Error::HypothesisNotMet(format!(
            "needs rho' > 0, got {} at r = {}",
            s.drho, s.r
        )));
    }
    let dddrho = rho_third(params, s.rho, s.drho, ddrho)?;
    let c = params.asymptote().unwrap_or(0.0);
    let root = claim2_root(params, s.rho);
    let identity_error = (s.drho - root).abs() / root.abs();
    Ok(Claim2Outcome {
        r: s.r,
        dddrho,
        dddrho_positive: dddrho > 0.0,
        rho_above_sqrt: s.rho > c,
        identity_error,
        identity_holds: identity_error <= CLAIM2_IDENTITY_TOL,
    })
}

/// How a trajectory in the `R̄ > 0` harness ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineFate {
    Tip,
    Blowup,
    SignChange,
    Survived,
    Failed,
}

fn line_fate(traj: &Trajectory) -> LineFate {
    let (f, b) = (traj.termination_fwd(), traj.termination_bwd());
    if f.is_failure() || b.is_failure() {
        LineFate::Failed
    } else if f == Termination::RhoZero || b == Termination::RhoZero {
        LineFate::Tip
    } else if f == Termination::Blowup || b == Termination::Blowup {
        LineFate::Blowup
    } else if traj.samples().iter().any(|s| !(s.drho > 0.0)) {
        LineFate::SignChange
    } else {
        LineFate::Survived
    }
}

/// No `R > λ` line exists over a fiber with `R̄ > 0`: every initial
/// condition must reach a tip, blow up or lose `ρ' > 0`. Survivors are
/// re-run with doubled `r_span` up to [`CLAIM1_SPAN_CAP`].
pub fn falsify_claim1(
    params: &SolitonParams,
    grid: &[(f64, f64)],
    opts: &IntegrationOptions,
) -> Result<VerificationReport> {
    require_expanding(params)?;
    if !(params.rbar() > 0.0) {
        return Err(Error::NotApplicable(format!(
            "needs rbar > 0, got {}",
            params.rbar()
        )));
    }
    if let Some(&(rho0, drho0)) = grid.iter().find(|(a, b)| !(*a > 0.0 && *b > 0.0)) {
        return Err(Error::NotApplicable(format!(
            "grid point ({rho0}, {drho0}) is outside rho > 0, rho' > 0"
        )));
    }
    opts.validate()?;

    let outcomes: Vec<Result<(LineFate, f64, Option<f64>)>> = grid
        .par_iter()
        .map(|&(rho0, drho0)| {
            let init = SolitonState::new(0.0, rho0, drho0);
            let mut span = opts.r_span;
            loop {
                let o = opts.with_r_span(span);
                let tr = integrate(params, init, Direction::Both, &o)?;
                let fate = line_fate(&tr);
                if fate != LineFate::Survived || span >= CLAIM1_SPAN_CAP {
                    let at = match fate {
                        LineFate::Tip | LineFate::Blowup => {
                            let fwd = matches!(
                                tr.termination_fwd(),
                                Termination::RhoZero | Termination::Blowup
                            );
                            tr.terminal_event(fwd).map(|e| e.r)
                        }
                        LineFate::SignChange => tr
                            .samples()
                            .iter()
                            .find(|s| !(s.drho > 0.0))
                            .map(|s| s.r),
                        _ => None,
                    };
                    return Ok((fate, span, at));
                }
                span = (2.0 * span).min(CLAIM1_SPAN_CAP);
            }
        })
        .collect();

    let mut report = VerificationReport::new("claim1");
    for (i, (&(rho0, drho0), outcome)) in grid.iter().zip(outcomes).enumerate() {
        let (fate, span, at) = outcome?;
        let passed = !matches!(fate, LineFate::Survived | LineFate::Failed);
        report.check(
            format!("ic{i}"),
            passed,
            if passed { 0.0 } else { 1.0 },
            at,
            format!("rho0 = {rho0}, drho0 = {drho0}: {fate:?} (r_span {span})"),
        );
    }
    Ok(report)
}

/// The two linear-bound statements for `ρ' < -ε` and `ρ' > ε`; each is
/// vacuous when its hypothesis fails on the samples.
pub fn epsilon_bounds_check(traj: &Trajectory, eps: f64) -> Result<VerificationReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
    }
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let origin = traj.origin();
    let bound = origin.rho / eps;
    let mut report = VerificationReport::new("epsilon");

    let mut side = |name: &str, forward: bool| {
        let (hyp, term) = if forward {
            (
                traj.termination_fwd() != Termination::NotIntegrated
                    && traj.forward_samples().all(|s| s.drho < -eps),
                traj.termination_fwd(),
            )
        } else {
            (
                traj.termination_bwd() != Termination::NotIntegrated
                    && traj.backward_samples().all(|s| s.drho > eps),
                traj.termination_bwd(),
            )
        };
        if !hyp {
            report.check(name, true, 0.0, None, "hypothesis does not hold");
            return;
        }
        let ev = traj.terminal_event(forward).filter(|_| term == Termination::RhoZero);
        match ev {
            Some(e) => {
                let dist = (e.r - origin.r).abs();
                report.check(
                    name,
                    dist <= bound,
                    (dist - bound).max(0.0),
                    Some(e.r),
                    format!("rho = 0 at distance {dist}, bound {bound}"),
                );
            }
            None => report.check(
                name,
                false,
                f64::INFINITY,
                None,
                format!("run ended {} without reaching rho = 0", term.as_str()),
            ),
        }
    };
    side("forward_decay", true);
    side("backward_tip", false);
    Ok(report)
}
