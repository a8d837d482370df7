//! Orbits asymptotic to the constant warp `c = √(R̄/λ)`.
//!
//! For `λ < 0`, `R̄ ≤ 0` the constant solution is a saddle of the `(ρ, ρ')`
//! system, so a single orbit through a given `ρ0 > c` tends to `c` as
//! `r → -∞` (with `ρ' > 0`) and a single one tends to it as `r → +∞`
//! (with `ρ' < 0`). Shooting on `ρ'(0)` cannot resolve these in double
//! precision; instead the orbit is grown out of the saddle along its
//! eigendirection and stopped where `ρ = ρ0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{
    run_leg, Event, EventKind, IntegrationOptions, Leg, LegSetup, Termination, Trajectory,
};
use crate::ode::{SolitonParams, SolitonState};

/// The end of the line on which the orbit approaches the constant warp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AsymptoticEnd {
    /// `ρ ↘ c` as `r → -∞`; `ρ' > 0`.
    Backward,
    /// `ρ ↘ c` as `r → +∞`; `ρ' < 0`.
    Forward,
}

/// How far the tail may extend, in units of `r_span`, and at least.
const TAIL_SPANS: f64 = 20.0;
const TAIL_MIN: f64 = 2000.0;

/// Eigenvalues `(μ₋, μ₊)` of the linearisation at the constant warp.
///
/// For `c > 0` they solve `μ² + c μ / (2(n-1)) + λ/(n-1) = 0`. For `R̄ = 0`
/// the relevant rates are those of `ρ'/ρ` near `ρ = 0`, namely
/// `±√(-λ / (n(n-1)))`.
pub fn saddle_rates(params: &SolitonParams) -> Result<(f64, f64)> {
    let c = saddle_value(params)?;
    let m = params.m();
    if c == 0.0 {
        let mu = (-params.lambda() / (f64::from(params.n()) * m)).sqrt();
        return Ok((-mu, mu));
    }
    let b = c / (2.0 * m);
    let disc = (b * b - 4.0 * params.lambda() / m).sqrt();
    Ok(((-b - disc) / 2.0, (-b + disc) / 2.0))
}

fn saddle_value(params: &SolitonParams) -> Result<f64> {
    if !params.is_expanding() {
        return Err(Error::Separatrix(format!(
            "needs lambda < 0, got {}",
            params.lambda()
        )));
    }
    if params.rbar() > 0.0 {
        return Err(Error::Separatrix(format!(
            "no constant warp for rbar = {} > 0",
            params.rbar()
        )));
    }
    Ok(params.asymptote().unwrap_or(0.0))
}

/// The orbit through `ρ(0) = rho0` asymptotic to `√(R̄/λ)` at `end`.
///
/// The tail toward the saddle ends `Converged` when its last
/// `converge_window` is calm; the other direction is integrated as usual.
pub fn separatrix(
    params: &SolitonParams,
    rho0: f64,
    end: AsymptoticEnd,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let c = saddle_value(params)?;
    if !(rho0 > c) || !rho0.is_finite() {
        return Err(Error::Separatrix(format!(
            "rho0 = {rho0} must exceed the constant warp {c}"
        )));
    }
    let (mu_minus, mu_plus) = saddle_rates(params)?;
    let (mu, tail_sign) = match end {
        AsymptoticEnd::Backward => (mu_plus, 1.0),
        AsymptoticEnd::Forward => (mu_minus, -1.0),
    };

    let delta = 1e-3 * opts.converge_eps * c.max(1.0);
    let start = if c == 0.0 {
        // ρ'/ρ = ±μ - ρ / (2(n² - 1)) + O(ρ²)
        let n = f64::from(params.n());
        let w = mu - delta / (2.0 * (n * n - 1.0));
        SolitonState::new(0.0, delta, w * delta)
    } else {
        SolitonState::new(0.0, c + delta, mu * delta)
    };

    let setup = LegSetup {
        sign: tail_sign,
        t_max: (TAIL_SPANS * opts.r_span).max(TAIL_MIN),
        target_rho: Some(rho0),
        detect_converge: false,
        converge_armed: false,
        floor: c > 0.0,
    };
    let grown = run_leg(params, start, opts, setup);
    if !grown.hit_target {
        return Err(Error::Unreached {
            rho0,
            termination: grown.leg.termination.as_str(),
        });
    }
    let origin_r = grown.leg.samples.last().map_or(0.0, |s| s.r);
    let mut tail = grown.leg.shifted(-origin_r);
    let origin = tail.samples.last().expect("leg has samples").state();

    tail.termination = tail_termination(&tail, opts, tail_sign);
    if let Some(far) = tail.samples.first() {
        let kind = match tail.termination {
            Termination::Converged => EventKind::Converged,
            _ => EventKind::WindowEnd,
        };
        tail.events.push(Event::at(kind, params, far.state()));
    }

    let other = run_leg(params, origin, opts, LegSetup::plain(tail_sign, opts)).leg;
    let (bwd, fwd) = match end {
        AsymptoticEnd::Backward => (tail, other),
        AsymptoticEnd::Forward => (other, tail),
    };
    Ok(Trajectory::assemble(*params, *opts, origin, Some(bwd), Some(fwd)))
}

fn tail_termination(tail: &Leg, opts: &IntegrationOptions, tail_sign: f64) -> Termination {
    let Some(far) = tail.samples.first() else {
        return Termination::WindowEnd;
    };
    // Samples run from the saddle outward; measure calm from that end.
    let calm_len = tail
        .samples
        .iter()
        .take_while(|s| s.drho.abs() < opts.converge_eps && s.ddrho.abs() < opts.converge_eps)
        .last()
        .map_or(0.0, |s| tail_sign * (s.r - far.r));
    if calm_len >= opts.converge_window {
        Termination::Converged
    } else {
        Termination::WindowEnd
    }
}
