use serde::{Deserialize, Serialize};

use super::dopri::Dense;
use super::IntegrationOptions;
use crate::ode::{rho_second, rho_third, SolitonParams, SolitonState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// ρ reached the tip floor.
    RhoZero,
    DRhoZero,
    DDRhoZero,
    /// ρ' = -λ, i.e. R = 0.
    DRhoPlusLambdaZero,
    Blowup,
    Converged,
    WindowEnd,
}

impl EventKind {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            EventKind::RhoZero | EventKind::Blowup | EventKind::Converged | EventKind::WindowEnd
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub r: f64,
    pub state: SolitonState,
    pub ddrho: f64,
    pub dddrho: f64,
}

impl Event {
    pub(crate) fn at(kind: EventKind, params: &SolitonParams, state: SolitonState) -> Self {
        let ddrho = rho_second(params, state.rho, state.drho).unwrap_or(f64::NAN);
        let dddrho = rho_third(params, state.rho, state.drho, ddrho).unwrap_or(f64::NAN);
        Event {
            kind,
            r: state.r,
            state,
            ddrho,
            dddrho,
        }
    }
}

/// Why integration stopped in one direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    RhoZero,
    Blowup,
    Converged,
    WindowEnd,
    StepUnderflow,
    MaxSteps,
    NotIntegrated,
}

impl Termination {
    pub fn is_failure(self) -> bool {
        matches!(self, Termination::StepUnderflow | Termination::MaxSteps)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Termination::RhoZero => "RhoZero",
            Termination::Blowup => "Blowup",
            Termination::Converged => "Converged",
            Termination::WindowEnd => "WindowEnd",
            Termination::StepUnderflow => "StepUnderflow",
            Termination::MaxSteps => "MaxSteps",
            Termination::NotIntegrated => "NotIntegrated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub r: f64,
    pub rho: f64,
    pub drho: f64,
    pub ddrho: f64,
}

impl Sample {
    pub fn state(&self) -> SolitonState {
        SolitonState::new(self.r, self.rho, self.drho)
    }
}

/// Dense output of one accepted step, mapped back to `r`.
///
/// The polynomial lives in the integration variable `t` with
/// `r = r_start + h_r θ`, `ρ = y₀`, `ρ' = sign · y₁`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    pub r_start: f64,
    pub h_r: f64,
    pub theta_max: f64,
    pub sign: f64,
    pub dense: Dense,
}

impl Segment {
    fn lo(&self) -> f64 {
        self.r_start.min(self.r_start + self.h_r * self.theta_max)
    }

    fn hi(&self) -> f64 {
        self.r_start.max(self.r_start + self.h_r * self.theta_max)
    }

    fn theta(&self, r: f64) -> f64 {
        ((r - self.r_start) / self.h_r).clamp(0.0, self.theta_max)
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        let y = self.dense.eval(self.theta(r));
        (y[0], self.sign * y[1])
    }

    /// `(ρ', ρ'')` from differentiating the interpolant.
    pub fn eval_slope(&self, r: f64) -> (f64, f64) {
        let d = self.dense.eval_dtheta(self.theta(r));
        (d[0] / self.h_r, self.sign * d[1] / self.h_r)
    }

    pub fn shifted(mut self, dr: f64) -> Self {
        self.r_start += dr;
        self
    }
}

/// Output of integrating in one direction from the origin.
#[derive(Debug, Clone)]
pub(crate) struct Leg {
    pub samples: Vec<Sample>,
    pub segments: Vec<Segment>,
    pub events: Vec<Event>,
    pub termination: Termination,
}

impl Leg {
    pub fn shifted(mut self, dr: f64) -> Self {
        for s in &mut self.samples {
            s.r += dr;
        }
        for e in &mut self.events {
            e.r += dr;
            e.state.r += dr;
        }
        self.segments = self.segments.into_iter().map(|s| s.shifted(dr)).collect();
        self
    }
}

/// Sampled solution through an origin state, with dense output, detected
/// events and one termination reason per direction.
#[derive(Debug, Clone)]
pub struct Trajectory {
    params: SolitonParams,
    opts: IntegrationOptions,
    origin: SolitonState,
    samples: Vec<Sample>,
    events: Vec<Event>,
    termination_fwd: Termination,
    termination_bwd: Termination,
    segments: Vec<Segment>,
}

impl Trajectory {
    pub(crate) fn assemble(
        params: SolitonParams,
        opts: IntegrationOptions,
        origin: SolitonState,
        backward: Option<Leg>,
        forward: Option<Leg>,
    ) -> Self {
        let termination_bwd = backward
            .as_ref()
            .map_or(Termination::NotIntegrated, |l| l.termination);
        let termination_fwd = forward
            .as_ref()
            .map_or(Termination::NotIntegrated, |l| l.termination);

        let mut samples = Vec::new();
        let mut events = Vec::new();
        let mut segments = Vec::new();
        for leg in backward.into_iter().chain(forward) {
            samples.extend(leg.samples);
            events.extend(leg.events);
            segments.extend(leg.segments);
        }
        samples.sort_by(|a, b| a.r.total_cmp(&b.r));
        samples.dedup_by(|a, b| a.r == b.r);
        events.sort_by(|a, b| a.r.total_cmp(&b.r));
        segments.sort_by(|a, b| a.lo().total_cmp(&b.lo()));

        Trajectory {
            params,
            opts,
            origin,
            samples,
            events,
            termination_fwd,
            termination_bwd,
            segments,
        }
    }

    /// Trajectory from explicit samples, with a piecewise-constant dense
    /// representation. Only meant for closed-form constant solutions.
    pub(crate) fn from_constant(
        params: SolitonParams,
        opts: IntegrationOptions,
        origin: SolitonState,
        samples: Vec<Sample>,
    ) -> Self {
        let segments = samples
            .windows(2)
            .map(|w| Segment {
                r_start: w[0].r,
                h_r: w[1].r - w[0].r,
                theta_max: 1.0,
                sign: 1.0,
                dense: Dense::constant([w[0].rho, w[0].drho]),
            })
            .collect();
        let events = [samples.first(), samples.last()]
            .into_iter()
            .flatten()
            .map(|s| Event::at(EventKind::WindowEnd, &params, s.state()))
            .collect();
        Trajectory {
            params,
            opts,
            origin,
            samples,
            events,
            termination_fwd: Termination::WindowEnd,
            termination_bwd: Termination::WindowEnd,
            segments,
        }
    }

    pub fn params(&self) -> &SolitonParams {
        &self.params
    }

    pub fn options(&self) -> &IntegrationOptions {
        &self.opts
    }

    /// The state integration started from.
    pub fn origin(&self) -> SolitonState {
        self.origin
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn termination_fwd(&self) -> Termination {
        self.termination_fwd
    }

    pub fn termination_bwd(&self) -> Termination {
        self.termination_bwd
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn r_range(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.r, self.samples.last()?.r))
    }

    pub fn forward_samples(&self) -> impl Iterator<Item = &Sample> {
        let r0 = self.origin.r;
        self.samples.iter().filter(move |s| s.r >= r0)
    }

    pub fn backward_samples(&self) -> impl Iterator<Item = &Sample> {
        let r0 = self.origin.r;
        self.samples.iter().filter(move |s| s.r <= r0)
    }

    /// The terminal event on the forward (`true`) or backward side.
    pub fn terminal_event(&self, forward: bool) -> Option<&Event> {
        let r0 = self.origin.r;
        let pick = |e: &&Event| e.kind.is_terminal() && ((e.r >= r0) == forward || e.r == r0);
        if forward {
            self.events.iter().rev().find(pick)
        } else {
            self.events.iter().find(pick)
        }
    }

    /// Limit value of ρ read off a `Converged` end.
    pub fn asymptote(&self, forward: bool) -> Option<f64> {
        let term = if forward {
            self.termination_fwd
        } else {
            self.termination_bwd
        };
        if term != Termination::Converged {
            return None;
        }
        self.terminal_event(forward)
            .filter(|e| e.kind == EventKind::Converged)
            .map(|e| e.state.rho)
    }

    fn segment_for(&self, r: f64) -> Option<&Segment> {
        let idx = self.segments.partition_point(|s| s.hi() < r);
        self.segments.get(idx).filter(|s| s.lo() <= r)
    }

    /// Dense-output state at `r`.
    pub fn state_at(&self, r: f64) -> Option<SolitonState> {
        let (rho, drho) = self.segment_for(r)?.eval(r);
        Some(SolitonState::new(r, rho, drho))
    }

    /// `(ρ', ρ'')` from the derivative of the interpolant at `r`, independent
    /// of the right-hand side.
    pub fn interpolant_slope(&self, r: f64) -> Option<(f64, f64)> {
        Some(self.segment_for(r)?.eval_slope(r))
    }
}
