//! Adaptive Dormand–Prince integration of `(ρ, ρ')` in both directions of
//! `r`, with dense output, event location and termination diagnosis.
//!
//! Backward runs integrate in `s = -r` with the state `(ρ, -ρ')`, so the
//! same stepper serves both directions.

mod dopri;
mod root;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{rho_second, SolitonParams, SolitonState};
use dopri::{try_step, Controller, Vec2};

pub use root::{locate_root, MAX_BISECTIONS};
pub use trajectory::{Event, EventKind, Sample, Termination, Trajectory};
pub(crate) use trajectory::{Leg, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Half-width of the window around the start point.
    pub r_span: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub blowup_threshold: f64,
    pub converge_eps: f64,
    /// Length in `r` over which `|ρ'|, |ρ''| < converge_eps` must hold.
    pub converge_window: f64,
    pub root_tol: f64,
    /// ρ at which a run is treated as having reached a tip.
    pub rho_floor: f64,
    pub max_steps: usize,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            rtol: 1e-10,
            atol: 1e-12,
            r_span: 100.0,
            h_init: 1e-3,
            h_max: 0.5,
            blowup_threshold: 1e8,
            converge_eps: 1e-8,
            converge_window: 5.0,
            root_tol: 1e-12,
            rho_floor: 1e-8,
            max_steps: 1_000_000,
        }
    }
}

impl IntegrationOptions {
    pub fn with_r_span(self, r_span: f64) -> Self {
        IntegrationOptions { r_span, ..self }
    }

    pub fn with_tolerances(self, rtol: f64, atol: f64) -> Self {
        IntegrationOptions { rtol, atol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("r_span", self.r_span),
            ("h_init", self.h_init),
            ("h_max", self.h_max),
            ("blowup_threshold", self.blowup_threshold),
            ("converge_eps", self.converge_eps),
            ("converge_window", self.converge_window),
            ("root_tol", self.root_tol),
            ("rho_floor", self.rho_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidOptions(format!("{name} must be positive, got {v}")));
            }
        }
        if self.h_init > self.h_max {
            return Err(Error::InvalidOptions(format!(
                "h_init ({}) exceeds h_max ({})",
                self.h_init, self.h_max
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidOptions("max_steps must be nonzero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
    Both,
}

/// Per-leg knobs that are not user options.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LegSetup {
    pub sign: f64,
    pub t_max: f64,
    pub target_rho: Option<f64>,
    pub detect_converge: bool,
    /// Arm convergence detection from the first sample on.
    pub converge_armed: bool,
    /// Stop at `rho_floor`.
    pub floor: bool,
}

impl LegSetup {
    pub fn plain(sign: f64, opts: &IntegrationOptions) -> Self {
        LegSetup {
            sign,
            t_max: opts.r_span,
            target_rho: None,
            detect_converge: true,
            converge_armed: false,
            floor: true,
        }
    }
}

pub(crate) struct LegOutcome {
    pub leg: Leg,
    pub hit_target: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Monitor {
    Floor,
    Target,
    DRho,
    DDRho,
    DRhoPlusLambda,
}

const MONITORS: [Monitor; 5] = [
    Monitor::Floor,
    Monitor::Target,
    Monitor::DRho,
    Monitor::DDRho,
    Monitor::DRhoPlusLambda,
];

struct Engine<'a> {
    params: &'a SolitonParams,
    opts: &'a IntegrationOptions,
    setup: LegSetup,
}

impl Engine<'_> {
    fn rhs(&self, y: &Vec2) -> Option<Vec2> {
        if !(y[0] > 0.0) || !y[1].is_finite() {
            return None;
        }
        let dd = rho_second(self.params, y[0], self.setup.sign * y[1]).ok()?;
        dd.is_finite().then_some([y[1], dd])
    }

    fn state(&self, t: f64, r0: f64, y: &Vec2) -> SolitonState {
        SolitonState::new(r0 + self.setup.sign * t, y[0], self.setup.sign * y[1])
    }

    fn monitor(&self, m: Monitor, y: &Vec2) -> Option<f64> {
        let drho = self.setup.sign * y[1];
        match m {
            Monitor::Floor => self.setup.floor.then(|| y[0] - self.opts.rho_floor),
            Monitor::Target => self.setup.target_rho.map(|v| y[0] - v),
            Monitor::DRho => Some(drho),
            Monitor::DDRho => {
                if y[0] > 0.0 {
                    rho_second(self.params, y[0], drho).ok()
                } else {
                    None
                }
            }
            Monitor::DRhoPlusLambda => Some(drho + self.params.lambda()),
        }
    }

    fn sample(&self, s: SolitonState) -> Sample {
        Sample {
            r: s.r,
            rho: s.rho,
            drho: s.drho,
            ddrho: rho_second(self.params, s.rho, s.drho).unwrap_or(f64::NAN),
        }
    }

    fn run(&self, init: SolitonState) -> LegOutcome {
        let opts = self.opts;
        let sign = self.setup.sign;
        let r0 = init.r;
        let t_max = self.setup.t_max;
        let h_min = 1e-12 * opts.r_span;
        let rho_small = 1e-3 * init.rho.max(1.0);

        let mut y: Vec2 = [init.rho, sign * init.drho];
        let mut t = 0.0;
        let mut samples = vec![self.sample(init)];
        let mut segments = Vec::new();
        let mut events = Vec::new();
        let mut ctl = Controller::new();
        let mut h = opts.h_init.min(opts.h_max).min(t_max);
        let mut steps = 0usize;
        let mut converge_armed = self.setup.converge_armed;
        let mut calm_since: Option<f64> = None;

        let finish = |samples, segments, events, termination| LegOutcome {
            leg: Leg {
                samples,
                segments,
                events,
                termination,
            },
            hit_target: false,
        };

        let mut k = match self.rhs(&y) {
            Some(k) => k,
            None => return finish(samples, segments, events, Termination::StepUnderflow),
        };

        loop {
            if steps >= opts.max_steps {
                return finish(samples, segments, events, Termination::MaxSteps);
            }
            let last = t + h >= t_max;
            if last {
                h = t_max - t;
            }
            if h < h_min && !last {
                let s = self.state(t, r0, &y);
                if self.setup.floor && y[0] < rho_small && y[1] < 0.0 {
                    events.push(Event::at(EventKind::RhoZero, self.params, s));
                    return finish(samples, segments, events, Termination::RhoZero);
                }
                return finish(samples, segments, events, Termination::StepUnderflow);
            }
            steps += 1;

            let out = match try_step(&|y: &Vec2| self.rhs(y), &y, &k, h, opts.rtol, opts.atol) {
                Some(out) => out,
                None => {
                    h *= 0.25;
                    continue;
                }
            };
            if out.err > 1.0 {
                h = ctl.reject(h, out.err).min(opts.h_max);
                continue;
            }

            let seg = Segment {
                r_start: r0 + sign * t,
                h_r: sign * h,
                theta_max: 1.0,
                sign,
                dense: out.dense,
            };

            // Sign changes of the monitors across the step.
            let mut hits: Vec<(f64, Monitor)> = Vec::new();
            for m in MONITORS {
                let (Some(g0), Some(g1)) = (self.monitor(m, &y), self.monitor(m, &out.y_new)) else {
                    continue;
                };
                let crossed = g0 * g1 < 0.0 || (g0 != 0.0 && g1 == 0.0);
                if !crossed {
                    continue;
                }
                let g = |theta: f64| {
                    self.monitor(m, &out.dense.eval(theta)).unwrap_or(f64::NAN)
                };
                if let Ok(theta) = locate_root(g, (0.0, 1.0), opts.root_tol) {
                    hits.push((theta, m));
                }
            }
            hits.sort_by(|a, b| a.0.total_cmp(&b.0));

            let terminal = hits
                .iter()
                .find(|(_, m)| matches!(m, Monitor::Floor | Monitor::Target))
                .copied();
            for &(theta, m) in &hits {
                if let Some((tt, _)) = terminal {
                    if theta > tt {
                        break;
                    }
                }
                let kind = match m {
                    Monitor::DRho => EventKind::DRhoZero,
                    Monitor::DDRho => EventKind::DDRhoZero,
                    Monitor::DRhoPlusLambda => EventKind::DRhoPlusLambdaZero,
                    Monitor::Floor | Monitor::Target => continue,
                };
                let s = self.state(t + theta * h, r0, &out.dense.eval(theta));
                events.push(Event::at(kind, self.params, s));
            }

            if let Some((theta, m)) = terminal {
                let yt = out.dense.eval(theta);
                let s = self.state(t + theta * h, r0, &yt);
                segments.push(Segment {
                    theta_max: theta,
                    ..seg
                });
                samples.push(self.sample(s));
                if m == Monitor::Floor {
                    events.push(Event::at(EventKind::RhoZero, self.params, s));
                    return finish(samples, segments, events, Termination::RhoZero);
                }
                let mut o = finish(samples, segments, events, Termination::WindowEnd);
                o.hit_target = true;
                return o;
            }

            t = if last { t_max } else { t + h };
            y = out.y_new;
            k = out.k_new;
            segments.push(seg);
            let s = self.state(t, r0, &y);
            let smp = self.sample(s);
            samples.push(smp);

            if y[0].abs() > opts.blowup_threshold || y[1].abs() > opts.blowup_threshold {
                events.push(Event::at(EventKind::Blowup, self.params, s));
                return finish(samples, segments, events, Termination::Blowup);
            }

            if self.setup.detect_converge {
                let calm = smp.drho.abs() < opts.converge_eps && smp.ddrho.abs() < opts.converge_eps;
                if !calm {
                    converge_armed = true;
                    calm_since = None;
                } else if converge_armed {
                    let since = *calm_since.get_or_insert(t);
                    if t - since >= opts.converge_window {
                        events.push(Event::at(EventKind::Converged, self.params, s));
                        return finish(samples, segments, events, Termination::Converged);
                    }
                }
            }

            if last {
                events.push(Event::at(EventKind::WindowEnd, self.params, s));
                return finish(samples, segments, events, Termination::WindowEnd);
            }

            h = ctl.accept(h, out.err).min(opts.h_max);
        }
    }
}

pub(crate) fn run_leg(
    params: &SolitonParams,
    init: SolitonState,
    opts: &IntegrationOptions,
    setup: LegSetup,
) -> LegOutcome {
    Engine {
        params,
        opts,
        setup,
    }
    .run(init)
}

fn check_start(init: &SolitonState, opts: &IntegrationOptions) -> Result<()> {
    opts.validate()?;
    if !(init.rho > 0.0) || !init.rho.is_finite() {
        return Err(Error::Domain {
            what: "integrate",
            rho: init.rho,
        });
    }
    if !init.r.is_finite() || !init.drho.is_finite() {
        return Err(Error::InvalidParams(format!(
            "initial state must be finite, got r = {}, drho = {}",
            init.r, init.drho
        )));
    }
    Ok(())
}

/// Integrates the warp equation from `init`.
///
/// Integration failures (step underflow, step budget) are reported through
/// the trajectory's termination reasons; only invalid input is an error.
pub fn integrate(
    params: &SolitonParams,
    init: SolitonState,
    direction: Direction,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    check_start(&init, opts)?;
    let leg = |sign: f64| run_leg(params, init, opts, LegSetup::plain(sign, opts)).leg;
    let bwd = matches!(direction, Direction::Backward | Direction::Both).then(|| leg(-1.0));
    let fwd = matches!(direction, Direction::Forward | Direction::Both).then(|| leg(1.0));
    Ok(Trajectory::assemble(*params, *opts, init, bwd, fwd))
}

/// Default distance from the tip for [`sphere_tip_initialize`].
pub const TIP_R0: f64 = 1e-4;

/// Taylor start `ρ = s r + c₃ r³` near a smooth tip, where
/// `(n-1)(n-2) s² = R̄` and `c₃ = -s(s + λ) / (6n(n-1))`. The truncation
/// error is `O(r0⁵)`.
///
/// Perturbations of the tip solution grow like `r^{-(n-2)}` toward `r = 0`,
/// so the cubic term matters for the backward run when `n > 3`.
pub fn sphere_tip_initialize(params: &SolitonParams, r0: f64) -> Result<SolitonState> {
    if !(params.rbar() > 0.0) {
        return Err(Error::NoTip(params.rbar()));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::InvalidParams(format!("tip offset must be positive, got {r0}")));
    }
    let s = (params.rbar() / params.a()).sqrt();
    let n = f64::from(params.n());
    let c3 = -s * (s + params.lambda()) / (6.0 * n * params.m());
    let r2 = r0 * r0;
    Ok(SolitonState::new(r0, s * r0 + c3 * r2 * r0, s + 3.0 * c3 * r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::eq1_residual;

    fn p(n: u32, lambda: f64, rbar: f64) -> SolitonParams {
        SolitonParams::expanding(n, lambda, rbar).unwrap()
    }

    fn opts(r_span: f64) -> IntegrationOptions {
        IntegrationOptions::default().with_r_span(r_span)
    }

    #[test]
    fn options_validate() {
        assert!(IntegrationOptions::default().validate().is_ok());
        let bad = IntegrationOptions {
            h_init: 1.0,
            h_max: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(opts(0.0).validate().is_err());
        assert!(opts(f64::NAN).validate().is_err());
    }

    #[test]
    fn constant_solution_stays_put() {
        let params = p(3, -1.0, -1.0);
        let tr = integrate(
            &params,
            SolitonState::new(0.0, 1.0, 0.0),
            Direction::Both,
            &opts(50.0),
        )
        .unwrap();
        assert_eq!(tr.termination_fwd(), Termination::WindowEnd);
        assert_eq!(tr.termination_bwd(), Termination::WindowEnd);
        assert_eq!(tr.r_range(), Some((-50.0, 50.0)));
        for s in tr.samples() {
            assert!((s.rho - 1.0).abs() <= 1e-8);
            assert_eq!(s.drho + params.lambda(), -1.0);
        }
    }

    #[test]
    fn tip_start() {
        let params = p(3, -1.0, 2.0);
        let s = sphere_tip_initialize(&params, 1e-4).unwrap();
        assert_eq!((s.r, s.rho, s.drho), (1e-4, 1e-4, 1.0));
        assert_eq!(sphere_tip_initialize(&p(4, -1.0, 6.0), 1e-4).unwrap().drho, 1.0);
        assert!(matches!(
            sphere_tip_initialize(&p(3, -1.0, -1.0), 1e-4),
            Err(Error::NoTip(_))
        ));
    }

    #[test]
    fn tip_series_solves_the_equation() {
        // The residual of the cubic start is O(r0⁴) against O(r0²) terms.
        let params = p(5, -2.0, 3.0);
        for r0 in [1e-2, 1e-3] {
            let s = sphere_tip_initialize(&params, r0).unwrap();
            let c3 = (s.rho - s.drho * r0) / (-2.0 * r0 * r0 * r0);
            let dd = 6.0 * c3 * r0;
            let res = eq1_residual(&params, s.rho, s.drho, dd).unwrap();
            assert!(res.value.abs() < 10.0 * r0.powi(4), "r0={r0}: {}", res.value);
        }
    }

    #[test]
    fn tip_trajectory_closes_backward() {
        let params = p(3, -1.0, 2.0);
        let init = sphere_tip_initialize(&params, TIP_R0).unwrap();
        let tr = integrate(&params, init, Direction::Both, &opts(20.0)).unwrap();
        assert_eq!(tr.termination_bwd(), Termination::RhoZero);
        let tip = tr.terminal_event(false).unwrap();
        assert_eq!(tip.kind, EventKind::RhoZero);
        assert!(tip.r.abs() < 1e-6, "tip at {}", tip.r);
        assert!((tip.state.drho - 1.0).abs() < 1e-6);
        let last = tr.samples().last().unwrap();
        assert!(last.rho > 10.0);
    }

    #[test]
    fn literal_line_seed_is_not_global() {
        // Off the saddle's stable manifold the backward run leaves the
        // regime instead of converging.
        let params = p(3, -1.0, -1.0);
        let tr = integrate(
            &params,
            SolitonState::new(0.0, 2.0, 0.5),
            Direction::Backward,
            &opts(200.0),
        )
        .unwrap();
        assert_ne!(tr.termination_bwd(), Termination::Converged);
        assert!(matches!(
            tr.termination_bwd(),
            Termination::RhoZero | Termination::Blowup
        ));
    }

    #[test]
    fn deterministic() {
        let params = p(4, -1.0, -1.0);
        let init = SolitonState::new(0.0, 2.0, 0.3);
        let a = integrate(&params, init, Direction::Both, &opts(30.0)).unwrap();
        let b = integrate(&params, init, Direction::Both, &opts(30.0)).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_eq!(a.events(), b.events());
    }

    #[test]
    fn samples_sorted_and_on_the_equation() {
        let params = p(3, -1.0, 0.0);
        let o = opts(10.0);
        let tr = integrate(&params, SolitonState::new(0.0, 1.0, 0.3), Direction::Both, &o).unwrap();
        for w in tr.samples().windows(2) {
            assert!(w[0].r < w[1].r);
        }
        for w in tr.events().windows(2) {
            assert!(w[0].r <= w[1].r);
        }
        for s in tr.samples() {
            let res = eq1_residual(&params, s.rho, s.drho, s.ddrho).unwrap();
            assert!(res.value.abs() <= 10.0 * (o.rtol * res.scale + o.atol));
        }
    }

    #[test]
    fn terminal_events_end_their_direction() {
        let params = p(3, -1.0, 2.0);
        let init = SolitonState::new(0.0, 1.0, 0.5);
        let tr = integrate(&params, init, Direction::Both, &opts(50.0)).unwrap();
        let (lo, hi) = tr.r_range().unwrap();
        for e in tr.events() {
            if e.kind.is_terminal() {
                assert!(e.r == lo || e.r == hi, "{:?} at {}", e.kind, e.r);
            }
        }
    }

    #[test]
    fn tolerance_convergence() {
        let cases = [
            (p(3, -1.0, -1.0), SolitonState::new(0.0, 1.0, 0.0)),
            (p(3, -1.0, -1.0), SolitonState::new(0.0, 3.0, -0.5)),
            (p(3, -1.0, -1.0), SolitonState::new(0.0, 2.0, 0.5)),
        ];
        for (params, init) in cases {
            let end = |rtol: f64| {
                let o = opts(2.0).with_tolerances(rtol, rtol * 1e-2);
                let tr = integrate(&params, init, Direction::Forward, &o).unwrap();
                *tr.samples().last().unwrap()
            };
            let reference = end(1e-12);
            let mut prev = f64::INFINITY;
            for rtol in [1e-6, 5e-7, 2.5e-7, 1.25e-7] {
                let s = end(rtol);
                let dev = (s.rho - reference.rho).abs() + (s.drho - reference.drho).abs();
                assert!(dev <= prev, "rtol {rtol}: {dev} > {prev}");
                prev = dev;
            }
        }
    }

    #[test]
    fn forward_then_backward_returns() {
        let cases = [
            (p(3, -1.0, -1.0), SolitonState::new(0.0, 1.0, 0.0), 10.0),
            (p(3, -1.0, -1.0), SolitonState::new(0.0, 3.0, -0.5), 2.0),
            (p(4, -1.0, 0.0), SolitonState::new(0.0, 1.0, 0.3), 2.0),
        ];
        for (params, init, span) in cases {
            let o = opts(span);
            let fwd = integrate(&params, init, Direction::Forward, &o).unwrap();
            let end = fwd.samples().last().unwrap().state();
            let back = integrate(&params, end, Direction::Backward, &o).unwrap();
            let got = back.samples().first().unwrap();
            assert!((got.r - init.r).abs() < 1e-12);
            let scale = init.rho.abs().max(init.drho.abs()).max(1.0);
            let tol = 100.0 * (o.rtol * scale + o.atol);
            assert!((got.rho - init.rho).abs() <= tol, "{got:?}");
            assert!((got.drho - init.drho).abs() <= tol, "{got:?}");
        }
    }

    #[test]
    fn dense_output_matches_samples() {
        let params = p(4, -2.0, -1.0);
        let tr = integrate(
            &params,
            SolitonState::new(0.0, 2.0, -0.2),
            Direction::Both,
            &opts(5.0),
        )
        .unwrap();
        for s in tr.samples() {
            let d = tr.state_at(s.r).unwrap();
            assert!((d.rho - s.rho).abs() <= 1e-12 * s.rho.abs().max(1.0));
            assert!((d.drho - s.drho).abs() <= 1e-12 * s.drho.abs().max(1.0));
        }
        assert!(tr.state_at(100.0).is_none());
    }

    #[test]
    fn rejects_bad_start() {
        let params = p(3, -1.0, -1.0);
        let o = IntegrationOptions::default();
        assert!(integrate(&params, SolitonState::new(0.0, 0.0, 1.0), Direction::Both, &o).is_err());
        assert!(integrate(&params, SolitonState::new(0.0, -1.0, 1.0), Direction::Both, &o).is_err());
    }
}
