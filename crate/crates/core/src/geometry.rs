//! Scalar curvature, potential and the constant-warp example.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{IntegrationOptions, Sample, Trajectory};
use crate::ode::{SolitonParams, SolitonState};

/// `R = ρ' + λ`, the radial component of `∇∇F = (R - λ)g`.
pub fn scalar_curvature_direct(drho: f64, lambda: f64) -> f64 {
    drho + lambda
}

/// `R` from the warped-product identity
/// `ρ²R = R̄ - (n-1)(n-2)ρ'² - 2(n-1)ρρ''`.
pub fn scalar_curvature_warped(params: &SolitonParams, rho: f64, drho: f64, ddrho: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Domain {
            what: "scalar_curvature_warped",
            rho,
        });
    }
    let num = params.rbar() - params.a() * drho * drho - 2.0 * params.m() * rho * ddrho;
    Ok(num / (rho * rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySample {
    pub r: f64,
    pub warp: f64,
    pub potential: f64,
    pub r_direct: f64,
    pub r_warped: f64,
}

/// `∫ ρ` over one step, trapezoid plus the endpoint-slope correction. Exact
/// for cubics.
fn hermite_step(a: (f64, f64, f64), b: (f64, f64, f64)) -> f64 {
    let h = b.0 - a.0;
    h * (a.1 + b.1) / 2.0 + h * h * (a.2 - b.2) / 12.0
}

fn triple(s: &Sample) -> (f64, f64, f64) {
    (s.r, s.rho, s.drho)
}

/// The potential `F` with `F' = ρ` at every sample, anchored by
/// `F(r_ref) = f_ref`.
pub fn potential(traj: &Trajectory, r_ref: f64, f_ref: f64) -> Result<Vec<(f64, f64)>> {
    let samples = traj.samples();
    let (lo, hi) = traj.r_range().ok_or(Error::EmptyTrajectory)?;
    if !(lo <= r_ref && r_ref <= hi) {
        return Err(Error::OutOfRange { r: r_ref, lo, hi });
    }
    let mut acc = Vec::with_capacity(samples.len());
    let mut total = 0.0;
    acc.push(0.0);
    for w in samples.windows(2) {
        total += hermite_step(triple(&w[0]), triple(&w[1]));
        acc.push(total);
    }

    let k = samples.partition_point(|s| s.r <= r_ref).saturating_sub(1);
    let at_ref = match traj.state_at(r_ref) {
        Some(s) => (s.r, s.rho, s.drho),
        None => triple(&samples[k]),
    };
    let offset = acc[k] + hermite_step(triple(&samples[k]), at_ref);

    Ok(samples
        .iter()
        .zip(acc)
        .map(|(s, i)| (s.r, f_ref + i - offset))
        .collect())
}

/// Warp, potential and both curvature routes at every sample.
pub fn reconstruct(traj: &Trajectory, r_ref: f64, f_ref: f64) -> Result<Vec<GeometrySample>> {
    let f = potential(traj, r_ref, f_ref)?;
    let params = traj.params();
    traj.samples()
        .iter()
        .zip(f)
        .map(|(s, (_, pot))| {
            Ok(GeometrySample {
                r: s.r,
                warp: s.rho,
                potential: pot,
                r_direct: scalar_curvature_direct(s.drho, params.lambda()),
                r_warped: scalar_curvature_warped(params, s.rho, s.drho, s.ddrho)?,
            })
        })
        .collect()
}

/// Sample spacing of [`make_constant_example`].
pub const CONSTANT_EXAMPLE_STEP: f64 = 0.125;

/// The soliton with `R = λ`: `ρ ≡ √(R̄/λ)` on `[-half_width, half_width]`,
/// potential `F = √(R̄/λ) r + α`.
pub fn make_constant_example(n: u32, lambda: f64, rbar: f64, half_width: f64) -> Result<Trajectory> {
    if !(lambda < 0.0 && rbar < 0.0) {
        return Err(Error::InvalidParams(format!(
            "the constant example needs lambda < 0 and rbar < 0, got lambda = {lambda}, rbar = {rbar}"
        )));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "window half-width must be positive, got {half_width}"
        )));
    }
    let params = SolitonParams::expanding(n, lambda, rbar)?;
    let c = (rbar / lambda).sqrt();
    let steps = (2.0 * half_width / CONSTANT_EXAMPLE_STEP).ceil() as usize;
    let samples = (0..=steps)
        .map(|i| {
            let r = (-half_width + i as f64 * CONSTANT_EXAMPLE_STEP).min(half_width);
            Sample {
                r,
                rho: c,
                drho: 0.0,
                ddrho: 0.0,
            }
        })
        .collect();
    let opts = IntegrationOptions::default().with_r_span(half_width);
    Ok(Trajectory::from_constant(
        params,
        opts,
        SolitonState::new(0.0, c, 0.0),
        samples,
    ))
}
