//! The warp-function ODE of a gradient Yamabe soliton on a warped product
//! `(I, dr²) ×_ρ (N^{n-1}, ḡ)`.
//!
//! With `ρ = F'` the soliton equation reduces to the second-order ODE
//!
//! ```text
//! 2(n-1) ρ ρ'' + (n-1)(n-2) ρ'² + ρ² (ρ' + λ) = R̄
//! ```
//!
//! and, after differentiating once,
//!
//! ```text
//! 2(n-1)² ρ' ρ'' + 2(n-1) ρ ρ''' + 2 ρ ρ' (ρ' + λ) + ρ² ρ'' = 0.
//! ```
//!
//! Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimension, soliton constant and fiber scalar curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SolitonParams {
    n: u32,
    lambda: f64,
    rbar: f64,
    permissive: bool,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n: u32,
    lambda: f64,
    rbar: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    permissive: bool,
}

impl TryFrom<RawParams> for SolitonParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        if raw.permissive {
            SolitonParams::permissive(raw.n, raw.lambda, raw.rbar)
        } else {
            SolitonParams::expanding(raw.n, raw.lambda, raw.rbar)
        }
    }
}

impl From<SolitonParams> for RawParams {
    fn from(p: SolitonParams) -> Self {
        RawParams {
            n: p.n,
            lambda: p.lambda,
            rbar: p.rbar,
            permissive: p.permissive,
        }
    }
}

impl SolitonParams {
    /// Parameters of an expanding soliton: `n ≥ 3`, `λ < 0`.
    pub fn expanding(n: u32, lambda: f64, rbar: f64) -> Result<Self> {
        let p = Self::permissive(n, lambda, rbar)?;
        if !(lambda < 0.0) {
            return Err(Error::InvalidParams(format!(
                "expanding solitons need lambda < 0, got {lambda}"
            )));
        }
        Ok(SolitonParams {
            permissive: false,
            ..p
        })
    }

    /// Any sign of `λ`. Classification refuses these unless `λ < 0`.
    pub fn permissive(n: u32, lambda: f64, rbar: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParams(format!("need n >= 3, got {n}")));
        }
        if !lambda.is_finite() || !rbar.is_finite() {
            return Err(Error::InvalidParams(format!(
                "lambda and rbar must be finite (lambda = {lambda}, rbar = {rbar})"
            )));
        }
        Ok(SolitonParams {
            n,
            lambda,
            rbar,
            permissive: true,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rbar(&self) -> f64 {
        self.rbar
    }

    pub fn is_permissive(&self) -> bool {
        self.permissive
    }

    pub fn is_expanding(&self) -> bool {
        self.lambda < 0.0
    }

    /// `n - 1` as a float.
    pub(crate) fn m(&self) -> f64 {
        f64::from(self.n - 1)
    }

    /// `(n - 1)(n - 2)` as a float.
    pub(crate) fn a(&self) -> f64 {
        f64::from((self.n - 1) * (self.n - 2))
    }

    /// `√(R̄/λ)`, the value of a constant warp, when `R̄/λ ≥ 0`.
    pub fn asymptote(&self) -> Option<f64> {
        if self.lambda == 0.0 {
            return None;
        }
        let q = self.rbar / self.lambda;
        (q >= 0.0).then(|| q.sqrt())
    }
}

/// A point `(r, ρ, ρ')` on a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonState {
    pub r: f64,
    pub rho: f64,
    pub drho: f64,
}

impl SolitonState {
    pub fn new(r: f64, rho: f64, drho: f64) -> Self {
        SolitonState { r, rho, drho }
    }
}

/// Signed residual of one equation together with the magnitude of its
/// largest summand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    fn from_terms(value: f64, terms: &[f64]) -> Self {
        let scale = terms
            .iter()
            .fold(f64::MIN_POSITIVE, |acc, t| acc.max(t.abs()));
        Residual { value, scale }
    }

    pub fn relative(&self) -> f64 {
        self.value / self.scale
    }
}

/// Residuals of both the warp equation and its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeResidual {
    pub eq1: Residual,
    pub eq2: Residual,
}

fn require_positive(what: &'static str, rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, rho })
    }
}

/// `ρ''` from the warp equation.
pub fn rho_second(params: &SolitonParams, rho: f64, drho: f64) -> Result<f64> {
    require_positive("rho_second", rho)?;
    let num = params.rbar - params.a() * drho * drho - rho * rho * (drho + params.lambda);
    Ok(num / (2.0 * params.m() * rho))
}

/// `ρ'''` from the differentiated warp equation.
pub fn rho_third(params: &SolitonParams, rho: f64, drho: f64, ddrho: f64) -> Result<f64> {
    require_positive("rho_third", rho)?;
    let m = params.m();
    let num = 2.0 * m * m * drho * ddrho
        + 2.0 * rho * drho * (drho + params.lambda)
        + rho * rho * ddrho;
    Ok(-num / (2.0 * m * rho))
}

/// `LHS - R̄` of the warp equation.
pub fn eq1_residual(params: &SolitonParams, rho: f64, drho: f64, ddrho: f64) -> Result<Residual> {
    require_positive("eq1_residual", rho)?;
    let terms = [
        2.0 * params.m() * rho * ddrho,
        params.a() * drho * drho,
        rho * rho * drho,
        rho * rho * params.lambda,
        params.rbar,
    ];
    let value = terms[0] + terms[1] + (terms[2] + terms[3]) - terms[4];
    Ok(Residual::from_terms(value, &terms))
}

/// Left-hand side of the differentiated warp equation.
pub fn eq2_residual(
    params: &SolitonParams,
    rho: f64,
    drho: f64,
    ddrho: f64,
    dddrho: f64,
) -> Result<Residual> {
    require_positive("eq2_residual", rho)?;
    let m = params.m();
    let terms = [
        2.0 * m * m * drho * ddrho,
        2.0 * m * rho * dddrho,
        2.0 * rho * drho * (drho + params.lambda),
        rho * rho * ddrho,
    ];
    Ok(Residual::from_terms(terms.iter().sum(), &terms))
}

pub fn ode_residual(
    params: &SolitonParams,
    rho: f64,
    drho: f64,
    ddrho: f64,
    dddrho: f64,
) -> Result<OdeResidual> {
    Ok(OdeResidual {
        eq1: eq1_residual(params, rho, drho, ddrho)?,
        eq2: eq2_residual(params, rho, drho, ddrho, dddrho)?,
    })
}

/// Image of `(params, state)` under `ρ(r) ↦ bρ(br)`, which maps solutions
/// with `(λ, R̄)` to solutions with `(b²λ, b⁴R̄)`. Residuals scale by `b⁴`.
pub fn scale_transform(
    params: &SolitonParams,
    state: &SolitonState,
    b: f64,
) -> Result<(SolitonParams, SolitonState)> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidScale(b));
    }
    let b2 = b * b;
    let scaled = SolitonParams {
        n: params.n,
        lambda: b2 * params.lambda,
        rbar: b2 * b2 * params.rbar,
        permissive: params.permissive,
    };
    let state = SolitonState {
        r: state.r / b,
        rho: b * state.rho,
        drho: b2 * state.drho,
    };
    Ok((scaled, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn p(n: u32, lambda: f64, rbar: f64) -> SolitonParams {
        SolitonParams::expanding(n, lambda, rbar).unwrap()
    }

    #[test]
    fn constant_example_has_zero_second_derivative() {
        assert_eq!(rho_second(&p(3, -1.0, -1.0), 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn flat_fiber_unit_state() {
        assert_eq!(rho_second(&p(3, -1.0, 0.0), 1.0, 0.0).unwrap(), 0.25);
    }

    #[test]
    fn rational_oracle_for_rho_second() {
        // n=4, λ=-2, R̄=-3, ρ=2, ρ'=1/2: solve the warp equation for ρ''
        // in exact arithmetic and plug the result back in.
        let r = Rational64::from_integer;
        let (m, a) = (r(3), r(6));
        let (lambda, rbar, rho, drho) = (r(-2), r(-3), r(2), Rational64::new(1, 2));
        let dd = (rbar - a * drho * drho - rho * rho * (drho + lambda)) / (r(2) * m * rho);
        assert_eq!(dd, Rational64::new(1, 8));
        let lhs = r(2) * m * rho * dd + a * drho * drho + rho * rho * (drho + lambda);
        assert_eq!(lhs, rbar);

        let got = rho_second(&p(4, -2.0, -3.0), 2.0, 0.5).unwrap();
        assert_eq!(got, 0.125);
    }

    #[test]
    fn rho_third_examples() {
        let params = p(3, -1.0, -1.0);
        assert_eq!(rho_third(&params, 1.0, 0.5, 0.0).unwrap(), 0.125);
        assert_eq!(rho_third(&params, 1.0, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn singular_at_tip() {
        let params = p(3, -1.0, 2.0);
        assert!(matches!(
            rho_second(&params, 0.0, 1.0),
            Err(Error::Domain { .. })
        ));
        assert!(rho_third(&params, -1.0, 1.0, 0.0).is_err());
        assert!(eq1_residual(&params, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn eq1_residual_examples() {
        let r = eq1_residual(&p(3, -1.0, -1.0), 1.0, 0.0, 0.0).unwrap();
        assert_eq!(r.value, 0.0);
        let r = eq1_residual(&p(3, -1.0, 0.0), 1.0, 0.0, 0.0).unwrap();
        assert_eq!(r.value, -1.0);
        assert_eq!(r.scale, 1.0);
    }

    #[test]
    fn eq1_residual_is_linear_in_second_derivative() {
        let params = p(5, -0.7, -2.0);
        let (rho, drho, delta) = (1.5, 0.25, 0.125);
        let base = eq1_residual(&params, rho, drho, 0.5).unwrap().value;
        let bumped = eq1_residual(&params, rho, drho, 0.5 + delta).unwrap().value;
        assert!((bumped - base - 2.0 * 4.0 * rho * delta).abs() < 1e-14);
    }

    #[test]
    fn params_validation() {
        assert!(SolitonParams::expanding(2, -1.0, 0.0).is_err());
        assert!(SolitonParams::expanding(3, 0.0, 0.0).is_err());
        assert!(SolitonParams::expanding(3, 1.0, 0.0).is_err());
        assert!(SolitonParams::expanding(3, f64::NAN, 0.0).is_err());
        let q = SolitonParams::permissive(3, 1.0, 0.0).unwrap();
        assert!(q.is_permissive() && !q.is_expanding());
    }

    #[test]
    fn params_serde_validates() {
        let ok: SolitonParams =
            serde_json::from_str(r#"{"n":3,"lambda":-1.0,"rbar":2.0}"#).unwrap();
        assert_eq!(ok.rbar(), 2.0);
        assert!(serde_json::from_str::<SolitonParams>(r#"{"n":2,"lambda":-1.0,"rbar":2.0}"#).is_err());
        assert!(serde_json::from_str::<SolitonParams>(r#"{"n":3,"lambda":1.0,"rbar":2.0}"#).is_err());
        let loose: SolitonParams =
            serde_json::from_str(r#"{"n":3,"lambda":1.0,"rbar":2.0,"permissive":true}"#).unwrap();
        assert!(loose.is_permissive());
    }

    #[test]
    fn asymptote_value() {
        assert_eq!(p(3, -4.0, -1.0).asymptote(), Some(0.5));
        assert_eq!(p(3, -1.0, 0.0).asymptote(), Some(0.0));
        assert_eq!(p(3, -1.0, 1.0).asymptote(), None);
    }

    #[test]
    fn scale_transform_examples() {
        let params = p(3, -1.0, -1.0);
        let s = SolitonState::new(0.3, 1.0, 0.0);
        let (q, t) = scale_transform(&params, &s, 1.0).unwrap();
        assert_eq!((q, t), (params, s));

        let (q, t) = scale_transform(&params, &s, 2.0).unwrap();
        assert_eq!((q.lambda(), q.rbar()), (-4.0, -16.0));
        assert_eq!((t.rho, t.drho), (2.0, 0.0));
        assert_eq!(q.asymptote(), Some(2.0));

        assert!(matches!(
            scale_transform(&params, &s, 0.0),
            Err(Error::InvalidScale(_))
        ));
        assert!(scale_transform(&params, &s, -1.0).is_err());
    }

    #[test]
    fn scaled_residual_picks_up_b_to_the_fourth() {
        // Expand 2(n-1)(bρ)(b³ρ'') + a(b²ρ')² + (bρ)²(b²ρ' + b²λ) - b⁴R̄
        // = b⁴ · residual, with ρ'' ↦ b³ρ''.
        let params = p(4, -1.3, -0.4);
        let s = SolitonState::new(1.0, 1.7, 0.35);
        let dd = 0.9;
        let src = eq1_residual(&params, s.rho, s.drho, dd).unwrap().value;
        for b in [0.5, 2.0, 10.0] {
            let (q, t) = scale_transform(&params, &s, b).unwrap();
            let img = eq1_residual(&q, t.rho, t.drho, b.powi(3) * dd).unwrap();
            let expected = b.powi(4) * src;
            assert!(
                (img.value - expected).abs() <= 1e-12 * img.scale,
                "b={b}: {} vs {expected}",
                img.value
            );
        }
    }
}
