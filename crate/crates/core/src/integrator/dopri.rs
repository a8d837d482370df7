//! Dormand–Prince 5(4) step with Hairer's continuous extension.

pub(crate) type Vec2 = [f64; 2];

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI controller constants as in DOPRI5.
const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[inline]
fn axpy(y: &Vec2, terms: &[(f64, &Vec2)], h: f64) -> Vec2 {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Quartic dense-output polynomial in the step fraction `θ ∈ [0, 1]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Dense {
    pub rc: [Vec2; 5],
}

impl Dense {
    pub fn constant(y: Vec2) -> Self {
        Dense {
            rc: [y, [0.0; 2], [0.0; 2], [0.0; 2], [0.0; 2]],
        }
    }

    pub fn eval(&self, theta: f64) -> Vec2 {
        let t1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rc;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = r1[i] + theta * (r2[i] + t1 * (r3[i] + theta * (r4[i] + t1 * r5[i])));
        }
        out
    }

    /// `d/dθ` of [`Dense::eval`].
    pub fn eval_dtheta(&self, theta: f64) -> Vec2 {
        let t1 = 1.0 - theta;
        let [_, r2, r3, r4, r5] = &self.rc;
        let mut out = [0.0; 2];
        for i in 0..2 {
            let a = r4[i] + t1 * r5[i];
            let da = -r5[i];
            let b = r3[i] + theta * a;
            let db = a + theta * da;
            let c = r2[i] + t1 * b;
            let dc = -b + t1 * db;
            out[i] = c + theta * dc;
        }
        out
    }
}

pub(crate) struct StepOutcome {
    pub y_new: Vec2,
    pub k_new: Vec2,
    pub err: f64,
    pub dense: Dense,
}

/// One trial step. `f` returns `None` where the right-hand side is undefined.
pub(crate) fn try_step<F>(f: &F, y: &Vec2, k1: &Vec2, h: f64, rtol: f64, atol: f64) -> Option<StepOutcome>
where
    F: Fn(&Vec2) -> Option<Vec2>,
{
    let k2 = f(&axpy(y, &[(A21, k1)], h))?;
    let k3 = f(&axpy(y, &[(A31, k1), (A32, &k2)], h))?;
    let k4 = f(&axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h))?;
    let k5 = f(&axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h))?;
    let k6 = f(&axpy(
        y,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        h,
    ))?;
    let y_new = axpy(
        y,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        h,
    );
    if !y_new.iter().all(|v| v.is_finite()) {
        return None;
    }
    let k7 = f(&y_new)?;

    let mut sq = 0.0;
    for i in 0..2 {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sk = atol + rtol * y[i].abs().max(y_new[i].abs());
        sq += (e / sk).powi(2);
    }
    let err = (sq / 2.0).sqrt();
    if !err.is_finite() {
        return None;
    }

    let mut rc = [[0.0; 2]; 5];
    for i in 0..2 {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        rc[0][i] = y[i];
        rc[1][i] = ydiff;
        rc[2][i] = bspl;
        rc[3][i] = ydiff - h * k7[i] - bspl;
        rc[4][i] = h
            * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }

    Some(StepOutcome {
        y_new,
        k_new: k7,
        err,
        dense: Dense { rc },
    })
}

/// PI step-size controller state.
pub(crate) struct Controller {
    facold: f64,
}

impl Controller {
    pub fn new() -> Self {
        Controller { facold: 1e-4 }
    }

    /// New step size after an accepted step with error `err ≤ 1`.
    pub fn accept(&mut self, h: f64, err: f64) -> f64 {
        let fac11 = err.powf(EXPO1);
        let fac = fac11 / self.facold.powf(BETA);
        let fac = (fac / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        self.facold = err.max(1e-4);
        h / fac
    }

    /// New step size after a rejected step.
    pub fn reject(&self, h: f64, err: f64) -> f64 {
        let fac11 = err.powf(EXPO1);
        h / (fac11 / SAFE).min(1.0 / FAC_MIN)
    }
}
