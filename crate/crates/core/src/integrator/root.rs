use crate::error::{Error, Result};

pub const MAX_BISECTIONS: usize = 200;

/// Bisection for a sign change of `monitor` on `bracket`.
///
/// Stops once `|monitor(r)| ≤ root_tol · max(|g(a)|, |g(b)|)` or the bracket
/// cannot be halved any further.
pub fn locate_root<F>(monitor: F, bracket: (f64, f64), root_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = bracket;
    let (mut ga, gb) = (monitor(a), monitor(b));
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    // NaN fails this test too.
    if !(ga * gb < 0.0) {
        return Err(Error::NoSignChange { a, b, ga, gb });
    }
    let scale = ga.abs().max(gb.abs());
    let mut mid = 0.5 * (a + b);
    for _ in 0..MAX_BISECTIONS {
        mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let gm = monitor(mid);
        if gm.abs() <= root_tol * scale {
            break;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    Ok(mid)
}
