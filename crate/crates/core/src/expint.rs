//! Exponential integral `Ei(x)` for negative arguments.
//!
//! Only `x < 0` is needed by the interference-limited outage formula, where it
//! appears as `exp(eta) * Ei(-eta)`. That product is evaluated directly by
//! [`scaled_ei`] so that large `eta` does not overflow `exp(eta)`.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITER: usize = 500;

/// `Ei(x)` for `x < 0`. Always negative, tends to `0-` as `x -> -inf`.
pub fn expint_ei(x: f64) -> Result<f64> {
    let s = scaled_ei(x)?;
    // exp(x) underflows gracefully to 0 for very negative x.
    Ok(s * x.exp())
}

/// `exp(-x) * Ei(x)` for `x < 0`, i.e. `-exp(t) E1(t)` with `t = -x`.
pub fn scaled_ei(x: f64) -> Result<f64> {
    if x.is_nan() || x >= 0.0 {
        return Err(Error::domain(format!("Ei(x) is only provided for x < 0, got {x}")));
    }
    Ok(-scaled_e1(-x)?)
}

/// `exp(t) * E1(t)` for `t > 0`.
pub(crate) fn scaled_e1(t: f64) -> Result<f64> {
    if t.is_infinite() {
        return Ok(0.0);
    }
    if t <= 1.0 {
        Ok(e1_series(t) * t.exp())
    } else {
        e1_continued_fraction(t)
    }
}

/// `E1(t) = -gamma - ln t - sum_{k>=1} (-t)^k / (k k!)`, for small `t`.
fn e1_series(t: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= -t / kf;
        let contrib = term / kf;
        sum += contrib;
        if contrib.abs() < sum.abs() * f64::EPSILON * 0.25 {
            break;
        }
    }
    -EULER_GAMMA - t.ln() - sum
}

/// Modified Lentz evaluation of `exp(t) E1(t) = 1/(t+1- 1/(t+3- 4/(t+5- ...)))`.
fn e1_continued_fraction(t: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = t + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::Numerical(format!(
        "E1 continued fraction did not converge at t = {t}"
    )))
}
