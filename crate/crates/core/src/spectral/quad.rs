//! Quadrature helpers on top of the double-exponential rule.

use crate::error::{Error, Result};

/// Longest panel handed to a single double-exponential call.
const MAX_PANEL: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

/// ∫_a^b f over equal panels of width ≤ 8, summed left to right.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite limits [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    let panels = ((b - a).abs() / MAX_PANEL).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let hi = if p + 1 == panels { b } else { lo + h };
        let out = quadrature::integrate(&f, lo, hi, tol / panels as f64);
        if !out.integral.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{lo}, {hi}]"
            )));
        }
        value += out.integral;
        err += out.error_estimate;
    }
    Ok(Integral {
        value,
        error_estimate: err,
    })
}

/// Walk `x` outward by `step` until `|g(x)| ≤ floor` or `limit` is passed.
pub fn find_cutoff<G: Fn(f64) -> f64>(g: G, start: f64, step: f64, limit: f64, floor: f64) -> f64 {
    let mut x = start;
    loop {
        let next = x + step;
        let beyond = if step > 0.0 { next > limit } else { next < limit };
        if beyond {
            return limit;
        }
        x = next;
        if g(x).abs() <= floor {
            return x;
        }
    }
}
