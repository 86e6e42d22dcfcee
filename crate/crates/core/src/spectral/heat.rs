//! Heat traces of the 1-D mode problems and the Mellin route to ζ′(0).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quad::integrate;
use super::zeta::ZetaData;
use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Small-t expansion Σ coeff · t^power of `Tr e^{-tA} − dim ker A`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HeatExpansion {
    pub terms: Vec<(f64, f64)>,
}

impl HeatExpansion {
    pub fn new(terms: Vec<(f64, f64)>) -> Self {
        Self { terms }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(p, c)| c * t.powf(p)).sum()
    }

    fn magnitude(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(p, c)| (c * t.powf(p)).abs()).sum()
    }

    /// Coefficient of t⁰, which is ζ(0).
    pub fn constant_term(&self) -> f64 {
        self.terms.iter().filter(|(p, _)| *p == 0.0).map(|(_, c)| c).sum()
    }

    pub fn coefficient_mass(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.abs()).sum()
    }

    /// Expansion of `scale · e^{-shift·t} · t^power` through t^{power+order}.
    pub fn damped_monomial(scale: f64, power: f64, shift: f64, order: usize) -> Self {
        let mut terms = Vec::with_capacity(order + 1);
        let mut c = scale;
        for j in 0..=order {
            if j > 0 {
                c *= -shift / j as f64;
            }
            if c != 0.0 || j == 0 {
                terms.push((power + j as f64, c));
            }
        }
        Self { terms }
    }

    pub fn plus(mut self, other: Self) -> Self {
        self.terms.extend(other.terms);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MellinOptions {
    /// Split point between the subtracted small-time window and the tail.
    pub split: f64,
    pub tolerance: f64,
}

impl Default for MellinOptions {
    fn default() -> Self {
        Self {
            split: 1.0,
            tolerance: 1e-13,
        }
    }
}

/// The two windows of the Mellin integral for ζ′(0), split at `split`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MellinParts {
    /// γ·c₀ + c₀ log T + ∫₀^T (F − expansion)/t + Σ_{p≠0} c_p T^p / p.
    pub small_time: f64,
    /// ∫_T^∞ F / t.
    pub large_time: f64,
    pub zeta_at_zero: f64,
    pub lower_cutoff: f64,
    pub upper_cutoff: f64,
    pub error_estimate: f64,
}

impl MellinParts {
    pub fn zeta_prime_at_zero(&self) -> f64 {
        self.small_time + self.large_time
    }
}

/// Smallest t (stepping down by decades) where the trace and its declared
/// expansion agree to rounding.
fn lower_cutoff<F: Fn(f64) -> f64>(f: &F, exp: &HeatExpansion, split: f64) -> Result<f64> {
    let floor = 1e-12 * split;
    let mut t = split;
    loop {
        let declared = exp.magnitude(t);
        let rem = f(t) - exp.eval(t);
        if rem.abs() <= 64.0 * f64::EPSILON * declared.max(f(t).abs()) {
            return Ok(t);
        }
        if t <= floor {
            if rem.abs() > 1e-6 * (1.0 + exp.coefficient_mass()) {
                return Err(Error::ExpansionMismatch {
                    t,
                    measured: rem,
                    declared,
                });
            }
            return Ok(t);
        }
        t /= 10.0;
    }
}

fn upper_cutoff<F: Fn(f64) -> f64>(f: &F, split: f64) -> Result<f64> {
    let scale = f(split).abs().max(1.0);
    let mut t = split;
    while f(t).abs() > 1e-18 * scale {
        t *= 2.0;
        if t > 1e12 {
            return Err(Error::Quadrature(format!(
                "trace has not decayed by t = {t:e}; is the kernel subtracted?"
            )));
        }
    }
    Ok(t)
}

/// Both windows of the Mellin representation of ζ′(0) for a trace
/// `f(t) = Tr e^{-tA} − dim ker A` with small-time expansion `exp`.
pub fn mellin_parts<F: Fn(f64) -> f64>(
    f: F,
    exp: &HeatExpansion,
    opts: MellinOptions,
) -> Result<MellinParts> {
    let split = opts.split;
    if !(split > 0.0 && split.is_finite()) {
        return Err(Error::HeatArgument(split));
    }
    let c0 = exp.constant_term();

    let t_low = lower_cutoff(&f, exp, split)?;
    let small = integrate(
        |x: f64| {
            let t = x.exp();
            f(t) - exp.eval(t)
        },
        t_low.ln(),
        split.ln(),
        opts.tolerance,
    )?;
    let subtracted: f64 = exp
        .terms
        .iter()
        .filter(|(p, _)| *p != 0.0)
        .map(|&(p, c)| c * split.powf(p) / p)
        .sum();
    let small_time = EULER_GAMMA * c0 + c0 * split.ln() + small.value + subtracted;

    let t_high = upper_cutoff(&f, split)?;
    let large = integrate(|x: f64| f(x.exp()), split.ln(), t_high.ln(), opts.tolerance)?;

    Ok(MellinParts {
        small_time,
        large_time: large.value,
        zeta_at_zero: c0,
        lower_cutoff: t_low,
        upper_cutoff: t_high,
        error_estimate: small.error_estimate + large.error_estimate,
    })
}

/// ζ-data from the heat trace: ζ(0) = c₀ and
/// ζ′(0) = lim_{s→0}(κ(s) − c₀/s) + γ c₀.
pub fn zeta_via_heat<F: Fn(f64) -> f64>(
    f: F,
    exp: &HeatExpansion,
    kernel_dim: usize,
) -> Result<ZetaData> {
    let parts = mellin_parts(f, exp, MellinOptions::default())?;
    Ok(ZetaData::new(
        parts.zeta_at_zero,
        parts.zeta_prime_at_zero(),
        kernel_dim,
    ))
}

/// Base of a 1-D mode problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Base {
    /// Circle of circumference `c` with twist phase `theta`.
    Circle { c: f64, theta: f64 },
    /// Interval of length `l` with Dirichlet ends.
    Dirichlet { l: f64 },
}

impl Base {
    pub fn length(&self) -> f64 {
        match *self {
            Base::Circle { c, .. } => c,
            Base::Dirichlet { l } => l,
        }
    }

    /// Switch between the Poisson and direct heat-trace forms.
    pub fn crossover(&self) -> f64 {
        self.length().powi(2) / 20.0
    }
}

/// Number of lattice terms until e^{-a (n² − n0²)} drops below 1e-18.
fn lattice_extent(a: f64) -> i64 {
    ((42.0 / a).sqrt().ceil() as i64 + 2).min(10_000_000)
}

/// Σ_n e^{-t λ_n} summed over the eigenvalues, without the e^{-μ²t} factor.
pub fn heat_trace_direct(base: Base, t: f64) -> f64 {
    match base {
        Base::Circle { c, theta } => {
            let w = (2.0 * PI / c).powi(2) * t;
            let n_max = lattice_extent(w);
            let shift = theta / (2.0 * PI);
            (-n_max..=n_max)
                .map(|n| (-w * (n as f64 + shift).powi(2)).exp())
                .sum()
        }
        Base::Dirichlet { l } => {
            let w = (PI / l).powi(2) * t;
            (1..=lattice_extent(w))
                .map(|n| (-w * (n as f64).powi(2)).exp())
                .sum()
        }
    }
}

/// Poisson-summed (theta-function) form of `heat_trace_direct`.
pub fn heat_trace_poisson(base: Base, t: f64) -> f64 {
    match base {
        Base::Circle { c, theta } => {
            let a = c * c / (4.0 * t);
            let windings: f64 = (1..=lattice_extent(a))
                .map(|m| (-a * (m * m) as f64).exp() * (m as f64 * theta).cos())
                .sum();
            c / (4.0 * PI * t).sqrt() * (1.0 + 2.0 * windings)
        }
        Base::Dirichlet { l } => {
            let a = l * l / t;
            let windings: f64 = (1..=lattice_extent(a))
                .map(|m| (-a * (m * m) as f64).exp())
                .sum();
            l / (4.0 * PI * t).sqrt() * (1.0 + 2.0 * windings) - 0.5
        }
    }
}

/// Tr e^{-t(−∂² + μ²)} on the given base.
pub fn heat_trace_mode(base: Base, mu: f64, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) || t < 1e-300 {
        return Err(Error::HeatArgument(t));
    }
    let damp = (-mu * mu * t).exp();
    if damp == 0.0 {
        return Ok(0.0);
    }
    let raw = if t < base.crossover() {
        heat_trace_poisson(base, t)
    } else {
        heat_trace_direct(base, t)
    };
    Ok(raw * damp)
}

/// Winding terms of the Poisson form in log-space: (log |term|, sign),
/// excluding the leading length/√(4πt) and constant pieces.
pub fn winding_terms(base: Base, t: f64) -> Vec<(f64, f64)> {
    let lead = (4.0 * PI * t).sqrt().ln();
    match base {
        Base::Circle { c, theta } => {
            let a = c * c / (4.0 * t);
            (1..=lattice_extent(a))
                .filter_map(|m| {
                    let cos = (m as f64 * theta).cos();
                    (cos.abs() > 1e-15).then(|| {
                        let log = (2.0 * c).ln() - lead - a * (m * m) as f64 + cos.abs().ln();
                        (log, cos.signum())
                    })
                })
                .collect()
        }
        Base::Dirichlet { l } => {
            let a = l * l / t;
            (1..=lattice_extent(a))
                .map(|m| ((2.0 * l).ln() - lead - a * (m * m) as f64, 1.0))
                .collect()
        }
    }
}

/// Small-time expansion of `heat_trace_mode(base, mu, ·) − dim ker`.
pub fn mode_heat_expansion(base: Base, mu: f64, kernel_dim: usize, order: usize) -> HeatExpansion {
    let lead = base.length() / (4.0 * PI).sqrt();
    let mut exp = HeatExpansion::damped_monomial(lead, -0.5, mu * mu, order);
    if let Base::Dirichlet { .. } = base {
        exp = exp.plus(HeatExpansion::damped_monomial(-0.5, 0.0, mu * mu, order));
    }
    if kernel_dim > 0 {
        exp.terms.push((0.0, -(kernel_dim as f64)));
    }
    exp
}
