//! Closed-form 1-D mode problems: −∂² + μ² on a twisted circle or a
//! Dirichlet interval, and the per-mode Dirichlet-to-Neumann blocks.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mat2::{Mat2, C64};
use crate::spectral::heat::{heat_trace_mode, mode_heat_expansion, Base, HeatExpansion};
use crate::spectral::zeta::{
    zeta_from_sequence, EigenvalueSeq, QuadraticBranch, TruncatedZeta, ZetaSumOptions,
};

/// Above this argument every hyperbolic function goes through e^{-x} forms.
const EXP_FORM_THRESHOLD: f64 = 30.0;

/// Reduce a phase to [0, 2π).
pub fn normalize_phase(theta: f64) -> f64 {
    let r = theta.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeProblem {
    pub mu: f64,
    pub base: Base,
}

impl ModeProblem {
    pub fn circle(c: f64, theta: f64, mu: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("C", format!("circumference must be positive, got {c}")));
        }
        Self::check_mu(mu)?;
        Ok(Self {
            mu,
            base: Base::Circle {
                c,
                theta: normalize_phase(theta),
            },
        })
    }

    pub fn dirichlet(l: f64, mu: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid("L", format!("length must be positive, got {l}")));
        }
        Self::check_mu(mu)?;
        Ok(Self {
            mu,
            base: Base::Dirichlet { l },
        })
    }

    fn check_mu(mu: f64) -> Result<()> {
        if mu >= 0.0 && mu.is_finite() {
            Ok(())
        } else {
            Err(invalid("mu", format!("must be finite and ≥ 0, got {mu}")))
        }
    }

    pub fn kernel_present(&self) -> bool {
        matches!(self.base, Base::Circle { theta, .. } if theta == 0.0 && self.mu == 0.0)
    }

    pub fn kernel_dim(&self) -> usize {
        usize::from(self.kernel_present())
    }

    /// log det_ζ from the closed form.
    pub fn logdet(&self) -> Result<f64> {
        match self.base {
            Base::Circle { c, theta } => logdet_circle_mode(c, theta, self.mu),
            Base::Dirichlet { l } => logdet_dirichlet_mode(l, self.mu),
        }
    }

    /// Eigenvalues as monotone quadratic branches.
    pub fn eigenvalue_seq(&self) -> EigenvalueSeq {
        let shift = self.mu * self.mu;
        let branches = match self.base {
            Base::Circle { c, theta } => {
                let slope = 2.0 * PI / c;
                vec![
                    // n ≥ 0: (2πn + θ)/C
                    QuadraticBranch::new(slope, theta / c, shift, 0, 1),
                    // n = −m, m ≥ 1: (2πm − θ)/C
                    QuadraticBranch::new(slope, -theta / c, shift, 1, 1),
                ]
            }
            Base::Dirichlet { l } => vec![QuadraticBranch::new(PI / l, 0.0, shift, 1, 1)],
        };
        let branches = branches
            .into_iter()
            .collect::<Result<Vec<_>>>()
            .expect("validated mode problem yields valid branches");
        EigenvalueSeq {
            branches,
            finite: vec![],
        }
    }

    pub fn heat_trace(&self, t: f64) -> Result<f64> {
        heat_trace_mode(self.base, self.mu, t)
    }

    /// Small-time expansion of `heat_trace − dim ker`.
    pub fn heat_expansion(&self) -> HeatExpansion {
        mode_heat_expansion(self.base, self.mu, self.kernel_dim(), 8)
    }

    /// Σ 1/λ over nonzero eigenvalues.
    pub fn inverse_trace(&self) -> Result<f64> {
        match self.base {
            Base::Circle { c, theta } => {
                if self.kernel_present() {
                    return Err(Error::ZeroModeOnCircle);
                }
                let x = self.mu * c;
                if x == 0.0 {
                    return Ok(c * c / (4.0 * (theta / 2.0).sin().powi(2)));
                }
                // C sinh x / (2μ (cosh x − cos θ)) with numerator and
                // denominator divided by e^x
                let e = (-x).exp();
                let num = -(-2.0 * x).exp_m1();
                let den = 1.0 - 2.0 * theta.cos() * e + e * e;
                Ok(c / (2.0 * self.mu) * num / den)
            }
            Base::Dirichlet { l } => {
                let x = self.mu * l;
                if x < 1e-2 {
                    let x2 = x * x;
                    let series = 1.0 / 6.0 - x2 / 90.0 + x2 * x2 / 945.0 - x2 * x2 * x2 / 9450.0;
                    return Ok(l * l * series);
                }
                let coth = coth(x);
                Ok(l / (2.0 * self.mu) * coth - 1.0 / (2.0 * self.mu * self.mu))
            }
        }
    }
}

fn coth(x: f64) -> f64 {
    -(1.0 + (-2.0 * x).exp()) / (-2.0 * x).exp_m1()
}

fn csch(x: f64) -> f64 {
    -2.0 * (-x).exp() / (-2.0 * x).exp_m1()
}

/// log(2 cosh μC − 2 cos θ).
pub fn logdet_circle_mode(c: f64, theta: f64, mu: f64) -> Result<f64> {
    let theta = normalize_phase(theta);
    if mu == 0.0 && theta == 0.0 {
        return Err(Error::ZeroModeOnCircle);
    }
    let x = mu * c;
    if x <= EXP_FORM_THRESHOLD {
        Ok((4.0 * (x / 2.0).sinh().powi(2) + 4.0 * (theta / 2.0).sin().powi(2)).ln())
    } else {
        let e = (-x).exp();
        Ok(x + (-2.0 * theta.cos() * e + e * e).ln_1p())
    }
}

/// log(2 sinh(μL)/μ), or log 2L at μ = 0.
pub fn logdet_dirichlet_mode(l: f64, mu: f64) -> Result<f64> {
    if !(l > 0.0) {
        return Err(invalid("L", format!("length must be positive, got {l}")));
    }
    if mu == 0.0 {
        return Ok((2.0 * l).ln());
    }
    let x = mu * l;
    Ok(x + (-(-2.0 * x).exp_m1()).ln() - mu.ln())
}

/// Dirichlet-to-Neumann map of −∂² + μ² on [0, L], outward normals,
/// boundary phase `w` on the far end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DNBlock {
    pub m: Mat2,
    pub mu: f64,
    pub l: f64,
    pub w: C64,
}

impl DNBlock {
    pub fn diagonal(&self) -> f64 {
        self.m.m[0][0].re
    }

    /// Modulus of the off-diagonal coupling.
    pub fn coupling(&self) -> f64 {
        self.m.m[0][1].norm()
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        self.m.hermitian_eigen().0
    }
}

pub fn dn_block(l: f64, mu: f64, w: C64) -> Result<DNBlock> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(invalid("L", format!("length must be positive, got {l}")));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(invalid("mu", format!("must be finite and ≥ 0, got {mu}")));
    }
    let (diag, off) = if mu == 0.0 {
        (1.0 / l, 1.0 / l)
    } else {
        let x = mu * l;
        (mu * coth(x), mu * csch(x))
    };
    let m = Mat2::new(
        C64::new(diag, 0.0),
        -w * off,
        -w.conj() * off,
        C64::new(diag, 0.0),
    );
    Ok(DNBlock { m, mu, l, w })
}

/// log det_ζ by explicit eigenvalue enumeration, with its residual bound.
pub fn oracle_logdet_truncated(problem: &ModeProblem, cutoff: usize) -> Result<TruncatedZeta> {
    zeta_from_sequence(
        &problem.eigenvalue_seq(),
        ZetaSumOptions {
            cutoff,
            ..Default::default()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_closed_forms() {
        assert!((logdet_circle_mode(7.0, PI, 0.0).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!((logdet_circle_mode(10.0, PI / 2.0, 0.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let v = logdet_circle_mode(5.0, PI, 2.0).unwrap().exp();
        assert!((v - 22028.465_840_206_646).abs() < 1e-9, "{v}");
        assert_eq!(logdet_circle_mode(3.0, 0.0, 0.0), Err(Error::ZeroModeOnCircle));
    }

    #[test]
    fn circle_large_argument_branch_is_continuous() {
        let mu = 30.0 / 5.0;
        let below = logdet_circle_mode(5.0, 1.0, mu * (1.0 - 1e-12)).unwrap();
        let above = logdet_circle_mode(5.0, 1.0, mu * (1.0 + 1e-12)).unwrap();
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_closed_forms() {
        assert!((logdet_dirichlet_mode(3.0, 0.0).unwrap() - 6f64.ln()).abs() < 1e-15);
        let v = logdet_dirichlet_mode(2.0, 1.0).unwrap().exp();
        assert!((v - 2.0 * 2f64.sinh()).abs() < 1e-13);
        let big = logdet_dirichlet_mode(100.0, 5.0).unwrap();
        assert!((big - (500.0 - 5f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn dn_block_entries() {
        let one = C64::new(1.0, 0.0);
        let b = dn_block(1.0, 0.0, one).unwrap();
        assert!(b.m.distance(&Mat2::real(1.0, -1.0, -1.0, 1.0)) < 1e-15);
        let b = dn_block(1.0, 1.0, one).unwrap();
        assert!((b.diagonal() - 1.313_035_285_499_331).abs() < 1e-14);
        assert!((b.m.m[0][1].re + 0.850_918_128_239_321_6).abs() < 1e-14);
        let far = dn_block(1.0, 400.0, one).unwrap();
        assert!((far.diagonal() - 400.0).abs() < 1e-12 && far.coupling() < 1e-150);
    }

    #[test]
    fn dn_block_is_hermitian_psd() {
        let w = C64::from_polar(1.0, 0.7);
        for mu in [0.0, 0.3, 2.0] {
            let b = dn_block(2.5, mu, w).unwrap();
            assert!(b.m.is_hermitian(1e-15));
            let [lo, _] = b.eigenvalues();
            if mu == 0.0 {
                assert!(lo.abs() < 1e-15);
            } else {
                assert!(lo > 0.0);
            }
        }
    }

    #[test]
    fn dirichlet_inverse_trace_series_matches_closed_form() {
        let p = ModeProblem::dirichlet(3.0, 0.0).unwrap();
        assert!((p.inverse_trace().unwrap() - 1.5).abs() < 1e-15);
        let l = 2.0;
        let lo = ModeProblem::dirichlet(l, 0.0099_9).unwrap().inverse_trace().unwrap();
        let hi = ModeProblem::dirichlet(l, 0.0100_1).unwrap().inverse_trace().unwrap();
        assert!((lo - hi).abs() < 1e-6);
    }

    #[test]
    fn oracle_matches_closed_forms() {
        let d = ModeProblem::dirichlet(3.0, 0.0).unwrap();
        let out = oracle_logdet_truncated(&d, 10_000).unwrap();
        assert!((out.data.log_det - 6f64.ln()).abs() < 1e-10);
        let c = ModeProblem::circle(10.0, PI / 2.0, 0.0).unwrap();
        let out = oracle_logdet_truncated(&c, 10_000).unwrap();
        assert!((out.data.log_det - 2f64.ln()).abs() < 1e-10);
    }
}
