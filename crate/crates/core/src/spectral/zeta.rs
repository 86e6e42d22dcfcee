//! ζ-data and the truncated-sum route to ζ(0), ζ′(0).

use serde::{Deserialize, Serialize};

use super::sum::KahanSum;
use crate::error::{invalid, Error, Result};

/// ζ(0), ζ′(0) and log det_ζ of one spectral sequence (kernel excluded).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaData {
    pub zeta_at_zero: f64,
    pub zeta_prime_at_zero: f64,
    pub log_det: f64,
    pub kernel_dim: usize,
}

impl ZetaData {
    pub fn new(zeta_at_zero: f64, zeta_prime_at_zero: f64, kernel_dim: usize) -> Self {
        Self {
            zeta_at_zero,
            zeta_prime_at_zero,
            log_det: -zeta_prime_at_zero,
            kernel_dim,
        }
    }

    pub fn empty(kernel_dim: usize) -> Self {
        Self::new(0.0, 0.0, kernel_dim)
    }

    /// Exact data of a finite list; zeros go to the kernel.
    pub fn from_finite(eigenvalues: &[f64]) -> Self {
        let mut kernel = 0;
        let mut log_sum = KahanSum::new();
        let mut count = 0usize;
        for &lam in eigenvalues {
            if lam == 0.0 {
                kernel += 1;
            } else {
                log_sum.add(lam.ln());
                count += 1;
            }
        }
        Self::new(count as f64, -log_sum.value(), kernel)
    }

    pub fn det(&self) -> f64 {
        self.log_det.exp()
    }

    /// Data of the disjoint union of two spectra.
    pub fn combine(&self, other: &Self) -> Self {
        Self::new(
            self.zeta_at_zero + other.zeta_at_zero,
            self.zeta_prime_at_zero + other.zeta_prime_at_zero,
            self.kernel_dim + other.kernel_dim,
        )
    }

    /// Data of `c · A`: ζ_{cA}(s) = c^{-s} ζ_A(s).
    pub fn scaled(&self, c: f64) -> Self {
        Self::new(
            self.zeta_at_zero,
            self.zeta_prime_at_zero - c.ln() * self.zeta_at_zero,
            self.kernel_dim,
        )
    }

    /// Data of `A^p`: ζ_{A^p}(s) = ζ_A(p s).
    pub fn power(&self, p: f64) -> Self {
        Self::new(
            self.zeta_at_zero,
            p * self.zeta_prime_at_zero,
            self.kernel_dim,
        )
    }

    pub fn is_consistent(&self) -> bool {
        self.log_det == -self.zeta_prime_at_zero
    }
}

/// One monotone family λ(n) = (slope·n + offset)² + shift, n ≥ start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticBranch {
    pub slope: f64,
    pub offset: f64,
    pub shift: f64,
    pub start: u64,
    pub multiplicity: u32,
}

impl QuadraticBranch {
    pub fn new(slope: f64, offset: f64, shift: f64, start: u64, multiplicity: u32) -> Result<Self> {
        if !(slope > 0.0 && slope.is_finite()) {
            return Err(invalid("slope", format!("must be positive, got {slope}")));
        }
        if !(shift >= 0.0 && shift.is_finite() && offset.is_finite()) {
            return Err(invalid("shift", format!("must be finite and ≥ 0, got {shift}")));
        }
        if slope * start as f64 + offset < -1e-12 * slope {
            return Err(invalid(
                "offset",
                "slope·start + offset must be ≥ 0 so the branch is nondecreasing",
            ));
        }
        if multiplicity == 0 {
            return Err(invalid("multiplicity", "must be ≥ 1"));
        }
        Ok(Self {
            slope,
            offset,
            shift,
            start,
            multiplicity,
        })
    }

    fn root(&self, n: f64) -> f64 {
        self.slope * n + self.offset
    }

    pub fn value(&self, n: u64) -> f64 {
        let y = self.root(n as f64);
        y * y + self.shift
    }

    /// Number of indices with value ≤ `bound`.
    pub fn count_below(&self, bound: f64) -> u64 {
        if bound < self.shift {
            return 0;
        }
        let y = (bound - self.shift).sqrt();
        let top = ((y - self.offset) / self.slope).floor();
        if top < self.start as f64 {
            0
        } else {
            top as u64 - self.start + 1
        }
    }
}

/// A discrete spectrum given by closed-form branches plus finitely many
/// explicit eigenvalues.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueSeq {
    pub branches: Vec<QuadraticBranch>,
    pub finite: Vec<f64>,
}

impl EigenvalueSeq {
    pub fn new(branches: Vec<QuadraticBranch>, finite: Vec<f64>) -> Result<Self> {
        if let Some(bad) = finite.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return Err(invalid("finite", format!("eigenvalue {bad} is not ≥ 0")));
        }
        Ok(Self { branches, finite })
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.branches.extend_from_slice(&other.branches);
        out.finite.extend_from_slice(&other.finite);
        out
    }

    /// Eigenvalues ≤ `bound` with multiplicity, sorted.
    pub fn window(&self, bound: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.finite.iter().copied().filter(|&x| x <= bound).collect();
        for b in &self.branches {
            let count = b.count_below(bound);
            for n in b.start..b.start + count {
                let v = b.value(n);
                // count_below works from the closed form; keep the window exact
                if v <= bound {
                    out.extend(std::iter::repeat_n(v, b.multiplicity as usize));
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// Counting function implied by the generator.
    pub fn count_below(&self, bound: f64) -> u64 {
        let finite = self.finite.iter().filter(|&&x| x <= bound).count() as u64;
        finite
            + self
                .branches
                .iter()
                .map(|b| b.count_below(bound) * b.multiplicity as u64)
                .sum::<u64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaSumOptions {
    /// Terms summed explicitly per branch.
    pub cutoff: usize,
    /// Number of Bernoulli corrections in the Euler–Maclaurin tail.
    pub tail_order: usize,
    /// Largest admissible tail residual.
    pub tolerance: f64,
}

impl Default for ZetaSumOptions {
    fn default() -> Self {
        Self {
            cutoff: 10_000,
            tail_order: 4,
            tolerance: 1e-10,
        }
    }
}

/// ζ-data together with a bound on what the truncation left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedZeta {
    pub data: ZetaData,
    /// Size of the first omitted Euler–Maclaurin term, summed over branches.
    pub tail_residual: f64,
    /// Rounding bound of the explicit sums.
    pub rounding_bound: f64,
}

impl TruncatedZeta {
    pub fn residual(&self) -> f64 {
        self.tail_residual + self.rounding_bound
    }
}

/// B_2, B_4, …, B_16.
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// m-th x-derivative of ln((a x + b)² + μ²) at the point where a x + b = y.
fn log_derivative(m: usize, slope: f64, y: f64, mu: f64) -> f64 {
    let z = num_complex::Complex64::new(y, mu);
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    2.0 * sign * slope.powi(m as i32) * factorial(m - 1) * z.powi(-(m as i32)).re
}

/// ζ(0) and ζ′(0) of Σ_{n ≥ n0} λ(n)^{-s}, continued to s = 0.
///
/// The integral ∫_{n0}^∞ ((a x + b)² + μ²)^{-s} dx is continued in closed form;
/// the Euler–Maclaurin corrections act on ln λ.
fn branch_tail(b: &QuadraticBranch, n0: u64, order: usize) -> (f64, f64, f64) {
    let a = b.slope;
    let x = b.root(n0 as f64);
    let mu = b.shift.sqrt();
    let lam0 = x * x + b.shift;

    let z0 = -x / a + 0.5;
    let integral_prime = if x > 0.0 {
        (2.0 * x * x.ln() - 2.0 * x) / a
            - (2.0 * mu * (mu / x).atan() - x * (mu * mu / (x * x)).ln_1p()) / a
    } else {
        // x = 0 only for a zero-offset branch starting at its root; handled
        // by the caller shifting n0 past it.
        f64::NAN
    };
    let mut zp = integral_prime - 0.5 * lam0.ln();
    for k in 1..=order {
        let m = 2 * k - 1;
        zp += BERNOULLI_EVEN[k - 1] / factorial(2 * k) * log_derivative(m, a, x, mu);
    }
    let next = 2 * order + 1;
    let residual = (BERNOULLI_EVEN[order] / factorial(2 * order + 2)
        * log_derivative(next, a, x, mu))
    .abs();
    (z0, zp, residual)
}

/// ζ(0), ζ′(0) of a sequence by explicit summation of the first `cutoff`
/// terms of every branch plus an Euler–Maclaurin tail.
pub fn zeta_from_sequence(seq: &EigenvalueSeq, opts: ZetaSumOptions) -> Result<TruncatedZeta> {
    if opts.cutoff < 100 {
        return Err(invalid("cutoff", format!("must be ≥ 100, got {}", opts.cutoff)));
    }
    if opts.tail_order == 0 || opts.tail_order >= BERNOULLI_EVEN.len() {
        return Err(invalid(
            "tail_order",
            format!("must be in 1..={}", BERNOULLI_EVEN.len() - 1),
        ));
    }

    let mut zeta0 = KahanSum::new();
    let mut zeta_prime = KahanSum::new();
    let mut kernel = 0usize;
    let mut residual = 0.0;

    for &lam in &seq.finite {
        if lam == 0.0 {
            kernel += 1;
        } else {
            zeta0.add(1.0);
            zeta_prime.add(-lam.ln());
        }
    }

    for b in &seq.branches {
        let mult = b.multiplicity as f64;
        let n0 = b.start + opts.cutoff as u64;
        let mut logs = KahanSum::new();
        let mut branch_kernel = 0usize;
        for n in b.start..n0 {
            let lam = b.value(n);
            if lam == 0.0 {
                branch_kernel += 1;
            } else {
                logs.add(lam.ln());
            }
        }
        let explicit_count = opts.cutoff - branch_kernel;
        let (t0, tp, res) = branch_tail(b, n0, opts.tail_order);
        zeta0.add(mult * (explicit_count as f64 + t0));
        zeta_prime.add(-mult * logs.value());
        zeta_prime.add(mult * tp);
        kernel += branch_kernel * b.multiplicity as usize;
        residual += mult * res;
    }

    if residual > opts.tolerance {
        return Err(Error::TailNotConverged {
            cutoff: opts.cutoff,
            residual,
            tolerance: opts.tolerance,
        });
    }

    let rounding_bound = 8.0 * f64::EPSILON * zeta_prime.abs_total();
    Ok(TruncatedZeta {
        data: ZetaData::new(zeta0.value(), zeta_prime.value(), kernel),
        tail_residual: residual,
        rounding_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dirichlet(len: f64, mu: f64) -> EigenvalueSeq {
        EigenvalueSeq::new(vec![QuadraticBranch::new(PI / len, 0.0, mu * mu, 1, 1).unwrap()], vec![])
            .unwrap()
    }

    #[test]
    fn dirichlet_interval_matches_riemann_continuation() {
        // ζ(s) = (π/L)^{-2s} ζ_R(2s): ζ(0) = −½, ζ′(0) = −ln(2L)
        let out = zeta_from_sequence(&dirichlet(3.0, 0.0), ZetaSumOptions::default()).unwrap();
        assert!((out.data.zeta_at_zero + 0.5).abs() < 1e-12);
        assert!((out.data.log_det - 6f64.ln()).abs() < 1e-10);
        assert!(out.data.is_consistent());
    }

    #[test]
    fn empty_spectrum() {
        let seq = EigenvalueSeq::new(vec![], vec![0.0, 0.0]).unwrap();
        let out = zeta_from_sequence(&seq, ZetaSumOptions::default()).unwrap();
        assert_eq!(out.data, ZetaData::empty(2));
    }

    #[test]
    fn kernel_in_branch_is_skipped() {
        // {(πk)² : k ≥ 0} minus its kernel: ζ(s) = π^{-2s} ζ_R(2s)
        let seq = EigenvalueSeq::new(vec![QuadraticBranch::new(PI, 0.0, 0.0, 0, 1).unwrap()], vec![])
            .unwrap();
        let out = zeta_from_sequence(&seq, ZetaSumOptions::default()).unwrap();
        assert_eq!(out.data.kernel_dim, 1);
        assert!((out.data.zeta_at_zero + 0.5).abs() < 1e-12);
        assert!((out.data.log_det - (2.0 * PI).ln() + PI.ln()).abs() < 1e-10);
    }

    #[test]
    fn small_cutoff_is_rejected() {
        let opts = ZetaSumOptions {
            cutoff: 10,
            ..Default::default()
        };
        assert!(matches!(
            zeta_from_sequence(&dirichlet(1.0, 0.0), opts),
            Err(Error::InvalidArgument { name: "cutoff", .. })
        ));
    }

    #[test]
    fn unconverged_tail_reports_residual() {
        // huge slope relative to the cutoff point keeps the tail terms large
        let opts = ZetaSumOptions {
            cutoff: 100,
            tail_order: 1,
            tolerance: 1e-30,
        };
        match zeta_from_sequence(&dirichlet(1.0, 0.0), opts) {
            Err(Error::TailNotConverged { residual, .. }) => assert!(residual > 1e-30),
            other => panic!("expected TailNotConverged, got {other:?}"),
        }
    }

    #[test]
    fn count_below_matches_window() {
        let seq = dirichlet(2.5, 0.7);
        for bound in [0.1, 1.0, 10.0, 123.4] {
            assert_eq!(seq.window(bound).len() as u64, seq.count_below(bound));
        }
    }

    #[test]
    fn scaling_and_power() {
        let d = ZetaData::new(-0.5, -2.0, 0);
        assert!((d.scaled(4.0).log_det - (2.0 - 0.5 * 4f64.ln())).abs() < 1e-15);
        assert_eq!(d.power(0.5).log_det, 1.0);
    }
}
