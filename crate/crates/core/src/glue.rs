//! The glued model: a circle base of circumference a₁ + a₂ + 4R times the
//! fiber, cut at two points into Dirichlet cylinders of lengths a_i + 2R.
//!
//! Each fiber mode decouples, so every determinant is a sum over modes of the
//! 1-D closed forms. For the circle fiber the mode sums diverge linearly in μ
//! and are regularized with the fiber ζ-function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::base1d::{
    dn_block, logdet_circle_mode, logdet_dirichlet_mode, normalize_phase, DNBlock, ModeProblem,
};
use crate::error::{invalid, Error, Result};
use crate::mat2::{inner, Mat2, C64};
use crate::spectral::fiber::{fiber_sqrt_zeta_data, fiber_zeta_data, FiberSpectrum};
use crate::spectral::heat::{heat_trace_mode, winding_terms, Base};
use crate::spectral::quad::integrate;
use crate::spectral::sum::{signed_log_sum_exp, KahanSum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueGeometry {
    pub a1: f64,
    pub a2: f64,
    pub r: f64,
    /// One phase per fiber zero mode.
    pub holonomy: Vec<f64>,
}

impl GlueGeometry {
    pub fn new(a1: f64, a2: f64, r: f64, holonomy: Vec<f64>) -> Result<Self> {
        for (name, v) in [("a1", a1), ("a2", a2), ("R", r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if let Some(bad) = holonomy.iter().find(|x| !x.is_finite()) {
            return Err(invalid("holonomy", format!("phase {bad} is not finite")));
        }
        let holonomy = holonomy.into_iter().map(normalize_phase).collect();
        Ok(Self {
            a1,
            a2,
            r,
            holonomy,
        })
    }

    pub fn with_r(&self, r: f64) -> Result<Self> {
        Self::new(self.a1, self.a2, r, self.holonomy.clone())
    }

    pub fn l1(&self) -> f64 {
        self.a1 + 2.0 * self.r
    }

    pub fn l2(&self) -> f64 {
        self.a2 + 2.0 * self.r
    }

    pub fn circumference(&self) -> f64 {
        let c = self.a1 + self.a2 + 4.0 * self.r;
        debug_assert!((self.l1() + self.l2() - c).abs() <= 4.0 * f64::EPSILON * c);
        c
    }

    pub fn lengths(&self) -> [f64; 2] {
        [self.l1(), self.l2()]
    }
}

/// A fiber eigenspace as seen by the base problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlueMode {
    pub mu: f64,
    pub mult: u32,
    /// Loop phase; nonzero only on zero modes.
    pub theta: f64,
}

impl GlueMode {
    /// Boundary phase of piece 2 (piece 1 is ungauged).
    pub fn gauge(&self) -> C64 {
        C64::from_polar(1.0, self.theta)
    }
}

/// Zero modes paired with their holonomy phases.
pub fn zero_modes(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<Vec<GlueMode>> {
    let h0 = fiber.h0();
    if h0 == 0 {
        return Ok(vec![]);
    }
    if geom.holonomy.len() != h0 {
        return Err(Error::HolonomyMismatch {
            expected: h0,
            got: geom.holonomy.len(),
        });
    }
    Ok(geom
        .holonomy
        .iter()
        .map(|&theta| GlueMode {
            mu: 0.0,
            mult: 1,
            theta,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionAReport {
    pub ok: bool,
    /// Zero modes with trivial holonomy.
    pub offending_modes: Vec<usize>,
    /// Common +1 eigenvectors of C₁(0) and C₂(0), per offending mode.
    pub common_fixed_vectors: Vec<(usize, [(f64, f64); 2])>,
}

impl ConditionAReport {
    pub fn into_result(self) -> Result<()> {
        if self.ok {
            Ok(())
        } else {
            Err(Error::ConditionA {
                modes: self.offending_modes,
            })
        }
    }
}

pub fn condition_a_check(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<ConditionAReport> {
    let modes = zero_modes(geom, fiber)?;
    let offending: Vec<usize> = modes
        .iter()
        .enumerate()
        .filter(|(_, m)| m.theta == 0.0)
        .map(|(j, _)| j)
        .collect();
    // C₁(0) fixes (1, 1), C₂(0) fixes (1, e^{-iθ}); they coincide iff θ = 0
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let common = offending.iter().map(|&j| (j, [(s, 0.0), (s, 0.0)])).collect();
    Ok(ConditionAReport {
        ok: offending.is_empty(),
        offending_modes: offending,
        common_fixed_vectors: common,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlueOptions {
    /// Most fiber modes summed for an analytic fiber.
    pub fiber_cutoff: usize,
    /// Remainder terms below this are treated as converged.
    pub remainder_floor: f64,
}

impl Default for GlueOptions {
    fn default() -> Self {
        Self {
            fiber_cutoff: 1_000_000,
            remainder_floor: 1e-18,
        }
    }
}

/// Per-mode contributions. For the circle fiber the nonzero rows hold only
/// the convergent remainders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub mu: f64,
    pub mult: u32,
    pub theta: f64,
    pub log_det_m: f64,
    pub log_det_m1: f64,
    pub log_det_m2: f64,
    pub log_det_r: f64,
}

/// Regularized values of the divergent fiber sums (circle fiber only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counterterms {
    pub m: f64,
    pub m1: f64,
    pub m2: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledDeterminants {
    pub log_det_m: f64,
    pub log_det_m1: f64,
    pub log_det_m2: f64,
    pub log_det_r: f64,
    /// dim ker Δ_Y for the doubled cross-section.
    pub h_y: usize,
    /// ζ_{Δ_Y}(0) for the doubled cross-section.
    pub zeta_y_at_zero: f64,
    pub rows: Vec<ModeRow>,
    pub counterterms: Option<Counterterms>,
}

impl AssembledDeterminants {
    /// log of det Δ_R / (det Δ₁ · det Δ₂).
    pub fn log_ratio(&self) -> f64 {
        self.log_det_m - self.log_det_m1 - self.log_det_m2
    }

    /// log of det Δ_R / (det Δ₁ · det Δ₂ · det R_R).
    pub fn log_bfk_ratio(&self) -> f64 {
        self.log_ratio() - self.log_det_r
    }
}

/// Sum of the two interval DN blocks for one mode.
pub fn mode_block(geom: &GlueGeometry, mode: &GlueMode) -> Result<Mat2> {
    let n1 = dn_block(geom.l1(), mode.mu, C64::new(1.0, 0.0))?;
    let n2 = dn_block(geom.l2(), mode.mu, mode.gauge())?;
    Ok(n1.m + n2.m)
}

fn block_logdet(block: &Mat2, index: usize) -> Result<f64> {
    let d = block.det().re;
    if d > 0.0 && d.is_finite() {
        Ok(d.ln())
    } else {
        Err(Error::SingularBlock { mode: index })
    }
}

fn finite_row(geom: &GlueGeometry, mode: &GlueMode, index: usize) -> Result<ModeRow> {
    let mult = mode.mult as f64;
    let m = logdet_circle_mode(geom.circumference(), mode.theta, mode.mu)?;
    let m1 = logdet_dirichlet_mode(geom.l1(), mode.mu)?;
    let m2 = logdet_dirichlet_mode(geom.l2(), mode.mu)?;
    let r = block_logdet(&mode_block(geom, mode)?, index)?;
    Ok(ModeRow {
        mu: mode.mu,
        mult: mode.mult,
        theta: mode.theta,
        log_det_m: mult * m,
        log_det_m1: mult * m1,
        log_det_m2: mult * m2,
        log_det_r: mult * r,
    })
}

/// log det(block)/(4μ²) for a nonzero mode with trivial phase, in e^{-x} form.
pub fn r_remainder(l1: f64, l2: f64, mu: f64) -> f64 {
    let (e1, e2) = ((-mu * l1).exp(), (-mu * l2).exp());
    let p = (-(-2.0 * mu * l1).exp_m1()) * (-(-2.0 * mu * l2).exp_m1());
    ((e1 - e2).powi(2) / p).ln_1p()
}

/// Walk the nonzero circle-fiber modes until `bound(μ)` drops below `floor`.
fn circle_fiber_sum<F: FnMut(f64, u32) -> Result<()>>(
    circumference: f64,
    decay_length: f64,
    opts: GlueOptions,
    mut visit: F,
) -> Result<usize> {
    for k in 1..=opts.fiber_cutoff {
        let mode = FiberSpectrum::circle_mode(circumference, k);
        visit(mode.mu, mode.mult)?;
        let bound = 4.0 * (-mode.mu * decay_length).exp() / mode.mu.min(1.0);
        if bound < opts.remainder_floor {
            return Ok(k);
        }
    }
    let last = FiberSpectrum::circle_mode(circumference, opts.fiber_cutoff).mu;
    Err(Error::FiberNotConverged {
        cutoff: opts.fiber_cutoff,
        last_term: (-last * decay_length).exp(),
    })
}

/// log det_ζ of Δ_R, Δ₁, Δ₂ and R_R from the per-mode closed forms.
pub fn logdet_closed(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<AssembledDeterminants> {
    logdet_closed_with(geom, fiber, GlueOptions::default())
}

pub fn logdet_closed_with(
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
    opts: GlueOptions,
) -> Result<AssembledDeterminants> {
    condition_a_check(geom, fiber)?.into_result()?;
    let fz = fiber_zeta_data(fiber);
    let h_y = 2 * fiber.h0();
    let zeta_y_at_zero = 2.0 * fz.zeta_at_zero;

    let mut rows = Vec::new();
    for (j, mode) in zero_modes(geom, fiber)?.iter().enumerate() {
        rows.push(finite_row(geom, mode, j)?);
    }

    let counterterms = match fiber {
        FiberSpectrum::Finite { .. } => {
            for (j, fm) in fiber.nonzero_modes().enumerate() {
                let mode = GlueMode {
                    mu: fm.mu,
                    mult: fm.mult,
                    theta: 0.0,
                };
                rows.push(finite_row(geom, &mode, rows.len().max(j))?);
            }
            None
        }
        FiberSpectrum::Circle { circumference } => {
            let [l1, l2] = geom.lengths();
            let c = geom.circumference();
            circle_fiber_sum(*circumference, 2.0 * l1.min(l2), opts, |mu, mult| {
                let m = mult as f64;
                rows.push(ModeRow {
                    mu,
                    mult,
                    theta: 0.0,
                    log_det_m: m * 2.0 * (-(-mu * c).exp()).ln_1p(),
                    log_det_m1: m * (-(-2.0 * mu * l1).exp()).ln_1p(),
                    log_det_m2: m * (-(-2.0 * mu * l2).exp()).ln_1p(),
                    log_det_r: m * r_remainder(l1, l2, mu),
                });
                Ok(())
            })?;
            // Σ mult·μ·length → length · ζ_{√Δ}(−1); Σ mult·(−log μ) → ½ ζ′_Δ(0);
            // R_R blocks → det*(2√Δ_Y) on the doubled fiber
            let z = fiber.sqrt_zeta_at_minus_one();
            let half_zp = 0.5 * fz.zeta_prime_at_zero;
            let doubled = fiber_sqrt_zeta_data(fiber).doubled;
            Some(Counterterms {
                m: c * z,
                m1: l1 * z + half_zp,
                m2: l2 * z + half_zp,
                r: 2.0 * doubled.log_det,
            })
        }
    };

    let total = |pick: fn(&ModeRow) -> f64, extra: f64| -> f64 {
        let mut s: KahanSum = rows.iter().map(pick).collect();
        s.add(extra);
        s.value()
    };
    let ct = counterterms.unwrap_or(Counterterms {
        m: 0.0,
        m1: 0.0,
        m2: 0.0,
        r: 0.0,
    });
    Ok(AssembledDeterminants {
        log_det_m: total(|r| r.log_det_m, ct.m),
        log_det_m1: total(|r| r.log_det_m1, ct.m1),
        log_det_m2: total(|r| r.log_det_m2, ct.m2),
        log_det_r: total(|r| r.log_det_r, ct.r),
        h_y,
        zeta_y_at_zero,
        rows,
        counterterms,
    })
}

/// The operator R_R = N₁ + N₂ restricted to the listed modes.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledR {
    pub modes: Vec<GlueMode>,
    pub blocks: Vec<Mat2>,
    pub log_det: f64,
}

/// Blocks of R_R on the zero modes and (finite fiber) every nonzero mode,
/// or the first `circle_modes` nonzero modes of a circle fiber.
pub fn assemble_r(
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
    circle_modes: usize,
) -> Result<AssembledR> {
    condition_a_check(geom, fiber)?.into_result()?;
    let mut modes = zero_modes(geom, fiber)?;
    let nonzero: Box<dyn Iterator<Item = _>> = match fiber {
        FiberSpectrum::Finite { .. } => fiber.nonzero_modes(),
        FiberSpectrum::Circle { .. } => Box::new(fiber.nonzero_modes().take(circle_modes)),
    };
    modes.extend(nonzero.map(|m| GlueMode {
        mu: m.mu,
        mult: m.mult,
        theta: 0.0,
    }));
    let blocks = modes
        .iter()
        .map(|m| mode_block(geom, m))
        .collect::<Result<Vec<_>>>()?;
    let log_det = match fiber {
        FiberSpectrum::Finite { .. } => {
            let mut s = KahanSum::new();
            for (j, (b, m)) in blocks.iter().zip(&modes).enumerate() {
                s.add(m.mult as f64 * block_logdet(b, j)?);
            }
            s.value()
        }
        FiberSpectrum::Circle { .. } => logdet_closed(geom, fiber)?.log_det_r,
    };
    Ok(AssembledR {
        modes,
        blocks,
        log_det,
    })
}

/// det Δ_R / (det Δ₁ · det Δ₂ · det R_R).
pub fn bfk_ratio(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<f64> {
    Ok(logdet_closed(geom, fiber)?.log_bfk_ratio().exp())
}

/// Per-mode Tr(block⁻¹) − 1/μ for a nonzero mode with trivial phase.
pub fn trace_perp_mode(l1: f64, l2: f64, mu: f64) -> f64 {
    let (x1, x2) = (mu * l1, mu * l2);
    let p = (-(-2.0 * x1).exp_m1()) * (-(-2.0 * x2).exp_m1());
    let num = 4.0 * (-x1 - x2).exp() * (-(-x1 - x2).exp_m1()) / p;
    let coth = |x: f64| -(1.0 + (-2.0 * x).exp()) / (-2.0 * x).exp_m1();
    let csch = |x: f64| -2.0 * (-x).exp() / (-2.0 * x).exp_m1();
    let den = 1.0 + coth(x1) * coth(x2) - csch(x1) * csch(x2);
    num / (mu * den)
}

/// Tr⊥(R_R⁻¹ − (2√Δ_Y)⁻¹): the nonzero-mode part of the inverse trace.
pub fn trace_perp_inverse_diff(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<f64> {
    let [l1, l2] = geom.lengths();
    let mut s = KahanSum::new();
    match fiber {
        FiberSpectrum::Finite { .. } => {
            for m in fiber.nonzero_modes() {
                s.add(m.mult as f64 * trace_perp_mode(l1, l2, m.mu));
            }
        }
        FiberSpectrum::Circle { circumference } => {
            circle_fiber_sum(
                *circumference,
                geom.circumference(),
                GlueOptions::default(),
                |mu, mult| {
                    s.add(mult as f64 * trace_perp_mode(l1, l2, mu));
                    Ok(())
                },
            )?;
        }
    }
    Ok(s.value())
}

/// Inverse trace of one 1-D problem by the eigen-sum and the heat integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatRouteReport {
    pub problem: ModeProblem,
    pub eigen_sum: f64,
    pub heat_integral: f64,
    pub quadrature_error: f64,
}

impl HeatRouteReport {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.eigen_sum.abs().max(f64::MIN_POSITIVE);
        (self.eigen_sum - self.heat_integral).abs() / scale
    }
}

/// Σ λ⁻¹ against ∫₀^∞ (Tr e^{-tA} − dim ker) dt, with t = u² near 0.
pub fn heat_route_inverse_trace(problem: &ModeProblem) -> Result<HeatRouteReport> {
    let eigen_sum = problem.inverse_trace()?;
    let kernel = problem.kernel_dim() as f64;
    let f = |t: f64| problem.heat_trace(t).map(|v| v - kernel);
    // t_high: trace below 1e-20 of its value at t = 1
    let scale = f(1.0)?.abs().max(1.0);
    let mut t_high = 1.0;
    while f(t_high)?.abs() > 1e-20 * scale {
        t_high *= 2.0;
        if t_high > 1e15 {
            return Err(Error::Quadrature("heat trace does not decay".into()));
        }
    }
    let u_high = t_high.sqrt();
    let out = integrate(
        |u: f64| {
            if u == 0.0 {
                // 2u · L/√(4π u²)
                return 2.0 * problem.base.length() / (4.0 * PI).sqrt();
            }
            2.0 * u * f(u * u).unwrap_or(f64::NAN)
        },
        0.0,
        u_high,
        1e-13,
    )?;
    Ok(HeatRouteReport {
        problem: *problem,
        eigen_sum,
        heat_integral: out.value,
        quadrature_error: out.error_estimate,
    })
}

/// Heat-route check on the three base problems of one glue mode.
pub fn heat_route_crosscheck(
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
    mode_index: usize,
) -> Result<[HeatRouteReport; 3]> {
    let mut modes = zero_modes(geom, fiber)?;
    let needed = mode_index + 1;
    modes.extend(
        fiber
            .nonzero_modes()
            .take(needed.saturating_sub(modes.len()))
            .map(|m| GlueMode {
                mu: m.mu,
                mult: m.mult,
                theta: 0.0,
            }),
    );
    let mode = modes
        .get(mode_index)
        .ok_or_else(|| invalid("mode_index", format!("fiber has no mode {mode_index}")))?;
    let m = ModeProblem::circle(geom.circumference(), mode.theta, mode.mu)?;
    let p1 = ModeProblem::dirichlet(geom.l1(), mode.mu)?;
    let p2 = ModeProblem::dirichlet(geom.l2(), mode.mu)?;
    Ok([
        heat_route_inverse_trace(&m)?,
        heat_route_inverse_trace(&p1)?,
        heat_route_inverse_trace(&p2)?,
    ])
}

/// ⟨R_R φ, φ⟩ on zero mode `j` for the would-be common fixed vector
/// φ = (1, e^{-iθ})/√2. Vanishes exactly when θ = 0.
pub fn zero_mode_form_on_fixed_vector(geom: &GlueGeometry, fiber: &FiberSpectrum, j: usize) -> Result<f64> {
    let modes = zero_modes(geom, fiber)?;
    let mode = modes
        .get(j)
        .ok_or_else(|| invalid("j", format!("fiber has {} zero modes", modes.len())))?;
    let block = mode_block(geom, mode)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi = [C64::new(s, 0.0), mode.gauge().conj() * s];
    Ok(inner(block.apply(phi), phi).re)
}

/// DN block of one piece on one mode.
pub fn piece_block(geom: &GlueGeometry, piece: usize, mode: &GlueMode) -> Result<DNBlock> {
    match piece {
        1 => dn_block(geom.l1(), mode.mu, C64::new(1.0, 0.0)),
        2 => dn_block(geom.l2(), mode.mu, mode.gauge()),
        _ => Err(invalid("piece", format!("must be 1 or 2, got {piece}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeTrace {
    /// Tr e^{-tΔ_R} − Tr e^{-tΔ₁} − Tr e^{-tΔ₂}.
    pub value: f64,
    /// ½ Tr e^{-tΔ_Y}.
    pub half_fiber_trace: f64,
    /// log |value − half_fiber_trace| from the Poisson windings; `None` if 0.
    pub log_abs_deviation: Option<f64>,
    pub deviation_sign: f64,
}

/// Fiber modes with e^{-μ²t} above 1e-30, zero modes first.
fn heat_modes(geom: &GlueGeometry, fiber: &FiberSpectrum, t: f64) -> Result<Vec<GlueMode>> {
    let mut modes = zero_modes(geom, fiber)?;
    for m in fiber.nonzero_modes() {
        if m.mu * m.mu * t > 69.0 {
            break;
        }
        modes.push(GlueMode {
            mu: m.mu,
            mult: m.mult,
            theta: 0.0,
        });
    }
    Ok(modes)
}

pub fn relative_heat_trace(geom: &GlueGeometry, fiber: &FiberSpectrum, t: f64) -> Result<RelativeTrace> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::HeatArgument(t));
    }
    let [l1, l2] = geom.lengths();
    let c = geom.circumference();
    let mut value = KahanSum::new();
    let mut half = KahanSum::new();
    let mut windings = Vec::new();
    for m in heat_modes(geom, fiber, t)? {
        let mult = m.mult as f64;
        let circle = Base::Circle { c, theta: m.theta };
        let (d1, d2) = (Base::Dirichlet { l: l1 }, Base::Dirichlet { l: l2 });
        value.add(mult * heat_trace_mode(circle, m.mu, t)?);
        value.add(-mult * heat_trace_mode(d1, m.mu, t)?);
        value.add(-mult * heat_trace_mode(d2, m.mu, t)?);
        half.add(mult * (-m.mu * m.mu * t).exp());
        let weight = mult.ln() - m.mu * m.mu * t;
        windings.extend(winding_terms(circle, t).into_iter().map(|(l, s)| (l + weight, s)));
        for d in [d1, d2] {
            windings.extend(winding_terms(d, t).into_iter().map(|(l, s)| (l + weight, -s)));
        }
    }
    let (log_abs_deviation, deviation_sign) = match signed_log_sum_exp(&windings) {
        Some((l, s)) => (Some(l), s),
        None => (None, 0.0),
    };
    Ok(RelativeTrace {
        value: value.value(),
        half_fiber_trace: half.value(),
        log_abs_deviation,
        deviation_sign,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn fiber01() -> FiberSpectrum {
        FiberSpectrum::from_eigenvalues(&[(0.0, 1), (1.0, 1)]).unwrap()
    }

    #[test]
    fn condition_a() {
        let f = fiber01();
        let ok = GlueGeometry::new(1.0, 2.0, 4.0, vec![FRAC_PI_2]).unwrap();
        assert!(condition_a_check(&ok, &f).unwrap().ok);
        let bad = GlueGeometry::new(1.0, 2.0, 4.0, vec![0.0]).unwrap();
        let rep = condition_a_check(&bad, &f).unwrap();
        assert_eq!(rep.offending_modes, vec![0]);
        assert!(matches!(logdet_closed(&bad, &f), Err(Error::ConditionA { .. })));
        let empty = FiberSpectrum::finite(&[(1.0, 1)]).unwrap();
        assert!(condition_a_check(&bad, &empty).unwrap().ok);
        let wrong = GlueGeometry::new(1.0, 2.0, 4.0, vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            condition_a_check(&wrong, &f),
            Err(Error::HolonomyMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn spec_instance_totals() {
        let g = GlueGeometry::new(1.0, 2.0, 4.0, vec![FRAC_PI_2]).unwrap();
        let d = logdet_closed(&g, &fiber01()).unwrap();
        let expect = 2f64.ln() + (2.0 * 19f64.cosh() - 2.0).ln();
        assert!((d.log_det_m - expect).abs() < 1e-13);
        let r = assemble_r(&g, &fiber01(), 0).unwrap();
        let prod: f64 = r.blocks.iter().map(|b| b.det().re.ln()).sum();
        assert!((r.log_det - prod).abs() < 1e-14);
        assert!((r.log_det - d.log_det_r).abs() < 1e-14);
    }

    #[test]
    fn zero_mode_block_det() {
        let g = GlueGeometry::new(1.0, 2.0, 4.0, vec![1.1]).unwrap();
        let mode = zero_modes(&g, &fiber01()).unwrap()[0];
        let det = mode_block(&g, &mode).unwrap().det().re;
        let expect = (2.0 - 2.0 * 1.1f64.cos()) / (g.l1() * g.l2());
        assert!((det - expect).abs() < 1e-15);
    }

    #[test]
    fn bfk_constant() {
        for r in [2.0, 16.0] {
            let g = GlueGeometry::new(1.0, 2.0, r, vec![FRAC_PI_2]).unwrap();
            assert!((bfk_ratio(&g, &fiber01()).unwrap() * 16.0 - 1.0).abs() < 1e-10);
            let single = FiberSpectrum::finite(&[(0.0, 1)]).unwrap();
            assert!((bfk_ratio(&g, &single).unwrap() * 4.0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn holonomy_ignored_without_zero_modes() {
        let f = FiberSpectrum::finite(&[(1.5, 2)]).unwrap();
        let a = logdet_closed(&GlueGeometry::new(1.0, 2.0, 3.0, vec![]).unwrap(), &f).unwrap();
        let b = logdet_closed(&GlueGeometry::new(1.0, 2.0, 3.0, vec![2.0]).unwrap(), &f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn large_mode_block_approaches_two_mu() {
        let g = GlueGeometry::new(1.0, 1.0, 5.0, vec![]).unwrap();
        let mode = GlueMode {
            mu: 1.0,
            mult: 1,
            theta: 0.0,
        };
        let block = mode_block(&g, &mode).unwrap();
        let (vals, _) = block.hermitian_eigen();
        // eigenvalues split by the coupling 2 csch(11); their product is 4 up to e^{-22}
        let split = 2.0 / 11f64.sinh();
        assert!((vals[1] - vals[0] - 2.0 * split).abs() < 1e-14);
        assert!((block.det().re.sqrt() - 2.0).abs() < 3e-10);
    }

    #[test]
    fn trace_perp_matches_block_inverse() {
        let g = GlueGeometry::new(1.0, 1.5, 1.0, vec![]).unwrap();
        let mode = GlueMode {
            mu: 0.7,
            mult: 1,
            theta: 0.0,
        };
        let inv = mode_block(&g, &mode).unwrap().inverse().unwrap();
        let direct = inv.trace().re - 1.0 / 0.7;
        let closed = trace_perp_mode(g.l1(), g.l2(), 0.7);
        assert!((direct - closed).abs() < 1e-12 * closed.abs().max(1e-3));
        assert_eq!(
            trace_perp_inverse_diff(&g, &FiberSpectrum::finite(&[(0.0, 1)]).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn fixed_vector_form_vanishes_only_without_twist() {
        let f = fiber01();
        let flat = GlueGeometry::new(1.0, 2.0, 4.0, vec![0.0]).unwrap();
        assert!(zero_mode_form_on_fixed_vector(&flat, &f, 0).unwrap().abs() < 1e-17);
        let twisted = GlueGeometry::new(1.0, 2.0, 4.0, vec![FRAC_PI_2]).unwrap();
        assert!(zero_mode_form_on_fixed_vector(&twisted, &f, 0).unwrap() > 1e-3);
    }
}
