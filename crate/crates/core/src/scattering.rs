//! Scattering on the zero-mode space, model operators Δ(U), and the
//! small-eigenvalue laws.
//!
//! Attaching half-infinite cylinders to both ends of a piece of interior
//! length a gives a full line, so a zero-mode wave entering one end leaves
//! the other with phase e^{iλa} and no reflection.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::glue::{zero_modes, GlueGeometry, GlueMode};
use crate::mat2::{inner, Mat2, C64};
use crate::spectral::fiber::FiberSpectrum;
use crate::spectral::zeta::{
    zeta_from_sequence, EigenvalueSeq, QuadraticBranch, ZetaData, ZetaSumOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Piece {
    One,
    Two,
}

impl Piece {
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Piece::One),
            2 => Ok(Piece::Two),
            _ => Err(invalid("piece", format!("must be 1 or 2, got {i}"))),
        }
    }
}

/// λ ↦ e^{iλ·length} · S_j on each zero mode j, with S_j a fixed unitary.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringFamily {
    pub length: f64,
    pub at_zero: Vec<Mat2>,
    /// Upper end of the zero-mode window (first nonzero fiber frequency).
    pub threshold: f64,
}

fn swap(w: C64) -> Mat2 {
    let z = C64::new(0.0, 0.0);
    Mat2::new(z, w, w.conj(), z)
}

fn threshold(fiber: &FiberSpectrum) -> f64 {
    fiber.mu_min().unwrap_or(f64::INFINITY)
}

impl ScatteringFamily {
    pub fn piece(piece: Piece, geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<Self> {
        let modes = zero_modes(geom, fiber)?;
        let (length, at_zero) = match piece {
            Piece::One => (geom.a1, modes.iter().map(|_| swap(C64::new(1.0, 0.0))).collect()),
            Piece::Two => (geom.a2, modes.iter().map(|m| swap(m.gauge())).collect()),
        };
        Ok(Self {
            length,
            at_zero,
            threshold: threshold(fiber),
        })
    }

    /// C₁₂(λ) = C₁(λ) C₂(λ).
    pub fn composite(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<Self> {
        let c1 = Self::piece(Piece::One, geom, fiber)?;
        let c2 = Self::piece(Piece::Two, geom, fiber)?;
        Ok(Self {
            length: c1.length + c2.length,
            at_zero: c1.at_zero.iter().zip(&c2.at_zero).map(|(a, b)| *a * *b).collect(),
            threshold: c1.threshold,
        })
    }

    pub fn at(&self, lambda: f64) -> Result<Vec<Mat2>> {
        if lambda.abs() >= self.threshold {
            return Err(Error::NotInZeroModeWindow {
                lambda,
                threshold: self.threshold,
            });
        }
        let phase = C64::from_polar(1.0, lambda * self.length);
        Ok(self.at_zero.iter().map(|m| m.scale(phase)).collect())
    }

    /// dC/dλ at λ = 0.
    pub fn derivative_at_zero(&self) -> Vec<Mat2> {
        let i_len = C64::new(0.0, self.length);
        self.at_zero.iter().map(|m| m.scale(i_len)).collect()
    }

    /// Largest deviation from unitarity at λ.
    pub fn unitarity_defect(&self, lambda: f64) -> Result<f64> {
        Ok(self
            .at(lambda)?
            .iter()
            .map(|m| (*m * m.adjoint()).distance(&Mat2::identity()))
            .fold(0.0, f64::max))
    }

    /// Largest deviation of C(λ)C(−λ) from the identity.
    pub fn functional_equation_defect(&self, lambda: f64) -> Result<f64> {
        let plus = self.at(lambda)?;
        let minus = self.at(-lambda)?;
        Ok(plus
            .iter()
            .zip(&minus)
            .map(|(a, b)| (*a * *b).distance(&Mat2::identity()))
            .fold(0.0, f64::max))
    }
}

pub fn scattering_matrix(
    piece: Piece,
    lambda: f64,
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
) -> Result<Vec<Mat2>> {
    ScatteringFamily::piece(piece, geom, fiber)?.at(lambda)
}

/// Continuous eigenphases of a family on a λ-grid starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenphaseTrack {
    pub lambdas: Vec<f64>,
    /// `phases[j][n]`: phase j at `lambdas[n]`; two per zero mode.
    pub phases: Vec<Vec<f64>>,
}

impl EigenphaseTrack {
    pub fn at_zero(&self) -> Vec<f64> {
        self.phases.iter().map(|p| p[0]).collect()
    }
}

fn wrap_near(angle: f64, target: f64) -> f64 {
    angle + 2.0 * PI * ((target - angle) / (2.0 * PI)).round()
}

/// Track the eigenphases from λ = 0 to `lambda_max` with |Δλ|·length < π/4.
pub fn track_eigenphases(family: &ScatteringFamily, lambda_max: f64) -> Result<EigenphaseTrack> {
    let max_step = PI / (4.0 * family.length.max(f64::MIN_POSITIVE)) * 0.99;
    let steps = ((lambda_max.abs() / max_step).ceil() as usize).max(1);
    let lambdas: Vec<f64> = (0..=steps)
        .map(|n| lambda_max * n as f64 / steps as f64)
        .collect();
    let mut phases: Vec<Vec<f64>> = Vec::new();
    for (n, &lam) in lambdas.iter().enumerate() {
        let mats = family.at(lam)?;
        let current: Vec<f64> = mats
            .iter()
            .flat_map(|m| m.eigenvalues().map(|z| z.arg()))
            .collect();
        if n == 0 {
            phases = current.iter().map(|&p| vec![p]).collect();
            continue;
        }
        // per mode, assign the two new phases to the two tracks by continuity
        for (j, pair) in current.chunks(2).enumerate() {
            let (t0, t1) = (2 * j, 2 * j + 1);
            let last0 = *phases[t0].last().unwrap();
            let last1 = *phases[t1].last().unwrap();
            let keep = (wrap_near(pair[0], last0) - last0).abs() + (wrap_near(pair[1], last1) - last1).abs();
            let cross = (wrap_near(pair[1], last0) - last0).abs() + (wrap_near(pair[0], last1) - last1).abs();
            let (p0, p1) = if keep <= cross { (pair[0], pair[1]) } else { (pair[1], pair[0]) };
            phases[t0].push(wrap_near(p0, last0));
            phases[t1].push(wrap_near(p1, last1));
        }
    }
    Ok(EigenphaseTrack { lambdas, phases })
}

/// C₁₂ family together with its eigenphase track on [0, `lambda_max`].
pub fn c12_family(
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
    lambda_max: f64,
) -> Result<(ScatteringFamily, EigenphaseTrack)> {
    let fam = ScatteringFamily::composite(geom, fiber)?;
    let track = track_eigenphases(&fam, lambda_max)?;
    Ok((fam, track))
}

/// Eigenphases of C₁₂(0) in [0, 2π): θ_j and 2π − θ_j per zero mode.
pub fn c12_phases(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<Vec<f64>> {
    Ok(zero_modes(geom, fiber)?
        .iter()
        .flat_map(|m| [m.theta, (2.0 * PI - m.theta) % (2.0 * PI)])
        .collect())
}

/// Eigenphases of C̄_i = −C_i(0): 0 and π per zero mode.
pub fn cbar_phases(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<Vec<f64>> {
    Ok(zero_modes(geom, fiber)?.iter().flat_map(|_| [0.0, PI]).collect())
}

/// The `count` smallest eigenvalues (πk + α_j/2)², k ∈ ℤ, with multiplicity.
pub fn model_spectrum(phases: &[f64], count: usize) -> Vec<f64> {
    let k_max = count as i64 + 1;
    let mut out: Vec<f64> = phases
        .iter()
        .flat_map(|&a| (-k_max..=k_max).map(move |k| (PI * k as f64 + a / 2.0).powi(2)))
        .collect();
    out.sort_by(f64::total_cmp);
    out.truncate(count);
    out
}

/// Squares of the positive roots λ_k = πk + α_j/2 > 0 with λ_k² ≤ `bound`,
/// ascending. Each nonzero model eigenvalue appears once per pair k, −k − α/π.
pub fn model_positive_spectrum(phases: &[f64], bound: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let top = bound.max(0.0).sqrt();
    for &a in phases {
        let mut k = (-a / (2.0 * PI)).floor() as i64;
        loop {
            let root = PI * k as f64 + a / 2.0;
            if root > top {
                break;
            }
            if root > 0.0 {
                out.push(root * root);
            }
            k += 1;
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Model eigenvalues ≤ `bound`.
pub fn model_window(phases: &[f64], bound: f64) -> Vec<f64> {
    let count = model_eigen_seq(phases).count_below(bound) as usize;
    model_spectrum(phases, count)
}

pub fn model_eigen_seq(phases: &[f64]) -> EigenvalueSeq {
    let branches = phases
        .iter()
        .flat_map(|&a| {
            [
                QuadraticBranch::new(PI, a / 2.0, 0.0, 0, 1),
                QuadraticBranch::new(PI, -a / 2.0, 0.0, 1, 1),
            ]
        })
        .collect::<Result<Vec<_>>>()
        .expect("phases in [0, 2π) give monotone branches");
    EigenvalueSeq {
        branches,
        finite: vec![],
    }
}

fn is_kernel_phase(a: f64) -> bool {
    let r = a.rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r) < 1e-14
}

/// log det_ζ Δ(U) = log 4^d ∏ sin²(α_j/2).
pub fn model_logdet(phases: &[f64]) -> Result<f64> {
    if let Some(&a) = phases.iter().find(|&&a| is_kernel_phase(a)) {
        return Err(Error::ModelKernel { phase: a });
    }
    model_logdet_starred(phases)
}

/// log det*_ζ Δ(U); each kernel phase contributes 4.
pub fn model_logdet_starred(phases: &[f64]) -> Result<f64> {
    Ok(phases
        .iter()
        .map(|&a| {
            if is_kernel_phase(a) {
                4f64.ln()
            } else {
                4f64.ln() + (a / 2.0).sin().powi(2).ln()
            }
        })
        .sum())
}

/// Truncated-ζ value of log det* Δ(U).
pub fn model_logdet_numeric(phases: &[f64]) -> Result<ZetaData> {
    Ok(zeta_from_sequence(&model_eigen_seq(phases), ZetaSumOptions::default())?.data)
}

/// det((Id − C₁₂)/2) on the zero-mode space.
pub fn half_defect_det(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<f64> {
    let c12 = ScatteringFamily::composite(geom, fiber)?;
    Ok(c12
        .at_zero
        .iter()
        .map(|m| (Mat2::identity() - *m).scale(C64::new(0.5, 0.0)).det().re)
        .product())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelIdentities {
    pub h_y: usize,
    pub h_1: usize,
    pub h_2: usize,
    pub c12_phases: Vec<f64>,
    /// log det_ζ ¼Δ(C₁₂): formula, truncated-ζ numerics, identity right side.
    pub c12_formula: f64,
    pub c12_numeric: f64,
    pub c12_identity_rhs: f64,
    /// log det*_ζ Δ(C̄_i): formula, numerics, and log 2^{2h_Y}.
    pub cbar_formula: f64,
    pub cbar_numeric: f64,
    pub cbar_identity_rhs: f64,
}

impl ModelIdentities {
    pub fn max_identity_gap(&self) -> f64 {
        (self.c12_formula - self.c12_identity_rhs)
            .abs()
            .max((self.cbar_formula - self.cbar_identity_rhs).abs())
    }

    pub fn max_numeric_gap(&self) -> f64 {
        (self.c12_formula - self.c12_numeric)
            .abs()
            .max((self.cbar_formula - self.cbar_numeric).abs())
    }
}

/// Dimension of the −1 eigenspace of C_i(0), i.e. the +1 eigenspace of C̄_i.
fn minus_one_dim(family: &ScatteringFamily) -> usize {
    family
        .at_zero
        .iter()
        .flat_map(|m| m.eigenvalues())
        .filter(|z| (z + 1.0).norm() < 1e-12)
        .count()
}

pub fn model_identities(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<ModelIdentities> {
    let h_y = 2 * fiber.h0();
    let h_1 = minus_one_dim(&ScatteringFamily::piece(Piece::One, geom, fiber)?);
    let h_2 = minus_one_dim(&ScatteringFamily::piece(Piece::Two, geom, fiber)?);
    assert_eq!(h_1 + h_2, h_y, "h_Y = h₁ + h₂");

    let phases = c12_phases(geom, fiber)?;
    // ζ_{Δ(U)}(0) = 0, so the ¼ scaling leaves the determinant unchanged
    let c12_formula = model_logdet(&phases)?;
    let c12_numeric = model_logdet_numeric(&phases)?.log_det;
    let c12_identity_rhs =
        2.0 * h_y as f64 * 2f64.ln() + 2.0 * half_defect_det(geom, fiber)?.ln();

    let bar = cbar_phases(geom, fiber)?;
    let cbar_formula = model_logdet_starred(&bar)?;
    let cbar_numeric = model_logdet_numeric(&bar)?.log_det;
    let cbar_identity_rhs = 2.0 * h_y as f64 * 2f64.ln();

    Ok(ModelIdentities {
        h_y,
        h_1,
        h_2,
        c12_phases: phases,
        c12_formula,
        c12_numeric,
        c12_identity_rhs,
        cbar_formula,
        cbar_numeric,
        cbar_identity_rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmallOperator {
    /// The closed manifold M_R.
    Closed,
    Piece(Piece),
}

impl SmallOperator {
    /// Factor s with (sRλ)² compared against the model eigenvalues.
    pub fn scale(&self) -> f64 {
        match self {
            SmallOperator::Closed => 2.0,
            SmallOperator::Piece(_) => 1.0,
        }
    }

    pub fn model_phases(&self, geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<Vec<f64>> {
        match self {
            SmallOperator::Closed => c12_phases(geom, fiber),
            SmallOperator::Piece(_) => cbar_phases(geom, fiber),
        }
    }
}

/// Square roots λ of the eigenvalues with λ ≤ R^{-κ}, ascending.
///
/// Only zero modes contribute: nonzero fiber modes sit above μ_min.
pub fn svalues_exact(
    op: SmallOperator,
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
    kappa: f64,
) -> Result<Vec<f64>> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(invalid("kappa", format!("must be in (0, 1], got {kappa}")));
    }
    let bound = geom.r.powf(-kappa);
    let modes = zero_modes(geom, fiber)?;
    let mut out = Vec::new();
    match op {
        SmallOperator::Piece(p) => {
            let l = match p {
                Piece::One => geom.l1(),
                Piece::Two => geom.l2(),
            };
            for _ in &modes {
                let mut n = 1;
                while PI * n as f64 / l <= bound {
                    out.push(PI * n as f64 / l);
                    n += 1;
                }
            }
        }
        SmallOperator::Closed => {
            let c = geom.circumference();
            for GlueMode { theta, .. } in &modes {
                // |2πn + θ| over n ∈ ℤ
                let n_max = (bound * c / (2.0 * PI)).ceil() as i64 + 1;
                for n in -n_max..=n_max {
                    let lam = (2.0 * PI * n as f64 + theta).abs() / c;
                    if lam <= bound && lam > 0.0 {
                        out.push(lam);
                    }
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SValuePair {
    pub exact: f64,
    pub scaled: f64,
    pub model: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SValueReport {
    pub r: f64,
    pub kappa: f64,
    pub pairs: Vec<SValuePair>,
    /// Model eigenvalues in the scaled window.
    pub model_count: usize,
    /// Counts agree, possibly after a boundary shift |R₁^{1−κ} − R^{1−κ}| ≤ π/(2s).
    pub bijective: bool,
    pub boundary_shift_used: bool,
}

impl SValueReport {
    pub fn worst_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }

    /// Pairs whose residual exceeds 5·ĉ·R^{1−2κ}.
    pub fn flagged(&self, c_hat: f64) -> Vec<SValuePair> {
        let threshold = 5.0 * c_hat * self.r.powf(1.0 - 2.0 * self.kappa);
        self.pairs.iter().copied().filter(|p| p.residual > threshold).collect()
    }
}

/// Greedy nearest-neighbor matching of (sRλ)² against the model eigenvalues
/// with positive root.
pub fn svalue_match(
    exact: &[f64],
    model_phases: &[f64],
    scale: f64,
    r: f64,
    kappa: f64,
) -> SValueReport {
    let window = (scale * r.powf(1.0 - kappa)).powi(2);
    // extra candidates so boundary pairs can still find their partner
    let pool = model_positive_spectrum(model_phases, (scale * r.powf(1.0 - kappa) + PI).powi(2));
    let window_count = pool.iter().filter(|&&v| v <= window).count();
    let mut used = vec![false; pool.len()];
    let mut pairs = Vec::with_capacity(exact.len());
    for &lam in exact {
        let scaled = (scale * r * lam).powi(2);
        let best = pool
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .min_by(|a, b| (a.1 - scaled).abs().total_cmp(&(b.1 - scaled).abs()));
        if let Some((i, &model)) = best {
            used[i] = true;
            pairs.push(SValuePair {
                exact: lam,
                scaled,
                model,
                residual: (scaled - model).abs(),
            });
        }
    }
    let exact_count = exact.len();
    let shifted = |delta: f64| {
        let w = (scale * (r.powf(1.0 - kappa) + delta).max(0.0)).powi(2);
        pool.iter().filter(|&&v| v <= w).count()
    };
    let direct = exact_count == window_count;
    let max_shift = PI / (2.0 * scale);
    let via_shift =
        !direct && (shifted(-max_shift)..=shifted(max_shift)).contains(&exact_count);
    SValueReport {
        r,
        kappa,
        pairs,
        model_count: window_count,
        bijective: pairs_are_distinct(exact_count, &used) && (direct || via_shift),
        boundary_shift_used: via_shift,
    }
}

fn pairs_are_distinct(exact_count: usize, used: &[bool]) -> bool {
    used.iter().filter(|&&u| u).count() == exact_count
}

/// Ratio of worst residuals at R and 2R over model eigenvalues matched at both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStep {
    pub r: f64,
    pub worst: f64,
    pub worst_next: f64,
    pub ratio: f64,
    pub common_families: usize,
}

pub fn residual_rate(reports: &[SValueReport]) -> Vec<RateStep> {
    reports
        .windows(2)
        .map(|w| {
            let key = |p: &SValuePair| (p.model * 1e9).round() as i64;
            let next: std::collections::BTreeMap<i64, f64> =
                w[1].pairs.iter().map(|p| (key(p), p.residual)).collect();
            let mut worst: f64 = 0.0;
            let mut worst_next: f64 = 0.0;
            let mut common = 0;
            for p in &w[0].pairs {
                if let Some(&rn) = next.get(&key(p)) {
                    worst = worst.max(p.residual);
                    worst_next = worst_next.max(rn);
                    common += 1;
                }
            }
            RateStep {
                r: w[0].r,
                worst,
                worst_next,
                ratio: worst / worst_next,
                common_families: common,
            }
        })
        .collect()
}

/// ⟨N_i φ, φ⟩ on the C_i(0) eigenvectors of one zero mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DnAsymptoticsRow {
    pub piece: usize,
    pub mode: usize,
    pub r: f64,
    /// α with iα the eigenvalue of C_i′(0) on φ₋.
    pub alpha: f64,
    pub on_minus: f64,
    pub on_plus: f64,
    /// (1/R)(1 − α/2R)^{-1}.
    pub model: f64,
    /// (1/R)(1 + α/2R)^{-1}, the opposite orientation.
    pub model_flipped: f64,
}

pub fn dn_zero_mode_asymptotics(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<Vec<DnAsymptoticsRow>> {
    crate::glue::condition_a_check(geom, fiber)?.into_result()?;
    let modes = zero_modes(geom, fiber)?;
    let r = geom.r;
    let mut rows = Vec::new();
    for (pi, piece) in [Piece::One, Piece::Two].into_iter().enumerate() {
        let fam = ScatteringFamily::piece(piece, geom, fiber)?;
        let deriv = fam.derivative_at_zero();
        for (j, mode) in modes.iter().enumerate() {
            let (vals, vecs) = hermitian_part(&fam.at_zero[j]).hermitian_eigen();
            debug_assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
            let (phi_minus, phi_plus) = (vecs[0], vecs[1]);
            let block = crate::glue::piece_block(geom, pi + 1, mode)?;
            let on_minus = inner(block.m.apply(phi_minus), phi_minus).re;
            let on_plus = inner(block.m.apply(phi_plus), phi_plus).re;
            // C′(0)φ₋ = iα φ₋
            let alpha = (inner(deriv[j].apply(phi_minus), phi_minus) / C64::new(0.0, 1.0)).re;
            rows.push(DnAsymptoticsRow {
                piece: pi + 1,
                mode: j,
                r,
                alpha,
                on_minus,
                on_plus,
                model: 1.0 / (r * (1.0 - alpha / (2.0 * r))),
                model_flipped: 1.0 / (r * (1.0 + alpha / (2.0 * r))),
            });
        }
    }
    Ok(rows)
}

/// C(0) is a Hermitian involution; symmetrize against rounding.
fn hermitian_part(m: &Mat2) -> Mat2 {
    (*m + m.adjoint()).scale(C64::new(0.5, 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetLReport {
    pub r: f64,
    pub h_y: usize,
    pub det_l: f64,
    pub rhs: f64,
}

impl DetLReport {
    pub fn relative_gap(&self) -> f64 {
        (self.det_l - self.rhs).abs() / self.rhs.abs()
    }
}

fn block_diag(blocks: &[Mat2]) -> DMatrix<C64> {
    let n = 2 * blocks.len();
    let mut out = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (j, b) in blocks.iter().enumerate() {
        for r in 0..2 {
            for c in 0..2 {
                out[(2 * j + r, 2 * j + c)] = b.m[r][c];
            }
        }
    }
    out
}

/// det L(R) against R^{-h_Y} det((Id − C₁₂)/2), L(R) = (1/R)((Id−C₁(0))/2 + (Id−C₂(0))/2).
pub fn det_l_identity(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<DetLReport> {
    let c1 = block_diag(&ScatteringFamily::piece(Piece::One, geom, fiber)?.at_zero);
    let c2 = block_diag(&ScatteringFamily::piece(Piece::Two, geom, fiber)?.at_zero);
    let n = c1.nrows();
    let id = DMatrix::<C64>::identity(n, n);

    // common fixed vectors: null space of the stacked (C_i(0) − Id)
    let mut stacked = DMatrix::from_element(2 * n, n, C64::new(0.0, 0.0));
    stacked.view_mut((0, 0), (n, n)).copy_from(&(&c1 - &id));
    stacked.view_mut((n, 0), (n, n)).copy_from(&(&c2 - &id));
    if n > 0 {
        let svd = stacked.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        if let Some((k, _)) = svd
            .singular_values
            .iter()
            .enumerate()
            .find(|(_, s)| **s < 1e-12)
        {
            let row = v_t.row(k);
            let mode = (0..n).find(|&i| row[i].norm() > 1e-8).unwrap_or(0) / 2;
            return Err(Error::CommonFixedVector {
                mode,
                vector: row.iter().map(|z| (z.re, z.im)).collect(),
            });
        }
    }

    let half = C64::new(0.5, 0.0);
    let l = ((&id - &c1) * half + (&id - &c2) * half) * C64::new(1.0 / geom.r, 0.0);
    let c12 = &c1 * &c2;
    let defect = (&id - &c12) * half;
    let det_l = if n == 0 { 1.0 } else { l.determinant().re };
    let det_defect = if n == 0 { 1.0 } else { defect.determinant().re };
    let h_y = n;
    Ok(DetLReport {
        r: geom.r,
        h_y,
        det_l,
        rhs: geom.r.powi(-(h_y as i32)) * det_defect,
    })
}

/// Small-eigenvalue heat traces compared with their model counterparts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitTracePoint {
    pub r: f64,
    pub t: f64,
    pub exact: f64,
    pub model: f64,
}

impl SplitTracePoint {
    pub fn gap(&self) -> f64 {
        (self.exact - self.model).abs()
    }
}

/// Piece: Σ_window e^{-tR²λ²} vs ½(Σ_window e^{-tν} − h_i) over Δ(C̄_i);
/// closed manifold: Σ_window e^{-tR²λ²} vs ½Σ_window e^{-tν/4} over Δ(C₁₂).
pub fn split_trace_point(
    op: SmallOperator,
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
    kappa: f64,
    t: f64,
) -> Result<SplitTracePoint> {
    let r = geom.r;
    let exact_vals = svalues_exact(op, geom, fiber, kappa)?;
    let exact: f64 = exact_vals.iter().map(|l| (-t * (r * l).powi(2)).exp()).sum();
    let phases = op.model_phases(geom, fiber)?;
    let s = op.scale();
    let window = model_window(&phases, (s * r.powf(1.0 - kappa)).powi(2));
    let model = match op {
        SmallOperator::Piece(_) => {
            let h_i = fiber.h0() as f64;
            0.5 * (window.iter().map(|v| (-t * v).exp()).sum::<f64>() - h_i)
        }
        SmallOperator::Closed => 0.5 * window.iter().map(|v| (-t * v / 4.0).exp()).sum::<f64>(),
    };
    Ok(SplitTracePoint { r, t, exact, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn fiber01() -> FiberSpectrum {
        FiberSpectrum::from_eigenvalues(&[(0.0, 1), (1.0, 1)]).unwrap()
    }

    fn geom(theta: f64, r: f64) -> GlueGeometry {
        GlueGeometry::new(1.0, 2.0, r, vec![theta]).unwrap()
    }

    #[test]
    fn piece_matrix_at_zero_is_swap() {
        let g = geom(FRAC_PI_2, 10.0);
        let c = &scattering_matrix(Piece::One, 0.0, &g, &fiber01()).unwrap()[0];
        assert!(c.distance(&Mat2::real(0.0, 1.0, 1.0, 0.0)) < 1e-15);
        let mut ev: Vec<f64> = c.eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transmission_phase() {
        let g = GlueGeometry::new(1.0, 2.0, 1.0, vec![FRAC_PI_2]).unwrap();
        let wide = FiberSpectrum::finite(&[(0.0, 1), (10.0, 1)]).unwrap();
        let c = &scattering_matrix(Piece::One, PI, &g, &wide).unwrap()[0];
        assert!((c.m[0][1] + 1.0).norm() < 1e-15);
        assert!(matches!(
            scattering_matrix(Piece::One, 1.5, &g, &fiber01()),
            Err(Error::NotInZeroModeWindow { .. })
        ));
    }

    #[test]
    fn functional_equation_and_unitarity() {
        let g = geom(1.0, 3.0);
        for piece in [Piece::One, Piece::Two] {
            let fam = ScatteringFamily::piece(piece, &g, &fiber01()).unwrap();
            assert!(fam.functional_equation_defect(0.3).unwrap() < 1e-15);
            assert!(fam.unitarity_defect(0.3).unwrap() < 1e-15);
        }
        let c12 = ScatteringFamily::composite(&g, &fiber01()).unwrap();
        assert!(c12.unitarity_defect(0.3).unwrap() < 1e-15);
    }

    #[test]
    fn c12_eigenphases() {
        let (_, track) = c12_family(&geom(FRAC_PI_2, 3.0), &fiber01(), 0.5).unwrap();
        let mut at0 = track.at_zero();
        at0.sort_by(f64::total_cmp);
        assert!((at0[0] + FRAC_PI_2).abs() < 1e-14 && (at0[1] - FRAC_PI_2).abs() < 1e-14);
        // α(λ) = λ(a₁ + a₂) ∓ θ
        for (n, &lam) in track.lambdas.iter().enumerate() {
            for p in &track.phases {
                let slope = (p[n] - p[0]) / lam.max(1e-300);
                if lam > 0.0 {
                    assert!((slope - 3.0).abs() < 1e-12);
                }
            }
        }
        let c = &ScatteringFamily::composite(&geom(PI, 3.0), &fiber01()).unwrap().at_zero[0];
        for z in c.eigenvalues() {
            assert!((z + 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn model_spectrum_examples() {
        let s = model_spectrum(&[PI], 3);
        let q = PI * PI / 4.0;
        assert!((s[0] - q).abs() < 1e-14 && (s[1] - q).abs() < 1e-14 && (s[2] - 9.0 * q).abs() < 1e-13);
        assert_eq!(model_spectrum(&[0.0], 1), vec![0.0]);
        let s = model_spectrum(&[FRAC_PI_2], 2);
        assert!((s[0] - PI * PI / 16.0).abs() < 1e-15 && (s[1] - 9.0 * PI * PI / 16.0).abs() < 1e-14);
    }

    #[test]
    fn model_determinants() {
        let v = model_logdet(&[FRAC_PI_2, 1.5 * PI]).unwrap().exp();
        assert!((v - 4.0).abs() < 1e-13);
        assert!(matches!(model_logdet(&[0.0]), Err(Error::ModelKernel { .. })));
        let num = model_logdet_numeric(&[PI]).unwrap();
        assert!((num.det() - 4.0).abs() < 1e-8);
        let star = model_logdet_numeric(&[0.0]).unwrap();
        assert_eq!(star.kernel_dim, 1);
        assert!((star.det() - 4.0).abs() < 1e-8);
    }

    #[test]
    fn identities_instance() {
        let id = model_identities(&geom(FRAC_PI_2, 10.0), &fiber01()).unwrap();
        assert_eq!((id.h_y, id.h_1, id.h_2), (2, 1, 1));
        assert!((id.c12_formula.exp() - 4.0).abs() < 1e-13);
        assert!(id.max_identity_gap() < 1e-14);
        assert!(id.max_numeric_gap() < 1e-8);
    }

    #[test]
    fn svalues_examples() {
        let g = geom(FRAC_PI_2, 10.0);
        let p = svalues_exact(SmallOperator::Piece(Piece::One), &g, &fiber01(), 0.75).unwrap();
        assert!((p[0] - PI / 21.0).abs() < 1e-15);
        let m = svalues_exact(SmallOperator::Closed, &g, &fiber01(), 0.75).unwrap();
        assert!((m[0] - FRAC_PI_2 / 43.0).abs() < 1e-15);
        let none = FiberSpectrum::finite(&[(1.0, 1)]).unwrap();
        assert!(svalues_exact(SmallOperator::Closed, &g, &none, 0.75).unwrap().is_empty());
    }

    #[test]
    fn positive_roots_halve_the_model_spectrum() {
        let q = PI * PI / 4.0;
        let s = model_positive_spectrum(&[0.0, PI], 16.0 * q);
        let want = [1.0, 4.0, 9.0, 16.0].map(|n| n * q);
        assert_eq!(s.len(), 4);
        for (a, b) in s.iter().zip(want) {
            assert!((a - b).abs() < 1e-13);
        }
        // θ and 2π − θ together give |πn + θ/2|, n ∈ ℤ
        let s = model_positive_spectrum(&[FRAC_PI_2, 1.5 * PI], 10.0);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn svalue_counts_match_without_shift() {
        let f = fiber01();
        for op in [SmallOperator::Piece(Piece::One), SmallOperator::Closed] {
            for r in [10.0, 20.0, 40.0, 80.0] {
                let g = geom(FRAC_PI_2, r);
                let ex = svalues_exact(op, &g, &f, 0.75).unwrap();
                let phases = op.model_phases(&g, &f).unwrap();
                let rep = svalue_match(&ex, &phases, op.scale(), r, 0.75);
                assert!(rep.bijective, "{op:?} R={r}: {rep:?}");
                assert_eq!(rep.pairs.len(), ex.len());
            }
        }
    }

    #[test]
    fn split_trace_model_is_close() {
        let f = fiber01();
        for op in [SmallOperator::Piece(Piece::Two), SmallOperator::Closed] {
            let gaps: Vec<f64> = [40.0, 80.0, 160.0]
                .iter()
                .map(|&r| {
                    let p = split_trace_point(op, &geom(FRAC_PI_2, r), &f, 0.75, 1.0).unwrap();
                    p.gap() / p.exact
                })
                .collect();
            assert!(gaps[2] < gaps[1] && gaps[1] < gaps[0] && gaps[2] < 0.05, "{op:?}: {gaps:?}");
        }
    }

    #[test]
    fn piece_quantization_has_both_parities() {
        let g = geom(FRAC_PI_2, 10.0);
        let p = svalues_exact(SmallOperator::Piece(Piece::One), &g, &fiber01(), 0.5).unwrap();
        let ks: Vec<i64> = p.iter().map(|l| (2.0 * 10.0 * l / PI).round() as i64).collect();
        assert!(ks.contains(&1) && ks.contains(&2));
    }

    #[test]
    fn dn_asymptotics_instance() {
        let rows = dn_zero_mode_asymptotics(&geom(FRAC_PI_2, 10.0), &fiber01()).unwrap();
        let r1 = rows.iter().find(|r| r.piece == 1).unwrap();
        assert!((r1.alpha + 1.0).abs() < 1e-15);
        assert!((r1.on_minus - 2.0 / 21.0).abs() < 1e-16);
        assert!((r1.model - 2.0 / 21.0).abs() < 1e-16);
        assert!(r1.on_plus.abs() < 1e-16);
    }

    #[test]
    fn det_l_examples() {
        let rep = det_l_identity(&geom(FRAC_PI_2, 10.0), &fiber01()).unwrap();
        assert!((rep.det_l - 0.005).abs() < 1e-15);
        assert!(rep.relative_gap() < 1e-12);
        let rep = det_l_identity(&geom(PI, 10.0), &fiber01()).unwrap();
        assert!((rep.det_l - 0.01).abs() < 1e-15);
        let err = det_l_identity(&geom(0.0, 10.0), &fiber01()).unwrap_err();
        assert!(matches!(err, Error::CommonFixedVector { mode: 0, .. }));
    }
}
