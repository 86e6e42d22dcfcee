//! Stretching experiments: sweeps in R, limit extrapolation, the gluing
//! constant, and the heat-trace comparisons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_inverse_powers, linear_fit, FitModel, FitReport};
use crate::glue::{condition_a_check, logdet_closed, relative_heat_trace, GlueGeometry};
use crate::scattering::{half_defect_det, model_identities};
use crate::spectral::fiber::{fiber_sqrt_zeta_data, fiber_zeta_data, FiberSpectrum};
use crate::spectral::heat::{mellin_parts, HeatExpansion, MellinOptions, EULER_GAMMA};

pub const DEFAULT_GRID: [f64; 5] = [4.0, 8.0, 16.0, 32.0, 64.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    pub log_det_m: f64,
    pub log_det_m1: f64,
    pub log_det_m2: f64,
    pub log_det_r: f64,
    /// R^{h_Y} · det Δ_R / (det Δ₁ det Δ₂).
    pub scaled_ratio: f64,
    /// R^{h_Y} · det R_R.
    pub scaled_r: f64,
    pub bfk_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub fiber: FiberSpectrum,
    pub geometry: GlueGeometry,
    pub h_y: usize,
    pub zeta_y_at_zero: f64,
    pub rows: Vec<SweepRow>,
    /// (R, error) for rows that could not be evaluated.
    pub failures: Vec<(f64, String)>,
}

impl SweepResult {
    pub fn rs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.r).collect()
    }
}

fn sweep_row(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<(SweepRow, usize, f64)> {
    let d = logdet_closed(geom, fiber)?;
    let log_scale = d.h_y as f64 * geom.r.ln();
    Ok((
        SweepRow {
            r: geom.r,
            log_det_m: d.log_det_m,
            log_det_m1: d.log_det_m1,
            log_det_m2: d.log_det_m2,
            log_det_r: d.log_det_r,
            scaled_ratio: (d.log_ratio() + log_scale).exp(),
            scaled_r: (d.log_det_r + log_scale).exp(),
            bfk_ratio: d.log_bfk_ratio().exp(),
        },
        d.h_y,
        d.zeta_y_at_zero,
    ))
}

/// Evaluate every determinant column on the R grid; rows run in parallel and
/// are collected in grid order.
pub fn sweep(template: &GlueGeometry, fiber: &FiberSpectrum, grid: &[f64]) -> Result<SweepResult> {
    condition_a_check(template, fiber)?.into_result()?;
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let results: Vec<(f64, Result<(SweepRow, usize, f64)>)> = grid
        .par_iter()
        .map(|&r| (r, template.with_r(r).and_then(|g| sweep_row(&g, fiber))))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut h_y = 2 * fiber.h0();
    let mut zeta_y = 2.0 * fiber_zeta_data(fiber).zeta_at_zero;
    for (r, res) in results {
        match res {
            Ok((row, h, z)) => {
                rows.push(row);
                h_y = h;
                zeta_y = z;
            }
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    Ok(SweepResult {
        fiber: fiber.clone(),
        geometry: template.clone(),
        h_y,
        zeta_y_at_zero: zeta_y,
        rows,
        failures,
    })
}

/// Right-hand sides of the two limit formulas and the gluing constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub h_y: usize,
    pub zeta_y_at_zero: f64,
    /// log det*_ζ Δ_Y on the doubled cross-section.
    pub log_det_star_y: f64,
    /// log det*_ζ √Δ_Y on the doubled cross-section.
    pub log_det_star_sqrt_y: f64,
    /// det((Id − C₁₂)/2).
    pub half_defect: f64,
    /// 2^{−h_Y} √det*Δ_Y · det((Id − C₁₂)/2).
    pub main_limit: f64,
    /// 2^{ζ_{Δ_Y}(0)} det*√Δ_Y · det((Id − C₁₂)/2).
    pub dn_limit: f64,
    /// 2^{−ζ_{Δ_Y}(0) − h_Y}.
    pub bfk_constant: f64,
}

impl Predictions {
    /// |main/dn − bfk| relative to bfk.
    pub fn triangle_gap(&self) -> f64 {
        (self.main_limit / self.dn_limit - self.bfk_constant).abs() / self.bfk_constant
    }
}

pub fn predictions(geom: &GlueGeometry, fiber: &FiberSpectrum) -> Result<Predictions> {
    let fz = fiber_zeta_data(fiber);
    let sz = fiber_sqrt_zeta_data(fiber);
    let h_y = 2 * fiber.h0();
    let zeta_y = 2.0 * fz.zeta_at_zero;
    let log_det_star_y = 2.0 * fz.log_det;
    let log_det_star_sqrt_y = 2.0 * sz.sqrt.log_det;
    let half_defect = half_defect_det(geom, fiber)?;
    let ln2 = 2f64.ln();
    let main = (-(h_y as f64) * ln2 + 0.5 * log_det_star_y).exp() * half_defect;
    let dn = (zeta_y * ln2 + log_det_star_sqrt_y).exp() * half_defect;
    let bfk = (-(zeta_y + h_y as f64) * ln2).exp();
    let p = Predictions {
        h_y,
        zeta_y_at_zero: zeta_y,
        log_det_star_y,
        log_det_star_sqrt_y,
        half_defect,
        main_limit: main,
        dn_limit: dn,
        bfk_constant: bfk,
    };
    assert!(p.triangle_gap() < 1e-13, "main = C(Y)·dn fails: {p:?}");
    Ok(p)
}

/// Extrapolated limit against a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub predicted: f64,
    pub fit: FitReport,
    /// Plain c₀ + c₁/R + c₂/R² fit of the same column, for comparison.
    pub direct_fit_limit: f64,
    pub tolerance: f64,
    /// (R, |value/predicted − 1|).
    pub pointwise: Vec<(f64, f64)>,
    /// p in |log value − log predicted| ~ R^{−p}.
    pub convergence_exponent: f64,
    pub pass: bool,
}

impl LimitCheck {
    pub fn fit_error(&self) -> f64 {
        (self.fit.limit - self.predicted).abs()
    }

    pub fn pointwise_at(&self, r: f64) -> Option<f64> {
        self.pointwise.iter().find(|(x, _)| *x == r).map(|p| p.1)
    }
}

fn convergence_exponent(rs: &[f64], values: &[f64], predicted: f64) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rs
        .iter()
        .zip(values)
        .filter_map(|(&r, &v)| {
            let d = (v.ln() - predicted.ln()).abs();
            (d > 0.0).then(|| (r.ln(), d.ln()))
        })
        .unzip();
    Ok(-linear_fit(&xs, &ys)?.0)
}

fn check_limit(rs: &[f64], values: &[f64], predicted: f64, tolerance: f64) -> Result<LimitCheck> {
    let fit = fit_inverse_powers(rs, values, FitModel::Reciprocal)?;
    let direct = fit_inverse_powers(rs, values, FitModel::Direct)?;
    let pointwise = rs
        .iter()
        .zip(values)
        .map(|(&r, &v)| (r, (v / predicted - 1.0).abs()))
        .collect();
    let convergence_exponent = convergence_exponent(rs, values, predicted)?;
    let pass = (fit.limit - predicted).abs() <= tolerance;
    Ok(LimitCheck {
        predicted,
        fit,
        direct_fit_limit: direct.limit,
        tolerance,
        pointwise,
        convergence_exponent,
        pass,
    })
}

/// R^{h_Y} det Δ_R/(det Δ₁ det Δ₂) → 2^{−h_Y} √det*Δ_Y · det((Id − C₁₂)/2).
pub fn verify_theorem_main(sweep: &SweepResult, tolerance: f64) -> Result<LimitCheck> {
    let p = predictions(&sweep.geometry, &sweep.fiber)?;
    let vals: Vec<f64> = sweep.rows.iter().map(|r| r.scaled_ratio).collect();
    check_limit(&sweep.rs(), &vals, p.main_limit, tolerance)
}

/// R^{h_Y} det R_R → 2^{ζ_{Δ_Y}(0)} det*√Δ_Y · det((Id − C₁₂)/2).
pub fn verify_theorem_dn(sweep: &SweepResult, tolerance: f64) -> Result<LimitCheck> {
    let p = predictions(&sweep.geometry, &sweep.fiber)?;
    let vals: Vec<f64> = sweep.rows.iter().map(|r| r.scaled_r).collect();
    check_limit(&sweep.rs(), &vals, p.dn_limit, tolerance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfkCheck {
    pub predicted: f64,
    /// (R, ratio, relative deviation).
    pub rows: Vec<(f64, f64, f64)>,
    pub tolerance: f64,
    pub pass: bool,
}

impl BfkCheck {
    pub fn worst(&self) -> f64 {
        self.rows.iter().map(|r| r.2).fold(0.0, f64::max)
    }

    /// Largest relative spread of the ratio across rows.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .rows
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.1), hi.max(r.1)));
        (hi - lo) / lo
    }
}

/// Per-row det Δ_R/(det Δ₁ det Δ₂ det R_R) = 2^{−ζ_{Δ_Y}(0) − h_Y}.
pub fn verify_bfk_corollary(sweep: &SweepResult, tolerance: f64) -> Result<BfkCheck> {
    if sweep.rows.len() < 2 {
        return Err(Error::IllConditionedFit("need ≥ 2 rows".into()));
    }
    let predicted = predictions(&sweep.geometry, &sweep.fiber)?.bfk_constant;
    let rows: Vec<(f64, f64, f64)> = sweep
        .rows
        .iter()
        .map(|r| (r.r, r.bfk_ratio, (r.bfk_ratio / predicted - 1.0).abs()))
        .collect();
    let pass = rows.iter().all(|r| r.2 <= tolerance);
    Ok(BfkCheck {
        predicted,
        rows,
        tolerance,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CancellationPoint {
    pub r: f64,
    pub t: f64,
    /// R²/t.
    pub x: f64,
    pub value: f64,
    pub half_fiber_trace: f64,
    pub log_abs_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    pub points: Vec<CancellationPoint>,
    pub fit_r: f64,
    pub c1: f64,
    pub c2: f64,
    /// (R, t, log(deviation / bound)) at the validation radii.
    pub validation: Vec<(f64, f64, f64)>,
    pub pass: bool,
}

/// The t-grid {0.25, 1, 4, R} used at each radius, without repeats.
pub fn cancellation_times(r: f64) -> Vec<f64> {
    let mut ts = vec![0.25, 1.0, 4.0, r];
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Fit log|relative trace − ½Tr e^{-tΔ_Y}| ≈ log c₁ − c₂R²/t at `fit_r`, take
/// c₁ as the envelope there, and require the bound within a factor 2 on the
/// other radii.
pub fn verify_lemma_cancellation(
    template: &GlueGeometry,
    fiber: &FiberSpectrum,
    radii: &[f64],
    fit_r: f64,
    min_c2: f64,
) -> Result<CancellationReport> {
    let mut points = Vec::new();
    for &r in radii {
        let g = template.with_r(r)?;
        for t in cancellation_times(r) {
            let rel = relative_heat_trace(&g, fiber, t)?;
            let log_dev = rel.log_abs_deviation.ok_or_else(|| {
                Error::Quadrature(format!("deviation cancels exactly at R = {r}, t = {t}"))
            })?;
            points.push(CancellationPoint {
                r,
                t,
                x: r * r / t,
                value: rel.value,
                half_fiber_trace: rel.half_fiber_trace,
                log_abs_deviation: log_dev,
            });
        }
    }
    let at_fit: Vec<&CancellationPoint> = points.iter().filter(|p| p.r == fit_r).collect();
    let xs: Vec<f64> = at_fit.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = at_fit.iter().map(|p| p.log_abs_deviation).collect();
    let (slope, _) = linear_fit(&xs, &ys)?;
    let c2 = -slope;
    let log_c1 = at_fit
        .iter()
        .map(|p| p.log_abs_deviation + c2 * p.x)
        .fold(f64::NEG_INFINITY, f64::max);
    let validation: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|p| p.r != fit_r)
        .map(|p| (p.r, p.t, p.log_abs_deviation - (log_c1 - c2 * p.x)))
        .collect();
    let pass = c2 >= min_c2 && validation.iter().all(|v| v.2 <= 2f64.ln());
    Ok(CancellationReport {
        points,
        fit_r,
        c1: log_c1.exp(),
        c2,
        validation,
        pass,
    })
}

/// Small- and large-time halves of the relative ζ′(0) at one R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub r: f64,
    pub epsilon: f64,
    pub split_time: f64,
    pub small_time: f64,
    pub large_time: f64,
    /// small_time − (h_Y/2)(γ + (2−ε) log R).
    pub small_corrected: f64,
    /// large_time + (h_Y/2)(γ − ε log R).
    pub large_corrected: f64,
    /// ½ ζ′_{Δ_Y}(0).
    pub small_limit: f64,
    /// ½(ζ′_{¼Δ(C₁₂)}(0) − ζ′_{Δ(C̄₁)}(0) − ζ′_{Δ(C̄₂)}(0)).
    pub large_limit: f64,
    /// −log(det Δ_R/(det Δ₁ det Δ₂)) from the closed forms.
    pub closed_zeta_prime: f64,
    /// −log(limit) + h_Y log R.
    pub asymptotic_zeta_prime: f64,
}

impl SplitReport {
    pub fn heat_zeta_prime(&self) -> f64 {
        self.small_time + self.large_time
    }

    /// ε-independent comparison with the limit formula.
    pub fn asymptotic_gap(&self) -> f64 {
        (self.heat_zeta_prime() - self.asymptotic_zeta_prime).abs()
    }

    pub fn route_gap(&self) -> f64 {
        (self.heat_zeta_prime() - self.closed_zeta_prime).abs()
    }
}

/// Mellin transform of the relative heat trace split at R^{2−ε}.
pub fn verify_smalltime_largetime_split(
    geom: &GlueGeometry,
    fiber: &FiberSpectrum,
    epsilon: f64,
) -> Result<SplitReport> {
    if !fiber.is_finite() {
        return Err(crate::error::invalid(
            "fiber",
            "the time split is evaluated for finite fibers",
        ));
    }
    condition_a_check(geom, fiber)?.into_result()?;
    let r = geom.r;
    let h_y = 2 * fiber.h0();
    let split_time = r.powf(2.0 - epsilon);

    // relative trace ~ ½Tr e^{-tΔ_Y} = Σ mult e^{-μ²t} at small t
    let modes: Vec<(f64, f64)> = match fiber {
        FiberSpectrum::Finite { modes } => modes.iter().map(|m| (m.mu, m.mult as f64)).collect(),
        FiberSpectrum::Circle { .. } => unreachable!(),
    };
    let c0: f64 = modes.iter().map(|m| m.1).sum();
    let c1: f64 = -modes.iter().map(|m| m.1 * m.0 * m.0).sum::<f64>();
    let exp = HeatExpansion::new(vec![(0.0, c0), (1.0, c1)]);
    let parts = mellin_parts(
        |t| relative_heat_trace(geom, fiber, t).map(|v| v.value).unwrap_or(f64::NAN),
        &exp,
        MellinOptions {
            split: split_time,
            tolerance: 1e-13,
        },
    )?;

    let half_h = h_y as f64 / 2.0;
    let small_corrected = parts.small_time - half_h * (EULER_GAMMA + (2.0 - epsilon) * r.ln());
    let large_corrected = parts.large_time + half_h * (EULER_GAMMA - epsilon * r.ln());
    let small_limit = fiber_zeta_data(fiber).zeta_prime_at_zero;
    let ids = model_identities(geom, fiber)?;
    let large_limit = 0.5 * (-ids.c12_formula + 2.0 * ids.cbar_formula);
    let closed = logdet_closed(geom, fiber)?;
    let p = predictions(geom, fiber)?;
    Ok(SplitReport {
        r,
        epsilon,
        split_time,
        small_time: parts.small_time,
        large_time: parts.large_time,
        small_corrected,
        large_corrected,
        small_limit,
        large_limit,
        closed_zeta_prime: -closed.log_ratio(),
        asymptotic_zeta_prime: -p.main_limit.ln() + h_y as f64 * r.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn fiber01() -> FiberSpectrum {
        FiberSpectrum::from_eigenvalues(&[(0.0, 1), (1.0, 1)]).unwrap()
    }

    #[test]
    fn predictions_for_reference_fiber() {
        let g = GlueGeometry::new(1.0, 2.0, 4.0, vec![FRAC_PI_2]).unwrap();
        let p = predictions(&g, &fiber01()).unwrap();
        assert!((p.main_limit - 0.125).abs() < 1e-15);
        assert!((p.dn_limit - 2.0).abs() < 1e-14);
        assert!((p.bfk_constant - 0.0625).abs() < 1e-16);
        let g = GlueGeometry::new(1.0, 2.0, 4.0, vec![PI]).unwrap();
        let p = predictions(&g, &fiber01()).unwrap();
        assert!((p.main_limit - 0.25).abs() < 1e-15 && (p.dn_limit - 4.0).abs() < 1e-14);
    }

    #[test]
    fn circle_fiber_prediction() {
        let g = GlueGeometry::new(1.0, 2.0, 4.0, vec![FRAC_PI_2]).unwrap();
        let p = predictions(&g, &FiberSpectrum::circle(2.0 * PI).unwrap()).unwrap();
        assert!((p.main_limit - PI * PI / 2.0).abs() < 1e-12);
        assert!((p.bfk_constant - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sweep_is_sorted_and_monotone() {
        let g = GlueGeometry::new(1.0, 2.0, 1.0, vec![FRAC_PI_2]).unwrap();
        let s = sweep(&g, &fiber01(), &[16.0, 4.0, 8.0, 32.0]).unwrap();
        assert_eq!(s.rs(), vec![4.0, 8.0, 16.0, 32.0]);
        let v: Vec<f64> = s.rows.iter().map(|r| r.scaled_ratio).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1] && w[1] < 0.125));
    }

    #[test]
    fn no_zero_modes_means_no_scaling() {
        let f = FiberSpectrum::finite(&[(1.0, 1)]).unwrap();
        let g = GlueGeometry::new(1.0, 2.0, 1.0, vec![]).unwrap();
        let s = sweep(&g, &f, &[4.0, 8.0]).unwrap();
        for r in &s.rows {
            let plain = (r.log_det_m - r.log_det_m1 - r.log_det_m2).exp();
            assert!((r.scaled_ratio - plain).abs() < 1e-15 * plain);
        }
    }
}
