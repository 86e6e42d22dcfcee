//! Least-squares fits used by the sweeps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which quantity the polynomial in 1/R is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// value ≈ c₀ + c₁/R + c₂/R²; limit c₀.
    Direct,
    /// 1/value ≈ c₀ + c₁/R + c₂/R²; limit 1/c₀.
    Reciprocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub r: f64,
    pub value: f64,
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: FitModel,
    pub limit: f64,
    pub coefficients: [f64; 3],
    pub residual_norm: f64,
    /// Bound on the limit from |c₁|/R_max + |c₂|/R_max², mapped to value space.
    pub uncertainty: f64,
    pub points: Vec<FitPoint>,
}

fn solve(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.svd(true, true);
    let s = &svd.singular_values;
    let (max, min) = s.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &v| (hi.max(v), lo.min(v)));
    if !(min > 0.0) || max / min > 1e12 {
        return Err(Error::IllConditionedFit(format!(
            "design matrix condition number {:e}",
            max / min
        )));
    }
    svd.solve(&b, 0.0).map_err(|e| Error::IllConditionedFit(e.to_string()))
}

/// Fit c₀ + c₁/R + c₂/R² to `values` (or their reciprocals).
pub fn fit_inverse_powers(rs: &[f64], values: &[f64], model: FitModel) -> Result<FitReport> {
    if rs.len() != values.len() || rs.len() < 4 {
        return Err(Error::IllConditionedFit(format!(
            "need ≥ 4 rows with one value each, got {} R and {} values",
            rs.len(),
            values.len()
        )));
    }
    if values.iter().chain(rs).any(|v| !v.is_finite()) {
        return Err(Error::IllConditionedFit("non-finite input".into()));
    }
    let target: Vec<f64> = match model {
        FitModel::Direct => values.to_vec(),
        FitModel::Reciprocal => values.iter().map(|v| 1.0 / v).collect(),
    };
    let a = DMatrix::from_fn(rs.len(), 3, |i, j| rs[i].powi(-(j as i32)));
    let c = solve(a.clone(), DVector::from_vec(target.clone()))?;
    let fitted_target = &a * &c;
    let residual_norm = (DVector::from_vec(target) - &fitted_target).norm();
    let r_max = rs.iter().cloned().fold(0.0, f64::max);
    let bound = c[1].abs() / r_max + c[2].abs() / (r_max * r_max);
    let (limit, uncertainty) = match model {
        FitModel::Direct => (c[0], bound),
        FitModel::Reciprocal => (1.0 / c[0], bound / (c[0] * c[0])),
    };
    let points = rs
        .iter()
        .zip(values)
        .zip(fitted_target.iter())
        .map(|((&r, &value), &f)| FitPoint {
            r,
            value,
            fitted: match model {
                FitModel::Direct => f,
                FitModel::Reciprocal => 1.0 / f,
            },
        })
        .collect();
    Ok(FitReport {
        model,
        limit,
        coefficients: [c[0], c[1], c[2]],
        residual_norm,
        uncertainty,
        points,
    })
}

/// Slope and intercept of the least-squares line y ≈ intercept + slope·x.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::IllConditionedFit("need ≥ 2 points".into()));
    }
    let a = DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
    let c = solve(a, DVector::from_column_slice(ys))?;
    Ok((c[1], c[0]))
}
