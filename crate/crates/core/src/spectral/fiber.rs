//! Cross-section spectra and their ζ-data.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::zeta::ZetaData;
use crate::error::{invalid, Result};

/// ζ_R(−1).
pub const RIEMANN_ZETA_MINUS_ONE: f64 = -1.0 / 12.0;

/// One eigenspace of the cross-section Laplacian: eigenvalue `mu²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberMode {
    pub mu: f64,
    pub mult: u32,
}

/// Spectrum of the cross-section operator, stored by frequency μ = √eigenvalue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FiberSpectrum {
    Finite { modes: Vec<FiberMode> },
    /// Flat circle: μ_k = 2πk/circumference, double for k ≥ 1.
    Circle { circumference: f64 },
}

impl FiberSpectrum {
    /// Finite fiber from (frequency, multiplicity) pairs.
    pub fn finite(modes: &[(f64, u32)]) -> Result<Self> {
        let mut out: Vec<FiberMode> = Vec::with_capacity(modes.len());
        for &(mu, mult) in modes {
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(invalid("mu", format!("frequency must be finite and ≥ 0, got {mu}")));
            }
            if mult == 0 {
                return Err(invalid("mult", "multiplicity must be ≥ 1"));
            }
            out.push(FiberMode { mu, mult });
        }
        out.sort_by(|a, b| a.mu.total_cmp(&b.mu));
        // merge repeated frequencies so the zero mode appears once
        let mut merged: Vec<FiberMode> = Vec::with_capacity(out.len());
        for m in out {
            match merged.last_mut() {
                Some(last) if last.mu == m.mu => last.mult += m.mult,
                _ => merged.push(m),
            }
        }
        Ok(Self::Finite { modes: merged })
    }

    /// Finite fiber from (eigenvalue, multiplicity) pairs.
    pub fn from_eigenvalues(eigs: &[(f64, u32)]) -> Result<Self> {
        if let Some(&(bad, _)) = eigs.iter().find(|(e, _)| !(*e >= 0.0 && e.is_finite())) {
            return Err(invalid("eigenvalue", format!("must be finite and ≥ 0, got {bad}")));
        }
        let modes: Vec<(f64, u32)> = eigs.iter().map(|&(e, m)| (e.sqrt(), m)).collect();
        Self::finite(&modes)
    }

    pub fn circle(circumference: f64) -> Result<Self> {
        if !(circumference > 0.0 && circumference.is_finite()) {
            return Err(invalid(
                "circumference",
                format!("must be positive, got {circumference}"),
            ));
        }
        Ok(Self::Circle { circumference })
    }

    /// Kernel dimension h₀.
    pub fn h0(&self) -> usize {
        match self {
            Self::Finite { modes } => modes
                .iter()
                .filter(|m| m.mu == 0.0)
                .map(|m| m.mult as usize)
                .sum(),
            Self::Circle { .. } => 1,
        }
    }

    /// Smallest nonzero frequency, if any.
    pub fn mu_min(&self) -> Option<f64> {
        match self {
            Self::Finite { modes } => modes.iter().map(|m| m.mu).find(|&mu| mu > 0.0),
            Self::Circle { circumference } => Some(2.0 * PI / circumference),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite { .. })
    }

    /// The k-th eigenspace in increasing order (k = 0 is the kernel for a circle).
    pub fn circle_mode(circumference: f64, k: usize) -> FiberMode {
        FiberMode {
            mu: 2.0 * PI * k as f64 / circumference,
            mult: if k == 0 { 1 } else { 2 },
        }
    }

    /// Eigenspaces with nonzero frequency, in increasing order. A circle fiber
    /// yields an unbounded iterator.
    pub fn nonzero_modes(&self) -> Box<dyn Iterator<Item = FiberMode> + '_> {
        match self {
            Self::Finite { modes } => Box::new(modes.iter().copied().filter(|m| m.mu > 0.0)),
            Self::Circle { circumference } => {
                let c = *circumference;
                Box::new((1..).map(move |k| Self::circle_mode(c, k)))
            }
        }
    }

    /// ζ_{√Δ}(−1) = Σ mult·μ, continued for the circle.
    pub fn sqrt_zeta_at_minus_one(&self) -> f64 {
        match self {
            Self::Finite { modes } => modes.iter().map(|m| m.mult as f64 * m.mu).sum(),
            Self::Circle { circumference } => 2.0 * (2.0 * PI / circumference) * RIEMANN_ZETA_MINUS_ONE,
        }
    }
}

/// ζ-data of the cross-section Laplacian on the complement of its kernel.
pub fn fiber_zeta_data(fiber: &FiberSpectrum) -> ZetaData {
    match fiber {
        FiberSpectrum::Finite { modes } => {
            let eigs: Vec<f64> = modes
                .iter()
                .flat_map(|m| std::iter::repeat_n(m.mu * m.mu, m.mult as usize))
                .collect();
            ZetaData::from_finite(&eigs)
        }
        // ζ(s) = 2 (2π/L)^{-2s} ζ_R(2s)
        FiberSpectrum::Circle { circumference } => {
            ZetaData::new(-1.0, -2.0 * circumference.ln(), 1)
        }
    }
}

/// ζ-data of √Δ and of 2√Δ on the complement of the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtZeta {
    pub sqrt: ZetaData,
    pub doubled: ZetaData,
}

pub fn fiber_sqrt_zeta_data(fiber: &FiberSpectrum) -> SqrtZeta {
    let sqrt = fiber_zeta_data(fiber).power(0.5);
    let doubled = sqrt.scaled(2.0);
    if let FiberSpectrum::Finite { modes } = fiber {
        let direct: f64 = modes
            .iter()
            .filter(|m| m.mu > 0.0)
            .map(|m| m.mult as f64 * (2.0 * m.mu).ln())
            .sum();
        let scale = 1.0 + direct.abs();
        assert!(
            (direct - doubled.log_det).abs() <= 1e-13 * scale,
            "log det*(2√Δ) = ζ(0) log 2 + log det*√Δ failed: {direct} vs {}",
            doubled.log_det
        );
    }
    SqrtZeta { sqrt, doubled }
}
