//! Spectral sequences, ζ-regularization and heat traces.

pub mod fiber;
pub mod heat;
pub mod quad;
pub mod sum;
pub mod zeta;

pub use fiber::{fiber_sqrt_zeta_data, fiber_zeta_data, FiberMode, FiberSpectrum, SqrtZeta};
pub use heat::{
    heat_trace_mode, mellin_parts, mode_heat_expansion, zeta_via_heat, Base, HeatExpansion,
    MellinOptions, MellinParts,
};
pub use zeta::{
    zeta_from_sequence, EigenvalueSeq, QuadraticBranch, TruncatedZeta, ZetaData, ZetaSumOptions,
};
