//! Dirichlet-to-Neumann zero-mode asymptotics and the nonzero-mode inverse trace.

use std::f64::consts::FRAC_PI_2;

use adiabatic_zeta::glue::{trace_perp_inverse_diff, GlueGeometry};
use adiabatic_zeta::scattering::dn_zero_mode_asymptotics;
use adiabatic_zeta::spectral::FiberSpectrum;

fn main() -> adiabatic_zeta::Result<()> {
    let fiber = FiberSpectrum::from_eigenvalues(&[(0.0, 1), (1.0, 1)])?;
    for r in [2.0, 8.0, 32.0] {
        let geom = GlueGeometry::new(1.0, 2.0, r, vec![FRAC_PI_2])?;
        for row in dn_zero_mode_asymptotics(&geom, &fiber)? {
            println!(
                "R = {r:>3} piece {} alpha = {:+.3}: <N phi-, phi-> = {:.16}, (1/R)(1 - alpha/2R)^-1 = {:.16}, <N phi+, phi+> = {:.1e}",
                row.piece, row.alpha, row.on_minus, row.model, row.on_plus
            );
        }
    }
    for r in 3..=10 {
        let geom = GlueGeometry::new(1.0, 1.0, r as f64, vec![FRAC_PI_2])?;
        println!("R = {r:>2}: Tr_perp(R^-1 - (2 sqrt Delta_Y)^-1) = {:.6e}", trace_perp_inverse_diff(&geom, &fiber)?);
    }
    Ok(())
}
