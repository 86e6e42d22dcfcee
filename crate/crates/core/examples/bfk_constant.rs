//! Gluing constant det Δ_R / (det Δ₁ det Δ₂ det R_R) across R.

use std::f64::consts::FRAC_PI_2;

use adiabatic_zeta::adiabatic::{sweep, verify_bfk_corollary};
use adiabatic_zeta::glue::GlueGeometry;
use adiabatic_zeta::spectral::FiberSpectrum;

fn main() -> adiabatic_zeta::Result<()> {
    let fiber = FiberSpectrum::from_eigenvalues(&[(0.0, 1), (1.0, 1)])?;
    let geom = GlueGeometry::new(1.0, 2.0, 2.0, vec![FRAC_PI_2])?;
    let s = sweep(&geom, &fiber, &[2.0, 4.0, 8.0, 16.0, 32.0])?;
    let check = verify_bfk_corollary(&s, 1e-9)?;
    println!("predicted 2^(-zeta_Y(0) - h_Y) = {}", check.predicted);
    for (r, ratio, dev) in &check.rows {
        println!("R = {r:>4}  ratio = {ratio:.15}  rel dev = {dev:.1e}");
    }
    Ok(())
}
