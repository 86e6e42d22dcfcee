//! ζ-determinants of the model operators Δ(U) against their closed forms.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use adiabatic_zeta::glue::GlueGeometry;
use adiabatic_zeta::scattering::{det_l_identity, model_identities, model_logdet, model_logdet_numeric};
use adiabatic_zeta::spectral::FiberSpectrum;

fn main() -> adiabatic_zeta::Result<()> {
    for alpha in [FRAC_PI_3, FRAC_PI_2, PI] {
        let formula = model_logdet(&[alpha])?.exp();
        let numeric = model_logdet_numeric(&[alpha])?.log_det.exp();
        println!("alpha = {alpha:.6}: 4 sin^2(alpha/2) = {formula:.14}, truncated zeta = {numeric:.14}");
    }
    let fiber = FiberSpectrum::from_eigenvalues(&[(0.0, 1), (1.0, 1)])?;
    let geom = GlueGeometry::new(1.0, 2.0, 8.0, vec![FRAC_PI_2])?;
    let ids = model_identities(&geom, &fiber)?;
    println!("C12 phases {:?}", ids.c12_phases);
    println!("log det 1/4 Delta(C12): {} vs {}", ids.c12_formula, ids.c12_identity_rhs);
    println!("log det* Delta(Cbar_i): {} vs {}", ids.cbar_formula, ids.cbar_identity_rhs);
    let d = det_l_identity(&geom, &fiber)?;
    println!("det L(R) = {:.15e}, R^-h det((Id - C12)/2) = {:.15e}", d.det_l, d.rhs);
    Ok(())
}
