//! Scattering matrices of the half-infinite extensions and their eigenphase tracks.

use std::f64::consts::FRAC_PI_2;

use adiabatic_zeta::glue::GlueGeometry;
use adiabatic_zeta::scattering::{c12_phases, track_eigenphases, Piece, ScatteringFamily};
use adiabatic_zeta::spectral::FiberSpectrum;

fn main() -> adiabatic_zeta::Result<()> {
    let fiber = FiberSpectrum::from_eigenvalues(&[(0.0, 1), (1.0, 1)])?;
    let geom = GlueGeometry::new(1.0, 2.0, 4.0, vec![FRAC_PI_2])?;
    for piece in [Piece::One, Piece::Two] {
        let fam = ScatteringFamily::piece(piece, &geom, &fiber)?;
        for frac in [-0.5, 0.0, 0.5] {
            let lambda = frac * fam.threshold;
            println!(
                "{piece:?} lambda = {lambda:+.3}: unitarity {:.1e}, C(-l)C(l) - Id {:.1e}",
                fam.unitarity_defect(lambda)?,
                fam.functional_equation_defect(lambda)?
            );
        }
        let track = track_eigenphases(&fam, 0.9 * fam.threshold)?;
        println!("{piece:?} eigenphases at 0: {:?}", track.at_zero());
    }
    println!("C12 eigenphases: {:?}", c12_phases(&geom, &fiber)?);
    Ok(())
}
