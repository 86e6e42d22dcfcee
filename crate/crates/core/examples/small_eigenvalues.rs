//! Small eigenvalues matched against the rescaled model spectra as R doubles.

use std::f64::consts::FRAC_PI_2;

use adiabatic_zeta::glue::GlueGeometry;
use adiabatic_zeta::scattering::{residual_rate, svalue_match, svalues_exact, Piece, SmallOperator};
use adiabatic_zeta::spectral::FiberSpectrum;

fn main() -> adiabatic_zeta::Result<()> {
    let fiber = FiberSpectrum::from_eigenvalues(&[(0.0, 1), (1.0, 1)])?;
    let geom = GlueGeometry::new(1.0, 2.0, 10.0, vec![FRAC_PI_2])?;
    let kappa = 0.75;
    for op in [SmallOperator::Piece(Piece::One), SmallOperator::Piece(Piece::Two), SmallOperator::Closed] {
        let phases = op.model_phases(&geom, &fiber)?;
        let mut reports = Vec::new();
        for r in [10.0, 20.0, 40.0, 80.0] {
            let exact = svalues_exact(op, &geom.with_r(r)?, &fiber, kappa)?;
            let rep = svalue_match(&exact, &phases, op.scale(), r, kappa);
            println!("{op:?} R = {r}: {} eigenvalues, worst residual {:.4}, bijective {}", rep.pairs.len(), rep.worst_residual(), rep.bijective);
            reports.push(rep);
        }
        for step in residual_rate(&reports) {
            println!("  R = {} -> {}: residual ratio {:.3}", step.r, 2.0 * step.r, step.ratio);
        }
    }
    Ok(())
}
