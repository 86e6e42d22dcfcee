//! R^{h_Y} det Δ_R / (det Δ₁ det Δ₂) and R^{h_Y} det R_R extrapolated to R → ∞.

use std::f64::consts::FRAC_PI_2;

use adiabatic_zeta::adiabatic::{predictions, sweep, verify_theorem_dn, verify_theorem_main, DEFAULT_GRID};
use adiabatic_zeta::glue::GlueGeometry;
use adiabatic_zeta::spectral::FiberSpectrum;

fn main() -> adiabatic_zeta::Result<()> {
    let fiber = FiberSpectrum::from_eigenvalues(&[(0.0, 1), (1.0, 1)])?;
    let geom = GlueGeometry::new(1.0, 2.0, 4.0, vec![FRAC_PI_2])?;
    let s = sweep(&geom, &fiber, &DEFAULT_GRID)?;
    println!("{:>4} {:>20} {:>20}", "R", "scaled ratio", "scaled det R");
    for row in &s.rows {
        println!("{:>4} {:>20.15} {:>20.15}", row.r, row.scaled_ratio, row.scaled_r);
    }
    let main = verify_theorem_main(&s, 1e-4)?;
    let dn = verify_theorem_dn(&s, 1e-4)?;
    let p = predictions(&geom, &fiber)?;
    println!("main: extrapolated {:.12}, predicted {}, exponent {:.3}", main.fit.limit, main.predicted, main.convergence_exponent);
    println!("dn:   extrapolated {:.12}, predicted {}", dn.fit.limit, dn.predicted);
    println!("main / dn = {} = gluing constant {}", p.main_limit / p.dn_limit, p.bfk_constant);
    Ok(())
}
