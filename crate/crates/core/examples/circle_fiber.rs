//! Circle cross-section (infinitely many fiber modes) with regularized fiber sums.

use std::f64::consts::{FRAC_PI_2, PI};

use adiabatic_zeta::adiabatic::{sweep, verify_bfk_corollary, verify_theorem_main};
use adiabatic_zeta::glue::GlueGeometry;
use adiabatic_zeta::spectral::FiberSpectrum;

fn main() -> adiabatic_zeta::Result<()> {
    let fiber = FiberSpectrum::circle(2.0 * PI)?;
    let geom = GlueGeometry::new(1.0, 2.0, 4.0, vec![FRAC_PI_2])?;
    let s = sweep(&geom, &fiber, &[4.0, 8.0, 16.0, 32.0, 64.0])?;
    for row in &s.rows {
        println!("R = {:>3}  log det M = {:>14.9}  bfk = {:.12}  scaled = {:.10}", row.r, row.log_det_m, row.bfk_ratio, row.scaled_ratio);
    }
    let bfk = verify_bfk_corollary(&s, 1e-6)?;
    let main = verify_theorem_main(&s, 1e-3)?;
    println!("gluing constant {} (spread {:.1e})", bfk.predicted, bfk.spread());
    println!("limit {:.9} vs predicted {:.9}", main.fit.limit, main.predicted);
    Ok(())
}
