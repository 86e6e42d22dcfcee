//! Base problems: closed-form log-determinants against the heat route and truncated ζ sums.

use adiabatic_zeta::base1d::{oracle_logdet_truncated, ModeProblem};
use adiabatic_zeta::spectral::heat::zeta_via_heat;

fn main() -> adiabatic_zeta::Result<()> {
    for p in [
        ModeProblem::circle(5.0, 1.2, 0.0)?,
        ModeProblem::circle(5.0, 0.0, 0.7)?,
        ModeProblem::dirichlet(3.0, 0.0)?,
        ModeProblem::dirichlet(3.0, 1.5)?,
    ] {
        let closed = p.logdet()?;
        let k = p.kernel_dim();
        let heat = zeta_via_heat(|t| p.heat_trace(t).unwrap() - k as f64, &p.heat_expansion(), k)?;
        let truncated = oracle_logdet_truncated(&p, 10_000)?;
        println!(
            "{p:?}\n  closed {closed:.12}  heat {:.12}  truncated {:.12}",
            heat.log_det, truncated.data.log_det
        );
    }
    Ok(())
}
