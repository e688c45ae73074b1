//! Spectrum of the linearized pencil and its agreement with the roots of
//! the dispersion function.

use capjet::closed_form::irrotational_kappa;
use capjet::model::{FlowParameters, JetModel};
use capjet::spectral::{cross_validate_with_dispersion, refinement_drift, spectrum_of, DEFAULT_N};
use capjet::trivial_flow::solve_trivial;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = JetModel::irrotational(FlowParameters::from_nu(1.0, 1.0, 2.0)?);
    let p = solve_trivial(&model, 0.5)?;
    let res = spectrum_of(&p, DEFAULT_N)?;
    let kappa = irrotational_kappa(1.0, 1.0, p.c)?;
    println!("threshold {:.3e}, below: {}, nonreal: {}", res.threshold, res.n_below_threshold, res.n_nonreal);
    for e in res.eigenvalues.iter().take(6) {
        println!("  mu = {:.12} (residual {:.1e})", e.re, e.residual);
    }
    println!("scalar oracle -kappa^2 = {:.12}", -kappa * kappa);
    let drift = refinement_drift(&p, DEFAULT_N, 6)?;
    println!("N -> 2N drift: {:.2e}", drift.iter().fold(0.0f64, |m, v| m.max(*v)));
    let cv = cross_validate_with_dispersion(&res, &p, 60.0, 400)?;
    println!("roots of D in window: {:?}; consistent: {}", cv.roots, cv.is_consistent());
    Ok(())
}
