//! Admissibility checks on the vorticity and swirl functions.

use capjet::model::{validate_assumptions, SwirlFunction, VorticityFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gamma = VorticityFunction::polynomial(vec![0.5, 0.4, -0.3])?;
    let swirl = SwirlFunction::new(vec![0.0, 0.8, 0.25])?;
    let report = validate_assumptions(&gamma, &swirl, (-1.0, 1.0))?;
    println!("sup |gamma'| = {:.6}, sup |(F F')'| = {:.6}", report.gamma_deriv_sup, report.swirl_deriv_sup);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    match SwirlFunction::new(vec![0.2, 1.0]) {
        Ok(_) => println!("unexpectedly accepted F(0) != 0"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
