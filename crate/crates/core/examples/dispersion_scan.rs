//! Bifurcation points of the irrotational and a swirling jet, with the
//! irrotational root compared against its closed form.

use capjet::closed_form::irrotational_lambda0;
use capjet::dispersion::{find_bifurcation_points, ScanOptions};
use capjet::model::{FlowParameters, JetModel, SwirlFunction, VorticityFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = FlowParameters::from_nu(1.0, 1.0, 2.0)?;
    let irrot = JetModel::irrotational(params);
    let scan = find_bifurcation_points(&irrot, &ScanOptions::new(1, 3, 0.1, 1.0, 40))?;
    for p in &scan.points {
        let closed = irrotational_lambda0(p.k0, &params)?;
        println!(
            "k = {}: lambda0 = {:.12} (closed form {:.12}), dD/dlambda = {:.6}, unique kernel {}",
            p.k0, p.lambda0, closed, p.d_lambda, p.kernel_unique
        );
    }

    let swirl = JetModel::new(
        FlowParameters::new(1.0, 1.0, 3.0)?,
        VorticityFunction::polynomial(vec![0.5, 0.4, -0.3])?,
        SwirlFunction::new(vec![0.0, 0.8, 0.25])?,
    );
    let scan = find_bifurcation_points(&swirl, &ScanOptions::new(1, 3, 0.2, 1.0, 40))?;
    println!("swirling jet, cutoff estimate used: {}", scan.cutoff_active);
    for p in &scan.points {
        println!("k = {}: lambda0 = {:.12}, c0 = {:.8}", p.k0, p.lambda0, p.c0);
    }
    for b in &scan.pole_brackets {
        println!("pole of D for k = {} in [{:.4}, {:.4}]", b.k, b.lambda_a, b.lambda_b);
    }
    Ok(())
}
