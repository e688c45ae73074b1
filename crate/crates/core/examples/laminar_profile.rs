//! Laminar profiles for the three model families and their downstream scalars.

use capjet::model::{FlowParameters, JetModel, SwirlFunction, VorticityFunction};
use capjet::trivial_flow::{check_condition_h, solve_trivial};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = FlowParameters::from_nu(1.0, 1.0, 2.0)?;
    let models = [
        ("irrotational", JetModel::irrotational(params)),
        ("constant vorticity 1.5", JetModel::constant_vorticity(params, 1.5)),
        (
            "polynomial with swirl",
            JetModel::new(
                params,
                VorticityFunction::polynomial(vec![0.5, 0.4, -0.3])?,
                SwirlFunction::new(vec![0.0, 0.8, 0.25])?,
            ),
        ),
    ];
    for (name, model) in &models {
        let p = solve_trivial(model, 0.6)?;
        let h = check_condition_h(&p);
        println!("{name}: m = {:.8}, c = {:.8}, g = {:.6}, h = {:.6}, h - sup q_- = {:.4}", p.m, p.c, p.g, p.h, h.margin);
        for s in [0.0, 0.5, 1.0] {
            let (ur, ut, uz) = p.velocity(s);
            println!("  s = {s:.1}: psi = {:.8}, u = ({ur:.3}, {ut:.6}, {uz:.6})", p.psi(s));
        }
    }
    Ok(())
}
