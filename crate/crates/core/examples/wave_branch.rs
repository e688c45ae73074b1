//! Pseudo-arclength continuation of the first irrotational wave branch and
//! the physical fields of its last state.

use capjet::dispersion::{find_bifurcation_points, ScanOptions};
use capjet::model::{FlowParameters, JetModel};
use capjet::wave::{continue_branch, reconstruct_physical, BranchOptions, WaveProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = JetModel::irrotational(FlowParameters::from_nu(1.0, 1.0, 2.0)?);
    let point = find_bifurcation_points(&model, &ScanOptions::new(1, 1, 0.1, 1.0, 40))?.points[0];
    let opts = BranchOptions {
        n_steps: 20,
        ds: 1e-2,
        ..BranchOptions::default()
    };
    let branch = continue_branch(&model, &point, &opts)?;
    println!("terminated by {}", branch.termination.label());
    for p in &branch.points {
        let d = &p.diagnostics;
        println!(
            "step {:>2}: lambda = {:.8}, max|eta| = {:.5}, Q = {:.8}, min(d + eta) = {:.5}, first mode {:.4}",
            p.step, p.state.lambda, d.amplitude, p.state.q, d.min_surface_radius, d.first_mode_fraction
        );
    }
    let problem = WaveProblem::new(model, opts.config)?;
    let last = &branch.points.last().ok_or("empty branch")?.state;
    let fields = reconstruct_physical(&problem, last)?;
    println!(
        "surface: Bernoulli residual {:.2e}, kinematic residual {:.2e}",
        fields.max_bernoulli_residual(),
        fields.max_kinematic_residual()
    );
    for s in fields.surface.iter().step_by(4) {
        println!("  z = {:.4}: r = {:.5}, u = ({:.5}, {:.5}, {:.5})", s.z, s.r, s.u_r, s.u_theta, s.u_z);
    }
    Ok(())
}
