use capjet::dispersion::{find_bifurcation_points, BifurcationPoint, ScanOptions};
use capjet::model::{FlowParameters, JetModel, SwirlFunction, VorticityFunction};
use capjet::wave::continuation::{discrete_predictor, kernel_check, local_solution};
use capjet::wave::{
    continue_branch, newton_correct, reconstruct_physical, BranchOptions, Constraint, Discretization,
    NewtonOptions, WaveConfig, WaveProblem, WaveState,
};

fn irrotational() -> JetModel {
    JetModel::irrotational(FlowParameters::from_nu(1.0, 1.0, 2.0).unwrap())
}

fn polynomial() -> JetModel {
    JetModel::new(
        FlowParameters::new(1.0, 1.0, 3.0).unwrap(),
        VorticityFunction::polynomial(vec![0.5, 0.4, -0.3]).unwrap(),
        SwirlFunction::new(vec![0.0, 0.8, 0.25]).unwrap(),
    )
}

fn first_point(model: &JetModel, lo: f64, hi: f64) -> BifurcationPoint {
    find_bifurcation_points(model, &ScanOptions::new(1, 1, lo, hi, 40)).unwrap().points[0]
}

fn cfg(n_s: usize, n_z: usize) -> WaveConfig {
    WaveConfig {
        n_s,
        n_z,
        ..WaveConfig::default()
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn predictor_lies_in_the_discrete_kernel() {
    let model = irrotational();
    let point = first_point(&model, 0.1, 1.0);
    let problem = WaveProblem::new(model, cfg(24, 16)).unwrap();
    let v = discrete_predictor(&problem, &point).unwrap();
    let at = kernel_check(&problem, point.lambda0, &v, 1e-7).unwrap();
    assert!(at.relative() <= 1e-5, "{at:?}");
    let off = kernel_check(&problem, 0.8 * point.lambda0, &v, 1e-7).unwrap();
    assert!(off.defect >= 10.0 * at.defect, "{off:?} vs {at:?}");
}

#[test]
fn polynomial_predictor_lies_in_the_discrete_kernel() {
    let model = polynomial();
    let point = first_point(&model, 0.2, 1.0);
    let problem = WaveProblem::new(model, cfg(24, 16)).unwrap();
    let v = discrete_predictor(&problem, &point).unwrap();
    let at = kernel_check(&problem, point.lambda0, &v, 1e-7).unwrap();
    assert!(at.relative() <= 1e-5, "{at:?}");
}

#[test]
fn small_seed_converges_quickly() {
    let model = irrotational();
    let point = first_point(&model, 0.1, 1.0);
    let problem = WaveProblem::new(model, cfg(24, 16)).unwrap();
    let v = discrete_predictor(&problem, &point).unwrap();
    let sol = local_solution(&problem, &point, &v, 1e-3, &NewtonOptions::default()).unwrap();
    assert!(sol.iterations <= 5);
    assert!(sol.state.amplitude(&problem.grid) > 5e-4);
    assert!(problem.residual_of(&sol.state).unwrap().sup_norm() <= 1e-9);
}

#[test]
fn fixed_lambda_away_from_bifurcation_returns_to_trivial() {
    let problem = WaveProblem::new(irrotational(), cfg(16, 12)).unwrap();
    let mut x = problem.trivial_vector(0.35);
    for (i, v) in x.iter_mut().enumerate().skip(1) {
        *v += 1e-4 * ((i % 7) as f64 - 3.0);
    }
    let out = newton_correct(&problem, &x, &Constraint::FixedLambda(0.35), &NewtonOptions::default()).unwrap();
    let state = WaveState::from_vector(&problem.grid, &out.x, out.q);
    assert!(sup(&state.eta) < 1e-9, "{:?}", state.eta);
    assert!((out.q - (1.0 + 2.0 * 0.35 * 0.35)).abs() < 1e-9);
}

#[test]
fn refinement_changes_eta_little() {
    let model = irrotational();
    let point = first_point(&model, 0.1, 1.0);
    let solve = |n_s, n_z| {
        let problem = WaveProblem::new(model.clone(), cfg(n_s, n_z)).unwrap();
        let v = discrete_predictor(&problem, &point).unwrap();
        local_solution(&problem, &point, &v, 1e-2, &NewtonOptions::default()).unwrap().state
    };
    let coarse = solve(16, 16);
    let fine = solve(32, 32);
    let scale = sup(&fine.eta);
    let diff = coarse
        .eta
        .iter()
        .zip(&fine.eta)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let tail = sup(&fine.eta[coarse.eta.len()..]);
    assert!(diff.max(tail) <= 1e-6 * scale, "{diff:e} {tail:e}");
    assert!((coarse.lambda - fine.lambda).abs() <= 1e-6 * fine.lambda);
}

#[test]
fn branch_is_monotone_and_dominated_by_first_mode() {
    let model = irrotational();
    let point = first_point(&model, 0.1, 1.0);
    let branch = continue_branch(&model, &point, &BranchOptions::default()).unwrap();
    assert_eq!(branch.points.len(), 10);
    assert_eq!(branch.termination.label(), "step-budget");
    let amps = branch.amplitudes();
    assert!(amps.windows(2).all(|w| w[1] > w[0]), "{amps:?}");
    for p in &branch.points {
        assert!(p.diagnostics.first_mode_fraction >= 0.9);
        assert!(p.diagnostics.min_surface_radius > 0.0);
        assert!(p.diagnostics.all_finite());
        assert!(p.residual_norm <= 1e-9);
        assert!(p.diagnostics.vorticity_lp == 0.0);
    }
}

#[test]
fn converged_states_satisfy_the_physical_boundary_conditions() {
    for (model, lo, hi) in [
        (irrotational(), 0.1, 1.0),
        (JetModel::constant_vorticity(FlowParameters::from_nu(1.0, 1.0, 2.0).unwrap(), 1.5), 0.5, 2.0),
        (polynomial(), 0.2, 1.0),
    ] {
        let point = first_point(&model, lo, hi);
        let opts = BranchOptions {
            n_steps: 6,
            ..BranchOptions::default()
        };
        let branch = continue_branch(&model, &point, &opts).unwrap();
        let problem = WaveProblem::new(model.clone(), opts.config).unwrap();
        for p in &branch.points {
            let fields = reconstruct_physical(&problem, &p.state).unwrap();
            assert!(fields.max_bernoulli_residual() <= 1e-6, "{}", fields.max_bernoulli_residual());
            assert!(fields.max_kinematic_residual() <= 1e-9, "{}", fields.max_kinematic_residual());
            assert!(p.diagnostics.bernoulli_residual_max <= 1e-6);
        }
        assert_eq!(branch.points.len(), 6);
    }
}

#[test]
fn reversed_direction_traces_the_mirrored_branch() {
    let model = irrotational();
    let point = first_point(&model, 0.1, 1.0);
    let opts = BranchOptions {
        n_steps: 4,
        ..BranchOptions::default()
    };
    let up = continue_branch(&model, &point, &opts).unwrap();
    let down = continue_branch(&model, &point, &BranchOptions { ds: -opts.ds, ..opts }).unwrap();
    for (a, b) in up.points.iter().zip(&down.points) {
        assert!((a.state.lambda - b.state.lambda).abs() < 1e-10);
        let mirrored = Discretization::mirror_modes(&a.state.eta);
        let diff = mirrored
            .iter()
            .zip(&b.state.eta)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-10, "{diff:e}");
        assert!(a.state.eta[0] * b.state.eta[0] < 0.0);
    }
}

fn first_step(model: &JetModel, point: &BifurcationPoint, ds: f64) -> WaveState {
    let opts = BranchOptions {
        ds,
        n_steps: 1,
        ..BranchOptions::default()
    };
    let b = continue_branch(model, point, &opts).unwrap();
    b.points[0].state.clone()
}

/// Least-squares fit of `lambda = c + a eta1^2`; returns `(c, a, max residual / lambda range)`.
fn quadratic_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x * x, b + y));
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x.powi(4), b + x * x * y));
    let det = n * sxx - sx * sx;
    let c = (sy * sxx - sx * sxy) / det;
    let a = (n * sxy - sx * sy) / det;
    let range = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
        - pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let res = pts.iter().fold(0.0f64, |m, (x, y)| m.max((y - c - a * x * x).abs()));
    (c, a, res / range)
}

#[test]
fn pitchfork_local_model() {
    let model = irrotational();
    let point = first_point(&model, 0.1, 1.0);
    // lambda is even in the first-mode coefficient under the mirror symmetry
    let fits: Vec<(f64, f64, f64)> = [8e-3, 4e-3, 2e-3]
        .iter()
        .map(|&ds| {
            let opts = BranchOptions {
                ds,
                n_steps: 5,
                ..BranchOptions::default()
            };
            let b = continue_branch(&model, &point, &opts).unwrap();
            let pts: Vec<(f64, f64)> = b.points.iter().map(|p| (p.state.eta[0], p.state.lambda)).collect();
            quadratic_fit(&pts)
        })
        .collect();
    for w in fits.windows(2) {
        assert!(w[1].2 < 0.5 * w[0].2, "{fits:?}");
    }
    let offsets: Vec<f64> = fits.iter().map(|f| (f.0 - point.lambda0).abs()).collect();
    assert!(offsets.windows(2).all(|w| w[1] < 0.5 * w[0]), "{fits:?}");
    assert!(offsets[2] < 1e-8 && fits.iter().all(|f| f.1 < 0.0));
}

#[test]
fn corrector_distance_scales_quadratically() {
    let model = irrotational();
    let point = first_point(&model, 0.1, 1.0);
    let problem = WaveProblem::new(model.clone(), WaveConfig::default()).unwrap();
    let pred = discrete_predictor(&problem, &point).unwrap();
    let cut = 1 + problem.grid.n_eta();
    let norm = pred[..cut].iter().map(|v| v * v).sum::<f64>().sqrt();
    let trivial = problem.trivial_vector(point.lambda0);
    let dist = |ds: f64| {
        let s = first_step(&model, &point, ds);
        let x = s.to_vector(&problem.grid);
        (0..cut)
            .map(|i| (x[i] - trivial[i] - ds * pred[i] / norm).abs())
            .fold(0.0f64, f64::max)
    };
    let (a, b, c) = (dist(8e-3), dist(4e-3), dist(2e-3));
    assert!((a / b - 4.0).abs() < 0.4 && (b / c - 4.0).abs() < 0.4, "{a:e} {b:e} {c:e}");
}

#[test]
fn continuation_is_deterministic() {
    let model = polynomial();
    let point = first_point(&model, 0.2, 1.0);
    let opts = BranchOptions {
        n_steps: 4,
        ..BranchOptions::default()
    };
    let a = continue_branch(&model, &point, &opts).unwrap();
    let b = continue_branch(&model, &point, &opts).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn rejects_unresolved_and_uncertified_points() {
    let model = irrotational();
    let point = first_point(&model, 0.1, 1.0);
    let mut bad = point;
    bad.kernel_unique = false;
    assert!(continue_branch(&model, &bad, &BranchOptions::default()).is_err());
    let mut far = point;
    far.k0 = 40;
    assert!(continue_branch(&model, &far, &BranchOptions::default()).is_err());
}
