use capjet::closed_form::irrotational_lambda0;
use capjet::dispersion::{find_bifurcation_points, ScanOptions};
use capjet::model::{FlowParameters, JetModel, SwirlFunction, VorticityFunction};
use capjet::spectral::spectrum_of;
use capjet::trivial_flow::solve_trivial;
use capjet::wave::{WaveConfig, WaveProblem, WaveState};
use proptest::prelude::*;

fn small() -> WaveConfig {
    WaveConfig {
        n_s: 12,
        n_z: 8,
        ..WaveConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn shooting_root_matches_closed_form(d in 0.6f64..1.5, sigma in 0.3f64..2.0, nu_d in 1.3f64..3.0) {
        let params = FlowParameters::from_nu(d, sigma, nu_d / d).unwrap();
        let want = irrotational_lambda0(1, &params).unwrap();
        let scan = find_bifurcation_points(
            &JetModel::irrotational(params),
            &ScanOptions::new(1, 1, 0.5 * want, 1.5 * want, 30),
        ).unwrap();
        prop_assert_eq!(scan.points.len(), 1);
        prop_assert!((scan.points[0].lambda0 - want).abs() < 1e-8 * want);
    }

    #[test]
    fn pencil_has_eigenvalue_at_the_bifurcation_wavenumber(d in 0.7f64..1.3, nu_d in 1.4f64..2.6) {
        let params = FlowParameters::from_nu(d, 1.0, nu_d / d).unwrap();
        let lambda0 = irrotational_lambda0(1, &params).unwrap();
        let p = solve_trivial(&JetModel::irrotational(params), lambda0).unwrap();
        let res = spectrum_of(&p, 40).unwrap();
        let target = -params.nu * params.nu;
        let best = res.real_eigenvalues().iter().map(|m| (m - target).abs()).fold(f64::INFINITY, f64::min);
        prop_assert!(best < 1e-8 * target.abs(), "{}", best);
    }

    #[test]
    fn trivial_curve_is_a_fixed_point(lambda in 0.1f64..1.0, gamma in -1.0f64..1.0, a in 0.0f64..0.6) {
        let model = JetModel::new(
            FlowParameters::from_nu(1.0, 1.0, 2.0).unwrap(),
            VorticityFunction::polynomial(vec![gamma, 0.2]).unwrap(),
            SwirlFunction::new(vec![0.0, a]).unwrap(),
        );
        let problem = WaveProblem::new(model, small()).unwrap();
        let r = problem.residual(&problem.trivial_vector(lambda)).unwrap();
        prop_assert!(r.sup_norm() < 1e-9, "{}", r.sup_norm());
        let prof = solve_trivial(&problem.model, lambda).unwrap();
        let fm = problem.model.swirl.eval(prof.m);
        prop_assert!((r.q - (1.0 + prof.c * prof.c / 2.0 + fm * fm / 2.0)).abs() < 1e-8);
    }

    #[test]
    fn residual_commutes_with_the_half_period_shift(
        seed in proptest::collection::vec(-1.0f64..1.0, 7),
        amp in 1e-3f64..2e-2,
    ) {
        let model = JetModel::constant_vorticity(FlowParameters::from_nu(1.0, 1.0, 2.0).unwrap(), 0.7);
        let problem = WaveProblem::new(model, small()).unwrap();
        let g = &problem.grid;
        let mut x = problem.trivial_vector(0.6);
        for (m, s) in seed.iter().enumerate() {
            x[1 + m] = amp * s;
        }
        for (i, v) in x.iter_mut().enumerate().skip(1 + g.n_eta()) {
            *v = amp * ((i * 37 % 11) as f64 / 11.0 - 0.5);
        }
        let state = WaveState::from_vector(g, &x, 0.0);
        let a = problem.residual_of(&state).unwrap();
        let b = problem.residual_of(&state.mirrored(g)).unwrap();
        prop_assert!((a.q - b.q).abs() < 1e-12);
        let mirrored = capjet::wave::Discretization::mirror_modes(&a.eta_residual);
        for (u, v) in mirrored.iter().zip(&b.eta_residual) {
            prop_assert!((u - v).abs() < 1e-11);
        }
        prop_assert!((a.sup_norm() - b.sup_norm()).abs() < 1e-11);
    }
}
