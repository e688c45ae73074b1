//! Reproducible checks of the quantitative claims: each criterion compares a
//! computed quantity with an independent oracle at a fixed tolerance and
//! with fixed random seeds.

use crate::closed_form::{
    certify_inequalities, chi, critical_xi_numeric, irrotational_kappa, irrotational_lambda0, solve_x1,
    ConstVortCase, GridSpec, Sign, XI_CRITICAL,
};
use crate::dispersion::{find_bifurcation_points, solve_beta, BifurcationPoint, ScanOptions};
use crate::model::{FlowParameters, JetModel, SwirlFunction, VorticityFunction};
use crate::special::i1;
use crate::spectral::{refinement_drift, spectrum_of, DEFAULT_N};
use crate::trivial_flow::solve_trivial;
use crate::wave::continuation::{discrete_predictor, local_solution, observed_orders};
use crate::wave::{continue_branch, BranchOptions, NewtonOptions, WaveConfig, WaveProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::time::Instant;

/// `lambda0` for `d = sigma = 1`, `nu = 2`, `k = 1`, 30-digit reference.
pub const LAMBDA0_REFERENCE: f64 = 0.511532498221279186;
/// Root `kappa > 1` of `kappa I0/I1 = kappa^2 - 1`, 30-digit reference.
pub const KAPPA_REFERENCE: f64 = 1.95825732856997014;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// The worst measured error or, for sign conditions, the worst margin.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: measured {:.3e} vs tolerance {:.1e}; {} ({:.2} s of {:.0} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.tolerance,
            self.detail,
            self.seconds,
            self.budget_seconds
        )
    }
}

struct Outcome {
    ok: bool,
    measured: f64,
    tolerance: f64,
    detail: String,
}

type Check = fn() -> Result<Outcome, String>;

const CRITERIA: [(u32, &str, f64, Check); 10] = [
    (1, "irrotational dispersion root", 1.0, irrotational_root),
    (2, "beta closed form", 1.0, beta_closed_form),
    (3, "constant-vorticity laminar flow", 1.0, constant_gamma_laminar),
    (4, "b-plus-minus oracle equivalence", 10.0, b_pm_equivalence),
    (5, "classification thresholds", 5.0, classification_thresholds),
    (6, "inequality certificates", 5.0, inequality_certificates),
    (7, "spectral cross-validation", 10.0, spectral_cross_validation),
    (8, "trivial-curve residual", 10.0, trivial_curve_residual),
    (9, "local branch tangency", 60.0, local_branch_tangency),
    (10, "continuation sanity", 300.0, continuation_sanity),
];

pub fn criterion_ids() -> Vec<u32> {
    CRITERIA.iter().map(|c| c.0).collect()
}

/// Runs one criterion; a criterion also fails when it exceeds its time budget.
pub fn run_criterion(id: u32) -> Option<CriterionResult> {
    let &(id, name, budget, check) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let out = check();
    let seconds = start.elapsed().as_secs_f64();
    let (ok, measured, tolerance, detail) = match out {
        Ok(o) => (o.ok, o.measured, o.tolerance, o.detail),
        Err(e) => (false, f64::NAN, f64::NAN, format!("error: {e}")),
    };
    let in_time = seconds <= budget;
    Some(CriterionResult {
        id,
        name: name.to_string(),
        passed: ok && in_time,
        measured,
        tolerance,
        detail: if in_time { detail } else { format!("{detail}; over time budget") },
        seconds,
        budget_seconds: budget,
    })
}

pub fn run_all() -> Vec<CriterionResult> {
    criterion_ids().into_iter().filter_map(run_criterion).collect()
}

/// One row of the `validate-paper` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn table(&self) -> String {
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4);
        let mut out = format!("{:<w$}  status  {:>12}  {:>9}  detail\n", "name", "value", "tolerance");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<w$}  {:<6}  {:>12.4e}  {:>9.1e}  {}\n",
                r.name,
                if r.passed { "pass" } else { "FAIL" },
                r.value,
                r.tolerance,
                r.detail
            ));
        }
        out
    }
}

/// Inequality certificate rows followed by every criterion.
pub fn validate_all() -> ValidationReport {
    let mut rows: Vec<ValidationRow> = certify_inequalities(&GridSpec::default())
        .rows
        .into_iter()
        .map(|r| ValidationRow {
            name: format!("certificate {}", r.name),
            passed: r.holds,
            value: r.min_margin,
            tolerance: 0.0,
            detail: format!("min margin at x = {:.6e} over {} points", r.argmin, r.n_points),
        })
        .collect();
    rows.extend(run_all().into_iter().map(|c| ValidationRow {
        name: format!("criterion {} {}", c.id, c.name),
        passed: c.passed,
        value: c.measured,
        tolerance: c.tolerance,
        detail: c.detail,
    }));
    ValidationReport { rows }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn irrotational_model() -> JetModel {
    JetModel::irrotational(FlowParameters::from_nu(1.0, 1.0, 2.0).expect("valid parameters"))
}

/// The `k = 1` point of the irrotational jet with `d = sigma = 1`, `nu = 2`.
pub fn irrotational_point() -> Result<BifurcationPoint, String> {
    let scan = find_bifurcation_points(&irrotational_model(), &ScanOptions::new(1, 1, 0.1, 1.0, 40)).map_err(err)?;
    match scan.points.as_slice() {
        [p] => Ok(*p),
        other => Err(format!("expected one root, found {}", other.len())),
    }
}

fn irrotational_root() -> Result<Outcome, String> {
    let point = irrotational_point()?;
    let closed = irrotational_lambda0(1, &irrotational_model().params).map_err(err)?;
    let diff = (point.lambda0 - closed).abs();
    let oracle = (closed - LAMBDA0_REFERENCE).abs();
    Ok(Outcome {
        ok: diff <= 1e-7 && oracle <= 1e-12,
        measured: diff,
        tolerance: 1e-7,
        detail: format!(
            "shooting {:.12}, closed form {:.12}, reference offset {oracle:.1e}",
            point.lambda0, closed
        ),
    })
}

fn beta_closed_form() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let k = rng.gen_range(1..=3) as f64;
        let nu = rng.gen_range(0.5..2.0);
        let d = rng.gen_range(0.5..1.5);
        let model = JetModel::irrotational(FlowParameters::from_nu(d, 1.0, nu).map_err(err)?);
        let profile = solve_trivial(&model, rng.gen_range(0.2..1.0)).map_err(err)?;
        let beta = solve_beta(-(k * nu).powi(2), &profile).map_err(err)?;
        let x = k * nu * d;
        for i in 0..=400 {
            let s = i as f64 / 400.0;
            let exact = if i == 0 { 1.0 } else { 2.0 * i1(x * s) / (x * s) };
            worst = worst.max((beta.beta(s) - exact).abs());
        }
    }
    Ok(Outcome {
        ok: worst <= 1e-8,
        measured: worst,
        tolerance: 1e-8,
        detail: "sup over 10 cases and 401 radii".into(),
    })
}

fn constant_gamma_laminar() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let lambda = rng.gen_range(-1.5..1.5);
        let gamma = rng.gen_range(-3.0..3.0);
        let d = rng.gen_range(0.3..2.0);
        let model = JetModel::constant_vorticity(FlowParameters::from_nu(d, 1.0, 1.5).map_err(err)?, gamma);
        let p = solve_trivial(&model, lambda).map_err(err)?;
        for i in 0..=200 {
            let s = i as f64 / 200.0;
            worst = worst.max((p.psi(s) - (lambda - gamma * d * d * s * s / 8.0)).abs());
        }
        worst = worst.max((p.c - (2.0 * lambda - gamma * d * d / 2.0)).abs());
    }
    Ok(Outcome {
        ok: worst <= 1e-10,
        measured: worst,
        tolerance: 1e-10,
        detail: "psi and c over 10 cases".into(),
    })
}

fn b_pm_equivalence() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut roots = 0;
    let mut attempts = 0;
    while cases < 20 {
        attempts += 1;
        if attempts > 2000 {
            return Err("could not draw 20 admissible cases".into());
        }
        let d = rng.gen_range(0.5..1.5);
        let sigma = rng.gen_range(0.1..2.0);
        let gamma = rng.gen_range(0.3..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let nu = rng.gen_range(0.5..3.0);
        let k = rng.gen_range(1..=3u32);
        let case = ConstVortCase::new(d, sigma, gamma, Some(nu)).map_err(err)?;
        let x = k as f64 * nu * d;
        if x < case.x_min() + 0.05 || (x - 1.0).abs() < 0.05 {
            continue;
        }
        let speeds: Vec<f64> = [Sign::Plus, Sign::Minus]
            .iter()
            .filter_map(|&s| case.b_pm(x, s).ok())
            .filter(|c| c.abs() > 0.05)
            .collect();
        if speeds.is_empty() {
            continue;
        }
        let model = JetModel::constant_vorticity(FlowParameters::from_nu(d, sigma, nu).map_err(err)?, gamma);
        let lam = |c: f64| (c + gamma * d * d / 2.0) / 2.0;
        for &c in &speeds {
            let (a, b) = (lam(0.8 * c), lam(1.2 * c));
            let opts = ScanOptions::new(k, k, a.min(b), a.max(b), 24);
            let scan = find_bifurcation_points(&model, &opts).map_err(err)?;
            let best = scan
                .points
                .iter()
                .map(|p| (p.c0 - c).abs() / c.abs())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
            roots += 1;
        }
        cases += 1;
    }
    Ok(Outcome {
        ok: worst <= 1e-7,
        measured: worst,
        tolerance: 1e-7,
        detail: format!("{cases} cases, {roots} closed-form roots matched"),
    })
}

fn classification_thresholds() -> Result<Outcome, String> {
    let xi = critical_xi_numeric().map_err(err)?;
    let off = (xi - XI_CRITICAL).abs();
    let mut chi_err: f64 = 0.0;
    for xi in [0.55, 0.8, 1.5, 5.0, 40.0] {
        let x1 = solve_x1(xi).map_err(err)?;
        chi_err = chi_err.max((chi(x1).map_err(err)? - xi).abs());
    }
    Ok(Outcome {
        ok: off <= 1e-6 && chi_err <= 1e-10,
        measured: off,
        tolerance: 1e-6,
        detail: format!("curvature flip at xi = {xi:.10}; worst |chi(x1) - xi| = {chi_err:.1e}"),
    })
}

fn inequality_certificates() -> Result<Outcome, String> {
    let grid = GridSpec::default();
    let report = certify_inequalities(&grid);
    let min = report.rows.iter().map(|r| r.min_margin).fold(f64::INFINITY, f64::min);
    let detail = report
        .rows
        .iter()
        .map(|r| format!("{} {:.3e}", r.name, r.min_margin))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        ok: report.all_hold() && grid.n >= 10_000,
        measured: min,
        tolerance: 0.0,
        detail,
    })
}

fn spectral_cross_validation() -> Result<Outcome, String> {
    let model = irrotational_model();
    let p = solve_trivial(&model, 0.5).map_err(err)?;
    let res = spectrum_of(&p, DEFAULT_N).map_err(err)?;
    let kappa = irrotational_kappa(1.0, 1.0, p.c).map_err(err)?;
    let negatives: Vec<f64> = res.real_eigenvalues().into_iter().filter(|&v| v < 0.0).collect();
    let mismatch = negatives.first().map_or(f64::INFINITY, |mu| (mu + kappa * kappa).abs());
    let drift = refinement_drift(&p, DEFAULT_N, 10)
        .map_err(err)?
        .into_iter()
        .fold(0.0f64, f64::max);
    let oracle = (kappa - KAPPA_REFERENCE).abs();
    Ok(Outcome {
        ok: mismatch <= 1e-6 && res.all_real() && negatives.len() == 1 && drift <= 1e-6 && oracle <= 1e-12,
        measured: mismatch,
        tolerance: 1e-6,
        detail: format!(
            "{} negative, {} nonreal, N to 2N drift {drift:.1e}",
            negatives.len(),
            res.n_nonreal
        ),
    })
}

fn polynomial_model() -> JetModel {
    JetModel::new(
        FlowParameters::new(1.0, 1.0, 3.0).expect("valid parameters"),
        VorticityFunction::polynomial(vec![0.5, 0.4, -0.3]).expect("valid polynomial"),
        SwirlFunction::new(vec![0.0, 0.8, 0.25]).expect("valid swirl"),
    )
}

fn trivial_curve_residual() -> Result<Outcome, String> {
    let p = FlowParameters::from_nu(1.0, 1.0, 2.0).map_err(err)?;
    let families = [
        (JetModel::irrotational(p), 0.1..1.5),
        (JetModel::constant_vorticity(p, 1.5), 0.1..1.5),
        (polynomial_model(), 0.1..0.6),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst: f64 = 0.0;
    for (model, range) in families {
        let problem = WaveProblem::new(model, WaveConfig::default()).map_err(err)?;
        for _ in 0..20 {
            let lambda = rng.gen_range(range.clone());
            let r = problem.residual(&problem.trivial_vector(lambda)).map_err(err)?;
            worst = worst.max(r.sup_norm());
        }
    }
    Ok(Outcome {
        ok: worst <= 1e-9,
        measured: worst,
        tolerance: 1e-9,
        detail: "sup norm over 3 families of 20 values".into(),
    })
}

fn local_branch_tangency() -> Result<Outcome, String> {
    let point = irrotational_point()?;
    let config = WaveConfig {
        n_s: 32,
        n_z: 32,
        ..WaveConfig::default()
    };
    let problem = WaveProblem::new(irrotational_model(), config).map_err(err)?;
    let pred = discrete_predictor(&problem, &point).map_err(err)?;
    let samples = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&t| local_solution(&problem, &point, &pred, t, &NewtonOptions::default()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let orders = observed_orders(&samples);
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let ratios: Vec<String> = samples.iter().map(|s| format!("{:.3e}", s.distance / s.t)).collect();
    Ok(Outcome {
        ok: min_order >= 1.0 && samples.iter().all(|s| s.state.amplitude(&problem.grid) > 0.0),
        measured: min_order,
        tolerance: 1.0,
        detail: format!("distance/t = [{}], orders {:?}", ratios.join(", "), orders),
    })
}

fn continuation_sanity() -> Result<Outcome, String> {
    let point = irrotational_point()?;
    let opts = BranchOptions::default();
    let model = irrotational_model();
    let a = continue_branch(&model, &point, &opts).map_err(err)?;
    let b = continue_branch(&model, &point, &opts).map_err(err)?;
    let amps = a.amplitudes();
    let monotone = amps.windows(2).all(|w| w[1] > w[0]) && amps.first().is_some_and(|v| *v > 0.0);
    let min_fraction = a
        .points
        .iter()
        .map(|p| p.diagnostics.first_mode_fraction)
        .fold(f64::INFINITY, f64::min);
    let min_radius = a
        .points
        .iter()
        .map(|p| p.diagnostics.min_surface_radius)
        .fold(f64::INFINITY, f64::min);
    let finite = a.points.iter().all(|p| p.diagnostics.all_finite());
    let json = |br: &crate::wave::Branch| serde_json::to_string(br).unwrap_or_default();
    let identical = a.to_csv() == b.to_csv() && json(&a) == json(&b);
    let complete = a.points.len() == opts.n_steps;
    Ok(Outcome {
        ok: monotone && min_fraction >= 0.9 && min_radius > 0.0 && finite && identical && complete,
        measured: min_fraction,
        tolerance: 0.9,
        detail: format!(
            "{} steps ({}), monotone {monotone}, min radius {min_radius:.4}, finite {finite}, identical rerun {identical}",
            a.points.len(),
            a.termination.label()
        ),
    })
}
