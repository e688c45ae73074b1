//! Pseudo-arclength continuation of a nontrivial branch from a certified
//! bifurcation point, with the termination diagnostics of the global
//! alternatives.

use super::newton::{jacobian, newton_correct, Constraint, NewtonOptions};
use super::physical::{diagnostics, Diagnostics};
use super::residual::{WaveConfig, WaveProblem, WaveState};
use super::WaveError;
use crate::dispersion::{kernel_predictor, BifurcationPoint};
use crate::model::JetModel;
use crate::output::{fmt_f64, write_atomic, write_json};
use crate::trivial_flow::solve_trivial;
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchOptions {
    pub ds: f64,
    pub n_steps: usize,
    pub config: WaveConfig,
    pub newton_tol: f64,
    pub max_halvings: usize,
    /// Any diagnostic above this magnitude ends the run.
    pub blowup: f64,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            ds: 5e-3,
            n_steps: 10,
            config: WaveConfig::default(),
            newton_tol: 1e-9,
            max_halvings: 4,
            blowup: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum Termination {
    StepFailure { step: usize, reason: String },
    DomainCollapse { step: usize, min_radius: f64 },
    DiagnosticBlowUp { step: usize, quantity: String, value: f64 },
    StepBudget,
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Self::StepFailure { .. } => "step-failure",
            Self::DomainCollapse { .. } => "domain-collapse",
            Self::DiagnosticBlowUp { .. } => "diagnostic-blow-up",
            Self::StepBudget => "step-budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint {
    pub step: usize,
    pub ds: f64,
    pub newton_iterations: usize,
    pub residual_norm: f64,
    pub state: WaveState,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub point: BifurcationPoint,
    pub options: BranchOptions,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
}

impl Branch {
    pub fn amplitudes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.diagnostics.amplitude).collect()
    }

    pub fn to_csv(&self) -> String {
        let n_modes = self.points.first().map_or(0, |p| p.diagnostics.mode_energies.len());
        let mut header = vec![
            "step".to_string(),
            "lambda".into(),
            "amplitude".into(),
            "Q".into(),
            "min_surface_radius".into(),
            "vorticity_Lp".into(),
            "eta_c2alpha_proxy".into(),
            "surface_speed_sq".into(),
        ];
        header.extend((1..=n_modes).map(|k| format!("eta_mode_energy_{k}")));
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| {
                let dg = &p.diagnostics;
                let mut r = vec![
                    p.step.to_string(),
                    fmt_f64(p.state.lambda),
                    fmt_f64(dg.amplitude),
                    fmt_f64(p.state.q),
                    fmt_f64(dg.min_surface_radius),
                    fmt_f64(dg.vorticity_lp),
                    fmt_f64(dg.eta_c2alpha_proxy),
                    fmt_f64(dg.surface_speed_sq_max),
                ];
                r.extend(dg.mode_energies.iter().map(|v| fmt_f64(*v)));
                r
            })
            .collect();
        let mut out = header.join(",");
        out.push('\n');
        for r in rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn write_states_json(&self, path: &Path) -> std::io::Result<()> {
        write_json(path, self)
    }
}

fn certified(problem: &WaveProblem, point: &BifurcationPoint) -> Result<(), WaveError> {
    if !point.kernel_unique {
        return Err(WaveError::UncertifiedPoint("kernel is not one-dimensional".into()));
    }
    if !(point.d_lambda.is_finite() && point.d_lambda != 0.0) {
        return Err(WaveError::UncertifiedPoint("transversality fails".into()));
    }
    let nu = problem.model.params.nu;
    if (point.nu - nu).abs() > 1e-12 * nu {
        return Err(WaveError::UncertifiedPoint(format!(
            "point has nu = {}, model has nu = {nu}",
            point.nu
        )));
    }
    if point.k0 as usize >= problem.grid.n_z {
        return Err(WaveError::UncertifiedPoint(format!(
            "mode {} is not resolved by n_z = {}",
            point.k0, problem.grid.n_z
        )));
    }
    Ok(())
}

/// The kernel direction `T(lambda0) theta` sampled on the grid, as an
/// increment of `x` with zero `lambda` component.
pub fn discrete_predictor(problem: &WaveProblem, point: &BifurcationPoint) -> Result<Vec<f64>, WaveError> {
    certified(problem, point)?;
    let g = &problem.grid;
    let prof = solve_trivial(&problem.model, point.lambda0).map_err(|e| WaveError::Profile(e.to_string()))?;
    let pred = kernel_predictor(point, &prof).map_err(|e| WaveError::Dispersion(e.to_string()))?;
    let mut v = vec![0.0; problem.n_unknowns()];
    let k = point.k0 as usize;
    v[k] = pred.eta_amplitude;
    let off = 1 + g.n_eta();
    for i in 0..g.n_s - 1 {
        let radial = pred.phi_radial(g.s[i]);
        for j in 0..g.n_z {
            v[off + g.idx(i, j)] = radial * pred.mode(g.z[j]);
        }
    }
    Ok(v)
}

/// Arclength weights: `lambda` and the surface modes only; `phi` is slaved.
fn masked(problem: &WaveProblem, v: &[f64]) -> Vec<f64> {
    let cut = 1 + problem.grid.n_eta();
    v.iter().enumerate().map(|(i, x)| if i < cut { *x } else { 0.0 }).collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_diagnostics(dg: &Diagnostics, blowup: f64) -> Option<(String, f64)> {
    let items = [
        ("lambda", dg.lambda_abs),
        ("eta_c2alpha_proxy", dg.eta_c2alpha_proxy),
        ("vorticity_lp", dg.vorticity_lp),
        ("abs_q", dg.abs_q),
        ("surface_speed_sq", dg.surface_speed_sq_max),
    ];
    items
        .iter()
        .find(|(_, v)| !v.is_finite() || v.abs() > blowup)
        .map(|(n, v)| (n.to_string(), *v))
}

pub fn continue_branch(model: &JetModel, point: &BifurcationPoint, opts: &BranchOptions) -> Result<Branch, WaveError> {
    let problem = WaveProblem::new(model.clone(), opts.config)?;
    let pred = discrete_predictor(&problem, point)?;
    let newton = NewtonOptions {
        tol: opts.newton_tol,
        ..NewtonOptions::default()
    };
    let mut prev = problem.trivial_vector(point.lambda0);
    let scale = norm2(&masked(&problem, &pred));
    let mut tangent: Vec<f64> = pred.iter().map(|v| v / scale).collect();
    let mut points = Vec::new();
    let mut termination = Termination::StepBudget;
    'steps: for step in 1..=opts.n_steps {
        let mut ds = opts.ds;
        let mut last_err = String::new();
        for _ in 0..=opts.max_halvings {
            let guess: Vec<f64> = prev.iter().zip(&tangent).map(|(x, t)| x + ds * t).collect();
            let constraint = Constraint::arclength(&prev, &masked(&problem, &tangent), ds);
            match newton_correct(&problem, &guess, &constraint, &newton) {
                Ok(out) => {
                    let state = WaveState::from_vector(&problem.grid, &out.x, out.q);
                    let dg = diagnostics(&problem, &state)?;
                    let min_radius = dg.min_surface_radius;
                    let blow = check_diagnostics(&dg, opts.blowup);
                    let diff: Vec<f64> = out.x.iter().zip(&prev).map(|(a, b)| a - b).collect();
                    let len = norm2(&masked(&problem, &diff));
                    points.push(BranchPoint {
                        step,
                        ds,
                        newton_iterations: out.iterations,
                        residual_norm: out.residual_norm,
                        state,
                        diagnostics: dg,
                    });
                    if min_radius < problem.eps_dom() {
                        termination = Termination::DomainCollapse { step, min_radius };
                        break 'steps;
                    }
                    if let Some((quantity, value)) = blow {
                        termination = Termination::DiagnosticBlowUp { step, quantity, value };
                        break 'steps;
                    }
                    tangent = diff.iter().map(|v| v / len * ds.signum()).collect();
                    prev = out.x;
                    continue 'steps;
                }
                Err(WaveError::DomainCollapse(r)) => {
                    termination = Termination::DomainCollapse { step, min_radius: r };
                    break 'steps;
                }
                Err(e) => {
                    last_err = e.to_string();
                    ds *= 0.5;
                }
            }
        }
        termination = Termination::StepFailure { step, reason: last_err };
        break;
    }
    Ok(Branch {
        point: *point,
        options: *opts,
        points,
        termination,
    })
}

/// A nontrivial solution with the kernel-mode coefficient of `eta` fixed to
/// `t` times that of the predictor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalSolution {
    pub t: f64,
    pub state: WaveState,
    pub iterations: usize,
    /// Sup-norm of `x - (x_trivial + t v)`.
    pub distance: f64,
}

pub fn local_solution(
    problem: &WaveProblem,
    point: &BifurcationPoint,
    pred: &[f64],
    t: f64,
    newton: &NewtonOptions,
) -> Result<LocalSolution, WaveError> {
    let k = point.k0 as usize;
    let mut base = problem.trivial_vector(point.lambda0);
    for (b, v) in base.iter_mut().zip(pred) {
        *b += t * v;
    }
    let mut weights = vec![0.0; base.len()];
    weights[k] = 1.0;
    let constraint = Constraint::Linear {
        weights,
        target: t * pred[k],
    };
    let out = newton_correct(problem, &base, &constraint, newton)?;
    let distance = out.x.iter().zip(&base).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(LocalSolution {
        t,
        state: WaveState::from_vector(&problem.grid, &out.x, out.q),
        iterations: out.iterations,
        distance,
    })
}

/// Observed order of `distance / t -> 0` from successive samples.
pub fn observed_orders(samples: &[LocalSolution]) -> Vec<f64> {
    samples
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].distance / w[0].t, w[1].distance / w[1].t);
            (a / b).ln() / (w[0].t / w[1].t).ln()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelCheck {
    pub defect: f64,
    pub jacobian_norm: f64,
    pub predictor_norm: f64,
}

impl KernelCheck {
    pub fn relative(&self) -> f64 {
        self.defect / (self.jacobian_norm * self.predictor_norm)
    }
}

/// Applies the forward-difference Jacobian at `(lambda, 0, 0)` to `v`.
pub fn kernel_check(problem: &WaveProblem, lambda: f64, v: &[f64], fd_step: f64) -> Result<KernelCheck, WaveError> {
    let x = problem.trivial_vector(lambda);
    let (jac, _) = jacobian(problem, &x, fd_step)?;
    let jv = &jac * nalgebra::DVector::from_column_slice(v);
    let jn = (0..jac.nrows())
        .map(|r| jac.row(r).iter().map(|a| a.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(KernelCheck {
        defect: jv.amax(),
        jacobian_norm: jn,
        predictor_norm: v.iter().fold(0.0, |m, a| m.max(a.abs())),
    })
}
