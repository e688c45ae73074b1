//! Laminar (z-independent) flows `psi^lambda` in the flattened radius `s`.
//!
//! The profile solves
//! `psi'' + 3 psi'/s = -d^2 gamma(X) - d^2 psi G(X) F'(X)`, `X = d^2 s^2 psi`,
//! with `psi(0) = lambda`, `psi'(0) = 0`.

use crate::model::JetModel;
use crate::ode::{self, DenseSolution, OdeError, Tolerances};
use crate::output::{fmt_f64, write_atomic};
use serde::Serialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrivialFlowError {
    #[error("laminar profile blew up near s = {0}")]
    BlowUp(f64),
    #[error("surface speed c(lambda) vanishes; g = 0")]
    DegenerateSurfaceSpeed,
    #[error("lambda must be finite, got {0}")]
    NonFiniteLambda(f64),
}

impl From<OdeError> for TrivialFlowError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::BlowUp { at, .. } | OdeError::StepUnderflow(at) => Self::BlowUp(at),
            OdeError::TooManySteps(_) => Self::BlowUp(f64::NAN),
        }
    }
}

/// Integration settings shared by the laminar and the `beta` shooting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub tol: Tolerances,
    /// Start of the integration away from the singular point `s = 0`.
    pub eps: f64,
    pub blowup: f64,
    /// Number of uniform samples used for `sup q_-`.
    pub q_samples: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            eps: 1e-6,
            blowup: 1e100,
            q_samples: 2000,
        }
    }
}

/// Threshold below which `|c|` counts as zero.
pub const DEGENERATE_C: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TrivialFlowProfile {
    pub model: JetModel,
    pub lambda: f64,
    pub options: ShootingOptions,
    sol: DenseSolution,
    /// `(gamma(0) + lambda (F F')'(0)) d^2`, the curvature of `psi` at the axis.
    axis_curvature: f64,
    /// `psi(1)`.
    pub psi1: f64,
    /// `psi_s(1)`.
    pub psi_s1: f64,
    pub m: f64,
    pub c: f64,
    pub g: f64,
    pub h: f64,
    /// `sup_s max(-q(s), 0)` on the sampling grid.
    pub q_minus_sup: f64,
}

/// Right-hand side of the laminar system `(psi, psi_s)`.
pub(crate) fn laminar_rhs(model: &JetModel, s: f64, psi: f64, psi_s: f64) -> f64 {
    let d2 = model.params.d * model.params.d;
    let x = d2 * s * s * psi;
    -3.0 * psi_s / s - d2 * model.gamma.eval(x) - d2 * psi * model.swirl.g_f1(x)
}

/// Coefficient `q(s) = -d^2 s^2 gamma'(X) - (F F')'(X)`.
pub(crate) fn q_coefficient(model: &JetModel, s: f64, psi: f64) -> f64 {
    let d2 = model.params.d * model.params.d;
    let x = d2 * s * s * psi;
    -d2 * s * s * model.gamma.deriv1(x) - model.swirl.ff1_deriv1(x)
}

pub(crate) fn axis_curvature(model: &JetModel, lambda: f64) -> f64 {
    let d2 = model.params.d * model.params.d;
    (model.gamma.eval(0.0) + lambda * model.swirl.ff1_deriv1(0.0)) * d2
}

/// Solves the laminar problem for a given axis parameter `lambda`.
pub fn solve_trivial(model: &JetModel, lambda: f64) -> Result<TrivialFlowProfile, TrivialFlowError> {
    solve_trivial_with(model, lambda, ShootingOptions::default())
}

pub fn solve_trivial_with(
    model: &JetModel,
    lambda: f64,
    options: ShootingOptions,
) -> Result<TrivialFlowProfile, TrivialFlowError> {
    if !lambda.is_finite() {
        return Err(TrivialFlowError::NonFiniteLambda(lambda));
    }
    let eps = options.eps;
    let a = axis_curvature(model, lambda);
    let y0 = [lambda - a * eps * eps / 8.0, -a * eps / 4.0];
    let sol = ode::integrate(
        |s, y, dy| {
            dy[0] = y[1];
            dy[1] = laminar_rhs(model, s, y[0], y[1]);
        },
        eps,
        1.0,
        &y0,
        options.tol,
        options.blowup,
    )?;
    let psi1 = sol.y_end()[0];
    let psi_s1 = sol.y_end()[1];
    let p = model.params;
    let d2 = p.d * p.d;
    let m = d2 * psi1;
    let c = 2.0 * psi1 + psi_s1;
    let g = c * c / (p.sigma * p.d);
    let fm = model.swirl.eval(m);
    // The swirl term enters as F(m)^2 / (d^2 c) so that the boundary row of the
    // pencil reproduces the dispersion function.
    let h = 1.0 / d2 + (2.0 * c * c + fm * fm / d2 + c * model.surface_source(m)) / (p.sigma * p.d);
    let mut profile = TrivialFlowProfile {
        model: model.clone(),
        lambda,
        options,
        sol,
        axis_curvature: a,
        psi1,
        psi_s1,
        m,
        c,
        g,
        h,
        q_minus_sup: 0.0,
    };
    profile.q_minus_sup = profile.q_minus_sup_on(options.q_samples);
    Ok(profile)
}

/// Summary of the scalars a profile feeds downstream.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ProfileSummary {
    pub lambda: f64,
    pub m: f64,
    pub c: f64,
    pub g: f64,
    pub h: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ConditionH {
    pub holds: bool,
    pub margin: f64,
}

impl TrivialFlowProfile {
    pub fn psi(&self, s: f64) -> f64 {
        if s < self.options.eps {
            self.lambda - self.axis_curvature * s * s / 8.0
        } else {
            self.sol.eval_component(s, 0)
        }
    }

    pub fn psi_s(&self, s: f64) -> f64 {
        if s < self.options.eps {
            -self.axis_curvature * s / 4.0
        } else {
            self.sol.eval_component(s, 1)
        }
    }

    /// Second derivative from the continuous extension of `psi_s`.
    pub fn psi_ss(&self, s: f64) -> f64 {
        if s < self.options.eps {
            -self.axis_curvature / 4.0
        } else {
            self.sol.eval_derivative_component(s, 1)
        }
    }

    pub fn q(&self, s: f64) -> f64 {
        q_coefficient(&self.model, s, self.psi(s))
    }

    /// `(psi_ss + 3 psi_s / s) + d^2 gamma(X) + d^2 psi G(X) F'(X)`.
    pub fn ode_residual(&self, s: f64) -> f64 {
        let psi = self.psi(s);
        let d2 = self.model.params.d.powi(2);
        let x = d2 * s * s * psi;
        self.psi_ss(s)
            + 3.0 * self.psi_s(s) / s
            + d2 * self.model.gamma.eval(x)
            + d2 * psi * self.model.swirl.g_f1(x)
    }

    /// `sup max(-q, 0)` sampled on `n + 1` uniform points of `[0, 1]`.
    pub fn q_minus_sup_on(&self, n: usize) -> f64 {
        (0..=n)
            .map(|i| i as f64 / n as f64)
            .map(|s| (-self.q(s)).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn mesh(&self) -> Vec<f64> {
        self.sol.mesh()
    }

    /// Velocity `(u_r, u_theta, u_z)` of the laminar flow at radius `r = d s`.
    pub fn velocity(&self, s: f64) -> (f64, f64, f64) {
        let d = self.model.params.d;
        let psi = self.psi(s);
        let r = d * s;
        let big_psi = r * r * psi;
        let u_theta = r * psi * self.model.swirl.g(big_psi);
        let u_z = -(2.0 * psi + s * self.psi_s(s));
        (0.0, u_theta, u_z)
    }

    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            lambda: self.lambda,
            m: self.m,
            c: self.c,
            g: self.g,
            h: self.h,
            margin: check_condition_h(self).margin,
        }
    }

    /// CSV with columns `s, psi, psi_s, q` on `n + 1` uniform points.
    pub fn to_csv(&self, n: usize) -> String {
        let mut out = String::from("s,psi,psi_s,q\n");
        for i in 0..=n {
            let s = i as f64 / n as f64;
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(s),
                fmt_f64(self.psi(s)),
                fmt_f64(self.psi_s(s)),
                fmt_f64(self.q(s))
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, n: usize) -> std::io::Result<()> {
        write_atomic(path, self.to_csv(n).as_bytes())
    }
}

/// `c(lambda) = 2 m / d^2 + psi_s(1)`.
pub fn surface_speed(profile: &TrivialFlowProfile) -> f64 {
    profile.c
}

/// Boundary coefficients `(g, h)` of the eigenvalue-dependent condition.
pub fn boundary_coefficients(profile: &TrivialFlowProfile) -> Result<(f64, f64), TrivialFlowError> {
    if profile.c.abs() < DEGENERATE_C {
        return Err(TrivialFlowError::DegenerateSurfaceSpeed);
    }
    Ok((profile.g, profile.h))
}

/// Tests `h(lambda) > sup q_-`, which makes the spectrum real and simple.
pub fn check_condition_h(profile: &TrivialFlowProfile) -> ConditionH {
    let margin = profile.h - profile.q_minus_sup;
    ConditionH {
        holds: margin > 0.0,
        margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FlowParameters, SwirlFunction, VorticityFunction};
    use proptest::prelude::*;

    fn params(d: f64) -> FlowParameters {
        FlowParameters::new(d, 1.0, 3.0).unwrap()
    }

    fn poly_model() -> JetModel {
        JetModel::new(
            params(1.0),
            VorticityFunction::polynomial(vec![0.5, 0.4, -0.3]).unwrap(),
            SwirlFunction::new(vec![0.0, 0.8, 0.25]).unwrap(),
        )
    }

    #[test]
    fn irrotational_profile_is_constant() {
        let p = solve_trivial(&JetModel::irrotational(params(1.3)), 0.7).unwrap();
        for s in [0.0, 0.2, 0.5, 1.0] {
            assert!((p.psi(s) - 0.7).abs() < 1e-14);
        }
        assert!((p.m - 0.7 * 1.69).abs() < 1e-13);
        assert!((p.c - 1.4).abs() < 1e-13);
    }

    #[test]
    fn constant_vorticity_profile() {
        let p = solve_trivial(&JetModel::constant_vorticity(params(1.0), 2.0), 1.0).unwrap();
        for s in [0.0, 0.3, 0.9, 1.0] {
            assert!((p.psi(s) - (1.0 - s * s / 4.0)).abs() < 1e-11);
        }
        assert!((p.m - 0.75).abs() < 1e-11);
        assert!((p.c - 1.0).abs() < 1e-11);
    }

    #[test]
    fn surface_speed_examples() {
        let p = solve_trivial(&JetModel::irrotational(params(1.0)), 0.35).unwrap();
        assert!((surface_speed(&p) - 0.7).abs() < 1e-13);
        let p = solve_trivial(&JetModel::constant_vorticity(params(1.0), 2.0), 0.5).unwrap();
        assert!(surface_speed(&p).abs() < 1e-11);
        let p = solve_trivial(&JetModel::constant_vorticity(params(2.0), -1.0), 0.0).unwrap();
        assert!((surface_speed(&p) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn boundary_coefficients_irrotational() {
        let p = solve_trivial(&JetModel::irrotational(params(1.0)), 0.5).unwrap();
        let (g, h) = boundary_coefficients(&p).unwrap();
        assert!((g - 1.0).abs() < 1e-13);
        assert!((h - 3.0).abs() < 1e-13);
        let zero = solve_trivial(&JetModel::irrotational(params(1.0)), 0.0).unwrap();
        assert_eq!(
            boundary_coefficients(&zero).unwrap_err(),
            TrivialFlowError::DegenerateSurfaceSpeed
        );
    }

    #[test]
    fn condition_h_for_irrotational_and_constant_vorticity() {
        let p = solve_trivial(&JetModel::irrotational(params(1.0)), 0.8).unwrap();
        let ch = check_condition_h(&p);
        assert!(ch.holds);
        assert!((ch.margin - p.h).abs() < 1e-15);

        // xi = 4 sigma / (d^5 gamma^2) = 0.25 <= 1/2 gives a window [lambda_-, lambda_+].
        let gamma = 4.0;
        let xi: f64 = 0.25;
        let lm = gamma * (1.0 - (1.0 - 2.0 * xi).sqrt()) / 8.0;
        let lp = gamma * (1.0 + (1.0 - 2.0 * xi).sqrt()) / 8.0;
        let model = JetModel::constant_vorticity(params(1.0), gamma);
        for (lambda, expected) in [(lm - 0.05, true), (0.5 * (lm + lp), false), (lp + 0.05, true)] {
            let p = solve_trivial(&model, lambda).unwrap();
            assert_eq!(check_condition_h(&p).holds, expected, "lambda={lambda}");
            assert!(p.q_minus_sup == 0.0);
        }
    }

    #[test]
    fn polynomial_margin_is_stable_under_refinement() {
        let p = solve_trivial(&poly_model(), 0.3).unwrap();
        let coarse = p.q_minus_sup_on(2000);
        let fine = p.q_minus_sup_on(20000);
        assert!(coarse > 0.0);
        assert!((coarse - fine).abs() < 1e-6 * fine.max(1.0));
    }

    /// Fixed-point iteration on the integral form
    /// `psi(s) = lambda - 1/2 int_0^s t g(t) (1 - t^2/s^2) dt`
    /// on a uniform grid, Richardson-extrapolated from two resolutions.
    fn picard_oracle(model: &JetModel, lambda: f64, n: usize) -> Vec<f64> {
        let d2 = model.params.d.powi(2);
        let solve = |n: usize| {
            let h = 1.0 / n as f64;
            let mut psi = vec![lambda; n + 1];
            for _ in 0..200 {
                let g: Vec<f64> = (0..=n)
                    .map(|i| {
                        let s = i as f64 * h;
                        let x = d2 * s * s * psi[i];
                        d2 * model.gamma.eval(x) + d2 * psi[i] * model.swirl.g_f1(x)
                    })
                    .collect();
                let mut i1 = 0.0;
                let mut i3 = 0.0;
                let mut next = vec![lambda; n + 1];
                let mut delta: f64 = 0.0;
                for i in 1..=n {
                    let (s0, s1) = ((i - 1) as f64 * h, i as f64 * h);
                    i1 += 0.5 * h * (s0 * g[i - 1] + s1 * g[i]);
                    i3 += 0.5 * h * (s0.powi(3) * g[i - 1] + s1.powi(3) * g[i]);
                    next[i] = lambda - 0.5 * (i1 - i3 / (s1 * s1));
                    delta = delta.max((next[i] - psi[i]).abs());
                }
                psi = next;
                if delta < 1e-15 {
                    break;
                }
            }
            psi
        };
        let coarse = solve(n);
        let fine = solve(2 * n);
        (0..=n)
            .map(|i| (4.0 * fine[2 * i] - coarse[i]) / 3.0)
            .collect()
    }

    #[test]
    fn polynomial_profile_matches_picard_oracle() {
        let model = poly_model();
        let p = solve_trivial(&model, 0.3).unwrap();
        let n = 2000;
        let oracle = picard_oracle(&model, 0.3, n);
        for i in (0..=n).step_by(50) {
            let s = i as f64 / n as f64;
            assert!((p.psi(s) - oracle[i]).abs() < 1e-9, "s={s}");
        }
    }

    #[test]
    fn taylor_consistency_near_axis() {
        let model = poly_model();
        let lambda = 0.3;
        let p = solve_trivial(&model, lambda).unwrap();
        let s = 1e-3;
        let d2 = model.params.d.powi(2);
        let a = (model.gamma.eval(0.0) + lambda * model.swirl.ff1_deriv1(0.0)) * d2;
        assert!((p.psi(s) - (lambda - a * s * s / 8.0)).abs() < 1e-9);
    }

    #[test]
    fn ode_residual_is_small() {
        let p = solve_trivial(&poly_model(), 0.3).unwrap();
        for i in 1..100 {
            let s = i as f64 / 100.0;
            assert!(p.ode_residual(s).abs() < 1e-8, "s={s}: {}", p.ode_residual(s));
        }
    }

    #[test]
    fn axis_velocity_and_finite_swirl() {
        let p = solve_trivial(&poly_model(), 0.3).unwrap();
        let (ur, ut, uz) = p.velocity(0.0);
        assert_eq!(ur, 0.0);
        assert_eq!(ut, 0.0);
        assert!((uz + 0.6).abs() < 1e-14);
        assert!(p.velocity(1e-9).1.is_finite());
    }

    #[test]
    fn halving_tolerance_changes_m_little() {
        let model = poly_model();
        let base = solve_trivial(&model, 0.3).unwrap();
        let mut opt = ShootingOptions::default();
        opt.tol.rtol *= 0.5;
        opt.tol.atol *= 0.5;
        let tight = solve_trivial_with(&model, 0.3, opt).unwrap();
        assert!((base.m - tight.m).abs() < 1e-9);
    }

    #[test]
    fn unbounded_growth_reports_blowup() {
        let model = JetModel::new(
            params(3.0),
            VorticityFunction::polynomial(vec![0.0, 0.0, -50.0]).unwrap(),
            SwirlFunction::zero(),
        );
        assert!(matches!(
            solve_trivial(&model, 5.0),
            Err(TrivialFlowError::BlowUp(_))
        ));
    }

    #[test]
    fn csv_has_expected_shape() {
        let p = solve_trivial(&JetModel::irrotational(params(1.0)), 0.5).unwrap();
        let csv = p.to_csv(10);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "s,psi,psi_s,q");
        assert_eq!(lines.len(), 12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn constant_gamma_closed_form(lambda in -2.0f64..2.0, gamma in -3.0f64..3.0, d in 0.3f64..2.0) {
            let p = solve_trivial(&JetModel::constant_vorticity(params(d), gamma), lambda).unwrap();
            for s in [0.1, 0.5, 1.0] {
                prop_assert!((p.psi(s) - (lambda - gamma * d * d * s * s / 8.0)).abs() < 1e-10);
            }
            prop_assert!((p.c - (2.0 * lambda - gamma * d * d / 2.0)).abs() < 1e-10);
            prop_assert!(p.g >= 0.0);
        }
    }
}
