//! The laminar profile restricted to the radial nodes and polished so that
//! it solves the collocated laminar equation exactly.

use super::grid::Discretization;
use super::WaveError;
use crate::model::JetModel;
use crate::trivial_flow::solve_trivial;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct GridProfile {
    pub lambda: f64,
    /// `psi^lambda` at the `t` nodes.
    pub psi: Vec<f64>,
    pub psi_t: Vec<f64>,
    /// `m = d^2 psi(1)`.
    pub m: f64,
    /// `psi_s(1) = 2 psi_t(1)`.
    pub psi_s1: f64,
    /// `c = 2 m / d^2 + psi_s(1)`.
    pub c: f64,
}

/// Residual of `4t psi_tt + 8 psi_t + d^2 gamma(X) + d^2 psi GF'(X)`, `X = d^2 t psi`.
fn collocation_residual(grid: &Discretization, model: &JetModel, psi: &DVector<f64>) -> DVector<f64> {
    let d2 = model.params.d.powi(2);
    let pt = &grid.dt * psi;
    let ptt = &grid.dtt * psi;
    DVector::from_fn(grid.n_s, |i, _| {
        let t = grid.t[i];
        let x = d2 * t * psi[i];
        4.0 * t * ptt[i] + 8.0 * pt[i] + d2 * model.gamma.eval(x) + d2 * psi[i] * model.swirl.g_f1(x)
    })
}

pub fn grid_profile(grid: &Discretization, model: &JetModel, lambda: f64) -> Result<GridProfile, WaveError> {
    let shot = solve_trivial(model, lambda).map_err(|e| WaveError::Profile(e.to_string()))?;
    let n = grid.n_s;
    let d2 = model.params.d.powi(2);
    let mut psi = DVector::from_fn(n, |i, _| shot.psi(grid.s[i]));
    let scale = psi.amax().max(1.0);
    for _ in 0..30 {
        let mut r = collocation_residual(grid, model, &psi);
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            let t = grid.t[i];
            let x = d2 * t * psi[i];
            for k in 0..n {
                jac[(i, k)] = 4.0 * t * grid.dtt[(i, k)] + 8.0 * grid.dt[(i, k)];
            }
            jac[(i, i)] += d2 * d2 * t * model.gamma.deriv1(x)
                + d2 * model.swirl.g_f1(x)
                + d2 * d2 * t * psi[i] * model.swirl.g_f1_deriv1(x);
        }
        // the last row pins the axis value instead of the surface equation
        jac[(n - 1, 0)] = 1.0;
        r[n - 1] = psi[0] - lambda;
        let step = jac
            .lu()
            .solve(&r)
            .ok_or_else(|| WaveError::LinearSolveFailure("laminar collocation".into()))?;
        psi -= &step;
        if step.amax() <= 1e-15 * scale {
            break;
        }
    }
    if psi.iter().any(|v| !v.is_finite()) {
        return Err(WaveError::Profile("non-finite collocated profile".into()));
    }
    let psi_t = &grid.dt * &psi;
    let m = d2 * psi[n - 1];
    let psi_s1 = 2.0 * psi_t[n - 1];
    Ok(GridProfile {
        lambda,
        psi: psi.as_slice().to_vec(),
        psi_t: psi_t.as_slice().to_vec(),
        m,
        psi_s1,
        c: 2.0 * m / d2 + psi_s1,
    })
}
