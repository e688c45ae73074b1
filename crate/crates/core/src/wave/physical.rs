//! Physical fields on the deformed domain and the per-state diagnostics
//! monitored along a branch.

use super::grid::Discretization;
use super::residual::{WaveProblem, WaveState};
use super::WaveError;
use crate::quadrature::{gauss_legendre, interp_matrix};
use nalgebra::DMatrix;
use serde::Serialize;

pub const HOLDER_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceSample {
    pub z: f64,
    pub r: f64,
    pub u_r: f64,
    pub u_theta: f64,
    pub u_z: f64,
    /// Pointwise residual of the dynamic condition in physical variables.
    pub bernoulli_residual: f64,
    /// `Psi - m` on the surface.
    pub kinematic_residual: f64,
}

/// Fields at the nodes `(s_i, z_j)` mapped to `r = (d + eta(z_j)) s_i`.
#[derive(Debug, Clone)]
pub struct PhysicalFields {
    pub s: Vec<f64>,
    pub z: Vec<f64>,
    pub r: DMatrix<f64>,
    /// `psi` with `Psi = r^2 psi`.
    pub psi: DMatrix<f64>,
    pub stream: DMatrix<f64>,
    pub u_r: DMatrix<f64>,
    pub u_theta: DMatrix<f64>,
    pub u_z: DMatrix<f64>,
    pub surface: Vec<SurfaceSample>,
}

impl PhysicalFields {
    pub fn max_bernoulli_residual(&self) -> f64 {
        self.surface.iter().fold(0.0, |m, p| m.max(p.bernoulli_residual.abs()))
    }

    pub fn max_kinematic_residual(&self) -> f64 {
        self.surface.iter().fold(0.0, |m, p| m.max(p.kinematic_residual.abs()))
    }

    pub fn surface_speed_sq_max(&self) -> f64 {
        self.surface
            .iter()
            .map(|p| p.u_r * p.u_r + p.u_theta * p.u_theta + p.u_z * p.u_z)
            .fold(0.0, f64::max)
    }
}

/// Flattened stream function `psi_bar = phi + d^2 psi^lambda / D^2` on the full grid.
fn psi_bar(problem: &WaveProblem, state: &WaveState, psi_lambda: &[f64], big_d: &[f64]) -> DMatrix<f64> {
    let g = &problem.grid;
    let d2 = problem.d().powi(2);
    DMatrix::from_fn(g.n_s, g.n_z, |i, j| state.phi[i][j] + d2 * psi_lambda[i] / (big_d[j] * big_d[j]))
}

pub fn reconstruct_physical(problem: &WaveProblem, state: &WaveState) -> Result<PhysicalFields, WaveError> {
    let g = &problem.grid;
    let model = &problem.model;
    let prof = problem.profile(state.lambda)?;
    let (e0, e1, e2) = g.eta_nodal(&state.eta);
    let big_d: Vec<f64> = e0.iter().map(|v| problem.d() + v).collect();
    let pb = psi_bar(problem, state, &prof.psi, &big_d);
    let pb_t = &g.dt * &pb;
    let pb_z = &pb * g.dz.transpose();
    let (ns, nz) = (g.n_s, g.n_z);
    let mut r = DMatrix::zeros(ns, nz);
    let mut stream = DMatrix::zeros(ns, nz);
    let mut u_r = DMatrix::zeros(ns, nz);
    let mut u_theta = DMatrix::zeros(ns, nz);
    let mut u_z = DMatrix::zeros(ns, nz);
    for i in 0..ns {
        let s = g.s[i];
        for j in 0..nz {
            let dd = big_d[j];
            let p_s = 2.0 * s * pb_t[(i, j)];
            let rr = dd * s;
            let big_psi = rr * rr * pb[(i, j)];
            r[(i, j)] = rr;
            stream[(i, j)] = big_psi;
            u_r[(i, j)] = rr * (pb_z[(i, j)] - s * e1[j] * p_s / dd);
            u_theta[(i, j)] = rr * pb[(i, j)] * model.swirl.g(big_psi);
            u_z[(i, j)] = -(2.0 * pb[(i, j)] + s * p_s);
        }
    }
    let sigma = model.params.sigma;
    let m = prof.m;
    let last = ns - 1;
    let surface = (0..nz)
        .map(|j| {
            let (dd, e, ezz) = (big_d[j], e1[j], e2[j]);
            let p_s = 2.0 * pb_t[(last, j)];
            let psi = pb[(last, j)];
            let psi_r = p_s / dd;
            let psi_z = pb_z[(last, j)] - e * p_s / dd;
            let big_psi = dd * dd * psi;
            let root = (1.0 + e * e).sqrt();
            let kappa = ezz / root.powi(3) - 1.0 / (dd * root);
            let f = model.swirl.eval(big_psi);
            let b = dd * dd * (psi_r * psi_r + psi_z * psi_z) / 2.0
                + f * f / (2.0 * dd * dd)
                + 2.0 * m * psi_r / dd
                + 2.0 * m * m / dd.powi(4)
                - sigma * kappa
                - state.q;
            SurfaceSample {
                z: g.z[j],
                r: dd,
                u_r: u_r[(last, j)],
                u_theta: u_theta[(last, j)],
                u_z: u_z[(last, j)],
                bernoulli_residual: b,
                kinematic_residual: big_psi - m,
            }
        })
        .collect();
    Ok(PhysicalFields {
        s: g.s.clone(),
        z: g.z.clone(),
        r,
        psi: pb,
        stream,
        u_r,
        u_theta,
        u_z,
        surface,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub lambda_abs: f64,
    pub amplitude: f64,
    pub min_surface_radius: f64,
    /// Grid-scale stand-in for the `C^{2,alpha}` norm of `eta`.
    pub eta_c2alpha_proxy: f64,
    pub vorticity_lp: f64,
    pub abs_q: f64,
    pub surface_speed_sq_max: f64,
    pub bernoulli_residual_max: f64,
    pub mode_energies: Vec<f64>,
    pub first_mode_fraction: f64,
}

impl Diagnostics {
    pub fn all_finite(&self) -> bool {
        [
            self.lambda_abs,
            self.amplitude,
            self.min_surface_radius,
            self.eta_c2alpha_proxy,
            self.vorticity_lp,
            self.abs_q,
            self.surface_speed_sq_max,
            self.bernoulli_residual_max,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Sup norms of `eta`, `eta_z`, `eta_zz` plus a difference-quotient Hölder
/// seminorm of `eta_zz` on a grid 16 times finer than the nodes.
pub fn c2alpha_proxy(grid: &Discretization, eta: &[f64], alpha: f64) -> f64 {
    let n = 16 * grid.n_z;
    let h = grid.period / n as f64;
    let vals: Vec<(f64, f64, f64)> = (0..=n)
        .map(|j| Discretization::eta_at(eta, grid.nu, j as f64 * h))
        .collect();
    let sup = |f: fn(&(f64, f64, f64)) -> f64| vals.iter().map(f).fold(0.0f64, |m, v| m.max(v.abs()));
    let holder = vals
        .windows(2)
        .map(|w| (w[1].2 - w[0].2).abs() / h.powf(alpha))
        .fold(0.0, f64::max);
    sup(|v| v.0) + sup(|v| v.1) + sup(|v| v.2) + holder
}

/// `|| r^{2/p} gamma(Psi) + r^{2/p - 2} F(Psi) F'(Psi) ||_{L^p}` over one
/// period of the meridional domain, `p = 5 / (2 - alpha)`.
pub fn vorticity_lp(problem: &WaveProblem, state: &WaveState, alpha: f64) -> Result<f64, WaveError> {
    let g = &problem.grid;
    let model = &problem.model;
    let p = 5.0 / (2.0 - alpha);
    if model.gamma.is_zero() && model.swirl.is_zero() {
        return Ok(0.0);
    }
    let prof = problem.profile(state.lambda)?;
    let (e0, _, _) = g.eta_nodal(&state.eta);
    let big_d: Vec<f64> = e0.iter().map(|v| problem.d() + v).collect();
    let pb = psi_bar(problem, state, &prof.psi, &big_d);
    let (sq, wq) = gauss_legendre(2 * g.n_s + 8);
    let tq: Vec<f64> = sq.iter().map(|s| s * s).collect();
    let e = interp_matrix(g.n_s, &tq);
    let vals = &e * &pb;
    let wz = g.period / g.n_z as f64;
    let mut total = 0.0;
    for (q, (&s, &w)) in sq.iter().zip(&wq).enumerate() {
        for j in 0..g.n_z {
            let r = big_d[j] * s;
            let psi = vals[(q, j)];
            let big = r * r * psi;
            // r^{2/p-2} F F' = r^{2/p} psi G F', so the integrand is r^2 |.|^p
            let v = (model.gamma.eval(big) + psi * model.swirl.g_f1(big)).abs();
            total += w * big_d[j] * wz * r * r * v.powf(p);
        }
    }
    Ok(total.powf(1.0 / p))
}

pub fn diagnostics(problem: &WaveProblem, state: &WaveState) -> Result<Diagnostics, WaveError> {
    let g = &problem.grid;
    let fields = reconstruct_physical(problem, state)?;
    let energies: Vec<f64> = state.eta.iter().map(|a| a * a).collect();
    let total: f64 = energies.iter().sum();
    Ok(Diagnostics {
        lambda_abs: state.lambda.abs(),
        amplitude: state.amplitude(g),
        min_surface_radius: g.min_radius(problem.d(), &state.eta),
        eta_c2alpha_proxy: c2alpha_proxy(g, &state.eta, HOLDER_ALPHA),
        vorticity_lp: vorticity_lp(problem, state, HOLDER_ALPHA)?,
        abs_q: state.q.abs(),
        surface_speed_sq_max: fields.surface_speed_sq_max(),
        bernoulli_residual_max: fields.max_bernoulli_residual(),
        first_mode_fraction: if total > 0.0 { energies[0] / total } else { 0.0 },
        mode_energies: energies,
    })
}
