//! The fixed-point map `M = (M1, A)` and the residual `F = id - M` on the
//! discrete unknowns `x = [lambda, eta modes 1..n_z, phi interior nodes]`.

use super::elliptic::{apply_operator, interior, pad, EllipticSolver, Geometry};
use super::grid::Discretization;
use super::profile::{grid_profile, GridProfile};
use super::WaveError;
use crate::model::JetModel;
use nalgebra::DMatrix;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveConfig {
    pub n_s: usize,
    pub n_z: usize,
    /// Domain-collapse threshold relative to `d`.
    pub eps_dom: f64,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            n_s: 24,
            n_z: 16,
            eps_dom: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WaveProblem {
    pub model: JetModel,
    pub grid: Discretization,
    pub config: WaveConfig,
}

/// Quantities that depend on `(lambda, eta)` but not on `phi`.
#[derive(Debug, Clone)]
pub struct Frame {
    pub lambda: f64,
    pub profile: GridProfile,
    pub geometry: Geometry,
    /// `L^eta [d^2 psi^lambda / D^2]` on the full grid.
    lifted: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub eta_residual: Vec<f64>,
    pub phi_residual: Vec<f64>,
    pub q: f64,
    /// `A(lambda, eta, phi)` on the full grid.
    pub a_field: DMatrix<f64>,
}

impl Evaluation {
    pub fn vector(&self) -> Vec<f64> {
        let mut v = self.eta_residual.clone();
        v.extend_from_slice(&self.phi_residual);
        v
    }

    pub fn sup_norm(&self) -> f64 {
        self.eta_residual
            .iter()
            .chain(&self.phi_residual)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl WaveProblem {
    pub fn new(model: JetModel, config: WaveConfig) -> Result<Self, WaveError> {
        let grid = Discretization::new(config.n_s, config.n_z, model.params.nu)?;
        Ok(Self { model, grid, config })
    }

    pub fn d(&self) -> f64 {
        self.model.params.d
    }

    pub fn eps_dom(&self) -> f64 {
        self.config.eps_dom * self.d()
    }

    pub fn n_unknowns(&self) -> usize {
        1 + self.grid.n_eta() + self.grid.n_phi()
    }

    pub fn split<'a>(&self, x: &'a [f64]) -> (f64, &'a [f64], &'a [f64]) {
        let ne = self.grid.n_eta();
        (x[0], &x[1..1 + ne], &x[1 + ne..])
    }

    pub fn profile(&self, lambda: f64) -> Result<GridProfile, WaveError> {
        grid_profile(&self.grid, &self.model, lambda)
    }

    pub fn geometry(&self, eta: &[f64]) -> Result<Geometry, WaveError> {
        Geometry::new(&self.grid, self.d(), eta, self.eps_dom())
    }

    pub fn frame(&self, profile: GridProfile, eta: &[f64]) -> Result<Frame, WaveError> {
        let geometry = self.geometry(eta)?;
        let g = &self.grid;
        let d2 = self.d().powi(2);
        let lift = DMatrix::from_fn(g.n_s, g.n_z, |i, j| d2 * profile.psi[i] / geometry.big_d[j].powi(2));
        let lifted = apply_operator(g, &geometry, &lift);
        Ok(Frame {
            lambda: profile.lambda,
            profile,
            geometry,
            lifted,
        })
    }

    pub fn frame_at(&self, lambda: f64, eta: &[f64]) -> Result<Frame, WaveError> {
        self.frame(self.profile(lambda)?, eta)
    }

    pub fn solver(&self, frame: &Frame) -> Result<EllipticSolver, WaveError> {
        EllipticSolver::new(&self.grid, frame.geometry.clone())
    }

    /// Right side of the equation for `A`, at interior nodes.
    pub fn source(&self, frame: &Frame, phi: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let d2 = self.d().powi(2);
        let mut out = Vec::with_capacity(g.n_phi());
        for i in 0..g.n_s - 1 {
            let t = g.t[i];
            for j in 0..g.n_z {
                let dd2 = frame.geometry.big_d[j].powi(2);
                let total = phi[g.idx(i, j)] + d2 * frame.profile.psi[i] / dd2;
                let x = dd2 * t * total;
                out.push(
                    -frame.lifted[(i, j)]
                        - self.model.gamma.eval(x)
                        - total * self.model.swirl.g_f1(x),
                );
            }
        }
        out
    }

    /// `A(lambda, eta, phi)`; `solver` must belong to this or a nearby surface.
    pub fn operator_a(&self, frame: &Frame, phi: &[f64], solver: &EllipticSolver) -> Result<DMatrix<f64>, WaveError> {
        let rhs = self.source(frame, phi);
        let a = solver.solve_nearby(&self.grid, &frame.geometry, &rhs)?;
        Ok(pad(&self.grid, &a))
    }

    /// Surface expression `K` of the Bernoulli condition at the z-nodes and
    /// the weights `(1 + eta_z^2)^{3/2}`.
    pub fn surface_terms(&self, frame: &Frame, a_field: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let p = &self.model.params;
        let (d2, m, ps) = (p.d * p.d, frame.profile.m, frame.profile.psi_s1);
        let last = g.n_s - 1;
        let fm = self.model.swirl.eval(m);
        let mut k = Vec::with_capacity(g.n_z);
        let mut w = Vec::with_capacity(g.n_z);
        for j in 0..g.n_z {
            let a_s = 2.0 * (0..g.n_s).map(|l| g.dt[(last, l)] * a_field[(l, j)]).sum::<f64>();
            let dd = frame.geometry.big_d[j];
            let e = frame.geometry.e[j];
            let dd2 = dd * dd;
            let u1 = a_s + d2 * ps / dd2;
            let u2 = -e * (a_s + (2.0 * m + d2 * ps) / dd2);
            let root = (1.0 + e * e).sqrt();
            k.push(
                p.sigma / (dd * root)
                    + 0.5 * (u1 * u1 + u2 * u2)
                    + fm * fm / (2.0 * dd2)
                    + 2.0 * m * u1 / dd2
                    + 2.0 * m * m / (dd2 * dd2),
            );
            w.push(root.powi(3));
        }
        (k, w)
    }

    pub fn bernoulli_q(&self, frame: &Frame, a_field: &DMatrix<f64>) -> f64 {
        let (k, w) = self.surface_terms(frame, a_field);
        let wk: Vec<f64> = k.iter().zip(&w).map(|(a, b)| a * b).collect();
        self.grid.average(&wk) / self.grid.average(&w)
    }

    /// `M1` for a prescribed Bernoulli constant.
    pub fn m1_with_q(&self, frame: &Frame, a_field: &DMatrix<f64>, q: f64) -> Vec<f64> {
        let (k, w) = self.surface_terms(frame, a_field);
        let sigma = self.model.params.sigma;
        let rhs: Vec<f64> = k.iter().zip(&w).map(|(k, w)| w * (k - q) / sigma).collect();
        self.grid.inv_dzz(&self.grid.project(&rhs))
    }

    pub fn evaluate(
        &self,
        frame: &Frame,
        eta: &[f64],
        phi: &[f64],
        solver: &EllipticSolver,
    ) -> Result<Evaluation, WaveError> {
        let a_field = self.operator_a(frame, phi, solver)?;
        let q = self.bernoulli_q(frame, &a_field);
        let m1 = self.m1_with_q(frame, &a_field, q);
        let eta_residual = eta.iter().zip(&m1).map(|(a, b)| a - b).collect();
        let a_in = interior(&self.grid, &a_field);
        let phi_residual = phi.iter().zip(&a_in).map(|(a, b)| a - b).collect();
        Ok(Evaluation {
            eta_residual,
            phi_residual,
            q,
            a_field,
        })
    }

    /// `F(x)` with all caches rebuilt.
    pub fn residual(&self, x: &[f64]) -> Result<Evaluation, WaveError> {
        let (lambda, eta, phi) = self.split(x);
        let frame = self.frame_at(lambda, eta)?;
        let solver = self.solver(&frame)?;
        self.evaluate(&frame, eta, phi, &solver)
    }

    pub fn residual_of(&self, state: &WaveState) -> Result<Evaluation, WaveError> {
        self.residual(&state.to_vector(&self.grid))
    }

    pub fn trivial_vector(&self, lambda: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.n_unknowns()];
        x[0] = lambda;
        x
    }
}

/// A point `(lambda, eta, phi)` together with its Bernoulli constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaveState {
    pub lambda: f64,
    /// Zero-mean cosine modes `1..n_z` of the surface displacement.
    pub eta: Vec<f64>,
    /// Nodal values, `n_s` rows in `t` and `n_z` columns in `z`; the last row is zero.
    pub phi: Vec<Vec<f64>>,
    pub q: f64,
}

impl WaveState {
    pub fn from_vector(grid: &Discretization, x: &[f64], q: f64) -> Self {
        let ne = grid.n_eta();
        let f = pad(grid, &x[1 + ne..]);
        Self {
            lambda: x[0],
            eta: x[1..1 + ne].to_vec(),
            phi: (0..grid.n_s).map(|i| (0..grid.n_z).map(|j| f[(i, j)]).collect()).collect(),
            q,
        }
    }

    pub fn to_vector(&self, grid: &Discretization) -> Vec<f64> {
        let mut x = Vec::with_capacity(1 + grid.n_eta() + grid.n_phi());
        x.push(self.lambda);
        x.extend_from_slice(&self.eta);
        for row in &self.phi[..grid.n_s - 1] {
            x.extend_from_slice(row);
        }
        x
    }

    pub fn phi_matrix(&self) -> DMatrix<f64> {
        let (r, c) = (self.phi.len(), self.phi[0].len());
        DMatrix::from_fn(r, c, |i, j| self.phi[i][j])
    }

    /// `max |eta|` sampled at eight points per node spacing.
    pub fn amplitude(&self, grid: &Discretization) -> f64 {
        let n = 8 * grid.n_z;
        (0..=n)
            .map(|j| Discretization::eta_at(&self.eta, grid.nu, j as f64 * grid.period / (2.0 * n as f64)).0.abs())
            .fold(0.0, f64::max)
    }

    /// Shift by half a period.
    pub fn mirrored(&self, grid: &Discretization) -> Self {
        let f = grid.mirror_field(&self.phi_matrix());
        Self {
            lambda: self.lambda,
            eta: Discretization::mirror_modes(&self.eta),
            phi: (0..f.nrows()).map(|i| (0..f.ncols()).map(|j| f[(i, j)]).collect()).collect(),
            q: self.q,
        }
    }
}
